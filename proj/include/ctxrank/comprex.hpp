#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "ctxrank/context.hpp"
#include "ctxrank/errors.hpp"
#include "ctxrank/krimp.hpp"
#include "ctxrank/score.hpp"

namespace ctxrank {

/// Disjoint non-empty attribute groups whose union is all m attributes.
struct AttributePartition {
    std::vector<std::vector<std::uint32_t>> groups;  // each sorted ascending

    void validate(std::uint32_t m) const {
        std::vector<bool> seen(m, false);
        for (const auto& g : groups) {
            if (g.empty()) throw ContractViolation("partition has an empty group");
            for (std::uint32_t j : g) {
                if (j >= m || seen[j])
                    throw ContractViolation("partition is not a disjoint cover of the attributes");
                seen[j] = true;
            }
        }
        for (bool s : seen)
            if (!s) throw ContractViolation("partition misses an attribute");
    }
};

struct ComprexOptions {
    std::uint64_t budget = 0;   // max merge evaluations; 0 selects 10*m
    std::uint32_t mi_top_k = 16;  // candidate pairs ranked by mutual information per round
    KrimpOptions krimp;           // per-group encoder settings
};

struct ComprexModel {
    AttributePartition partition;
    std::vector<CodeTable> tables;     // per group, in local attribute indices
    std::vector<double> group_costs;   // L(CT_g) + L(D_g|CT_g)
    std::vector<double> cost_trace;    // total cost at start and after each merge
    bool budget_exhausted = false;

    double total_cost() const {
        double c = 0.0;
        for (double g : group_costs) c += g;
        return c;
    }
};

/// Projection of a context onto one attribute group; attribute names are
/// kept, indices become group-local. Rows may project to empty sets.
inline Context project_context(const Context& ctx, const std::vector<std::uint32_t>& group) {
    Context out;
    out.name = ctx.name;
    out.row_ids = ctx.row_ids;
    std::vector<std::int32_t> local(ctx.attribute_count(), -1);
    for (std::size_t k = 0; k < group.size(); ++k) {
        out.attributes.push_back(ctx.attributes[group[k]]);
        local[group[k]] = static_cast<std::int32_t>(k);
    }
    out.rows.resize(ctx.row_count());
    for (std::size_t r = 0; r < ctx.row_count(); ++r) {
        for (std::uint32_t j : ctx.rows[r])
            if (local[j] >= 0) out.rows[r].push_back(static_cast<std::uint32_t>(local[j]));
    }
    return out;
}

/// Encoded size of one (possibly empty) projection: the cover's code
/// lengths, with an empty projection paying the empty-pattern code. This is
/// the quantity the partition search optimizes; whole-row scoring still maps
/// fully empty rows to 0.
inline double encoded_projection_size(const CodeTable& ct, std::span<const std::uint32_t> row,
                                      const std::vector<double>& lens) {
    double bits = 0.0;
    for (std::size_t e : ct.cover(row)) bits += lens[e];
    return bits;
}

namespace detail {

inline double column_mutual_information(const Context& ctx, std::uint32_t a, std::uint32_t b) {
    const double n = static_cast<double>(ctx.row_count());
    if (n == 0) return 0.0;
    std::uint64_t ca = 0, cb = 0, cab = 0;
    for (std::size_t r = 0; r < ctx.row_count(); ++r) {
        bool ha = ctx.row_has(r, a), hb = ctx.row_has(r, b);
        ca += ha;
        cb += hb;
        cab += ha && hb;
    }
    auto term = [&](double pxy, double px, double py) {
        if (pxy <= 0.0 || px <= 0.0 || py <= 0.0) return 0.0;
        return pxy * std::log2(pxy / (px * py));
    };
    double pa = ca / n, pb = cb / n;
    double p11 = cab / n;
    double p10 = (ca - cab) / n;
    double p01 = (cb - cab) / n;
    double p00 = 1.0 - p11 - p10 - p01;
    return term(p11, pa, pb) + term(p10, pa, 1 - pb) + term(p01, 1 - pa, pb) +
           term(p00, 1 - pa, 1 - pb);
}

}  // namespace detail

/// Builds per-group code tables for a fixed partition. Shared by the greedy
/// search, the scorer, and the tests that force a partition.
inline ComprexModel comprex_model_for_partition(const Context& ctx,
                                                AttributePartition partition,
                                                const ComprexOptions& opt = {}) {
    if (ctx.attribute_count() == 0) throw ContractViolation("comprex: context has no attributes");
    partition.validate(static_cast<std::uint32_t>(ctx.attribute_count()));
    ComprexModel model;
    model.partition = std::move(partition);
    for (const auto& group : model.partition.groups) {
        auto build = krimp_build(project_context(ctx, group), opt.krimp);
        model.group_costs.push_back(build.final_size);
        model.tables.push_back(std::move(build.table));
    }
    model.cost_trace.push_back(model.total_cost());
    return model;
}

/// Greedy CompreX-style partition search: start from singleton groups,
/// repeatedly evaluate merging group pairs (pre-filtered to the mi_top_k
/// pairs with the highest column mutual information) and perform the best
/// strictly-improving merge. The evaluation budget makes this an anytime
/// algorithm: on exhaustion the current partition is returned with a flag.
inline ComprexModel comprex_build(const Context& ctx, const ComprexOptions& opt = {}) {
    const std::uint32_t m = static_cast<std::uint32_t>(ctx.attribute_count());
    if (m == 0) throw ContractViolation("comprex: context has no attributes");

    AttributePartition finest;
    for (std::uint32_t j = 0; j < m; ++j) finest.groups.push_back({j});
    ComprexModel model = comprex_model_for_partition(ctx, std::move(finest), opt);

    std::uint64_t budget = opt.budget == 0 ? 10ULL * m : opt.budget;

    std::vector<std::vector<double>> mi(m, std::vector<double>(m, 0.0));
    for (std::uint32_t a = 0; a < m; ++a)
        for (std::uint32_t b = a + 1; b < m; ++b)
            mi[a][b] = mi[b][a] = detail::column_mutual_information(ctx, a, b);

    struct Eval {
        double cost;
        CodeTable table;
    };
    std::map<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>, Eval> cache;

    auto pair_mi = [&](const std::vector<std::uint32_t>& ga,
                       const std::vector<std::uint32_t>& gb) {
        double best = 0.0;
        for (std::uint32_t a : ga)
            for (std::uint32_t b : gb) best = std::max(best, mi[a][b]);
        return best;
    };

    while (model.partition.groups.size() > 1) {
        opt.krimp.limits.check_deadline();
        auto& groups = model.partition.groups;

        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t a = 0; a < groups.size(); ++a)
            for (std::size_t b = a + 1; b < groups.size(); ++b) pairs.emplace_back(a, b);
        if (pairs.size() > opt.mi_top_k) {
            std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& p, const auto& q) {
                return pair_mi(groups[p.first], groups[p.second]) >
                       pair_mi(groups[q.first], groups[q.second]);
            });
            pairs.resize(opt.mi_top_k);
        }

        double best_delta = -kSizeEpsilon;
        std::size_t best_a = 0, best_b = 0;
        const Eval* best_eval = nullptr;
        bool ran_out = false;
        for (const auto& [a, b] : pairs) {
            auto key = std::make_pair(groups[a], groups[b]);
            auto it = cache.find(key);
            if (it == cache.end()) {
                if (budget == 0) {
                    ran_out = true;
                    break;
                }
                --budget;
                std::vector<std::uint32_t> merged;
                std::merge(groups[a].begin(), groups[a].end(), groups[b].begin(),
                           groups[b].end(), std::back_inserter(merged));
                auto build = krimp_build(project_context(ctx, merged), opt.krimp);
                it = cache.emplace(key, Eval{build.final_size, std::move(build.table)}).first;
            }
            double delta = it->second.cost - model.group_costs[a] - model.group_costs[b];
            if (delta < best_delta) {
                best_delta = delta;
                best_a = a;
                best_b = b;
                best_eval = &it->second;
            }
        }

        if (best_eval != nullptr) {
            std::vector<std::uint32_t> merged;
            std::merge(groups[best_a].begin(), groups[best_a].end(), groups[best_b].begin(),
                       groups[best_b].end(), std::back_inserter(merged));
            groups[best_a] = std::move(merged);
            model.tables[best_a] = best_eval->table;
            model.group_costs[best_a] = best_eval->cost;
            groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(best_b));
            model.tables.erase(model.tables.begin() + static_cast<std::ptrdiff_t>(best_b));
            model.group_costs.erase(model.group_costs.begin() +
                                    static_cast<std::ptrdiff_t>(best_b));
            model.cost_trace.push_back(model.total_cost());
        }
        if (ran_out) {
            model.budget_exhausted = true;
            break;
        }
        if (best_eval == nullptr) break;  // no strictly-improving merge
    }
    return model;
}

/// Scores rows under a frozen model: the sum over groups of the encoded
/// size of the row's projection. Fully empty rows score 0 and are flagged.
inline ScoreVector comprex_score_rows(const Context& ctx, const ComprexModel& model) {
    ScoreVector sv;
    sv.polarity = Polarity::high_is_anomalous;
    sv.row_ids = ctx.row_ids;
    sv.scores.assign(ctx.row_count(), 0.0);

    std::vector<std::vector<double>> lens;
    lens.reserve(model.tables.size());
    for (const auto& table : model.tables) lens.push_back(table.code_lengths());

    std::vector<std::int32_t> local(ctx.attribute_count(), -1);
    std::size_t empty_rows = 0;
    std::vector<std::uint32_t> projected;
    for (std::size_t r = 0; r < ctx.row_count(); ++r) {
        if (ctx.rows[r].empty()) {
            ++empty_rows;
            continue;
        }
        double bits = 0.0;
        for (std::size_t g = 0; g < model.partition.groups.size(); ++g) {
            const auto& group = model.partition.groups[g];
            for (std::size_t k = 0; k < group.size(); ++k)
                local[group[k]] = static_cast<std::int32_t>(k);
            projected.clear();
            for (std::uint32_t j : ctx.rows[r])
                if (local[j] >= 0) projected.push_back(static_cast<std::uint32_t>(local[j]));
            for (std::uint32_t j : group) local[j] = -1;
            bits += encoded_projection_size(model.tables[g], projected, lens[g]);
        }
        sv.scores[r] = bits;
    }
    if (empty_rows > 0)
        sv.warnings.push_back(std::to_string(empty_rows) + " empty row(s) scored 0");
    return sv;
}

inline ScoreVector comprex_scores(const Context& ctx, const ComprexOptions& opt = {}) {
    return comprex_score_rows(ctx, comprex_build(ctx, opt));
}

}  // namespace ctxrank
