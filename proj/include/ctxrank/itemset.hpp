#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ctxrank/bitset.hpp"
#include "ctxrank/context.hpp"
#include "ctxrank/errors.hpp"
#include "ctxrank/rational.hpp"

namespace ctxrank {

struct Itemset {
    std::vector<std::uint32_t> items;  // sorted attribute indices
    std::uint64_t support = 0;         // rows containing all items

    friend bool operator==(const Itemset& a, const Itemset& b) {
        return a.items == b.items && a.support == b.support;
    }
};

struct Rule {
    std::vector<std::uint32_t> antecedent;
    std::vector<std::uint32_t> consequent;  // non-empty, disjoint from antecedent
    std::uint64_t support = 0;              // support of antecedent + consequent
    std::uint64_t antecedent_support = 0;
    double confidence = 0.0;                // support / antecedent_support

    friend bool operator==(const Rule& a, const Rule& b) {
        return a.antecedent == b.antecedent && a.consequent == b.consequent &&
               a.support == b.support && a.antecedent_support == b.antecedent_support;
    }
};

namespace detail {

inline std::vector<DynBitset> attribute_tidsets(const Context& ctx) {
    std::vector<DynBitset> tids(ctx.attribute_count(), DynBitset(ctx.row_count()));
    for (std::size_t r = 0; r < ctx.row_count(); ++r)
        for (std::uint32_t j : ctx.rows[r]) tids[j].set(r);
    return tids;
}

/// Depth-first itemset enumeration over vertical tidsets. Visits every
/// frequent itemset exactly once; the cap bounds the number of emitted sets.
template <class Emit>
void mine_dfs(const std::vector<DynBitset>& tids, std::uint64_t threshold,
              const RunLimits& limits, std::uint64_t& emitted,
              std::vector<std::uint32_t>& prefix, const DynBitset& prefix_tids,
              std::uint32_t first, Emit&& emit) {
    const std::uint32_t m = static_cast<std::uint32_t>(tids.size());
    for (std::uint32_t j = first; j < m; ++j) {
        std::uint64_t support = prefix.empty()
                                    ? tids[j].count()
                                    : DynBitset::and_count(prefix_tids, tids[j]);
        if (support < threshold) continue;
        limits.check_deadline();
        if (++emitted > limits.itemset_cap)
            throw ResourceLimitError("itemset cap exceeded (" +
                                     std::to_string(limits.itemset_cap) + ")");
        prefix.push_back(j);
        DynBitset sub = prefix.size() == 1 ? tids[j] : (prefix_tids & tids[j]);
        emit(prefix, sub, support);
        mine_dfs(tids, threshold, limits, emitted, prefix, sub, j + 1, emit);
        prefix.pop_back();
    }
}

inline void sort_output(std::vector<Itemset>& sets) {
    // support desc, length asc, lexicographic
    std::sort(sets.begin(), sets.end(), [](const Itemset& a, const Itemset& b) {
        if (a.support != b.support) return a.support > b.support;
        if (a.items.size() != b.items.size()) return a.items.size() < b.items.size();
        return a.items < b.items;
    });
}

}  // namespace detail

/// All itemsets whose support fraction is >= minsupp (ties at exact equality
/// included), with exact support counts. Order: support desc, length asc,
/// lexicographic.
inline std::vector<Itemset> mine_frequent(const Context& ctx, double minsupp,
                                          const RunLimits& limits = {}) {
    if (!(minsupp > 0.0) || minsupp > 1.0)
        throw ConfigError("minsupp must lie in (0, 1]");
    std::vector<Itemset> out;
    if (ctx.row_count() == 0) return out;
    const std::uint64_t threshold = min_support_count(minsupp, ctx.row_count());
    auto tids = detail::attribute_tidsets(ctx);
    std::vector<std::uint32_t> prefix;
    std::uint64_t emitted = 0;
    DynBitset all(ctx.row_count());
    detail::mine_dfs(tids, threshold, limits, emitted, prefix, all, 0,
                     [&](const std::vector<std::uint32_t>& items, const DynBitset&,
                         std::uint64_t support) { out.push_back({items, support}); });
    detail::sort_output(out);
    return out;
}

/// Frequent itemsets with no proper superset of equal support. An itemset is
/// emitted iff it equals its closure (the intersection of all rows containing
/// it), which is the same criterion computed on tidsets.
inline std::vector<Itemset> mine_closed(const Context& ctx, double minsupp,
                                        const RunLimits& limits = {}) {
    if (!(minsupp > 0.0) || minsupp > 1.0)
        throw ConfigError("minsupp must lie in (0, 1]");
    std::vector<Itemset> out;
    if (ctx.row_count() == 0) return out;
    const std::uint64_t threshold = min_support_count(minsupp, ctx.row_count());
    auto tids = detail::attribute_tidsets(ctx);
    const std::uint32_t m = static_cast<std::uint32_t>(ctx.attribute_count());
    std::vector<std::uint32_t> prefix;
    std::uint64_t emitted = 0;
    DynBitset all(ctx.row_count());
    detail::mine_dfs(tids, threshold, limits, emitted, prefix, all, 0,
                     [&](const std::vector<std::uint32_t>& items, const DynBitset& set_tids,
                         std::uint64_t support) {
                         std::size_t k = 0;
                         for (std::uint32_t j = 0; j < m; ++j) {
                             if (k < items.size() && items[k] == j) {
                                 ++k;
                                 continue;
                             }
                             // j in closure iff every row of set_tids also has j
                             if (DynBitset::and_count(set_tids, tids[j]) == support) return;
                         }
                         out.push_back({items, support});
                     });
    detail::sort_output(out);
    return out;
}

/// Association rules X -> Y with X u Y frequent, X and Y non-empty and
/// disjoint, confidence >= minconf (exact threshold comparison). The input
/// must be subset-closed, i.e. come from mine_frequent; closed-only input is
/// detected and rejected when a subset support lookup fails.
inline std::vector<Rule> mine_rules(const std::vector<Itemset>& frequents, double minconf,
                                    const RunLimits& limits = {}) {
    if (!(minconf > 0.0) || minconf > 1.0)
        throw ConfigError("minconf must lie in (0, 1]");
    std::map<std::vector<std::uint32_t>, std::uint64_t> support_of;
    for (const auto& f : frequents) support_of[f.items] = f.support;

    std::vector<Rule> rules;
    for (const auto& f : frequents) {
        const std::size_t len = f.items.size();
        if (len < 2) continue;
        if (len > 24)
            throw ResourceLimitError("rule generation over an itemset of length " +
                                     std::to_string(len));
        limits.check_deadline();
        const std::uint32_t splits = (1u << len) - 1;
        for (std::uint32_t mask = 1; mask < splits; ++mask) {
            std::vector<std::uint32_t> ante, cons;
            for (std::size_t k = 0; k < len; ++k)
                ((mask >> k) & 1 ? ante : cons).push_back(f.items[k]);
            auto it = support_of.find(ante);
            if (it == support_of.end())
                throw ContractViolation(
                    "mine_rules: antecedent support unavailable; pass mine_frequent output, "
                    "not closed itemsets");
            if (!fraction_at_least(f.support, it->second, minconf)) continue;
            Rule rule;
            rule.antecedent = std::move(ante);
            rule.consequent = std::move(cons);
            rule.support = f.support;
            rule.antecedent_support = it->second;
            rule.confidence = static_cast<double>(f.support) / static_cast<double>(it->second);
            rules.push_back(std::move(rule));
        }
    }
    std::sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.support != b.support) return a.support > b.support;
        if (a.antecedent != b.antecedent) return a.antecedent < b.antecedent;
        return a.consequent < b.consequent;
    });
    return rules;
}

/// Debug/golden dump: one line per set, tab-separated attribute names plus
/// the support count.
inline void dump_itemsets(const std::vector<Itemset>& sets, const Context& ctx,
                          std::ostream& out) {
    for (const auto& s : sets) {
        for (std::size_t k = 0; k < s.items.size(); ++k)
            out << (k ? "," : "") << ctx.attributes[s.items[k]];
        out << '\t' << s.support << '\n';
    }
}

}  // namespace ctxrank
