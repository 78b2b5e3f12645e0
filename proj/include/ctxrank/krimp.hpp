#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ctxrank/bitset.hpp"
#include "ctxrank/context.hpp"
#include "ctxrank/errors.hpp"
#include "ctxrank/itemset.hpp"
#include "ctxrank/score.hpp"

namespace ctxrank {

struct CodeTableEntry {
    std::vector<std::uint32_t> items;  // sorted; empty marks the empty-pattern entry
    std::uint64_t support = 0;         // support in the training data (cover-order key)
    std::uint64_t usage = 0;           // times the entry fires when covering the data
};

/// Cover order: length desc, support desc, lexicographic. The empty-pattern
/// entry (length 0) always sorts last.
inline bool cover_order_less(const CodeTableEntry& a, const CodeTableEntry& b) {
    if (a.items.size() != b.items.size()) return a.items.size() > b.items.size();
    if (a.support != b.support) return a.support > b.support;
    return a.items < b.items;
}

/// Krimp code table. Besides the mined itemset entries it always carries all
/// m singletons plus one empty-pattern entry whose usage counts rows with no
/// attributes; the latter keeps per-attribute-group costs non-degenerate and
/// every smoothed code length strictly positive.
struct CodeTable {
    std::uint32_t num_attributes = 0;
    std::vector<CodeTableEntry> entries;  // maintained in cover order
    std::vector<double> st_lengths;       // standard singleton code lengths, pinned cost model

    std::uint64_t total_usage() const {
        std::uint64_t u = 0;
        for (const auto& e : entries) u += e.usage;
        return u;
    }

    /// Laplace-smoothed code length of entry `idx`:
    /// -log2((usage + 1) / (total_usage + |entries|)).
    std::vector<double> code_lengths() const {
        const double denom =
            static_cast<double>(total_usage()) + static_cast<double>(entries.size());
        std::vector<double> lens(entries.size());
        for (std::size_t e = 0; e < entries.size(); ++e)
            lens[e] = std::log2(denom) - std::log2(static_cast<double>(entries[e].usage) + 1.0);
        return lens;
    }

    /// Greedy cover: scan entries in cover order, take an entry iff its items
    /// fit in the not-yet-covered remainder. Always yields a disjoint
    /// partition of the row's items; an empty row is covered by the
    /// empty-pattern entry. `skip` excludes one entry index (tentative ops).
    std::vector<std::size_t> cover(const DynBitset& row_bits,
                                   std::size_t skip = SIZE_MAX) const {
        std::vector<std::size_t> used;
        std::size_t left = row_bits.count();
        if (left == 0) {
            for (std::size_t e = entries.size(); e-- > 0;) {
                if (e != skip && entries[e].items.empty()) {
                    used.push_back(e);
                    return used;
                }
            }
            throw ContractViolation("code table lost its empty-pattern entry");
        }
        DynBitset remaining = row_bits;
        for (std::size_t e = 0; e < entries.size() && left > 0; ++e) {
            if (e == skip) continue;
            const auto& items = entries[e].items;
            if (items.empty() || items.size() > left) continue;
            bool fits = true;
            for (std::uint32_t j : items) {
                if (!remaining.test(j)) {
                    fits = false;
                    break;
                }
            }
            if (!fits) continue;
            for (std::uint32_t j : items) remaining.reset(j);
            left -= items.size();
            used.push_back(e);
        }
        if (left != 0)
            throw ContractViolation("cover failed: code table is missing singletons");
        return used;
    }

    std::vector<std::size_t> cover(std::span<const std::uint32_t> row,
                                   std::size_t skip = SIZE_MAX) const {
        return cover(DynBitset::from_indices(num_attributes, row), skip);
    }

    /// Singleton-plus-empty table for a context: the starting point of the
    /// Krimp search and the baseline encoding.
    static CodeTable standard(const Context& ctx) {
        CodeTable ct;
        ct.num_attributes = static_cast<std::uint32_t>(ctx.attribute_count());
        std::vector<std::uint64_t> col(ctx.attribute_count(), 0);
        std::uint64_t empty_rows = 0;
        for (const auto& row : ctx.rows) {
            if (row.empty()) ++empty_rows;
            for (std::uint32_t j : row) ++col[j];
        }
        for (std::uint32_t j = 0; j < ct.num_attributes; ++j)
            ct.entries.push_back({{j}, col[j], col[j]});
        ct.entries.push_back({{}, empty_rows, empty_rows});
        std::sort(ct.entries.begin(), ct.entries.end(), cover_order_less);

        std::uint64_t total = 0;
        for (auto c : col) total += c;
        const double denom = static_cast<double>(total) + static_cast<double>(ct.num_attributes);
        ct.st_lengths.resize(ct.num_attributes);
        for (std::uint32_t j = 0; j < ct.num_attributes; ++j)
            ct.st_lengths[j] = std::log2(denom) - std::log2(static_cast<double>(col[j]) + 1.0);
        return ct;
    }
};

/// Pinned cost model, the single place the MDL constants live.
/// L(D|CT)  = sum_e usage_e * codelen_e
/// L(CT)    = sum_e (standard-table cost of e's items + codelen_e)
/// codelen_e = -log2((usage_e + 1) / (total_usage + |entries|))
/// Acceptance during the search requires a strict decrease of more than
/// kSizeEpsilon to be immune to float noise.
inline constexpr double kSizeEpsilon = 1e-9;

inline double total_compressed_size(const CodeTable& ct) {
    auto lens = ct.code_lengths();
    double data_bits = 0.0, table_bits = 0.0;
    for (std::size_t e = 0; e < ct.entries.size(); ++e) {
        data_bits += static_cast<double>(ct.entries[e].usage) * lens[e];
        double item_bits = 0.0;
        for (std::uint32_t j : ct.entries[e].items) item_bits += ct.st_lengths[j];
        table_bits += item_bits + lens[e];
    }
    return data_bits + table_bits;
}

struct KrimpOptions {
    double minsupp = 0.0;  // 0 selects the smallest possible setting, 1/n
    RunLimits limits;
};

struct KrimpBuild {
    CodeTable table;
    double baseline_size = 0.0;  // singleton-plus-empty encoding of the data
    double final_size = 0.0;
    std::vector<double> accepted_sizes;  // total size after each accepted candidate
};

namespace detail {

class KrimpBuilder {
public:
    KrimpBuilder(const Context& ctx, const KrimpOptions& opt)
        : ctx_(ctx), limits_(opt.limits), tids_(attribute_tidsets(ctx)) {
        for (const auto& row : ctx.rows)
            row_bits_.push_back(DynBitset::from_indices(ctx.attribute_count(), row));
    }

    KrimpBuild run(double minsupp) {
        KrimpBuild out;
        ct_ = CodeTable::standard(ctx_);
        out.baseline_size = total_compressed_size(ct_);
        double current = out.baseline_size;

        auto candidates = mine_closed(ctx_, minsupp, limits_);
        std::erase_if(candidates, [](const Itemset& s) { return s.items.size() < 2; });
        // candidate order: support desc, length desc, lexicographic
        std::sort(candidates.begin(), candidates.end(), [](const Itemset& a, const Itemset& b) {
            if (a.support != b.support) return a.support > b.support;
            if (a.items.size() != b.items.size()) return a.items.size() > b.items.size();
            return a.items < b.items;
        });

        for (const auto& cand : candidates) {
            limits_.check_deadline();
            double with_candidate = try_insert(cand);
            if (with_candidate < current - kSizeEpsilon) {
                current = prune_decreased(with_candidate);
                out.accepted_sizes.push_back(current);
            } else {
                revert_insert();
            }
        }
        out.final_size = current;
        out.table = std::move(ct_);
        return out;
    }

private:
    /// Tentatively inserts the candidate and updates usages over the affected
    /// rows (exactly the rows containing the candidate: greedy covers of
    /// other rows cannot change). Commits the insertion and returns the new
    /// total size; the caller decides and may call revert_insert().
    double try_insert(const Itemset& cand) {
        CodeTableEntry entry{cand.items, cand.support, 0};
        auto pos = std::upper_bound(ct_.entries.begin(), ct_.entries.end(), entry,
                                    cover_order_less);
        std::size_t p = static_cast<std::size_t>(pos - ct_.entries.begin());

        saved_usages_.clear();
        for (const auto& e : ct_.entries) saved_usages_.push_back(e.usage);
        saved_pos_ = p;
        pre_usage_by_items_.clear();
        for (const auto& e : ct_.entries)
            if (e.items.size() >= 2) pre_usage_by_items_[e.items] = e.usage;

        ct_.entries.insert(ct_.entries.begin() + static_cast<std::ptrdiff_t>(p), entry);
        reassign_rows(rows_containing(cand.items), p);
        return total_compressed_size(ct_);
    }

    void revert_insert() {
        ct_.entries.erase(ct_.entries.begin() + static_cast<std::ptrdiff_t>(saved_pos_));
        for (std::size_t e = 0; e < ct_.entries.size(); ++e)
            ct_.entries[e].usage = saved_usages_[e];
    }

    /// Classic post-acceptance pruning: entries whose usage dropped since
    /// before the accepted insertion are re-tested (ascending usage) and
    /// removed when that strictly shrinks the total size.
    double prune_decreased(double current) {
        std::vector<std::vector<std::uint32_t>> queue;
        for (const auto& e : ct_.entries) {
            if (e.items.size() < 2) continue;
            auto it = pre_usage_by_items_.find(e.items);
            if (it != pre_usage_by_items_.end() && e.usage < it->second)
                queue.push_back(e.items);
        }
        while (!queue.empty()) {
            std::size_t best = 0;
            std::uint64_t best_usage = std::numeric_limits<std::uint64_t>::max();
            for (std::size_t q = 0; q < queue.size(); ++q) {
                auto idx = find_entry(queue[q]);
                if (idx == SIZE_MAX) continue;
                if (ct_.entries[idx].usage < best_usage) {
                    best_usage = ct_.entries[idx].usage;
                    best = q;
                }
            }
            auto items = queue[best];
            queue.erase(queue.begin() + static_cast<std::ptrdiff_t>(best));
            auto idx = find_entry(items);
            if (idx == SIZE_MAX) continue;

            std::vector<std::uint64_t> snapshot;
            for (const auto& e : ct_.entries) snapshot.push_back(e.usage);
            std::map<std::vector<std::uint32_t>, std::uint64_t> before;
            for (const auto& e : ct_.entries)
                if (e.items.size() >= 2) before[e.items] = e.usage;

            auto affected = rows_containing(items);
            // re-cover affected rows as if the entry were gone
            for (std::size_t r : affected) {
                for (std::size_t e : ct_.cover(row_bits_[r])) --ct_.entries[e].usage;
                for (std::size_t e : ct_.cover(row_bits_[r], idx)) ++ct_.entries[e].usage;
            }
            CodeTableEntry removed = ct_.entries[static_cast<std::size_t>(idx)];
            ct_.entries.erase(ct_.entries.begin() + static_cast<std::ptrdiff_t>(idx));
            double pruned_size = total_compressed_size(ct_);
            if (pruned_size < current - kSizeEpsilon) {
                current = pruned_size;
                for (const auto& e : ct_.entries) {
                    if (e.items.size() < 2) continue;
                    auto it = before.find(e.items);
                    if (it != before.end() && e.usage < it->second) queue.push_back(e.items);
                }
            } else {
                ct_.entries.insert(ct_.entries.begin() + static_cast<std::ptrdiff_t>(idx),
                                   removed);
                for (std::size_t e = 0; e < ct_.entries.size(); ++e)
                    ct_.entries[e].usage = snapshot[e];
            }
        }
        return current;
    }

    std::size_t find_entry(const std::vector<std::uint32_t>& items) const {
        for (std::size_t e = 0; e < ct_.entries.size(); ++e)
            if (ct_.entries[e].items == items) return e;
        return SIZE_MAX;
    }

    std::vector<std::size_t> rows_containing(const std::vector<std::uint32_t>& items) const {
        DynBitset acc = tids_[items[0]];
        for (std::size_t k = 1; k < items.size(); ++k) acc &= tids_[items[k]];
        std::vector<std::size_t> rows;
        acc.for_each([&](std::size_t r) { rows.push_back(r); });
        return rows;
    }

    /// Moves the given rows from their pre-insertion covers to covers that
    /// may use the new entry at index p.
    void reassign_rows(const std::vector<std::size_t>& rows, std::size_t p) {
        for (std::size_t r : rows) {
            for (std::size_t e : ct_.cover(row_bits_[r], p)) --ct_.entries[e].usage;
            for (std::size_t e : ct_.cover(row_bits_[r])) ++ct_.entries[e].usage;
        }
    }

    const Context& ctx_;
    RunLimits limits_;
    std::vector<DynBitset> tids_;
    std::vector<DynBitset> row_bits_;
    CodeTable ct_;
    std::vector<std::uint64_t> saved_usages_;
    std::size_t saved_pos_ = 0;
    std::map<std::vector<std::uint32_t>, std::uint64_t> pre_usage_by_items_;
};

}  // namespace detail

/// Krimp search: starting from the singleton table, closed frequent itemsets
/// are offered in candidate order and kept iff the total compressed size
/// strictly decreases, with post-acceptance pruning of entries whose usage
/// dropped. minsupp defaults to the smallest possible setting, 1/n.
inline KrimpBuild krimp_build(const Context& ctx, KrimpOptions opt = {}) {
    if (ctx.attribute_count() == 0) throw ContractViolation("krimp: context has no attributes");
    double minsupp = opt.minsupp;
    if (minsupp == 0.0)
        minsupp = ctx.row_count() == 0 ? 1.0 : 1.0 / static_cast<double>(ctx.row_count());
    detail::KrimpBuilder builder(ctx, opt);
    return builder.run(minsupp);
}

/// Encoded size of one row under a frozen code table, in bits.
inline double encoded_row_size(const CodeTable& ct, std::span<const std::uint32_t> row,
                               const std::vector<double>& lens) {
    if (row.empty()) return 0.0;
    double bits = 0.0;
    for (std::size_t e : ct.cover(row)) bits += lens[e];
    return bits;
}

/// OC3: per-row compressed size under the Krimp table built on the context
/// itself. High scores are anomalous. Empty rows score 0 and are flagged.
inline ScoreVector oc3_scores(const Context& ctx, KrimpOptions opt = {}) {
    auto build = krimp_build(ctx, opt);
    auto lens = build.table.code_lengths();
    ScoreVector sv;
    sv.polarity = Polarity::high_is_anomalous;
    sv.row_ids = ctx.row_ids;
    sv.scores.reserve(ctx.row_count());
    std::size_t empty_rows = 0;
    for (const auto& row : ctx.rows) {
        if (row.empty()) ++empty_rows;
        sv.scores.push_back(encoded_row_size(build.table, row, lens));
    }
    if (empty_rows > 0)
        sv.warnings.push_back(std::to_string(empty_rows) + " empty row(s) scored 0");
    return sv;
}

/// Golden-test dump: `items<TAB>usage<TAB>codelen_bits`, one entry per line,
/// items as comma-joined attribute names and `-` for the empty pattern.
inline void dump_code_table(const CodeTable& ct, const Context& ctx, std::ostream& out) {
    auto lens = ct.code_lengths();
    for (std::size_t e = 0; e < ct.entries.size(); ++e) {
        const auto& items = ct.entries[e].items;
        if (items.empty()) {
            out << '-';
        } else {
            for (std::size_t k = 0; k < items.size(); ++k)
                out << (k ? "," : "") << ctx.attributes[items[k]];
        }
        out << '\t' << ct.entries[e].usage << '\t' << lens[e] << '\n';
    }
}

}  // namespace ctxrank
