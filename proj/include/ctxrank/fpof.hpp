#pragma once

#include <cstdint>
#include <vector>

#include "ctxrank/avf.hpp"
#include "ctxrank/bitset.hpp"
#include "ctxrank/context.hpp"
#include "ctxrank/itemset.hpp"
#include "ctxrank/score.hpp"

namespace ctxrank {

/// FPOF(t) = (sum of support fractions of frequent itemsets contained in t)
/// normalized by |F|. Low scores are anomalous; scores lie in [0, 1]. An
/// empty frequent family degenerates to all-zero scores with a warning.
template <class Number>
std::vector<Number> fpof_values(const Context& ctx, double minsupp,
                                const std::vector<Itemset>& frequents,
                                const RunLimits& limits = {}) {
    (void)minsupp;
    const std::int64_t n = static_cast<std::int64_t>(ctx.row_count());
    const std::int64_t family = static_cast<std::int64_t>(frequents.size());
    std::vector<Number> scores(ctx.row_count(), Number(0));
    if (family == 0 || n == 0) return scores;

    for (std::size_t r = 0; r < ctx.row_count(); ++r) {
        if ((r & 0xff) == 0) limits.check_deadline();
        DynBitset row = DynBitset::from_indices(ctx.attribute_count(), ctx.rows[r]);
        Number acc(0);
        for (const auto& f : frequents) {
            bool contained = true;
            for (std::uint32_t j : f.items) {
                if (!row.test(j)) {
                    contained = false;
                    break;
                }
            }
            if (contained)
                acc = acc + NumberOps<Number>::fraction(static_cast<std::int64_t>(f.support), n);
        }
        scores[r] = acc / Number(family);
    }
    return scores;
}

inline ScoreVector fpof_scores(const Context& ctx, double minsupp, const RunLimits& limits = {}) {
    if (ctx.attribute_count() == 0) throw ContractViolation("fpof: context has no attributes");
    auto frequents = mine_frequent(ctx, minsupp, limits);
    ScoreVector sv;
    sv.polarity = Polarity::low_is_anomalous;
    sv.row_ids = ctx.row_ids;
    sv.scores = fpof_values<double>(ctx, minsupp, frequents, limits);
    if (frequents.empty())
        sv.warnings.push_back("no frequent itemsets at minsupp=" + std::to_string(minsupp) +
                              "; all scores are 0");
    return sv;
}

}  // namespace ctxrank
