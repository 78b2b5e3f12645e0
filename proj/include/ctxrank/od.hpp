#pragma once

#include <cstdint>
#include <vector>

#include "ctxrank/avf.hpp"
#include "ctxrank/bitset.hpp"
#include "ctxrank/context.hpp"
#include "ctxrank/itemset.hpp"
#include "ctxrank/score.hpp"

namespace ctxrank {

/// Outlier degree: each rule X -> Y with X satisfied but Y not fully
/// exhibited contributes confidence * |Y \ t| / |Y|. High scores are
/// anomalous; a row that violates no rule scores exactly 0.
template <class Number>
std::vector<Number> od_values(const Context& ctx, const std::vector<Rule>& rules,
                              const RunLimits& limits = {}) {
    std::vector<Number> scores(ctx.row_count(), Number(0));
    if (rules.empty()) return scores;

    for (std::size_t r = 0; r < ctx.row_count(); ++r) {
        if ((r & 0xff) == 0) limits.check_deadline();
        DynBitset row = DynBitset::from_indices(ctx.attribute_count(), ctx.rows[r]);
        Number acc(0);
        for (const auto& rule : rules) {
            bool applies = true;
            for (std::uint32_t j : rule.antecedent) {
                if (!row.test(j)) {
                    applies = false;
                    break;
                }
            }
            if (!applies) continue;
            std::int64_t missing = 0;
            for (std::uint32_t j : rule.consequent)
                if (!row.test(j)) ++missing;
            if (missing == 0) continue;
            Number conf = NumberOps<Number>::fraction(
                static_cast<std::int64_t>(rule.support),
                static_cast<std::int64_t>(rule.antecedent_support));
            acc = acc + conf * NumberOps<Number>::fraction(
                            missing, static_cast<std::int64_t>(rule.consequent.size()));
        }
        scores[r] = acc;
    }
    return scores;
}

inline ScoreVector od_scores(const Context& ctx, double minsupp, double minconf,
                             const RunLimits& limits = {}) {
    if (ctx.attribute_count() == 0) throw ContractViolation("od: context has no attributes");
    auto frequents = mine_frequent(ctx, minsupp, limits);
    auto rules = mine_rules(frequents, minconf, limits);
    ScoreVector sv;
    sv.polarity = Polarity::high_is_anomalous;
    sv.row_ids = ctx.row_ids;
    sv.scores = od_values<double>(ctx, rules, limits);
    if (rules.empty())
        sv.warnings.push_back("no rules at minsupp=" + std::to_string(minsupp) +
                              " minconf=" + std::to_string(minconf) + "; all scores are 0");
    return sv;
}

}  // namespace ctxrank
