#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ctxrank/context.hpp"
#include "ctxrank/errors.hpp"
#include "ctxrank/rational.hpp"
#include "ctxrank/score.hpp"

namespace ctxrank {

/// STABLE keeps input order among tied scores (reproducible rankings);
/// AVERAGE_RANK half-credits tied attack/normal pairs in AUC, matching the
/// Mann-Whitney U convention.
enum class TiePolicy { stable, average_rank };

/// A total order of row ids, position 1 = most anomalous. tie_group marks
/// runs of tied scores so AUC can half-credit them; labels mark attacks.
struct Ranking {
    std::vector<std::string> ordered_ids;
    std::vector<char> labels;
    std::vector<std::uint32_t> tie_group;
    TiePolicy tie_policy = TiePolicy::stable;
    std::vector<std::string> unmatched_truth;
    std::size_t attack_count = 0;
};

namespace detail {

/// Shared ranking core: sorts row indices so the most anomalous comes first
/// (ascending scores for LOW_IS_ANOMALOUS, descending otherwise), stable
/// within ties, and labels rows from the ground truth.
template <class Value>
Ranking rank_impl(const std::vector<std::string>& row_ids, const std::vector<Value>& values,
                  Polarity polarity, const GroundTruth& truth, TiePolicy tie_policy) {
    if (row_ids.size() != values.size())
        throw ContractViolation("rank: ids and scores disagree in length");

    std::vector<std::size_t> order(row_ids.size());
    std::iota(order.begin(), order.end(), 0);
    const bool ascending = polarity == Polarity::low_is_anomalous;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ascending ? values[a] < values[b] : values[b] < values[a];
    });

    Ranking r;
    r.tie_policy = tie_policy;
    r.ordered_ids.reserve(order.size());
    r.labels.reserve(order.size());
    r.tie_group.reserve(order.size());
    std::uint32_t group = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k > 0 && values[order[k]] != values[order[k - 1]]) ++group;
        r.ordered_ids.push_back(row_ids[order[k]]);
        r.tie_group.push_back(group);
        bool attack = truth.contains(row_ids[order[k]]);
        r.labels.push_back(attack ? 1 : 0);
        if (attack) ++r.attack_count;
    }
    for (const auto& id : truth.attack_ids) {
        if (std::find(row_ids.begin(), row_ids.end(), id) == row_ids.end())
            r.unmatched_truth.push_back(id);
    }
    return r;
}

}  // namespace detail

inline Ranking rank(const ScoreVector& scores, const GroundTruth& truth,
                    TiePolicy tie_policy = TiePolicy::stable) {
    return detail::rank_impl(scores.row_ids, scores.scores, scores.polarity, truth, tie_policy);
}

/// Exact-arithmetic ranking used by the rational CLI mode and golden tests.
inline Ranking rank_exact(const std::vector<std::string>& row_ids,
                          const std::vector<Rational>& values, Polarity polarity,
                          const GroundTruth& truth, TiePolicy tie_policy = TiePolicy::stable) {
    return detail::rank_impl(row_ids, values, polarity, truth, tie_policy);
}

/// nDCG with binary relevance: DCG = sum over positions of rel_i/log2(i+1),
/// normalized by the ideal DCG of all k attacks at positions 1..k.
inline double ndcg(const Ranking& r) {
    if (r.attack_count == 0)
        throw UndefinedMetricError("ndcg requires at least one attack label");
    double dcg = 0.0;
    for (std::size_t i = 0; i < r.labels.size(); ++i)
        if (r.labels[i]) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    double ideal = 0.0;
    for (std::size_t i = 0; i < r.attack_count; ++i)
        ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return dcg / ideal;
}

/// AUC as the fraction of (attack, normal) pairs ordered correctly. Under
/// AVERAGE_RANK, pairs with tied scores earn half credit, which makes this
/// the normalized Mann-Whitney U statistic.
inline double auc(const Ranking& r) {
    const std::size_t n = r.labels.size();
    const std::size_t attacks = r.attack_count;
    const std::size_t normals = n - attacks;
    if (attacks == 0 || normals == 0)
        throw UndefinedMetricError("auc requires both attack and normal labels");

    double credit = 0.0;
    std::size_t normals_below = normals;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        std::size_t group_attacks = 0, group_normals = 0;
        while (j < n && r.tie_group[j] == r.tie_group[i]) {
            group_attacks += r.labels[j] ? 1 : 0;
            group_normals += r.labels[j] ? 0 : 1;
            ++j;
        }
        normals_below -= group_normals;
        credit += static_cast<double>(group_attacks) * static_cast<double>(normals_below);
        if (r.tie_policy == TiePolicy::average_rank)
            credit += 0.5 * static_cast<double>(group_attacks) * static_cast<double>(group_normals);
        i = j;
    }
    return credit / (static_cast<double>(attacks) * static_cast<double>(normals));
}

/// Detection step curve: one point per inspected prefix, (fraction of rows
/// inspected, fraction of attacks found). Monotone; last point is (1, 1).
inline std::vector<std::pair<double, double>> tp_curve(const Ranking& r) {
    std::vector<std::pair<double, double>> curve;
    const double n = static_cast<double>(r.labels.size());
    const double k = static_cast<double>(r.attack_count);
    std::size_t found = 0;
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
        found += r.labels[i] ? 1 : 0;
        curve.emplace_back((static_cast<double>(i) + 1.0) / n,
                           k == 0 ? 0.0 : static_cast<double>(found) / k);
    }
    return curve;
}

/// Step-curve value at inspection fraction x.
inline double curve_value_at(const std::vector<std::pair<double, double>>& curve, double x) {
    double value = 0.0;
    for (const auto& [frac, found] : curve) {
        if (frac > x) break;
        value = found;
    }
    return value;
}

/// Sorted 1-based ranks of all attacks, for band plots.
inline std::vector<std::size_t> band_positions(const Ranking& r) {
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < r.labels.size(); ++i)
        if (r.labels[i]) positions.push_back(i + 1);
    return positions;
}

struct PositionMetrics {
    double ndcg = 0.0;
    double auc = 0.0;
};

/// Metrics for a ranking reconstructed from attack positions alone (the
/// median-rank protocol). Colliding positions are bumped to the next free
/// slot so the result is a valid ranking of n_rows rows.
inline PositionMetrics metrics_from_attack_positions(std::vector<std::uint64_t> positions,
                                                     std::uint64_t n_rows) {
    if (positions.empty())
        throw UndefinedMetricError("no attack positions");
    if (positions.size() >= n_rows)
        throw UndefinedMetricError("need at least one normal row");
    std::sort(positions.begin(), positions.end());
    // enforce a strictly increasing, in-range assignment
    for (std::size_t i = 0; i < positions.size(); ++i) {
        std::uint64_t lo = i == 0 ? 1 : positions[i - 1] + 1;
        if (positions[i] < lo) positions[i] = lo;
    }
    for (std::size_t i = positions.size(); i-- > 0;) {
        std::uint64_t hi = n_rows - (positions.size() - 1 - i);
        if (positions[i] > hi) positions[i] = hi;
    }
    const double k = static_cast<double>(positions.size());
    const double normals = static_cast<double>(n_rows) - k;

    PositionMetrics out;
    double dcg = 0.0, ideal = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        dcg += 1.0 / std::log2(static_cast<double>(positions[i]) + 1.0);
        ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    out.ndcg = dcg / ideal;

    double credit = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        double normals_above = static_cast<double>(positions[i] - 1) - static_cast<double>(i);
        credit += normals - normals_above;
    }
    out.auc = credit / (k * normals);
    return out;
}

/// Lower median of integer ranks: element at index (k-1)/2 of the sorted
/// list, deterministic for even counts.
inline std::uint64_t lower_median(std::vector<std::uint64_t> ranks) {
    if (ranks.empty()) throw ContractViolation("median of empty rank list");
    std::sort(ranks.begin(), ranks.end());
    return ranks[(ranks.size() - 1) / 2];
}

}  // namespace ctxrank
