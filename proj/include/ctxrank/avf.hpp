#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ctxrank/context.hpp"
#include "ctxrank/errors.hpp"
#include "ctxrank/rational.hpp"
#include "ctxrank/score.hpp"

namespace ctxrank {

/// Per-attribute occurrence counts of value 1. This is the entire state a
/// streaming scorer needs: m counters plus the number of records consumed.
struct AttributeCounts {
    std::uint64_t records_seen = 0;
    std::vector<std::uint64_t> counts;

    explicit AttributeCounts(std::size_t m = 0) : counts(m, 0) {}

    void add_row(std::span<const std::uint32_t> row) {
        for (std::uint32_t j : row) ++counts[j];
        ++records_seen;
    }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

/// Halves every counter and the record count (integer floor). Relative
/// frequencies are preserved within rounding; used to keep fixed-width
/// counters away from overflow on long streams.
inline AttributeCounts counts_rescale(const AttributeCounts& counts) {
    AttributeCounts out(counts.counts.size());
    out.records_seen = counts.records_seen / 2;
    for (std::size_t j = 0; j < counts.counts.size(); ++j) out.counts[j] = counts.counts[j] / 2;
    return out;
}

/// Number abstraction shared by the float fast path and the exact rational
/// path used in golden tests.
template <class Number>
struct NumberOps;

template <>
struct NumberOps<double> {
    static double fraction(std::int64_t num, std::int64_t den) {
        return static_cast<double>(num) / static_cast<double>(den);
    }
};

template <>
struct NumberOps<Rational> {
    static Rational fraction(std::int64_t num, std::int64_t den) { return Rational(num, den); }
};

struct AvfStreamOptions {
    std::uint64_t block_size = 1;
    /// When nonzero, counts are halved after any block that pushes a counter
    /// past this threshold.
    std::uint64_t rescale_threshold = 0;
    /// Optional pseudo-observation prior (defaults off: probabilities start
    /// at zero, matching sparse data). weight w and probability p give
    /// q_j = (c_j + w*p) / (i + w).
    double prior_weight = 0.0;
    double prior_prob = 0.5;
    RunLimits limits;
};

/// Batch AVF: score(x) = (1/m) * sum_j [x_j*c_j + (1-x_j)*(n-c_j)] with
/// counts over the whole context. Low scores are anomalous. Scores lie in
/// [0, n] and the score multiset is invariant under row permutation.
template <class Number>
std::vector<Number> avf_batch_values(const Context& ctx, const RunLimits& limits = {}) {
    const std::int64_t m = static_cast<std::int64_t>(ctx.attribute_count());
    if (m == 0) throw ContractViolation("avf: context has no attributes");
    const std::int64_t n = static_cast<std::int64_t>(ctx.row_count());

    AttributeCounts counts(ctx.attribute_count());
    for (const auto& row : ctx.rows) counts.add_row(row);
    const std::int64_t total = static_cast<std::int64_t>(counts.total());

    std::vector<Number> scores;
    scores.reserve(ctx.row_count());
    for (std::size_t r = 0; r < ctx.row_count(); ++r) {
        if ((r & 0xfff) == 0) limits.check_deadline();
        const auto& row = ctx.rows[r];
        std::int64_t row_sum = 0;
        for (std::uint32_t j : row) row_sum += static_cast<std::int64_t>(counts.counts[j]);
        // sum_in + sum_out(n - c) = (m-|row|)*n - (total-row_sum) + row_sum
        std::int64_t numer = (m - static_cast<std::int64_t>(row.size())) * n - total + 2 * row_sum;
        scores.push_back(NumberOps<Number>::fraction(numer, m));
    }
    return scores;
}

/// Naive streaming AVF: the i-th record (1-based) is scored with raw counts
/// over the first i-1 records and zero-bit weight (i - c_j), then the record
/// updates the counts. Kept as a documented pitfall: the growing scale biases
/// early records towards looking anomalous.
template <class Number>
std::vector<Number> avf_naive_stream_values(const Context& ctx, const RunLimits& limits = {}) {
    const std::int64_t m = static_cast<std::int64_t>(ctx.attribute_count());
    if (m == 0) throw ContractViolation("avf: context has no attributes");

    AttributeCounts counts(ctx.attribute_count());
    std::int64_t total = 0;
    std::vector<Number> scores;
    scores.reserve(ctx.row_count());
    for (std::size_t r = 0; r < ctx.row_count(); ++r) {
        if ((r & 0xfff) == 0) limits.check_deadline();
        const auto& row = ctx.rows[r];
        const std::int64_t i = static_cast<std::int64_t>(r) + 1;
        std::int64_t row_sum = 0;
        for (std::uint32_t j : row) row_sum += static_cast<std::int64_t>(counts.counts[j]);
        std::int64_t numer = (m - static_cast<std::int64_t>(row.size())) * i - total + 2 * row_sum;
        scores.push_back(NumberOps<Number>::fraction(numer, m));
        counts.add_row(row);
        total += static_cast<std::int64_t>(row.size());
    }
    return scores;
}

/// Streaming AVF with probability normalization. Probabilities are frozen at
/// the start of each block from all records before it; while scoring the
/// record at global 1-based index i the denominator is still i, so
/// block_size=1 reproduces the per-record algorithm exactly and every score
/// lies in [0, 1].
template <class Number>
class StreamingAvf {
public:
    StreamingAvf(std::size_t m, AvfStreamOptions options = {})
        : options_(options), live_(m), frozen_(m) {
        if (m == 0) throw ContractViolation("avf: context has no attributes");
        if (options_.block_size == 0) throw ContractViolation("avf: block size must be >= 1");
    }

    /// Scores the next record against the frozen probabilities, then folds it
    /// into the live counts. O(|row|) amortized, O(m) state.
    Number push(std::span<const std::uint32_t> row) {
        const std::int64_t m = static_cast<std::int64_t>(live_.counts.size());
        // denominator = global index of this record in rescaled units
        const std::int64_t denom = static_cast<std::int64_t>(frozen_.records_seen + in_block_) + 1;

        Number score = options_.prior_weight == 0.0
                           ? integer_score(row, m, denom)
                           : prior_score(row, m, denom);

        live_.add_row(row);
        ++in_block_;
        if (in_block_ == options_.block_size) {
            if (options_.rescale_threshold > 0) maybe_rescale();
            frozen_ = live_;
            frozen_total_ = static_cast<std::int64_t>(frozen_.total());
            in_block_ = 0;
        }
        return score;
    }

    const AttributeCounts& state() const { return live_; }

private:
    Number integer_score(std::span<const std::uint32_t> row, std::int64_t m,
                         std::int64_t denom) const {
        std::int64_t row_sum = 0;
        for (std::uint32_t j : row) row_sum += static_cast<std::int64_t>(frozen_.counts[j]);
        // (1/m) * [ (m-|row|) - (S - sum_row q) + sum_row q ] with q_j = c_j/denom
        std::int64_t numer =
            (m - static_cast<std::int64_t>(row.size())) * denom - frozen_total_ + 2 * row_sum;
        return NumberOps<Number>::fraction(numer, m * denom);
    }

    Number prior_score(std::span<const std::uint32_t> row, std::int64_t m,
                       std::int64_t denom) const {
        Number w = number_from_double(options_.prior_weight);
        Number wp = number_from_double(options_.prior_weight * options_.prior_prob);
        Number d = Number(denom) + w;
        Number one(1);
        Number acc(0);
        std::size_t k = 0;
        for (std::int64_t j = 0; j < m; ++j) {
            bool set = k < row.size() && static_cast<std::int64_t>(row[k]) == j;
            if (set) ++k;
            Number q = (Number(static_cast<std::int64_t>(frozen_.counts[j])) + wp) / d;
            acc = acc + (set ? q : one - q);
        }
        return acc / Number(m);
    }

    static Number number_from_double(double v) {
        if constexpr (std::is_same_v<Number, Rational>)
            return Rational::from_double(v);
        else
            return v;
    }

    void maybe_rescale() {
        for (auto c : live_.counts) {
            if (c >= options_.rescale_threshold) {
                live_ = counts_rescale(live_);
                return;
            }
        }
    }

    AvfStreamOptions options_;
    AttributeCounts live_;    // includes every record pushed so far
    AttributeCounts frozen_;  // snapshot used for scoring the current block
    std::int64_t frozen_total_ = 0;
    std::uint64_t in_block_ = 0;
};

template <class Number>
std::vector<Number> avf_stream_values(const Context& ctx, AvfStreamOptions options = {}) {
    if (ctx.attribute_count() == 0) throw ContractViolation("avf: context has no attributes");
    StreamingAvf<Number> scorer(ctx.attribute_count(), options);
    std::vector<Number> scores;
    scores.reserve(ctx.row_count());
    for (std::size_t r = 0; r < ctx.row_count(); ++r) {
        if ((r & 0xfff) == 0) options.limits.check_deadline();
        scores.push_back(scorer.push(ctx.rows[r]));
    }
    return scores;
}

namespace detail {

inline ScoreVector to_score_vector(const Context& ctx, std::vector<double> values, Polarity pol) {
    ScoreVector sv;
    sv.polarity = pol;
    sv.row_ids = ctx.row_ids;
    sv.scores = std::move(values);
    return sv;
}

}  // namespace detail

inline ScoreVector avf_batch(const Context& ctx, const RunLimits& limits = {}) {
    return detail::to_score_vector(ctx, avf_batch_values<double>(ctx, limits),
                                   Polarity::low_is_anomalous);
}

inline ScoreVector avf_naive_stream(const Context& ctx, const RunLimits& limits = {}) {
    return detail::to_score_vector(ctx, avf_naive_stream_values<double>(ctx, limits),
                                   Polarity::low_is_anomalous);
}

inline ScoreVector avf_stream(const Context& ctx, AvfStreamOptions options = {}) {
    return detail::to_score_vector(ctx, avf_stream_values<double>(ctx, options),
                                   Polarity::low_is_anomalous);
}

}  // namespace ctxrank
