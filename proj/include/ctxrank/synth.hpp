#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxrank/context.hpp"
#include "ctxrank/errors.hpp"
#include "ctxrank/rng.hpp"

namespace ctxrank {

enum class AnomalyStyle { rare_singleton, rare_combination, missing_expected };

inline const char* to_string(AnomalyStyle s) {
    switch (s) {
        case AnomalyStyle::rare_singleton: return "rare-singleton";
        case AnomalyStyle::rare_combination: return "rare-combination";
        case AnomalyStyle::missing_expected: return "missing-expected";
    }
    return "?";
}

inline AnomalyStyle anomaly_style_from_string(const std::string& text) {
    if (text == "rare-singleton") return AnomalyStyle::rare_singleton;
    if (text == "rare-combination") return AnomalyStyle::rare_combination;
    if (text == "missing-expected") return AnomalyStyle::missing_expected;
    throw ConfigError("unknown anomaly style: '" + text + "'");
}

/// Desk-scale stand-in for the provenance datasets: background rows sample
/// one of `num_patterns` attribute blocks (a categorical mixture), planted
/// anomalies deviate per style. Deterministic under (spec, seed).
struct SyntheticSpec {
    std::uint64_t n = 1000;
    std::uint64_t m = 20;
    std::uint32_t num_patterns = 4;
    double support_lo = 0.1;
    double support_hi = 0.4;
    std::uint64_t num_anomalies = 0;  // 0 selects max(1, n/1000)
    AnomalyStyle style = AnomalyStyle::rare_singleton;
    double noise_prob = 0.05;  // leftover columns flip on with this probability
};

struct SyntheticData {
    Context context;
    GroundTruth truth;
    std::vector<std::vector<std::uint32_t>> patterns;  // background blocks
    std::vector<double> weights;                       // realized mixture weights
};

inline SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.n == 0 || spec.m == 0) throw ConfigError("synthetic spec needs n > 0 and m > 0");
    if (spec.num_patterns == 0) throw ConfigError("synthetic spec needs at least one pattern");
    if (!(spec.support_lo > 0.0) || spec.support_hi < spec.support_lo)
        throw ConfigError("synthetic spec has a bad support range");

    const std::uint64_t reserved = spec.style == AnomalyStyle::rare_singleton ? 1 : 0;
    const std::uint64_t usable = spec.m > reserved ? spec.m - reserved : 0;
    const std::uint64_t block = usable / spec.num_patterns;
    if (block < 2)
        throw ConfigError("synthetic spec infeasible: more patterns than the attributes allow");
    if (spec.style == AnomalyStyle::rare_combination && spec.num_patterns < 2)
        throw ConfigError("rare-combination needs at least two patterns");

    std::uint64_t anomalies = spec.num_anomalies > 0 ? spec.num_anomalies
                                                     : std::max<std::uint64_t>(1, spec.n / 1000);
    if (anomalies >= spec.n)
        throw ConfigError("synthetic spec infeasible: anomalies must be < n");

    Rng rng(seed);
    SyntheticData out;
    out.context.name = "synthetic";

    const int id_width = static_cast<int>(std::to_string(spec.n).size());
    auto pad = [](std::uint64_t v, int width, char prefix) {
        std::string s = std::to_string(v);
        while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
        return std::string(1, prefix) + s;
    };
    for (std::uint64_t j = 0; j < spec.m; ++j)
        out.context.attributes.push_back(pad(j, static_cast<int>(std::to_string(spec.m).size()), 'a'));

    for (std::uint32_t k = 0; k < spec.num_patterns; ++k) {
        std::vector<std::uint32_t> items;
        for (std::uint64_t j = 0; j < block; ++j)
            items.push_back(static_cast<std::uint32_t>(k * block + j));
        out.patterns.push_back(std::move(items));
    }
    const std::uint64_t noise_begin = block * spec.num_patterns;
    const std::uint64_t noise_end = usable;

    double total = 0.0;
    std::vector<double> raw;
    for (std::uint32_t k = 0; k < spec.num_patterns; ++k) {
        raw.push_back(rng.next_in(spec.support_lo, spec.support_hi));
        total += raw.back();
    }
    for (double w : raw) out.weights.push_back(w / total);

    // anomaly rows spread evenly through the stream, forced distinct and in range
    std::vector<std::uint64_t> anomaly_at(anomalies);
    for (std::uint64_t j = 0; j < anomalies; ++j) anomaly_at[j] = (j + 1) * spec.n / (anomalies + 1);
    for (std::uint64_t j = 1; j < anomalies; ++j)
        anomaly_at[j] = std::max(anomaly_at[j], anomaly_at[j - 1] + 1);
    for (std::uint64_t j = anomalies; j-- > 0;)
        anomaly_at[j] = std::min(anomaly_at[j], spec.n - (anomalies - j));

    std::uint32_t heaviest = 0;
    for (std::uint32_t k = 1; k < spec.num_patterns; ++k)
        if (out.weights[k] > out.weights[heaviest]) heaviest = k;

    auto sample_pattern = [&]() {
        double u = rng.next_double();
        double acc = 0.0;
        for (std::uint32_t k = 0; k < spec.num_patterns; ++k) {
            acc += out.weights[k];
            if (u < acc) return k;
        }
        return spec.num_patterns - 1;
    };

    std::size_t next_anomaly = 0;
    for (std::uint64_t i = 0; i < spec.n; ++i) {
        std::string id = pad(i, id_width, 'p');
        std::vector<std::uint32_t> row;
        bool is_anomaly =
            next_anomaly < anomaly_at.size() && anomaly_at[next_anomaly] == i;
        if (is_anomaly) {
            ++next_anomaly;
            switch (spec.style) {
                case AnomalyStyle::rare_singleton:
                    row = out.patterns[sample_pattern()];
                    row.push_back(static_cast<std::uint32_t>(spec.m - 1));
                    break;
                case AnomalyStyle::rare_combination:
                    row = {out.patterns[0][0], out.patterns[1][1 % block]};
                    break;
                case AnomalyStyle::missing_expected:
                    row = out.patterns[heaviest];
                    row.pop_back();
                    break;
            }
            out.truth.attack_ids.insert(id);
        } else {
            row = out.patterns[sample_pattern()];
            for (std::uint64_t j = noise_begin; j < noise_end; ++j)
                if (rng.next_bernoulli(spec.noise_prob))
                    row.push_back(static_cast<std::uint32_t>(j));
        }
        std::sort(row.begin(), row.end());
        out.context.row_ids.push_back(std::move(id));
        out.context.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace ctxrank
