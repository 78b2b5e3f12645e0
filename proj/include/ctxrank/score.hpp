#pragma once

#include <string>
#include <vector>

#include "ctxrank/errors.hpp"

namespace ctxrank {

/// Whether low or high scores denote anomalies. Normalized away at ranking
/// time so downstream metrics never see algorithm-specific conventions.
enum class Polarity { low_is_anomalous, high_is_anomalous };

inline const char* to_string(Polarity p) {
    return p == Polarity::low_is_anomalous ? "LOW_IS_ANOMALOUS" : "HIGH_IS_ANOMALOUS";
}

inline Polarity polarity_from_string(const std::string& text) {
    if (text == "LOW_IS_ANOMALOUS") return Polarity::low_is_anomalous;
    if (text == "HIGH_IS_ANOMALOUS") return Polarity::high_is_anomalous;
    throw ParseError("unknown polarity: '" + text + "'");
}

/// Per-row anomaly scores, one per context row and in context row order.
struct ScoreVector {
    Polarity polarity = Polarity::low_is_anomalous;
    std::vector<std::string> row_ids;
    std::vector<double> scores;
    std::vector<std::string> warnings;  // degenerate-result notes (empty itemset family, empty rows, ...)
};

}  // namespace ctxrank
