#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "ctxrank/errors.hpp"

namespace ctxrank {

/// A named sparse Boolean matrix: n process rows by m attribute columns.
/// Rows hold sorted attribute indices with value 1. Immutable by convention
/// once built; scorers share it read-only.
struct Context {
    std::string name;                             // PE, PX, PP, PN, PA or custom
    std::vector<std::string> attributes;          // m unique names, column order fixed
    std::vector<std::string> row_ids;             // n unique ids, row order fixed
    std::vector<std::vector<std::uint32_t>> rows; // sorted indices into attributes

    std::size_t attribute_count() const { return attributes.size(); }
    std::size_t row_count() const { return row_ids.size(); }

    bool row_has(std::size_t row, std::uint32_t attr) const {
        const auto& r = rows[row];
        return std::binary_search(r.begin(), r.end(), attr);
    }

    /// Checks the structural invariants; throws ContractViolation on breakage.
    void validate() const {
        if (row_ids.size() != rows.size())
            throw ContractViolation("context '" + name + "': row id / row bit count mismatch");
        std::unordered_set<std::string> seen_attrs(attributes.begin(), attributes.end());
        if (seen_attrs.size() != attributes.size())
            throw ContractViolation("context '" + name + "': duplicate attribute name");
        std::unordered_set<std::string> seen_rows(row_ids.begin(), row_ids.end());
        if (seen_rows.size() != row_ids.size())
            throw ContractViolation("context '" + name + "': duplicate row id");
        const std::uint32_t m = static_cast<std::uint32_t>(attributes.size());
        for (const auto& row : rows) {
            for (std::size_t k = 0; k < row.size(); ++k) {
                if (row[k] >= m)
                    throw ContractViolation("context '" + name + "': attribute index out of range");
                if (k > 0 && row[k] <= row[k - 1])
                    throw ContractViolation("context '" + name + "': row indices not strictly sorted");
            }
        }
    }
};

/// Labeled attack rows for evaluation. Ids that do not occur in the context
/// under evaluation are reported by rank(), never silently dropped.
struct GroundTruth {
    std::set<std::string> attack_ids;

    bool contains(const std::string& id) const { return attack_ids.count(id) > 0; }
};

}  // namespace ctxrank
