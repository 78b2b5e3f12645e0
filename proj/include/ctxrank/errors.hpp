#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace ctxrank {

/// Malformed input file. Carries a 1-based line (and column, when known).
class ParseError : public std::runtime_error {
public:
    ParseError(std::string msg, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(format(msg, line, column)), line_(line), column_(column) {}

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    static std::string format(const std::string& msg, std::size_t line, std::size_t column) {
        std::string out = msg;
        if (line > 0) out += " (line " + std::to_string(line);
        if (line > 0 && column > 0) out += ", column " + std::to_string(column);
        if (line > 0) out += ")";
        return out;
    }
    std::size_t line_;
    std::size_t column_;
};

/// File could not be opened or read.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration: unknown context kind, bad threshold, infeasible synthetic spec.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A resource cap tripped (e.g. the itemset cap during mining).
class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A cooperative deadline expired.
class TimeoutError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Metric has no defined value for the given labels (e.g. nDCG with zero attacks).
class UndefinedMetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Cooperative limits threaded through the long-running algorithms.
/// Deadline checks throw TimeoutError; the itemset cap throws ResourceLimitError.
struct RunLimits {
    std::optional<std::chrono::steady_clock::time_point> deadline;
    std::uint64_t itemset_cap = 5'000'000;

    void check_deadline() const {
        if (deadline && std::chrono::steady_clock::now() > *deadline)
            throw TimeoutError("deadline exceeded");
    }

    static RunLimits with_timeout(double seconds, std::uint64_t cap = 5'000'000) {
        RunLimits limits;
        limits.deadline = std::chrono::steady_clock::now() +
                          std::chrono::microseconds(static_cast<std::int64_t>(seconds * 1e6));
        limits.itemset_cap = cap;
        return limits;
    }
};

}  // namespace ctxrank
