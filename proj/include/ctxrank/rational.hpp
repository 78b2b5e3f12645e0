#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ctxrank/errors.hpp"

namespace ctxrank {

/// Exact rational on int64 with __int128 intermediates. Always normalized:
/// den > 0, gcd(|num|, den) == 1. Overflow after reduction throws.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT: implicit by design
    Rational(std::int64_t num, std::int64_t den) { assign(num, den); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return from_i128(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return from_i128(i128(a.num_) * b.den_ - i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from_i128(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("rational division by zero");
        return from_i128(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    std::string to_string() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    /// Exact value of a finite double. The mantissa/exponent decomposition is
    /// lossless for |exponent| small enough to fit; out-of-range throws.
    static Rational from_double(double value) {
        if (!std::isfinite(value)) throw std::domain_error("rational from non-finite double");
        if (value == 0.0) return Rational(0);
        int exp = 0;
        double mant = std::frexp(value, &exp);  // value = mant * 2^exp, 0.5 <= |mant| < 1
        std::int64_t m = static_cast<std::int64_t>(std::ldexp(mant, 53));
        exp -= 53;
        while (m != 0 && (m & 1) == 0) {
            m >>= 1;
            ++exp;
        }
        if (exp >= 0) {
            if (exp > 62) throw std::overflow_error("rational from_double: exponent too large");
            return from_i128(i128(m) << exp, 1);
        }
        if (exp < -62) throw std::overflow_error("rational from_double: exponent too small");
        return from_i128(m, i128(1) << (-exp));
    }

    /// Parses "a" or "a/b".
    static Rational parse(const std::string& text) {
        auto slash = text.find('/');
        try {
            if (slash == std::string::npos) return Rational(std::stoll(text));
            return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
        } catch (const std::logic_error&) {
            throw ParseError("bad rational literal: '" + text + "'");
        }
    }

private:
    using i128 = __int128;

    void assign(std::int64_t num, std::int64_t den) {
        if (den == 0) throw std::domain_error("rational with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
        num_ = num;
        den_ = den;
    }

    static Rational from_i128(i128 num, i128 den) {
        if (den == 0) throw std::domain_error("rational with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        i128 a = num < 0 ? -num : num;
        i128 b = den;
        while (b != 0) {
            i128 t = a % b;
            a = b;
            b = t;
        }
        if (a > 1) {
            num /= a;
            den /= a;
        }
        constexpr i128 kMax = INT64_MAX;
        if (num > kMax || num < -kMax || den > kMax)
            throw std::overflow_error("rational overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(num);
        r.den_ = static_cast<std::int64_t>(den);
        return r;
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// True iff support/n >= threshold, where threshold is an exact binary double.
/// Used everywhere a fractional threshold meets an integer count, so that
/// boundary cases (support/n exactly equal to the threshold) are included
/// deterministically.
inline bool fraction_at_least(std::uint64_t support, std::uint64_t total, double threshold) {
    if (total == 0) return false;
    if (threshold <= 0.0) return true;
    if (!std::isfinite(threshold)) return false;
    int exp = 0;
    double mant = std::frexp(threshold, &exp);
    std::int64_t m = static_cast<std::int64_t>(std::ldexp(mant, 53));
    exp -= 53;
    while (m != 0 && (m & 1) == 0) {
        m >>= 1;
        ++exp;
    }
    using i128 = __int128;
    // support/total >= m * 2^exp
    if (exp >= 0) {
        if (exp > 70) return false;  // threshold astronomically large
        return i128(support) >= i128(total) * m * (i128(1) << exp);
    }
    if (-exp > 70) return support >= 1;  // threshold below any representable 1/total
    return i128(support) * (i128(1) << (-exp)) >= i128(total) * m;
}

/// Smallest support count s with s/n >= minsupp (and at least 1, so an
/// itemset must actually occur).
inline std::uint64_t min_support_count(double minsupp, std::uint64_t n) {
    if (n == 0) return 1;
    std::uint64_t lo = 1, hi = n;
    if (fraction_at_least(0, n, minsupp)) return 1;
    if (!fraction_at_least(n, n, minsupp)) return n + 1;  // nothing can qualify
    while (lo < hi) {
        std::uint64_t mid = lo + (hi - lo) / 2;
        if (fraction_at_least(mid, n, minsupp))
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

}  // namespace ctxrank
