#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace ctxrank {

/// Fixed-width bitset over 64-bit words. Covers the two hot paths here:
/// row-id sets (mining tidsets) and attribute sets (subset tests in covers).
class DynBitset {
public:
    DynBitset() = default;
    explicit DynBitset(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

    static DynBitset from_indices(std::size_t bits, std::span<const std::uint32_t> indices) {
        DynBitset b(bits);
        for (std::uint32_t i : indices) b.set(i);
        return b;
    }

    void set(std::size_t i) { words_[i >> 6] |= std::uint64_t(1) << (i & 63); }
    void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t(1) << (i & 63)); }
    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
    std::size_t size() const { return bits_; }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += std::popcount(w);
        return c;
    }

    bool any() const {
        for (auto w : words_)
            if (w) return true;
        return false;
    }

    bool is_subset_of(const DynBitset& other) const {
        for (std::size_t k = 0; k < words_.size(); ++k)
            if (words_[k] & ~other.words_[k]) return false;
        return true;
    }

    DynBitset& operator&=(const DynBitset& other) {
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= other.words_[k];
        return *this;
    }

    friend DynBitset operator&(DynBitset a, const DynBitset& b) { return a &= b; }

    static std::size_t and_count(const DynBitset& a, const DynBitset& b) {
        std::size_t c = 0;
        for (std::size_t k = 0; k < a.words_.size(); ++k)
            c += std::popcount(a.words_[k] & b.words_[k]);
        return c;
    }

    /// True iff (a & b) == a, i.e. a's bits all survive the intersection.
    static bool and_preserves(const DynBitset& a, const DynBitset& b) {
        return a.is_subset_of(b);
    }

    template <class Fn>
    void for_each(Fn&& fn) const {
        for (std::size_t k = 0; k < words_.size(); ++k) {
            std::uint64_t w = words_[k];
            while (w) {
                fn(k * 64 + static_cast<std::size_t>(std::countr_zero(w)));
                w &= w - 1;
            }
        }
    }

    friend bool operator==(const DynBitset& a, const DynBitset& b) {
        return a.bits_ == b.bits_ && a.words_ == b.words_;
    }

private:
    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace ctxrank
