#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace contagion {

/*! A subset of the obligors {1..N}, N <= 128, stored as a bitmask.

    Obligor i occupies bit i-1. Cardinality, membership and subset tests are O(1).
*/
class ObligorSet {
  public:
    using Bits = unsigned __int128;
    static constexpr int max_obligors = 128;

    ObligorSet() = default;
    //! Empty set over a universe of n obligors.
    explicit ObligorSet(int n);

    static ObligorSet full(int n);
    static ObligorSet of(int n, std::initializer_list<int> members);
    static ObligorSet of(int n, const std::vector<int>& members);
    static ObligorSet from_bits(int n, Bits bits);

    int universe() const { return n_; }
    Bits bits() const { return bits_; }

    int size() const {
        return std::popcount(static_cast<std::uint64_t>(bits_)) +
               std::popcount(static_cast<std::uint64_t>(bits_ >> 64));
    }
    bool empty() const { return bits_ == 0; }
    bool is_full() const { return bits_ == mask(n_); }

    bool contains(int i) const;
    ObligorSet with(int i) const;
    ObligorSet without(int i) const;
    ObligorSet complement() const { return from_bits(n_, ~bits_ & mask(n_)); }
    ObligorSet minus(const ObligorSet& other) const { return from_bits(n_, bits_ & ~other.bits_); }
    ObligorSet united(const ObligorSet& other) const { return from_bits(n_, bits_ | other.bits_); }
    bool is_subset_of(const ObligorSet& other) const { return (bits_ & ~other.bits_) == 0; }

    //! Members in increasing order.
    std::vector<int> members() const;

    template <class F>
    void for_each(F&& f) const {
        Bits b = bits_;
        while (b != 0) {
            const int bit = lowest_bit(b);
            f(bit + 1);
            b &= b - 1;
        }
    }

    std::string to_string() const;

    friend bool operator==(const ObligorSet&, const ObligorSet&) = default;

    static Bits mask(int n) {
        if (n >= 128)
            return ~Bits{0};
        return (Bits{1} << n) - 1;
    }

  private:
    static int lowest_bit(Bits b) {
        const auto lo = static_cast<std::uint64_t>(b);
        if (lo != 0)
            return std::countr_zero(lo);
        return 64 + std::countr_zero(static_cast<std::uint64_t>(b >> 64));
    }
    void check_index(int i) const;

    Bits bits_ = 0;
    int n_ = 0;
};

struct ObligorSetHash {
    std::size_t operator()(const ObligorSet& s) const noexcept {
        const auto lo = static_cast<std::uint64_t>(s.bits());
        const auto hi = static_cast<std::uint64_t>(s.bits() >> 64);
        return static_cast<std::size_t>(lo * 0x9E3779B97F4A7C15ULL ^ (hi + 0x7F4A7C159E3779B9ULL + (lo << 6)));
    }
};

} // namespace contagion
