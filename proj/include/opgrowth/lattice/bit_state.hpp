#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace opgrowth {

/// Occupation configuration of N two-level sites, packed 64 sites per word.
/// Bits beyond n_sites in the last word are always zero.
class BitState {
  public:
    BitState() = default;
    explicit BitState(std::size_t n_sites);

    /// Parses a string of '0'/'1' characters; character i is site i.
    static BitState from_string(std::string_view bits);

    std::size_t n_sites() const noexcept { return n_sites_; }
    std::size_t charge() const noexcept;

    bool get(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i, bool value) noexcept {
        std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (value) {
            words_[i >> 6] |= mask;
        } else {
            words_[i >> 6] &= ~mask;
        }
    }
    void toggle(std::size_t i) noexcept { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

    /// Bounds-checked accessor.
    bool at(std::size_t i) const;

    const std::vector<std::uint64_t> &words() const noexcept { return words_; }
    std::vector<std::uint64_t> &words() noexcept { return words_; }

    std::string to_string() const;

    friend bool operator==(const BitState &, const BitState &) = default;

  private:
    std::size_t n_sites_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Number of sites where the two states differ. Sizes must match.
std::size_t hamming_distance(const BitState &a, const BitState &b);

/// Copy of `state` with site i toggled. Throws std::out_of_range.
BitState flip_bit(const BitState &state, std::size_t i);

}  // namespace opgrowth
