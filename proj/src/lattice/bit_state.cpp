#include "opgrowth/lattice/bit_state.hpp"

#include <stdexcept>

namespace opgrowth {

BitState::BitState(std::size_t n_sites) : n_sites_(n_sites), words_((n_sites + 63) / 64, 0) {
    if (n_sites == 0) {
        throw std::invalid_argument("BitState needs at least one site");
    }
}

BitState BitState::from_string(std::string_view bits) {
    BitState s(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1') {
            s.set(i, true);
        } else if (bits[i] != '0') {
            throw std::invalid_argument("BitState string may only contain '0' and '1'");
        }
    }
    return s;
}

std::size_t BitState::charge() const noexcept {
    std::size_t total = 0;
    for (auto w : words_) {
        total += static_cast<std::size_t>(std::popcount(w));
    }
    return total;
}

bool BitState::at(std::size_t i) const {
    if (i >= n_sites_) {
        throw std::out_of_range("site index " + std::to_string(i) + " out of range for " +
                                std::to_string(n_sites_) + " sites");
    }
    return get(i);
}

std::string BitState::to_string() const {
    std::string out(n_sites_, '0');
    for (std::size_t i = 0; i < n_sites_; ++i) {
        if (get(i)) {
            out[i] = '1';
        }
    }
    return out;
}

std::size_t hamming_distance(const BitState &a, const BitState &b) {
    if (a.n_sites() != b.n_sites()) {
        throw std::invalid_argument("hamming_distance: size mismatch");
    }
    std::size_t total = 0;
    const auto &wa = a.words();
    const auto &wb = b.words();
    for (std::size_t w = 0; w < wa.size(); ++w) {
        total += static_cast<std::size_t>(std::popcount(wa[w] ^ wb[w]));
    }
    return total;
}

BitState flip_bit(const BitState &state, std::size_t i) {
    if (i >= state.n_sites()) {
        throw std::out_of_range("flip_bit: site " + std::to_string(i) + " out of range for " +
                                std::to_string(state.n_sites()) + " sites");
    }
    BitState out = state;
    out.toggle(i);
    return out;
}

}  // namespace opgrowth
