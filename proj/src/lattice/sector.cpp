#include "opgrowth/lattice/sector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace opgrowth {

ChargeSector::ChargeSector(std::size_t n_sites, std::size_t n_up, Filling filling)
    : n_sites_(n_sites), n_up_(n_up), filling_(filling) {
    if (n_sites == 0) {
        throw std::domain_error("ChargeSector: n_sites must be positive");
    }
    if (n_up > n_sites) {
        throw std::domain_error("ChargeSector: n_up=" + std::to_string(n_up) + " exceeds n_sites=" +
                                std::to_string(n_sites));
    }
}

ChargeSector ChargeSector::from_density(std::size_t n_sites, double density, Filling filling) {
    if (!(density >= 0.0 && density <= 1.0)) {
        throw std::domain_error("ChargeSector: density must lie in [0, 1]");
    }
    auto counted = static_cast<std::size_t>(std::llround(density * static_cast<double>(n_sites)));
    counted = std::min(counted, n_sites);
    std::size_t n_up = filling == Filling::up_fraction ? counted : n_sites - counted;
    return ChargeSector(n_sites, n_up, filling);
}

double ChargeSector::density() const noexcept {
    double up = up_density();
    return filling_ == Filling::up_fraction ? up : 1.0 - up;
}

double sector_dimension(std::size_t n_sites, std::size_t n_up) {
    if (n_up > n_sites) {
        throw std::domain_error("sector_dimension: n_up=" + std::to_string(n_up) +
                                " exceeds n_sites=" + std::to_string(n_sites));
    }
    std::size_t k = std::min(n_up, n_sites - n_up);
    if (n_sites <= 62) {
        // Exact integer binomial; every partial product is itself a binomial.
        __extension__ unsigned __int128 c = 1;
        for (std::size_t i = 1; i <= k; ++i) {
            c = c * (n_sites - k + i) / i;
        }
        return std::log(static_cast<double>(c));
    }
    double total = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
        total += std::log(static_cast<double>(n_sites - k + i) / static_cast<double>(i));
    }
    return total;
}

BitState sample_sector_state(const ChargeSector &sector, RngStream &rng) {
    const std::size_t n = sector.n_sites();
    const std::size_t ones = sector.n_up();
    // Shuffle only the minority population into place; the rest is the background.
    const bool place_ones = ones <= n - ones;
    const std::size_t picks = place_ones ? ones : n - ones;

    std::vector<std::uint32_t> labels(n);
    std::iota(labels.begin(), labels.end(), 0u);
    for (std::size_t i = 0; i < picks; ++i) {
        auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(labels[i], labels[j]);
    }

    BitState state(n);
    if (!place_ones) {
        for (auto &w : state.words()) {
            w = ~std::uint64_t{0};
        }
        if (n % 64 != 0) {
            state.words().back() &= (std::uint64_t{1} << (n % 64)) - 1;
        }
    }
    for (std::size_t i = 0; i < picks; ++i) {
        state.set(labels[i], place_ones);
    }
    return state;
}

}  // namespace opgrowth
