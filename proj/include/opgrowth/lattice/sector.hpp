#pragma once

#include <cstddef>

#include "opgrowth/lattice/bit_state.hpp"
#include "opgrowth/lattice/rng.hpp"

namespace opgrowth {

/// Which population the reported density counts.
enum class Filling { up_fraction, down_fraction };

/// Fixed-charge subspace: all configurations of n_sites with exactly n_up ones.
class ChargeSector {
  public:
    /// Throws std::domain_error unless 0 <= n_up <= n_sites and n_sites > 0.
    ChargeSector(std::size_t n_sites, std::size_t n_up, Filling filling = Filling::up_fraction);

    /// Sector whose reported density (under `filling`) is closest to `density`.
    static ChargeSector from_density(std::size_t n_sites, double density,
                                     Filling filling = Filling::up_fraction);

    std::size_t n_sites() const noexcept { return n_sites_; }
    std::size_t n_up() const noexcept { return n_up_; }
    Filling filling() const noexcept { return filling_; }
    double density() const noexcept;
    /// Fraction of occupied sites regardless of the reporting convention.
    double up_density() const noexcept { return static_cast<double>(n_up_) / n_sites_; }

  private:
    std::size_t n_sites_;
    std::size_t n_up_;
    Filling filling_;
};

/// Natural log of C(n_sites, n_up). Throws std::domain_error if n_up > n_sites.
double sector_dimension(std::size_t n_sites, std::size_t n_up);

/// Uniform draw from the sector (partial Fisher-Yates over site labels).
BitState sample_sector_state(const ChargeSector &sector, RngStream &rng);

}  // namespace opgrowth
