#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "opgrowth/circuit/circuit.hpp"
#include "opgrowth/lattice/sector.hpp"

namespace opgrowth {

/// How the (i, j) average of the OTOC is taken. `all_sites` averages the
/// sample over every j != i of one trajectory; `random_site` draws a single
/// j != i per trajectory. Both estimate the same quantity.
enum class PairPolicy { all_sites, random_site };

std::string pair_policy_name(PairPolicy p);

/// Everything that determines a Monte Carlo run besides the time grid.
struct SamplingSpec {
    Geometry geometry = AllToAll{2000};
    std::size_t k = 3;
    double f = 0.5;
    std::size_t n_up = 0;
    Filling filling = Filling::up_fraction;
    std::size_t n_samples = 1;
    std::uint64_t seed = 0;
    PairPolicy policy = PairPolicy::all_sites;
    Direction direction = Direction::forward;
    std::size_t workers = 1;

    ChargeSector sector() const { return ChargeSector(geometry_sites(geometry), n_up, filling); }
};

struct CurveMetadata {
    std::string observable;
    std::string geometry;
    std::size_t n_sites = 0;
    std::size_t k = 0;
    double f = 0.0;
    std::size_t n_up = 0;
    double density = 0.0;
    std::string filling;
    std::string policy;
    std::string direction;
    std::uint64_t seed = 0;
};

/// Sample mean and standard error per time.
struct CurveEstimate {
    std::vector<std::size_t> times;
    std::vector<double> values;
    std::vector<double> std_error;
    std::size_t n_samples = 0;
    CurveMetadata metadata;
};

/// C(r, t) with values[t_index][r].
struct Profile {
    std::vector<std::size_t> distances;
    std::vector<std::size_t> times;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<double>> std_error;
    std::size_t n_samples = 0;
    std::size_t k = 0;
    CurveMetadata metadata;
};

/// (z_j(s(t)) - z_j(s*(t)))^2 for the given start state, with s* = flip(s, i).
/// Returns 0 or 4.
double otoc_value(const BitState &s, std::size_t i, std::size_t j, const CircuitRealization &circuit,
                  std::size_t t, Direction direction = Direction::forward);

/// As `otoc_value` with s drawn uniformly from the sector using `rng`.
double otoc_sample(const ChargeSector &sector, std::size_t i, std::size_t j, const CircuitRealization &circuit,
                   std::size_t t, RngStream &rng);

/// OTOC averaged over circuits, states and pairs i != j for t = 0..t_max.
/// Each trajectory m uses its own circuit and streams keyed by m, so the
/// result does not depend on the number of workers.
CurveEstimate otoc_curve(const SamplingSpec &spec, std::size_t t_max);

/// z_i(s) z_i(s(t)) averaged over sites, states and circuits for t = 0..t_max.
CurveEstimate autocorr_curve(const SamplingSpec &spec, std::size_t t_max);

/// Chain-only. C(r, t) for r = 0..r_max and t = 0, stride, 2 stride, ... <= t_max,
/// averaged over both directions from i0.
Profile otoc_profile(const SamplingSpec &spec, std::size_t i0, std::size_t t_max, std::size_t r_max,
                     std::size_t stride = 1);

/// Header: t,value,stderr,n_samples
void write_curve_csv(std::ostream &os, const CurveEstimate &curve);
/// Header: t,r,value,stderr
void write_profile_csv(std::ostream &os, const Profile &profile);
CurveEstimate read_curve_csv(std::istream &is);
Profile read_profile_csv(std::istream &is);

/// Shortest periodic (or open) distance between sites a and b.
std::size_t chain_distance(const Chain &chain, std::size_t a, std::size_t b) noexcept;

}  // namespace opgrowth
