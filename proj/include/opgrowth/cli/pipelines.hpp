#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opgrowth/analysis/analysis.hpp"
#include "opgrowth/observables/observables.hpp"

namespace opgrowth::cli {

/// Independent seed for item `index` of a scan tagged `tag`.
std::uint64_t sub_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index);

enum class Observable { otoc, autocorr };

struct ScanSettings {
    Observable observable = Observable::otoc;
    Geometry geometry = AllToAll{2000};
    std::size_t k = 3;
    double f = 0.5;
    std::vector<double> densities;
    Filling filling = Filling::up_fraction;
    std::size_t samples = 1000;
    std::size_t t_max = 300;
    PairPolicy policy = PairPolicy::all_sites;
    Direction direction = Direction::forward;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    /// Upper edge of the OTOC window as a fraction of 8 n(1-n).
    double otoc_upper_fraction = 0.1;
    double otoc_lower_multiple = 3.0;
    double noise_factor = 10.0;
    /// Band of the autocorrelator window as fractions of 4 n(1-n).
    double decay_lower_fraction = 0.1;
    double decay_upper_fraction = 0.9;
};

struct DensityPoint {
    double density = 0.0;
    std::uint64_t seed = 0;
    CurveEstimate curve;
    std::optional<FitResult> fit;
    std::string fit_error;
};

struct ScalingResult {
    std::vector<DensityPoint> points;
    std::optional<FitResult> exponent;
    std::string exponent_error;
};

/// OTOC growth rate. Baseline -4/(N-1) restores the excluded i = j term so
/// that C + 4/(N-1) grows from 4/(N-1). The window starts once C + 4/(N-1)
/// exceeds lower_multiple * 4/(N-1), past the transient in which the seed
/// damage leaves site i, and ends at upper_fraction * 8 n(1-n) with n the up
/// density.
FitResult lyapunov_fit(const CurveEstimate &curve, double upper_fraction = 0.1, double noise_factor = 10.0,
                       double lower_multiple = 3.0);

/// Autocorrelator decay rate of C - (1-2n)^2 inside
/// [lower, upper] * 4 n(1-n).
FitResult decay_rate_fit(const CurveEstimate &curve, double lower_fraction = 0.1, double upper_fraction = 0.9,
                         double noise_factor = 10.0);

/// One curve and rate per density, then the power-law exponent of rate
/// against density when at least three rates exist.
ScalingResult density_scan(const ScanSettings &settings);

struct FrontSettings {
    std::size_t length = 1000;
    bool periodic = true;
    std::size_t k = 5;
    double f = 0.5;
    std::vector<double> densities;
    Filling filling = Filling::down_fraction;
    std::size_t samples = 1000;
    std::size_t t_max = 1200;
    std::size_t stride = 20;
    /// 0 selects length / 2.
    std::size_t r_max = 0;
    FrontOptions front;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

struct FrontPoint {
    double density = 0.0;
    std::uint64_t seed = 0;
    Profile profile;
    std::optional<FitResult> threshold;
    std::optional<FitResult> collapse;
    std::string threshold_error;
    std::string collapse_error;
};

struct FrontScan {
    std::vector<FrontPoint> points;
    std::optional<FitResult> threshold_exponent;
    std::optional<FitResult> collapse_exponent;
};

FrontScan front_scan(const FrontSettings &settings);

}  // namespace opgrowth::cli
