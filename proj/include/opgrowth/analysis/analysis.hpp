#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "opgrowth/lattice/rng.hpp"
#include "opgrowth/observables/observables.hpp"

namespace opgrowth {

class InsufficientDataError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class WindowError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class NoFrontError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitResult {
    double value = 0.0;
    double uncertainty = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::size_t n_points = 0;
    /// Coefficient of determination, clamped to [0, 1].
    double quality = 0.0;
    std::string method;
    /// Secondary numbers a method reports alongside the fit (e.g. theta scan).
    std::vector<std::pair<std::string, double>> extras;
};

/// Selects the points of an exponential fit. With `times` set, exactly the
/// points with t in [lo, hi]. Otherwise the automatic band: t > 0 and
/// max(noise_factor * median(stderr), lower_fraction * reference, min_excess)
///   <= |value - baseline| <= upper_fraction * reference,
/// where the median runs over the points below the upper edge and
/// `reference` defaults to max |value - baseline|.
struct WindowPolicy {
    std::optional<std::pair<double, double>> times;
    double noise_factor = 10.0;
    double lower_fraction = 0.0;
    double min_excess = 0.0;
    double upper_fraction = 0.05;
    std::optional<double> reference;
};

/// Indices chosen by `policy` for `curve` with the given baseline.
std::vector<std::size_t> select_window(const CurveEstimate &curve, double baseline, const WindowPolicy &policy);

/// Weighted least squares of log(value - baseline) against t. For growth the
/// result is the slope; for decay (negative slope) it is |slope| and `method`
/// says "decay". Weights are 1/sigma^2 with sigma = stderr / (value - baseline);
/// unweighted when any stderr in the window is zero.
FitResult fit_exponential_rate(const CurveEstimate &curve, double baseline, const WindowPolicy &policy = {});

/// Ordinary least squares of log(rate) against log(density). Needs >= 3
/// positive points.
FitResult fit_powerlaw_exponent(const std::vector<std::pair<double, double>> &points);

enum class FrontMethod { threshold, collapse };

struct FrontOptions {
    double theta = 0.5;
    /// Distances below this are ignored; r = 0 carries the injected damage.
    std::size_t min_distance = 1;
    std::vector<double> theta_scan = {0.3, 0.5, 0.7};
};

/// Reference level of the front: theta times the largest C(r, t) over all
/// slices with r >= min_distance. A slice holds a detectable front if its
/// own maximum reaches the level and the crossing lies inside the grid.
FitResult front_velocity(const Profile &profile, FrontMethod method, const FrontOptions &options = {});

/// Front position r*(t) per usable slice for the threshold method.
std::vector<std::pair<double, double>> front_positions(const Profile &profile, double theta,
                                                       std::size_t min_distance = 1);

struct Interval {
    double lo;
    double hi;
};

/// Percentile bootstrap interval of `statistic` at `level`.
Interval bootstrap_ci(const std::vector<double> &samples,
                      const std::function<double(const std::vector<double> &)> &statistic, std::size_t n_resamples,
                      RngStream rng, double level = 0.68);

/// JSON object with value, uncertainty, window, n_points, method and quality.
std::string fit_report_json(const FitResult &fit);

}  // namespace opgrowth
