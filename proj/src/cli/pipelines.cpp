#include "opgrowth/cli/pipelines.hpp"

#include <stdexcept>

#include "opgrowth/lattice/rng.hpp"

namespace opgrowth::cli {

namespace {

double up_density(const CurveEstimate &curve) {
    if (curve.metadata.n_sites == 0) {
        throw std::invalid_argument("curve metadata lacks the number of sites");
    }
    return static_cast<double>(curve.metadata.n_up) / static_cast<double>(curve.metadata.n_sites);
}

template <class Fit>
std::optional<FitResult> exponent_of(const std::vector<std::pair<double, double>> &pts, std::string &error, Fit fit) {
    if (pts.size() < 3) {
        error = "fewer than three rates";
        return std::nullopt;
    }
    try {
        return fit(pts);
    } catch (const std::exception &e) {
        error = e.what();
        return std::nullopt;
    }
}

}  // namespace

std::uint64_t sub_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
    RngStream s(master, StreamKey{StreamRole::generic, tag, index, 0});
    return s.next_u64();
}

FitResult lyapunov_fit(const CurveEstimate &curve, double upper_fraction, double noise_factor, double lower_multiple) {
    const double n = up_density(curve);
    const double sites = static_cast<double>(curve.metadata.n_sites);
    WindowPolicy w;
    w.noise_factor = noise_factor;
    w.upper_fraction = upper_fraction;
    w.reference = 8.0 * n * (1.0 - n);
    w.min_excess = lower_multiple * 4.0 / (sites - 1.0);
    return fit_exponential_rate(curve, -4.0 / (sites - 1.0), w);
}

FitResult decay_rate_fit(const CurveEstimate &curve, double lower_fraction, double upper_fraction,
                         double noise_factor) {
    const double n = up_density(curve);
    WindowPolicy w;
    w.noise_factor = noise_factor;
    w.lower_fraction = lower_fraction;
    w.upper_fraction = upper_fraction;
    w.reference = 4.0 * n * (1.0 - n);
    return fit_exponential_rate(curve, (1.0 - 2.0 * n) * (1.0 - 2.0 * n), w);
}

ScalingResult density_scan(const ScanSettings &settings) {
    ScalingResult out;
    const std::size_t n_sites = geometry_sites(settings.geometry);
    const std::uint64_t tag = settings.observable == Observable::otoc ? 1 : 2;
    std::vector<std::pair<double, double>> rates;
    for (std::size_t d = 0; d < settings.densities.size(); ++d) {
        SamplingSpec spec;
        spec.geometry = settings.geometry;
        spec.k = settings.k;
        spec.f = settings.f;
        spec.filling = settings.filling;
        spec.n_up = ChargeSector::from_density(n_sites, settings.densities[d], settings.filling).n_up();
        spec.n_samples = settings.samples;
        spec.seed = sub_seed(settings.seed, tag, d);
        spec.policy = settings.policy;
        spec.direction = settings.direction;
        spec.workers = settings.workers;

        DensityPoint p;
        p.density = spec.sector().density();
        p.seed = spec.seed;
        p.curve = settings.observable == Observable::otoc ? otoc_curve(spec, settings.t_max)
                                                          : autocorr_curve(spec, settings.t_max);
        try {
            p.fit = settings.observable == Observable::otoc
                        ? lyapunov_fit(p.curve, settings.otoc_upper_fraction, settings.noise_factor,
                                       settings.otoc_lower_multiple)
                        : decay_rate_fit(p.curve, settings.decay_lower_fraction, settings.decay_upper_fraction,
                                         settings.noise_factor);
            rates.emplace_back(p.density, p.fit->value);
        } catch (const std::exception &e) {
            p.fit_error = e.what();
        }
        out.points.push_back(std::move(p));
    }
    out.exponent = exponent_of(rates, out.exponent_error, fit_powerlaw_exponent);
    return out;
}

FrontScan front_scan(const FrontSettings &settings) {
    FrontScan out;
    const Chain chain{settings.length, settings.periodic};
    const std::size_t r_max = settings.r_max == 0 ? settings.length / 2 : settings.r_max;
    const std::size_t origin = settings.length / 2;
    std::vector<std::pair<double, double>> thr, col;
    for (std::size_t d = 0; d < settings.densities.size(); ++d) {
        SamplingSpec spec;
        spec.geometry = chain;
        spec.k = settings.k;
        spec.f = settings.f;
        spec.filling = settings.filling;
        spec.n_up = ChargeSector::from_density(settings.length, settings.densities[d], settings.filling).n_up();
        spec.n_samples = settings.samples;
        spec.seed = sub_seed(settings.seed, 3, d);
        spec.workers = settings.workers;

        FrontPoint p;
        p.density = spec.sector().density();
        p.seed = spec.seed;
        p.profile = otoc_profile(spec, origin, settings.t_max, r_max, settings.stride);
        try {
            p.threshold = front_velocity(p.profile, FrontMethod::threshold, settings.front);
            thr.emplace_back(p.density, p.threshold->value);
        } catch (const std::exception &e) {
            p.threshold_error = e.what();
        }
        try {
            p.collapse = front_velocity(p.profile, FrontMethod::collapse, settings.front);
            col.emplace_back(p.density, p.collapse->value);
        } catch (const std::exception &e) {
            p.collapse_error = e.what();
        }
        out.points.push_back(std::move(p));
    }
    std::string ignored;
    out.threshold_exponent = exponent_of(thr, ignored, fit_powerlaw_exponent);
    out.collapse_exponent = exponent_of(col, ignored, fit_powerlaw_exponent);
    return out;
}

}  // namespace opgrowth::cli
