#include "opgrowth/analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace opgrowth {

namespace {

struct LineFit {
    double slope;
    double intercept;
    double slope_se;
    double r_squared;
};

/// Weighted least squares y = a + b x. Slope standard error is scaled by the
/// residual variance, so it vanishes on exact data.
LineFit weighted_line(const std::vector<double> &x, const std::vector<double> &y, const std::vector<double> &w) {
    const std::size_t n = x.size();
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double xm = sx / sw, ym = sy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (x[i] - xm) * (x[i] - xm);
        sxy += w[i] * (x[i] - xm) * (y[i] - ym);
        syy += w[i] * (y[i] - ym) * (y[i] - ym);
    }
    if (!(sxx > 0)) {
        throw InsufficientDataError("fit needs at least two distinct abscissae");
    }
    LineFit f{};
    f.slope = sxy / sxx;
    f.intercept = ym - f.slope * xm;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - f.intercept - f.slope * x[i];
        rss += w[i] * r * r;
    }
    f.slope_se = n > 2 ? std::sqrt(rss / static_cast<double>(n - 2) / sxx) : 0.0;
    f.r_squared = syy > 0 ? std::clamp(1.0 - rss / syy, 0.0, 1.0) : 1.0;
    return f;
}

double median(std::vector<double> v) {
    if (v.empty()) {
        return 0.0;
    }
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (v.size() % 2 == 1) {
        return hi;
    }
    double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

/// Position where the profile slice drops through `level`, scanning outward
/// from the last point at or above it. nullopt when no point reaches the
/// level or the crossing would lie beyond the grid.
std::optional<double> crossing(const std::vector<double> &c, const std::vector<std::size_t> &r, std::size_t first,
                               double level) {
    std::optional<std::size_t> last;
    for (std::size_t idx = first; idx < c.size(); ++idx) {
        if (c[idx] >= level) {
            last = idx;
        }
    }
    if (!last || *last + 1 >= c.size()) {
        return std::nullopt;
    }
    const std::size_t a = *last;
    const double c0 = c[a], c1 = c[a + 1];
    const double r0 = static_cast<double>(r[a]), r1 = static_cast<double>(r[a + 1]);
    return r0 + (c0 - level) / (c0 - c1) * (r1 - r0);
}

std::size_t first_index(const Profile &p, std::size_t min_distance) {
    std::size_t idx = 0;
    while (idx < p.distances.size() && p.distances[idx] < min_distance) {
        ++idx;
    }
    return idx;
}

double reference_level(const Profile &p, std::size_t first) {
    double ref = 0.0;
    for (const auto &row : p.values) {
        for (std::size_t idx = first; idx < row.size(); ++idx) {
            ref = std::max(ref, row[idx]);
        }
    }
    return ref;
}

/// Slices whose front at level theta*ref is detectable.
std::vector<std::size_t> usable_slices(const Profile &p, double level, std::size_t first) {
    std::vector<std::size_t> out;
    for (std::size_t ti = 0; ti < p.times.size(); ++ti) {
        if (crossing(p.values[ti], p.distances, first, level)) {
            out.push_back(ti);
        }
    }
    return out;
}

FitResult threshold_fit(const Profile &p, double theta, std::size_t min_distance) {
    auto pts = front_positions(p, theta, min_distance);
    if (pts.size() < 4) {
        throw NoFrontError("threshold front: " + std::to_string(pts.size()) +
                           " time slices with a detectable front, need 4");
    }
    std::vector<double> x, y, w(pts.size(), 1.0);
    for (auto [t, r] : pts) {
        x.push_back(t);
        y.push_back(r);
    }
    LineFit lf = weighted_line(x, y, w);
    FitResult out;
    out.value = lf.slope;
    out.uncertainty = lf.slope_se;
    out.window_lo = x.front();
    out.window_hi = x.back();
    out.n_points = pts.size();
    out.quality = lf.r_squared;
    out.method = "threshold-front";
    return out;
}

/// Mean squared deviation between slices of C(x + v t) over the grid points
/// where at least two slices have data.
double collapse_cost(const Profile &p, const std::vector<std::size_t> &slices, std::size_t first, double v) {
    const double r_lo = static_cast<double>(p.distances[first]);
    const double r_hi = static_cast<double>(p.distances.back());
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    for (std::size_t ti : slices) {
        double shift = v * static_cast<double>(p.times[ti]);
        x_lo = std::min(x_lo, r_lo - shift);
        x_hi = std::max(x_hi, r_hi - shift);
    }
    double total = 0.0;
    std::size_t count = 0;
    std::vector<double> vals;
    for (double x = std::floor(x_lo); x <= x_hi; x += 1.0) {
        vals.clear();
        for (std::size_t ti : slices) {
            double r = x + v * static_cast<double>(p.times[ti]);
            if (r < r_lo || r > r_hi) {
                continue;
            }
            // Linear interpolation on the distance grid.
            auto it = std::lower_bound(p.distances.begin() + static_cast<std::ptrdiff_t>(first), p.distances.end(),
                                       static_cast<std::size_t>(std::ceil(r)));
            std::size_t b = static_cast<std::size_t>(it - p.distances.begin());
            if (b >= p.distances.size()) {
                b = p.distances.size() - 1;
            }
            std::size_t a = b > first ? b - 1 : b;
            double ra = static_cast<double>(p.distances[a]), rb = static_cast<double>(p.distances[b]);
            double ca = p.values[ti][a], cb = p.values[ti][b];
            vals.push_back(rb > ra ? ca + (cb - ca) * (r - ra) / (rb - ra) : ca);
        }
        if (vals.size() < 2) {
            continue;
        }
        double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
        for (double c : vals) {
            total += (c - mean) * (c - mean);
        }
        count += vals.size();
    }
    return count > 0 ? total / static_cast<double>(count) : std::numeric_limits<double>::infinity();
}

double collapse_minimize(const Profile &p, const std::vector<std::size_t> &slices, std::size_t first) {
    const double t_span = static_cast<double>(p.times[slices.back()] - p.times[slices.front()]);
    const double v_hi = static_cast<double>(p.distances.back()) / std::max(t_span, 1.0);
    constexpr int coarse = 200;
    double best_v = 0.0, best_c = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= coarse; ++g) {
        double v = v_hi * g / coarse;
        double c = collapse_cost(p, slices, first, v);
        if (c < best_c) {
            best_c = c;
            best_v = v;
        }
    }
    // Golden-section refinement within one coarse cell on either side.
    const double step = v_hi / coarse;
    double a = std::max(0.0, best_v - step), b = best_v + step;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = collapse_cost(p, slices, first, x1), f2 = collapse_cost(p, slices, first, x2);
    for (int it = 0; it < 60 && b - a > 1e-9; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = collapse_cost(p, slices, first, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = collapse_cost(p, slices, first, x2);
        }
    }
    return 0.5 * (a + b);
}

FitResult collapse_fit(const Profile &p, double theta, std::size_t min_distance) {
    const std::size_t first = first_index(p, min_distance);
    if (first >= p.distances.size()) {
        throw NoFrontError("collapse: no distances at or beyond the minimum");
    }
    const double level = theta * reference_level(p, first);
    if (!(level > 0)) {
        throw NoFrontError("collapse: profile is flat");
    }
    auto slices = usable_slices(p, level, first);
    if (slices.size() < 4) {
        throw NoFrontError("collapse: " + std::to_string(slices.size()) +
                           " time slices with a detectable front, need 4");
    }
    FitResult out;
    out.value = collapse_minimize(p, slices, first);
    // Spread between independent collapses of the early and late halves.
    std::size_t half = slices.size() / 2;
    std::vector<std::size_t> early(slices.begin(), slices.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<std::size_t> late(slices.begin() + static_cast<std::ptrdiff_t>(half), slices.end());
    double v_early = collapse_minimize(p, early, first);
    double v_late = collapse_minimize(p, late, first);
    out.uncertainty = 0.5 * std::abs(v_early - v_late);
    out.window_lo = static_cast<double>(p.times[slices.front()]);
    out.window_hi = static_cast<double>(p.times[slices.back()]);
    out.n_points = slices.size();
    double c0 = collapse_cost(p, slices, first, 0.0);
    double cv = collapse_cost(p, slices, first, out.value);
    out.quality = c0 > 0 ? std::clamp(1.0 - cv / c0, 0.0, 1.0) : 0.0;
    out.method = "collapse";
    out.extras.push_back({"v_early", v_early});
    out.extras.push_back({"v_late", v_late});
    return out;
}

}  // namespace

std::vector<std::size_t> select_window(const CurveEstimate &curve, double baseline, const WindowPolicy &policy) {
    const std::size_t n = curve.times.size();
    if (curve.values.size() != n || curve.std_error.size() != n) {
        throw std::invalid_argument("curve columns have different lengths");
    }
    std::vector<std::size_t> idx;
    if (policy.times) {
        for (std::size_t i = 0; i < n; ++i) {
            double t = static_cast<double>(curve.times[i]);
            if (t >= policy.times->first && t <= policy.times->second) {
                idx.push_back(i);
            }
        }
        return idx;
    }
    double reference = 0.0;
    if (policy.reference) {
        reference = *policy.reference;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            reference = std::max(reference, std::abs(curve.values[i] - baseline));
        }
    }
    const double upper = policy.upper_fraction * reference;
    std::vector<double> errs;
    for (std::size_t i = 0; i < n; ++i) {
        if (curve.times[i] > 0 && std::abs(curve.values[i] - baseline) <= upper) {
            errs.push_back(curve.std_error[i]);
        }
    }
    const double lower = std::max({policy.noise_factor * median(errs), policy.lower_fraction * reference, policy.min_excess});
    for (std::size_t i = 0; i < n; ++i) {
        double y = std::abs(curve.values[i] - baseline);
        if (curve.times[i] > 0 && y >= lower && y <= upper && y > 0) {
            idx.push_back(i);
        }
    }
    return idx;
}

FitResult fit_exponential_rate(const CurveEstimate &curve, double baseline, const WindowPolicy &policy) {
    auto idx = select_window(curve, baseline, policy);
    if (idx.size() < 4) {
        throw InsufficientDataError("exponential fit: " + std::to_string(idx.size()) +
                                    " usable points in the window, need 4");
    }
    // The sign of the residual is fixed by the first point; a sign change or
    // zero inside the window invalidates the log.
    const double sign = curve.values[idx.front()] - baseline >= 0 ? 1.0 : -1.0;
    std::vector<double> x, y, w;
    bool weighted = true;
    for (std::size_t i : idx) {
        double d = sign * (curve.values[i] - baseline);
        if (!(d > 0)) {
            throw WindowError("exponential fit: value - baseline changes sign or vanishes at t=" +
                              std::to_string(curve.times[i]));
        }
        x.push_back(static_cast<double>(curve.times[i]));
        y.push_back(std::log(d));
        double sigma = curve.std_error[i] / d;
        weighted = weighted && sigma > 0;
        w.push_back(sigma > 0 ? 1.0 / (sigma * sigma) : 1.0);
    }
    if (!weighted) {
        std::fill(w.begin(), w.end(), 1.0);
    }
    LineFit lf = weighted_line(x, y, w);
    FitResult out;
    out.value = std::abs(lf.slope);
    out.uncertainty = lf.slope_se;
    out.window_lo = x.front();
    out.window_hi = x.back();
    out.n_points = x.size();
    out.quality = lf.r_squared;
    out.method = std::string(lf.slope >= 0 ? "growth" : "decay") + (weighted ? "-weighted" : "-unweighted");
    return out;
}

FitResult fit_powerlaw_exponent(const std::vector<std::pair<double, double>> &points) {
    if (points.size() < 3) {
        throw InsufficientDataError("power-law fit: " + std::to_string(points.size()) + " points, need 3");
    }
    std::vector<double> x, y, w(points.size(), 1.0);
    for (auto [density, rate] : points) {
        if (!(density > 0) || !(rate > 0)) {
            throw std::domain_error("power-law fit: non-positive entry");
        }
        x.push_back(std::log(density));
        y.push_back(std::log(rate));
    }
    LineFit lf = weighted_line(x, y, w);
    FitResult out;
    out.value = lf.slope;
    out.uncertainty = lf.slope_se;
    out.window_lo = std::exp(*std::min_element(x.begin(), x.end()));
    out.window_hi = std::exp(*std::max_element(x.begin(), x.end()));
    out.n_points = points.size();
    out.quality = lf.r_squared;
    out.method = "power-law";
    out.extras.push_back({"prefactor", std::exp(lf.intercept)});
    return out;
}

std::vector<std::pair<double, double>> front_positions(const Profile &profile, double theta,
                                                       std::size_t min_distance) {
    const std::size_t first = first_index(profile, min_distance);
    std::vector<std::pair<double, double>> pts;
    if (first >= profile.distances.size()) {
        return pts;
    }
    const double level = theta * reference_level(profile, first);
    if (!(level > 0)) {
        return pts;
    }
    for (std::size_t ti = 0; ti < profile.times.size(); ++ti) {
        if (auto r = crossing(profile.values[ti], profile.distances, first, level)) {
            pts.emplace_back(static_cast<double>(profile.times[ti]), *r);
        }
    }
    return pts;
}

FitResult front_velocity(const Profile &profile, FrontMethod method, const FrontOptions &options) {
    if (profile.values.size() != profile.times.size()) {
        throw std::invalid_argument("profile: value rows do not match the time grid");
    }
    if (!(options.theta > 0 && options.theta < 1)) {
        throw std::invalid_argument("front threshold must lie in (0, 1)");
    }
    FitResult out = method == FrontMethod::threshold ? threshold_fit(profile, options.theta, options.min_distance)
                                                     : collapse_fit(profile, options.theta, options.min_distance);
    for (double th : options.theta_scan) {
        double v = std::numeric_limits<double>::quiet_NaN();
        try {
            v = method == FrontMethod::threshold ? threshold_fit(profile, th, options.min_distance).value
                                                 : collapse_fit(profile, th, options.min_distance).value;
        } catch (const NoFrontError &) {
        }
        char name[32];
        std::snprintf(name, sizeof name, "theta=%.2f", th);
        out.extras.push_back({name, v});
    }
    return out;
}

Interval bootstrap_ci(const std::vector<double> &samples,
                      const std::function<double(const std::vector<double> &)> &statistic, std::size_t n_resamples,
                      RngStream rng, double level) {
    if (samples.empty()) {
        throw InsufficientDataError("bootstrap: empty sample set");
    }
    if (n_resamples < 100) {
        throw std::invalid_argument("bootstrap: need at least 100 resamples, got " + std::to_string(n_resamples));
    }
    if (!(level > 0 && level < 1)) {
        throw std::invalid_argument("bootstrap: level must lie in (0, 1)");
    }
    std::vector<double> stats(n_resamples);
    std::vector<double> draw(samples.size());
    for (auto &s : stats) {
        for (auto &d : draw) {
            d = samples[rng.below(samples.size())];
        }
        s = statistic(draw);
    }
    std::sort(stats.begin(), stats.end());
    auto quantile = [&](double q) {
        double pos = q * static_cast<double>(n_resamples - 1);
        auto lo = static_cast<std::size_t>(std::floor(pos));
        std::size_t hi = std::min(lo + 1, n_resamples - 1);
        return stats[lo] + (stats[hi] - stats[lo]) * (pos - static_cast<double>(lo));
    };
    const double tail = 0.5 * (1.0 - level);
    return {quantile(tail), quantile(1.0 - tail)};
}

std::string fit_report_json(const FitResult &fit) {
    nlohmann::ordered_json j;
    j["method"] = fit.method;
    j["value"] = fit.value;
    j["uncertainty"] = fit.uncertainty;
    j["window"] = {fit.window_lo, fit.window_hi};
    j["n_points"] = fit.n_points;
    j["quality"] = fit.quality;
    nlohmann::ordered_json extras = nlohmann::ordered_json::object();
    for (const auto &[k, v] : fit.extras) {
        extras[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
    }
    j["extras"] = extras;
    return j.dump(2);
}

}  // namespace opgrowth
