#include "opgrowth/theory/syk.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "json.hpp"

namespace opgrowth::theory {

namespace {

double two_cosh(double mu) { return 2.0 * std::cosh(mu / 2.0); }

double with_mu(const SykParams &p, double mu, double (*f)(const SykParams &)) {
    SykParams q = p;
    q.mu = mu;
    return f(q);
}

}  // namespace

double SykParams::density() const noexcept { return 1.0 / (1.0 + std::exp(mu)); }

std::string variant_name(Variant v) { return v == Variant::regular ? "regular" : "brownian"; }

void validate(const SykParams &p) {
    if (p.q < 4 || p.q % 2 != 0) {
        throw std::invalid_argument("q must be even and at least 4, got " + std::to_string(p.q));
    }
    if (!(p.J > 0)) {
        throw std::invalid_argument("J must be positive");
    }
    if (!(p.b >= 0.0 && p.b <= 0.5)) {
        throw std::invalid_argument("hopping weight b must lie in [0, 1/2]");
    }
    if (!std::isfinite(p.mu)) {
        throw std::invalid_argument("mu must be finite");
    }
}

double gamma(const SykParams &p) {
    validate(p);
    const double qm2 = p.q - 2;
    if (p.variant == Variant::regular) {
        return p.J / (std::sqrt(p.q - 1.0) * std::pow(two_cosh(p.mu), qm2 / 2.0));
    }
    return p.J / (std::pow(2.0, p.q - 1) * std::pow(std::cosh(p.mu / 2.0), qm2));
}

double rung_zero(const SykParams &p) {
    validate(p);
    const double qm2 = p.q - 2;
    if (p.variant == Variant::brownian) {
        return (p.q - 1.0) * p.J / std::pow(two_cosh(p.mu), qm2);
    }
    const double g = gamma(p);
    if (!(g > 0)) {
        throw std::domain_error("rung_zero: decay rate vanishes, R(0) diverges");
    }
    return 2.0 * (p.q - 1.0) * p.J * p.J / (qm2 * g * std::pow(two_cosh(p.mu), qm2));
}

double lyapunov(const SykParams &p) { return rung_zero(p) - 2.0 * gamma(p); }

double lyapunov_at_momentum(const SykParams &p, double momentum) {
    return lyapunov(p) - p.b * rung_zero(p) * momentum * momentum;
}

double lyapunov_at_momentum_full(const SykParams &p, double momentum) {
    const double s = 1.0 - 2.0 * p.b * (1.0 - std::cos(momentum));
    return rung_zero(p) * s - 2.0 * gamma(p);
}

double butterfly_velocity(const SykParams &p) {
    validate(p);
    if (p.b == 0.0) {
        return 0.0;
    }
    const double lam = lyapunov(p);
    if (!(lam > 0)) {
        throw std::domain_error("butterfly velocity undefined for non-positive lambda(0)");
    }
    return std::sqrt(4.0 * p.b * lam * rung_zero(p));
}

double lyapunov_ratio(const SykParams &p) { return lyapunov(p) / with_mu(p, 0.0, lyapunov); }

double butterfly_ratio(const SykParams &p) { return butterfly_velocity(p) / with_mu(p, 0.0, butterfly_velocity); }

DensityBounds density_bounds(double nbar, int q, double lambda_star) {
    if (!(nbar > 0.0 && nbar < 1.0)) {
        throw std::invalid_argument("density must lie in (0, 1)");
    }
    if (q < 4 || q % 2 != 0) {
        throw std::invalid_argument("q must be even and at least 4, got " + std::to_string(q));
    }
    if (!(lambda_star > 0)) {
        throw std::invalid_argument("lambda* must be positive");
    }
    const double x = 4.0 * nbar * (1.0 - nbar);
    const double quantum = (q - 2) / 4.0;
    return {std::sqrt(x) * lambda_star, std::pow(x, quantum) * lambda_star, quantum, 2.0 * quantum};
}

double green_product(const SykParams &p, double t) {
    const double c = std::cosh(p.mu / 2.0);
    return std::exp(-2.0 * gamma(p) * std::abs(t)) / (4.0 * c * c);
}

QuadratureReport quadrature_check(const SykParams &p) {
    validate(p);
    if (p.variant != Variant::regular) {
        throw std::invalid_argument("quadrature_check applies to the regular variant");
    }
    const double g = gamma(p);
    if (!(g > 0)) {
        throw std::domain_error("quadrature_check: decay rate vanishes");
    }
    const double qm2 = p.q - 2;
    const double amp = (p.q - 1.0) * p.J * p.J / std::pow(two_cosh(p.mu), qm2);
    const double cutoff = 50.0 / (qm2 * g);
    auto integrand = [&](double t) { return amp * std::exp(-qm2 * g * t); };
    double err = 0.0;
    // The integrand is even with a kink at t = 0; integrate one side and double.
    double half = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, cutoff, 30, 1e-12,
                                                                                &err);
    QuadratureReport r{};
    r.numeric = 2.0 * half;
    r.error_estimate = 2.0 * err;
    r.analytic = rung_zero(p);
    r.relative_error = std::abs(r.numeric - r.analytic) / std::abs(r.analytic);
    r.cutoff = cutoff;
    return r;
}

std::string theory_json(const SykParams &p) {
    validate(p);
    nlohmann::ordered_json j;
    j["variant"] = variant_name(p.variant);
    j["q"] = p.q;
    j["J"] = p.J;
    j["mu"] = p.mu;
    j["b"] = p.b;
    j["nbar"] = p.density();
    j["gamma"] = gamma(p);
    j["R0"] = rung_zero(p);
    const double lam = lyapunov(p);
    j["lambda"] = lam;
    if (p.b > 0 && lam > 0) {
        j["v_B"] = butterfly_velocity(p);
    } else if (p.b == 0) {
        j["v_B"] = 0.0;
    } else {
        j["v_B"] = nullptr;
    }
    j["lambda_ratio"] = lyapunov_ratio(p);
    nlohmann::ordered_json flags;
    // Absolute regular-variant numbers carry an uncontrolled O(1) prefactor;
    // ratios do not.
    flags["prefactor_trusted"] = p.variant == Variant::brownian;
    flags["ratio_prefactor_trusted"] = true;
    flags["lambda_negative"] = lam < 0;
    if (p.variant == Variant::brownian) {
        // The separately printed closed form is smaller by 2^{q-2} than R(0) - 2 Gamma.
        flags["printed_brownian_prefactor_inconsistent"] = true;
        flags["printed_over_consistent"] = std::pow(2.0, -(p.q - 2));
    }
    j["flags"] = flags;
    return j.dump(2);
}

}  // namespace opgrowth::theory
