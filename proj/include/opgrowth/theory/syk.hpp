#pragma once

#include <string>

namespace opgrowth::theory {

enum class Variant { regular, brownian };

struct SykParams {
    Variant variant = Variant::regular;
    int q = 4;
    double J = 1.0;
    double mu = 0.0;
    /// Hopping weight of the spatial model, S(p) = 1 - 2b(1 - cos p).
    double b = 0.0;

    double density() const noexcept;
};

/// Throws std::invalid_argument unless q is even and >= 4, J > 0,
/// b in [0, 1/2] and mu finite.
void validate(const SykParams &p);

/// Quasiparticle decay rate. Regular: J / (sqrt(q-1) (2cosh(mu/2))^{(q-2)/2});
/// Brownian: J / (2^{q-1} cosh^{q-2}(mu/2)).
double gamma(const SykParams &p);

/// Zero-frequency rung. Regular: 2(q-1)J^2 / ((q-2) Gamma (2cosh(mu/2))^{q-2});
/// Brownian: (q-1)J / (2cosh(mu/2))^{q-2}. Throws std::domain_error if Gamma = 0.
double rung_zero(const SykParams &p);

/// R(0) - 2 Gamma.
double lyapunov(const SykParams &p);

/// lambda(0) - b R(0) p^2.
double lyapunov_at_momentum(const SykParams &p, double momentum);
/// R(0) S(p) - 2 Gamma with the full S(p).
double lyapunov_at_momentum_full(const SykParams &p, double momentum);

/// sqrt(4 b lambda(0) R(0)); 0 when b = 0. Throws std::domain_error if
/// lambda(0) <= 0 and b > 0.
double butterfly_velocity(const SykParams &p);

/// lambda(mu) / lambda(0) for the same q, J and variant.
double lyapunov_ratio(const SykParams &p);
double butterfly_ratio(const SykParams &p);

struct DensityBounds {
    double universal;
    double q_body;
    double quantum_exponent;
    double classical_exponent;
};

/// sqrt(4n(1-n)) lambda*, (4n(1-n))^{(q-2)/4} lambda*, and the exponents
/// (q-2)/4 and (q-2)/2.
DensityBounds density_bounds(double nbar, int q, double lambda_star);

/// e^{-2 Gamma |t|} / (4 cosh^2(mu/2)).
double green_product(const SykParams &p, double t);

struct QuadratureReport {
    double numeric;
    double analytic;
    double relative_error;
    double error_estimate;
    double cutoff;
};

/// Integrates R(t) = (q-1) J^2 e^{-(q-2) Gamma |t|} / (2cosh(mu/2))^{q-2} over
/// |t| <= 50 / ((q-2) Gamma) and compares with rung_zero. Regular variant only.
QuadratureReport quadrature_check(const SykParams &p);

/// JSON object {variant, q, J, mu, nbar, gamma, R0, lambda, v_B, flags}.
std::string theory_json(const SykParams &p);

std::string variant_name(Variant v);

}  // namespace opgrowth::theory
