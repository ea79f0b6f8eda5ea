#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "opgrowth/theory/syk.hpp"

using namespace opgrowth::theory;

namespace {

SykParams make(Variant v, int q = 4, double mu = 0.0, double b = 0.0) {
    SykParams p;
    p.variant = v;
    p.q = q;
    p.mu = mu;
    p.b = b;
    return p;
}

}  // namespace

TEST_CASE("closed-form values at zero chemical potential") {
    const auto reg = make(Variant::regular), brw = make(Variant::brownian);
    CHECK(gamma(reg) == doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-14));
    CHECK(gamma(reg) == doctest::Approx(0.288675).epsilon(1e-6));
    CHECK(gamma(brw) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(rung_zero(brw) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(rung_zero(reg) == doctest::Approx(3.0 * std::sqrt(3.0) / 2.0).epsilon(1e-14));
    CHECK(rung_zero(reg) == doctest::Approx(2.598076).epsilon(1e-6));
    CHECK(lyapunov(brw) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(reg.density() == 0.5);
}

TEST_CASE("rates vanish at large chemical potential") {
    for (auto v : {Variant::regular, Variant::brownian}) {
        auto p = make(v, 4, 80.0);
        CHECK(gamma(p) < 1e-15);
        CHECK(std::abs(lyapunov(make(v, 6, 60.0))) < 1e-12);
    }
}

TEST_CASE("outputs are even in the chemical potential") {
    for (auto v : {Variant::regular, Variant::brownian}) {
        for (int q : {4, 6, 8}) {
            for (double mu = 0.0; mu <= 6.0; mu += 0.25) {
                auto a = make(v, q, mu, 0.2), b = make(v, q, -mu, 0.2);
                CHECK(gamma(a) == doctest::Approx(gamma(b)).epsilon(1e-12));
                CHECK(rung_zero(a) == doctest::Approx(rung_zero(b)).epsilon(1e-12));
                CHECK(lyapunov(a) == doctest::Approx(lyapunov(b)).epsilon(1e-12));
                if (lyapunov(a) > 0) {
                    CHECK(butterfly_velocity(a) == doctest::Approx(butterfly_velocity(b)).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("Lyapunov ratios follow powers of cosh") {
    for (int q : {4, 6, 8}) {
        for (double mu = -8.0; mu <= 8.0; mu += 0.5) {
            const double c = std::cosh(mu / 2);
            CHECK(lyapunov_ratio(make(Variant::brownian, q, mu)) ==
                  doctest::Approx(std::pow(c, -(q - 2))).epsilon(1e-12));
            CHECK(lyapunov_ratio(make(Variant::regular, q, mu)) ==
                  doctest::Approx(std::pow(c, -(q - 2) / 2.0)).epsilon(1e-12));
        }
    }
}

TEST_CASE("Brownian exponent stays below the q-body bound") {
    for (int q : {4, 6, 8}) {
        for (double n = 0.01; n < 1.0; n += 0.01) {
            const double mu = std::log(1.0 / n - 1.0);
            const double ratio = lyapunov_ratio(make(Variant::brownian, q, mu));
            const auto b = density_bounds(n, q, 1.0);
            CHECK(ratio <= b.q_body * (1 + 1e-12));
            CHECK(b.classical_exponent >= b.quantum_exponent);
        }
    }
}

TEST_CASE("density bounds") {
    auto half = density_bounds(0.5, 6, 2.5);
    CHECK(half.universal == doctest::Approx(2.5));
    CHECK(half.q_body == doctest::Approx(2.5));
    auto q4 = density_bounds(0.13, 4, 1.0);
    CHECK(q4.universal == doctest::Approx(q4.q_body).epsilon(1e-14));
    CHECK(q4.quantum_exponent == 0.5);
    CHECK(q4.classical_exponent == 1.0);
    for (int q : {4, 6, 8, 10}) {
        auto b = density_bounds(0.2, q, 1.0);
        CHECK(b.classical_exponent == doctest::Approx(2.0 * b.quantum_exponent));
    }
    CHECK_THROWS(density_bounds(0.0, 4, 1.0));
    CHECK_THROWS(density_bounds(1.0, 4, 1.0));
    CHECK_THROWS(density_bounds(0.3, 5, 1.0));
    CHECK_THROWS(density_bounds(0.3, 4, 0.0));
}

TEST_CASE("quadrature reproduces the closed-form rung") {
    for (int q : {4, 6, 8}) {
        for (double mu : {0.0, 1.0, 3.0}) {
            auto r = quadrature_check(make(Variant::regular, q, mu));
            CHECK(r.relative_error < 1e-8);
            CHECK(r.numeric == doctest::Approx(r.analytic).epsilon(1e-8));
            CHECK(r.cutoff == doctest::Approx(50.0 / ((q - 2) * gamma(make(Variant::regular, q, mu)))));
        }
    }
    CHECK(green_product(make(Variant::regular), 0.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS(quadrature_check(make(Variant::brownian)));
}

TEST_CASE("momentum dependence and the butterfly velocity") {
    auto p = make(Variant::brownian, 4, 0.5, 0.3);
    CHECK(lyapunov_at_momentum(p, 0.0) == doctest::Approx(lyapunov(p)));
    CHECK(lyapunov_at_momentum_full(p, 0.0) == doctest::Approx(lyapunov(p)));
    const double k = 1e-3;
    CHECK(lyapunov_at_momentum_full(p, k) == doctest::Approx(lyapunov_at_momentum(p, k)).epsilon(1e-9));
    CHECK(butterfly_velocity(p) == doctest::Approx(std::sqrt(4 * 0.3 * lyapunov(p) * rung_zero(p))));
    CHECK(butterfly_velocity(make(Variant::brownian, 4, 0.5, 0.0)) == 0.0);
    for (double mu : {0.0, 1.0, 2.0, 3.0}) {
        auto a = make(Variant::brownian, 4, mu, 0.25);
        CHECK(butterfly_ratio(a) ==
              doctest::Approx(std::sqrt(lyapunov_ratio(a) * rung_zero(a) / rung_zero(make(Variant::brownian, 4, 0.0, 0.25))))
                  .epsilon(1e-12));
    }
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(validate(make(Variant::regular, 5)), std::invalid_argument);
    CHECK_THROWS_AS(validate(make(Variant::regular, 2)), std::invalid_argument);
    CHECK_THROWS_AS(validate(make(Variant::regular, 4, 0.0, 0.6)), std::invalid_argument);
    auto neg = make(Variant::regular, 4);
    neg.J = 0.0;
    CHECK_THROWS_AS(validate(neg), std::invalid_argument);
    // cosh(mu / 2) overflows, so Gamma and lambda are exactly zero.
    CHECK_THROWS_AS(butterfly_velocity(make(Variant::brownian, 4, 2000.0, 0.2)), std::domain_error);
    CHECK_THROWS_AS(rung_zero(make(Variant::regular, 4, 2000.0)), std::domain_error);
}

TEST_CASE("theory JSON carries values and flags") {
    auto j = nlohmann::json::parse(theory_json(make(Variant::brownian)));
    CHECK(j["lambda"].get<double>() == doctest::Approx(0.5));
    CHECK(j["variant"] == "brownian");
    CHECK(j["flags"]["prefactor_trusted"] == true);
    auto r = nlohmann::json::parse(theory_json(make(Variant::regular)));
    CHECK(r["flags"]["prefactor_trusted"] == false);
    for (const char *key : {"variant", "q", "J", "mu", "nbar", "gamma", "R0", "lambda", "v_B", "flags"}) {
        CHECK(r.contains(key));
    }
}
