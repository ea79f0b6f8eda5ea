#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "opgrowth/observables/observables.hpp"

using namespace opgrowth;

namespace {

std::vector<BitState> sector_states(std::size_t n, std::size_t n_up) {
    std::vector<BitState> out;
    for (std::uint32_t x = 0; x < (1u << n); ++x) {
        if (static_cast<std::size_t>(std::popcount(x)) != n_up) {
            continue;
        }
        BitState s(n);
        for (std::size_t i = 0; i < n; ++i) {
            s.set(i, (x >> i) & 1u);
        }
        out.push_back(s);
    }
    return out;
}

using Slots = std::vector<std::vector<std::size_t>>;

// Periodic chain brickwork restated: layer l holds windows starting at
// l + m k for m < L / k.
Slots chain_slots(std::size_t L, std::size_t k) {
    Slots out;
    for (std::size_t l = 0; l < k; ++l) {
        for (std::size_t m = 0; m < L / k; ++m) {
            std::vector<std::size_t> w;
            for (std::size_t p = 0; p < k; ++p) {
                w.push_back((l + m * k + p) % L);
            }
            out.push_back(w);
        }
    }
    return out;
}

BitState apply_mask(BitState s, const Slots &slots, std::uint64_t mask) {
    for (std::size_t a = 0; a < slots.size(); ++a) {
        if ((mask >> a) & 1u) {
            s = apply_gate(s, slots[a]);
        }
    }
    return s;
}

double mask_weight(std::uint64_t mask, std::size_t n, double f) {
    const int on = std::popcount(mask);
    return std::pow(f, on) * std::pow(1.0 - f, static_cast<double>(n) - on);
}

struct Exact {
    double otoc = 0;
    double autocorr = 0;
};

// Exact ensemble averages after `steps` periods of a periodic chain: every
// activity pattern, every sector state, every ordered pair i != j.
Exact chain_exact(std::size_t L, std::size_t k, std::size_t n_up, double f, std::size_t steps) {
    const auto slots = chain_slots(L, k);
    const auto states = sector_states(L, n_up);
    const std::size_t per = slots.size();
    Exact e;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (per * steps)); ++mask) {
        const double w = mask_weight(mask, per * steps, f);
        double otoc = 0, ac = 0;
        for (const auto &s0 : states) {
            auto run = [&](BitState s) {
                for (std::size_t t = 0; t < steps; ++t) {
                    s = apply_mask(s, slots, (mask >> (t * per)) & ((std::uint64_t{1} << per) - 1));
                }
                return s;
            };
            const auto st = run(s0);
            for (std::size_t i = 0; i < L; ++i) {
                ac += (s0.get(i) ? 1.0 : -1.0) * (st.get(i) ? 1.0 : -1.0);
                const auto flipped = run(flip_bit(s0, i));
                for (std::size_t j = 0; j < L; ++j) {
                    if (j != i && st.get(j) != flipped.get(j)) {
                        otoc += 4.0;
                    }
                }
            }
        }
        e.otoc += w * otoc / (states.size() * L * (L - 1));
        e.autocorr += w * ac / (states.size() * L);
    }
    return e;
}

SamplingSpec small_chain_spec(PairPolicy policy) {
    SamplingSpec spec;
    spec.geometry = Chain{6, true};
    spec.k = 3;
    spec.f = 0.5;
    spec.n_up = 3;
    spec.n_samples = 20000;
    spec.seed = 77;
    spec.policy = policy;
    return spec;
}

}  // namespace

TEST_CASE("hand-evolved OTOC on three sites") {
    CircuitRealization c(Chain{3, false}, 3, 0.0, 0, 0, 1);
    c.force_all_active(true);
    const auto s = BitState::from_string("011");
    // Flipping site 0 gives 111, which the gate leaves alone; 011 becomes 110.
    CHECK(otoc_value(s, 0, 2, c, 1) == 4.0);
    CHECK(otoc_value(s, 0, 1, c, 1) == 0.0);
    CHECK(otoc_value(s, 0, 1, c, 0) == 0.0);
    CHECK(otoc_value(s, 1, 1, c, 0) == 4.0);
    CHECK_THROWS_AS(otoc_value(s, 3, 1, c, 0), std::out_of_range);
}

TEST_CASE("otoc samples are 0 or 4") {
    RngStream rng(1, {});
    auto c = build_schedule(AllToAll{40}, 3, 0.5, 10, rng);
    ChargeSector sector(40, 12);
    for (int trial = 0; trial < 200; ++trial) {
        const auto i = rng.below(40), j = rng.below(40);
        const double v = otoc_sample(sector, i, j, c, rng.below(11), rng);
        CHECK((v == 0.0 || v == 4.0));
    }
}

TEST_CASE("curves start at their trivial values") {
    SamplingSpec spec;
    spec.geometry = AllToAll{300};
    spec.n_up = 60;
    spec.n_samples = 50;
    spec.seed = 3;
    auto otoc = otoc_curve(spec, 5);
    CHECK(otoc.values[0] == 0.0);
    CHECK(otoc.std_error[0] == 0.0);
    auto ac = autocorr_curve(spec, 5);
    CHECK(ac.values[0] == 1.0);
    CHECK(otoc.times.size() == 6);
    CHECK(otoc.values.size() == otoc.std_error.size());
    CHECK(otoc.metadata.n_sites == 300);
    CHECK(otoc.metadata.density == doctest::Approx(0.2));
}

TEST_CASE("f = 0 leaves the OTOC at zero") {
    SamplingSpec spec;
    spec.geometry = AllToAll{100};
    spec.f = 0.0;
    spec.n_up = 30;
    spec.n_samples = 20;
    auto c = otoc_curve(spec, 10);
    for (double v : c.values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("curve values stay in range") {
    SamplingSpec spec;
    spec.geometry = AllToAll{200};
    spec.k = 5;
    spec.n_up = 70;
    spec.n_samples = 40;
    spec.seed = 9;
    auto o = otoc_curve(spec, 60);
    auto a = autocorr_curve(spec, 60);
    for (std::size_t t = 0; t < o.values.size(); ++t) {
        CHECK(o.values[t] >= 0.0);
        CHECK(o.values[t] <= 4.0);
        CHECK(o.std_error[t] >= 0.0);
        CHECK(a.values[t] >= -1.0);
        CHECK(a.values[t] <= 1.0);
    }
}

TEST_CASE("Monte Carlo matches exhaustive enumeration on a six-site chain") {
    const auto e1 = chain_exact(6, 3, 3, 0.5, 1);
    const auto e2 = chain_exact(6, 3, 3, 0.5, 2);
    for (auto policy : {PairPolicy::all_sites, PairPolicy::random_site}) {
        auto spec = small_chain_spec(policy);
        auto o = otoc_curve(spec, 2);
        CHECK(std::abs(o.values[1] - e1.otoc) < 3.0 * o.std_error[1]);
        CHECK(std::abs(o.values[2] - e2.otoc) < 3.0 * o.std_error[2]);
    }
    auto a = autocorr_curve(small_chain_spec(PairPolicy::all_sites), 2);
    CHECK(std::abs(a.values[1] - e1.autocorr) < 3.0 * a.std_error[1]);
    CHECK(std::abs(a.values[2] - e2.autocorr) < 3.0 * a.std_error[2]);
}

TEST_CASE("Monte Carlo matches enumeration over all orderings on six all-to-all sites") {
    // Every permutation of 6 sites cut into two ordered triples, every
    // activity pattern, every state of the half-filled sector.
    std::vector<std::size_t> perm = {0, 1, 2, 3, 4, 5};
    const auto states = sector_states(6, 3);
    double total = 0;
    std::size_t count = 0;
    do {
        Slots slots = {{perm[0], perm[1], perm[2]}, {perm[3], perm[4], perm[5]}};
        for (std::uint64_t mask = 0; mask < 4; ++mask) {
            double otoc = 0;
            for (const auto &s0 : states) {
                const auto st = apply_mask(s0, slots, mask);
                for (std::size_t i = 0; i < 6; ++i) {
                    const auto sf = apply_mask(flip_bit(s0, i), slots, mask);
                    for (std::size_t j = 0; j < 6; ++j) {
                        otoc += (j != i && st.get(j) != sf.get(j)) ? 4.0 : 0.0;
                    }
                }
            }
            total += 0.25 * otoc / (states.size() * 30);
        }
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double exact = total / count;
    SamplingSpec spec;
    spec.geometry = AllToAll{6};
    spec.n_up = 3;
    spec.n_samples = 20000;
    spec.seed = 5;
    auto o = otoc_curve(spec, 1);
    CHECK(std::abs(o.values[1] - exact) < 3.0 * o.std_error[1]);
}

TEST_CASE("forward and reverse evolution agree statistically") {
    SamplingSpec spec;
    spec.geometry = AllToAll{400};
    spec.n_up = 80;
    spec.n_samples = 400;
    spec.seed = 11;
    auto fwd = otoc_curve(spec, 40);
    spec.direction = Direction::reverse;
    spec.seed = 12;
    auto rev = otoc_curve(spec, 40);
    for (std::size_t t : {10u, 20u, 30u, 40u}) {
        const double se = std::hypot(fwd.std_error[t], rev.std_error[t]);
        CHECK(std::abs(fwd.values[t] - rev.values[t]) < 3.0 * se);
    }
}

TEST_CASE("results do not depend on the worker count") {
    SamplingSpec spec;
    spec.geometry = AllToAll{150};
    spec.n_up = 40;
    spec.n_samples = 37;
    spec.seed = 21;
    auto a = otoc_curve(spec, 25);
    spec.workers = 4;
    auto b = otoc_curve(spec, 25);
    CHECK(a.values == b.values);
    CHECK(a.std_error == b.std_error);
    spec.geometry = Chain{90, true};
    spec.workers = 1;
    auto p1 = otoc_profile(spec, 45, 6, 40, 2);
    spec.workers = 3;
    auto p3 = otoc_profile(spec, 45, 6, 40, 2);
    CHECK(p1.values == p3.values);
}

TEST_CASE("autocorrelator saturates at (1 - 2n)^2") {
    SamplingSpec spec;
    spec.geometry = AllToAll{400};
    spec.n_up = 100;
    spec.n_samples = 200;
    spec.seed = 31;
    auto a = autocorr_curve(spec, 300);
    CHECK(std::abs(a.values.back() - 0.25) < 0.01);
    spec.n_up = 200;
    auto half = autocorr_curve(spec, 300);
    CHECK(std::abs(half.values.back()) < 0.01);
}

TEST_CASE("profiles vanish outside the light cone") {
    SamplingSpec spec;
    spec.geometry = Chain{200, true};
    spec.k = 3;
    spec.f = 1.0;
    spec.n_up = 100;
    spec.n_samples = 100;
    spec.seed = 41;
    auto p = otoc_profile(spec, 100, 12, 90, 3);
    REQUIRE(p.times.front() == 0);
    CHECK(p.values[0][0] > 0.0);
    for (std::size_t r = 1; r < p.distances.size(); ++r) {
        CHECK(p.values[0][r] == 0.0);
    }
    for (std::size_t a = 0; a < p.times.size(); ++a) {
        for (std::size_t r = 0; r < p.distances.size(); ++r) {
            CHECK(p.values[a][r] >= 0.0);
            CHECK(p.values[a][r] <= 4.0);
            if (p.distances[r] > 2 * 3 * p.times[a]) {
                CHECK(p.values[a][r] == 0.0);
            }
        }
    }
    spec.geometry = AllToAll{200};
    CHECK_THROWS_AS(otoc_profile(spec, 0, 3, 5), std::invalid_argument);
}

TEST_CASE("curve and profile CSV round trip exactly") {
    SamplingSpec spec;
    spec.geometry = Chain{60, true};
    spec.n_up = 20;
    spec.n_samples = 15;
    spec.seed = 51;
    auto c = otoc_curve(spec, 12);
    std::stringstream ss;
    write_curve_csv(ss, c);
    CHECK(ss.str().rfind("t,value,stderr,n_samples\n", 0) == 0);
    auto back = read_curve_csv(ss);
    CHECK(back.times == c.times);
    CHECK(back.values == c.values);
    CHECK(back.std_error == c.std_error);
    auto p = otoc_profile(spec, 30, 8, 20, 4);
    std::stringstream ps;
    write_profile_csv(ps, p);
    auto pb = read_profile_csv(ps);
    CHECK(pb.values == p.values);
    CHECK(pb.distances == p.distances);
    CHECK(pb.times == p.times);
    std::stringstream bad("t,value\n1,2\n");
    CHECK_THROWS(read_curve_csv(bad));
}

TEST_CASE("chain distance wraps on periodic chains") {
    CHECK(chain_distance(Chain{10, true}, 1, 9) == 2);
    CHECK(chain_distance(Chain{10, false}, 1, 9) == 8);
    CHECK(chain_distance(Chain{10, true}, 4, 4) == 0);
}
