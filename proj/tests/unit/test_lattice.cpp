#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "opgrowth/lattice/bit_state.hpp"
#include "opgrowth/lattice/rng.hpp"
#include "opgrowth/lattice/sector.hpp"

using namespace opgrowth;

TEST_CASE("bit state round trips through strings and counts charge") {
    auto s = BitState::from_string("0110100001");
    CHECK(s.n_sites() == 10);
    CHECK(s.charge() == 4);
    CHECK(s.to_string() == "0110100001");
    CHECK(s.get(1));
    CHECK_FALSE(s.get(0));
    CHECK_THROWS_AS((void)s.at(10), std::out_of_range);
    CHECK_THROWS(BitState::from_string("01x"));
}

TEST_CASE("bit state spans several words") {
    BitState s(130);
    CHECK(s.words().size() == 3);
    s.set(0, true);
    s.set(64, true);
    s.set(129, true);
    CHECK(s.charge() == 3);
    s.toggle(64);
    CHECK(s.charge() == 2);
    CHECK(hamming_distance(s, BitState(130)) == 2);
}

TEST_CASE("flip_bit flips one site and is an involution") {
    auto s = BitState::from_string("0000");
    CHECK(flip_bit(s, 1).to_string() == "0100");
    RngStream rng(7, {StreamRole::generic, 1, 0, 0});
    for (int trial = 0; trial < 50; ++trial) {
        BitState x(97);
        for (std::size_t i = 0; i < 97; ++i) {
            x.set(i, rng.bernoulli(0.5));
        }
        for (std::size_t i = 0; i < 97; i += 7) {
            auto y = flip_bit(x, i);
            CHECK(hamming_distance(x, y) == 1);
            CHECK(flip_bit(y, i) == x);
        }
    }
    CHECK_THROWS_AS(flip_bit(s, 4), std::out_of_range);
}

TEST_CASE("identical seed and key replay the same sequence") {
    StreamKey key{StreamRole::trajectory, 3, 5, 8};
    RngStream a(42, key), b(42, key);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    RngStream c(42, {StreamRole::trajectory, 3, 5, 9});
    RngStream d(43, key);
    RngStream e(42, key);
    int same_c = 0, same_d = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = e.next_u64();
        same_c += x == c.next_u64();
        same_d += x == d.next_u64();
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
}

TEST_CASE("derive gives the stream of the same seed with a new key") {
    RngStream a(11, {StreamRole::generic, 1, 0, 0});
    a.next_u64();
    auto b = a.derive({StreamRole::site_choice, 2, 0, 0});
    RngStream c(11, {StreamRole::site_choice, 2, 0, 0});
    CHECK(b.next_u64() == c.next_u64());
}

TEST_CASE("distinct keys give uncorrelated uniforms") {
    RngStream a(1, {StreamRole::trajectory, 0, 0, 0});
    RngStream b(1, {StreamRole::trajectory, 1, 0, 0});
    const int n = 200000;
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < n; ++i) {
        const double x = a.uniform(), y = b.uniform();
        sa += x;
        sb += y;
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
    CHECK(std::abs(corr) < 5.0 / std::sqrt(n));
    CHECK(sa / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("below stays in range and is roughly uniform") {
    RngStream rng(5, {});
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto v = rng.below(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    for (int c : counts) {
        CHECK(std::abs(c - 10000) < 500);
    }
}

TEST_CASE("sector dimension matches binomials and log-gamma") {
    CHECK(sector_dimension(4, 2) == doctest::Approx(std::log(6.0)));
    CHECK(sector_dimension(17, 0) == 0.0);
    CHECK(sector_dimension(17, 17) == doctest::Approx(0.0));
    const double big = sector_dimension(20000, 2000);
    CHECK(std::isfinite(big));
    const double oracle = std::lgamma(20001.0) - std::lgamma(2001.0) - std::lgamma(18001.0);
    CHECK(big == doctest::Approx(oracle).epsilon(1e-12));
    CHECK_THROWS_AS(sector_dimension(3, 4), std::domain_error);
}

TEST_CASE("charge sector density follows the filling convention") {
    ChargeSector up(10, 3, Filling::up_fraction);
    ChargeSector down(10, 3, Filling::down_fraction);
    CHECK(up.density() == doctest::Approx(0.3));
    CHECK(down.density() == doctest::Approx(0.7));
    CHECK(down.up_density() == doctest::Approx(0.3));
    CHECK_THROWS_AS(ChargeSector(5, 6), std::domain_error);
    CHECK_THROWS_AS(ChargeSector(0, 0), std::domain_error);
    auto s = ChargeSector::from_density(1000, 0.1, Filling::down_fraction);
    CHECK(s.n_up() == 900);
    CHECK(s.density() == doctest::Approx(0.1));
}

TEST_CASE("sector sampling at the edges is deterministic") {
    RngStream rng(3, {});
    for (int i = 0; i < 20; ++i) {
        CHECK(sample_sector_state(ChargeSector(4, 0), rng).to_string() == "0000");
        CHECK(sample_sector_state(ChargeSector(3, 3), rng).to_string() == "111");
    }
}

TEST_CASE("sector sampling is uniform over the 20 states of (6, 3)") {
    RngStream rng(2024, {StreamRole::state_sample, 0, 0, 0});
    ChargeSector sector(6, 3);
    std::map<std::string, int> counts;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        auto s = sample_sector_state(sector, rng);
        REQUIRE(s.charge() == 3);
        ++counts[s.to_string()];
    }
    REQUIRE(counts.size() == 20);
    const double expected = draws / 20.0;
    double chi2 = 0;
    for (const auto &[k, c] : counts) {
        chi2 += (c - expected) * (c - expected) / expected;
    }
    // 19 degrees of freedom; p = 0.001 at 43.82.
    CHECK(chi2 < 43.82);
}

TEST_CASE("sampled states keep the sector charge at large N") {
    RngStream rng(9, {});
    ChargeSector sector(20000, 2000);
    auto s = sample_sector_state(sector, rng);
    CHECK(s.n_sites() == 20000);
    CHECK(s.charge() == 2000);
}
