#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "opgrowth/circuit/circuit.hpp"
#include "opgrowth/lattice/sector.hpp"

using namespace opgrowth;

namespace {

BitState random_state(std::size_t n, RngStream &rng) {
    BitState s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.set(i, rng.bernoulli(0.5));
    }
    return s;
}

BitState gate_on_string(const char *bits) {
    auto s = BitState::from_string(bits);
    std::vector<std::size_t> sites(s.n_sites());
    for (std::size_t i = 0; i < sites.size(); ++i) {
        sites[i] = i;
    }
    return apply_gate(s, sites);
}

// Rule restated directly on characters: middle '1' and a balanced outer set.
std::string oracle_gate(std::string s) {
    const std::size_t k = s.size(), m = (k - 1) / 2;
    std::size_t ones = 0;
    for (std::size_t p = 0; p < k; ++p) {
        ones += p != m && s[p] == '1';
    }
    if (s[m] == '1' && ones == k / 2) {
        for (std::size_t p = 0; p < k; ++p) {
            if (p != m) {
                s[p] = s[p] == '1' ? '0' : '1';
            }
        }
    }
    return s;
}

}  // namespace

TEST_CASE("gate examples") {
    CHECK(gate_on_string("011").to_string() == "110");
    CHECK(gate_on_string("110").to_string() == "011");
    CHECK(gate_on_string("10110").to_string() == "01101");
    CHECK(gate_on_string("00111").to_string() == "11100");
    CHECK(gate_on_string("111").to_string() == "111");
    CHECK(gate_on_string("000").to_string() == "000");
    CHECK(gate_on_string("101").to_string() == "101");
}

TEST_CASE("gate rule rejects even or out-of-range widths") {
    for (std::size_t k : {0u, 1u, 2u, 4u, 6u, 33u}) {
        CHECK_THROWS_AS(GateRule{k}, std::invalid_argument);
    }
    CHECK(GateRule(31).middle() == 15);
}

TEST_CASE("gate is an involution matching the character oracle for k <= 7") {
    for (std::size_t k : {3u, 5u, 7u}) {
        GateRule rule(k);
        for (std::uint32_t p = 0; p < (1u << k); ++p) {
            const auto once = rule.apply(p);
            CHECK(rule.apply(once) == p);
            CHECK(std::popcount(once) == std::popcount(p));
            std::string chars(k, '0');
            for (std::size_t b = 0; b < k; ++b) {
                chars[b] = (p >> b) & 1u ? '1' : '0';
            }
            std::uint32_t expected = 0;
            const auto o = oracle_gate(chars);
            for (std::size_t b = 0; b < k; ++b) {
                expected |= static_cast<std::uint32_t>(o[b] == '1') << b;
            }
            CHECK(once == expected);
        }
    }
}

TEST_CASE("apply_gate respects the tuple order and rejects bad tuples") {
    auto s = BitState::from_string("10010");
    std::vector<std::size_t> sites = {4, 3, 0};
    // Tuple pattern (s4, s3, s0) = 0,1,1 maps to 1,1,0.
    CHECK(apply_gate(s, sites).to_string() == "00011");
    std::vector<std::size_t> dup = {1, 1, 2};
    CHECK_THROWS_AS(apply_gate(s, dup), std::invalid_argument);
    std::vector<std::size_t> far = {1, 2, 5};
    CHECK_THROWS_AS(apply_gate(s, far), std::out_of_range);
}

TEST_CASE("all-to-all steps hold floor(N/k) disjoint tuples") {
    RngStream rng(1, {StreamRole::trajectory, 0, 0, 0});
    auto c = build_schedule(AllToAll{20000}, 3, 0.5, 4, rng);
    CHECK(c.slots_per_step() == 6666);
    for (std::size_t t = 0; t < 4; ++t) {
        auto st = c.step(t);
        REQUIRE(st.size() == 6666);
        std::set<std::uint32_t> seen;
        for (std::size_t s = 0; s < st.size(); ++s) {
            for (auto site : st.event(s).sites) {
                CHECK(site < 20000);
                seen.insert(site);
            }
        }
        CHECK(seen.size() == 6666 * 3);
    }
    auto c7 = build_schedule(AllToAll{100}, 7, 0.5, 1, rng);
    CHECK(c7.slots_per_step() == 14);
}

TEST_CASE("chain steps are k brickwork layers of contiguous windows") {
    RngStream rng(2, {});
    const std::size_t k = 5, L = 40;
    auto c = build_schedule(Chain{L, true}, k, 0.5, 1, rng);
    auto st = c.step(0);
    REQUIRE(st.size() == k * (L / k));
    for (std::size_t s = 0; s < st.size(); ++s) {
        const std::size_t layer = s / (L / k);
        auto ev = st.event(s);
        CHECK(ev.sites[0] % k == layer);
        for (std::size_t p = 1; p < k; ++p) {
            CHECK(ev.sites[p] == (ev.sites[0] + p) % L);
        }
    }
    auto open = build_schedule(Chain{3, false}, 3, 0.5, 1, rng);
    CHECK(open.slots_per_step() == 1);
}

TEST_CASE("active fraction is f within binomial error") {
    RngStream rng(3, {});
    auto c = build_schedule(AllToAll{30000}, 3, 0.5, 10, rng);
    std::size_t active = 0, total = 0;
    for (std::size_t t = 0; t < 10; ++t) {
        auto st = c.step(t);
        active += st.active_count();
        total += st.size();
    }
    REQUIRE(total == 100000);
    CHECK(std::abs(static_cast<double>(active) / total - 0.5) < 0.01);
}

TEST_CASE("f = 0 is the identity and f = 1 activates every slot") {
    RngStream rng(4, {});
    auto idle = build_schedule(AllToAll{60}, 3, 0.0, 20, rng);
    auto s = random_state(60, rng);
    CHECK(evolve(s, idle, 20) == s);
    auto busy = build_schedule(Chain{30, true}, 3, 1.0, 2, rng);
    CHECK(busy.step(1).active_count() == busy.slots_per_step());
}

TEST_CASE("all-zero state is invariant under any circuit") {
    RngStream rng(5, {});
    for (std::size_t k : {3u, 5u, 7u}) {
        auto c = build_schedule(AllToAll{101}, k, 1.0, 30, rng.derive({StreamRole::generic, k, 0, 0}));
        CHECK(evolve(BitState(101), c, 30).charge() == 0);
        auto ch = build_schedule(Chain{70, true}, k, 1.0, 10, rng);
        CHECK(evolve(BitState(70), ch, 10).charge() == 0);
    }
}

TEST_CASE("forced single gate on a three-site chain") {
    CircuitRealization c(Chain{3, false}, 3, 0.0, 0, 0, 1);
    c.force_all_active(true);
    CHECK(evolve(BitState::from_string("011"), c, 1).to_string() == "110");
    CHECK(evolve(BitState::from_string("111"), c, 1).to_string() == "111");
}

TEST_CASE("forward then reverse returns the start state") {
    RngStream rng(6, {});
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 3 + 2 * (trial % 3);
        Geometry g = trial % 2 ? Geometry{AllToAll{257}} : Geometry{Chain{250, true}};
        auto c = build_schedule(g, k, 0.5, 25, rng.derive({StreamRole::generic, static_cast<std::uint64_t>(trial), 0, 0}));
        auto s = random_state(geometry_sites(g), rng);
        auto fwd = evolve(s, c, 25);
        CHECK(evolve(fwd, c, 25, Direction::reverse) == s);
    }
}

TEST_CASE("charge is conserved over random triples") {
    RngStream rng(7, {});
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t k = 3 + 2 * (trial % 3);
        const std::size_t n = 7 + rng.below(40);
        Geometry g = trial % 2 ? Geometry{AllToAll{n}} : Geometry{Chain{n, (trial & 2) != 0}};
        auto c = build_schedule(g, k, rng.uniform(), 6,
                                rng.derive({StreamRole::generic, static_cast<std::uint64_t>(trial), 1, 0}));
        auto s = random_state(n, rng);
        REQUIRE(evolve(s, c, rng.below(7)).charge() == s.charge());
    }
}

TEST_CASE("one step is a bijection on every sector for N = 12") {
    RngStream rng(8, {});
    for (std::size_t k : {3u, 5u}) {
        for (Geometry g : {Geometry{AllToAll{12}}, Geometry{Chain{12, true}}, Geometry{Chain{12, false}}}) {
            auto c = build_schedule(g, k, 0.7, 1, rng.derive({StreamRole::generic, k, 2, 0}));
            std::vector<char> hit(1u << 12, 0);
            for (std::uint32_t x = 0; x < (1u << 12); ++x) {
                BitState s(12);
                for (std::size_t i = 0; i < 12; ++i) {
                    s.set(i, (x >> i) & 1u);
                }
                auto y = evolve(s, c, 1);
                REQUIRE(y.charge() == s.charge());
                const auto img = static_cast<std::uint32_t>(y.words()[0]);
                CHECK(hit[img] == 0);
                hit[img] = 1;
            }
            CHECK(std::count(hit.begin(), hit.end(), 1) == 4096);
        }
    }
}

TEST_CASE("chain damage stays inside the (k - 1) k cone per period") {
    RngStream rng(9, {});
    for (std::size_t k : {3u, 5u}) {
        const std::size_t L = 400, x = 200;
        auto c = build_schedule(Chain{L, true}, k, 1.0, 8, rng.derive({StreamRole::generic, k, 3, 0}));
        for (int trial = 0; trial < 20; ++trial) {
            auto s = random_state(L, rng);
            auto sf = flip_bit(s, x);
            for (std::size_t t = 1; t <= 8; ++t) {
                auto a = evolve(s, c, t), b = evolve(sf, c, t);
                for (std::size_t i = 0; i < L; ++i) {
                    if (a.get(i) != b.get(i)) {
                        const std::size_t d = i > x ? i - x : x - i;
                        REQUIRE(d <= (k - 1) * k * t);
                    }
                }
            }
        }
    }
}

TEST_CASE("schedules are reproducible and geometry checks are enforced") {
    RngStream rng(10, {StreamRole::trajectory, 4, 0, 0});
    auto a = build_schedule(AllToAll{50}, 3, 0.5, 3, rng);
    auto b = build_schedule(AllToAll{50}, 3, 0.5, 3, rng);
    for (std::size_t t = 0; t < 3; ++t) {
        auto sa = a.step(t), sb = b.step(t);
        for (std::size_t s = 0; s < sa.size(); ++s) {
            CHECK(sa.event(s).active == sb.event(s).active);
            CHECK(std::equal(sa.event(s).sites.begin(), sa.event(s).sites.end(), sb.event(s).sites.begin()));
        }
    }
    CHECK_THROWS_AS(build_schedule(AllToAll{4}, 5, 0.5, 1, rng), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule(Chain{2, true}, 3, 0.5, 1, rng), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule(AllToAll{10}, 3, 1.5, 1, rng), std::invalid_argument);
    CHECK_THROWS_AS(evolve(BitState(50), a, 4), std::out_of_range);
    CHECK_THROWS_AS(evolve(BitState(49), a, 1), std::invalid_argument);
}
