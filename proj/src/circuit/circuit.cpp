#include "opgrowth/circuit/circuit.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <type_traits>

namespace opgrowth {

GateRule::GateRule(std::size_t k) : k_(k) {
    if (k < 3 || k % 2 == 0 || k > max_width) {
        throw std::invalid_argument("gate width k must be odd with 3 <= k <= 31, got " + std::to_string(k));
    }
    middle_mask_ = std::uint32_t{1} << middle();
    outer_mask_ = ((std::uint32_t{1} << k) - 1) & ~middle_mask_;
}

BitState apply_gate(const BitState &state, std::span<const std::size_t> sites) {
    GateRule rule(sites.size());
    for (std::size_t p = 0; p < sites.size(); ++p) {
        if (sites[p] >= state.n_sites()) {
            throw std::out_of_range("apply_gate: site " + std::to_string(sites[p]) + " out of range");
        }
        for (std::size_t q = 0; q < p; ++q) {
            if (sites[q] == sites[p]) {
                throw std::invalid_argument("apply_gate: duplicate site " + std::to_string(sites[p]));
            }
        }
    }
    std::uint32_t pattern = 0;
    for (std::size_t p = 0; p < sites.size(); ++p) {
        pattern |= static_cast<std::uint32_t>(state.get(sites[p])) << p;
    }
    std::uint32_t changed = pattern ^ rule.apply(pattern);
    BitState out = state;
    for (std::size_t p = 0; p < sites.size(); ++p) {
        if ((changed >> p) & 1u) {
            out.toggle(sites[p]);
        }
    }
    return out;
}

std::size_t geometry_sites(const Geometry &g) noexcept {
    return std::visit(
        [](const auto &geo) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(geo)>, AllToAll>) {
                return geo.n_sites;
            } else {
                return geo.length;
            }
        },
        g);
}

std::string geometry_name(const Geometry &g) {
    if (std::holds_alternative<AllToAll>(g)) {
        return "all-to-all";
    }
    return std::get<Chain>(g).periodic ? "chain-periodic" : "chain-open";
}

std::size_t StepSchedule::active_count() const noexcept {
    return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), std::uint8_t{1}));
}

CircuitRealization::CircuitRealization(Geometry geometry, std::size_t k, double f, std::uint64_t master_seed,
                                       std::uint64_t circuit_id, std::size_t n_steps)
    : geometry_(geometry), rule_(k), f_(f), seed_(master_seed), circuit_id_(circuit_id), n_steps_(n_steps) {
    if (!(f >= 0.0 && f <= 1.0)) {
        throw std::invalid_argument("gate probability f must lie in [0, 1]");
    }
    std::size_t n = geometry_sites(geometry_);
    if (n < k) {
        throw std::invalid_argument("geometry too small: " + std::to_string(n) + " sites for k=" +
                                    std::to_string(k));
    }
    if (n > std::size_t{1} << 31) {
        throw std::invalid_argument("geometry too large");
    }
}

namespace {

std::size_t windows_per_layer(const Chain &c, std::size_t k, std::size_t layer) {
    if (c.periodic) {
        return c.length / k;
    }
    // Open chain: windows [layer + m k, layer + m k + k) must fit.
    if (layer + k > c.length) {
        return 0;
    }
    return (c.length - layer - k) / k + 1;
}

}  // namespace

std::size_t CircuitRealization::slots_per_step() const noexcept {
    const std::size_t k = rule_.width();
    if (const auto *a = std::get_if<AllToAll>(&geometry_)) {
        return a->n_sites / k;
    }
    const auto &c = std::get<Chain>(geometry_);
    std::size_t total = 0;
    for (std::size_t layer = 0; layer < k; ++layer) {
        total += windows_per_layer(c, k, layer);
    }
    return total;
}

void CircuitRealization::fill_step(std::size_t step, StepSchedule &out) const {
    const std::size_t k = rule_.width();
    const std::size_t slots = slots_per_step();
    out.step_ = step;
    out.k_ = k;
    if (std::holds_alternative<AllToAll>(geometry_)) {
        out.layout_ = 0;
    }
    out.sites_.resize(slots * k);
    out.active_.resize(slots);

    if (const auto *a = std::get_if<AllToAll>(&geometry_)) {
        // Disjoint k-tuples cut from a uniformly random ordering of the sites.
        const std::size_t n = a->n_sites;
        const std::size_t picks = slots * k;
        auto &labels = out.scratch_;
        labels.resize(n);
        std::iota(labels.begin(), labels.end(), 0u);
        RngStream perm(seed_, {StreamRole::schedule_permutation, circuit_id_, step, 0});
        for (std::size_t i = 0; i < picks; ++i) {
            auto j = i + static_cast<std::size_t>(perm.below(n - i));
            std::swap(labels[i], labels[j]);
        }
        std::copy(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(picks), out.sites_.begin());
    } else if (out.layout_ != layout_tag()) {
        // Chain slots depend only on the geometry; they are rebuilt only when
        // the buffer last held a different layout.
        const auto &c = std::get<Chain>(geometry_);
        std::size_t slot = 0;
        for (std::size_t layer = 0; layer < k; ++layer) {
            std::size_t windows = windows_per_layer(c, k, layer);
            for (std::size_t m = 0; m < windows; ++m) {
                std::size_t site = layer + m * k;
                for (std::size_t p = 0; p < k; ++p, ++site) {
                    out.sites_[slot * k + p] = static_cast<std::uint32_t>(site >= c.length ? site - c.length : site);
                }
                ++slot;
            }
        }
        out.layout_ = layout_tag();
    }

    if (force_active_) {
        std::fill(out.active_.begin(), out.active_.end(), std::uint8_t{1});
        return;
    }
    RngStream activity(seed_, {StreamRole::schedule_activity, circuit_id_, step, 0});
    for (std::size_t s = 0; s < slots; ++s) {
        out.active_[s] = activity.uniform() < f_ ? 1 : 0;
    }
}

std::uint64_t CircuitRealization::layout_tag() const noexcept {
    if (const auto *c = std::get_if<Chain>(&geometry_)) {
        return mix64((static_cast<std::uint64_t>(c->length) << 8) ^ (rule_.width() << 1) ^ (c->periodic ? 1u : 0u));
    }
    return 0;
}

StepSchedule CircuitRealization::step(std::size_t step) const {
    StepSchedule out;
    fill_step(step, out);
    return out;
}

CircuitRealization build_schedule(const Geometry &geometry, std::size_t k, double f, std::size_t n_steps,
                                  const RngStream &rng) {
    const auto &key = rng.key();
    std::uint64_t id = mix64(mix64(static_cast<std::uint64_t>(key.role) ^ mix64(key.a)) ^ mix64(key.b + 1)) ^
                       mix64(key.c + 2);
    return CircuitRealization(geometry, k, f, rng.master_seed(), id, n_steps);
}

void apply_step(const StepSchedule &step, const GateRule &rule, BitState &state, Direction direction) {
    const std::size_t slots = step.size();
    const std::size_t k = step.width();
    auto &words = state.words();
    auto run = [&](std::size_t slot) {
        GateEvent ev = step.event(slot);
        if (!ev.active) {
            return;
        }
        std::uint32_t pattern = 0;
        for (std::size_t p = 0; p < k; ++p) {
            std::uint32_t site = ev.sites[p];
            pattern |= static_cast<std::uint32_t>((words[site >> 6] >> (site & 63)) & 1u) << p;
        }
        std::uint32_t changed = pattern ^ rule.apply(pattern);
        while (changed) {
            int p = std::countr_zero(changed);
            std::uint32_t site = ev.sites[static_cast<std::size_t>(p)];
            words[site >> 6] ^= std::uint64_t{1} << (site & 63);
            changed &= changed - 1;
        }
    };
    if (direction == Direction::forward) {
        for (std::size_t s = 0; s < slots; ++s) {
            run(s);
        }
    } else {
        for (std::size_t s = slots; s-- > 0;) {
            run(s);
        }
    }
}

BitState evolve(const BitState &state, const CircuitRealization &circuit, std::size_t t, Direction direction) {
    if (t > circuit.n_steps()) {
        throw std::out_of_range("evolve: t=" + std::to_string(t) + " exceeds schedule length " +
                                std::to_string(circuit.n_steps()));
    }
    if (state.n_sites() != circuit.n_sites()) {
        throw std::invalid_argument("evolve: state size does not match circuit geometry");
    }
    BitState out = state;
    StepSchedule buffer;
    if (direction == Direction::forward) {
        for (std::size_t s = 0; s < t; ++s) {
            circuit.fill_step(s, buffer);
            apply_step(buffer, circuit.rule(), out, Direction::forward);
        }
    } else {
        for (std::size_t s = t; s-- > 0;) {
            circuit.fill_step(s, buffer);
            apply_step(buffer, circuit.rule(), out, Direction::reverse);
        }
    }
    return out;
}

}  // namespace opgrowth
