#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "opgrowth/lattice/bit_state.hpp"
#include "opgrowth/lattice/rng.hpp"

namespace opgrowth {

/// Quantum-automaton gate U_k on an ordered k-tuple of sites. If the middle
/// site is occupied and the other k-1 sites hold equal numbers of zeros and
/// ones, those k-1 sites are all flipped; every other pattern is left alone.
class GateRule {
  public:
    static constexpr std::size_t max_width = 31;

    /// Throws std::invalid_argument unless k is odd and 3 <= k <= max_width.
    explicit GateRule(std::size_t k);

    std::size_t width() const noexcept { return k_; }
    std::size_t middle() const noexcept { return (k_ - 1) / 2; }

    /// Acts on a local pattern where bit p holds the occupation of tuple
    /// position p.
    std::uint32_t apply(std::uint32_t pattern) const noexcept {
        if ((pattern & middle_mask_) && std::popcount(pattern & outer_mask_) == static_cast<int>(k_ / 2)) {
            return pattern ^ outer_mask_;
        }
        return pattern;
    }

  private:
    std::size_t k_;
    std::uint32_t middle_mask_;
    std::uint32_t outer_mask_;
};

/// Applies U_k to the tuple `sites` (k = sites.size()). Throws on duplicate
/// or out-of-range sites.
BitState apply_gate(const BitState &state, std::span<const std::size_t> sites);

struct AllToAll {
    std::size_t n_sites;
};

/// One-dimensional chain. Periodic chains wrap windows around the end.
struct Chain {
    std::size_t length;
    bool periodic = true;
};

using Geometry = std::variant<AllToAll, Chain>;

std::size_t geometry_sites(const Geometry &g) noexcept;
std::string geometry_name(const Geometry &g);

enum class Direction { forward, reverse };

struct GateEvent {
    std::size_t step;
    std::span<const std::uint32_t> sites;
    bool active;
};

/// All gate slots of one time step in application order. For chains a step is
/// one period of k brickwork layers; slots are stored layer by layer.
class StepSchedule {
  public:
    std::size_t step() const noexcept { return step_; }
    std::size_t width() const noexcept { return k_; }
    std::size_t size() const noexcept { return active_.size(); }
    GateEvent event(std::size_t slot) const {
        return {step_, std::span<const std::uint32_t>(sites_.data() + slot * k_, k_), active_[slot] != 0};
    }
    std::size_t active_count() const noexcept;

  private:
    friend class CircuitRealization;
    std::size_t step_ = 0;
    std::size_t k_ = 0;
    std::vector<std::uint32_t> sites_;
    std::vector<std::uint8_t> active_;
    std::vector<std::uint32_t> scratch_;
    std::uint64_t layout_ = 0;
};

/// A random QA circuit. Stores only (geometry, k, f, seed, circuit id); the
/// gate slots of any step are regenerated on demand from keyed streams.
class CircuitRealization {
  public:
    CircuitRealization(Geometry geometry, std::size_t k, double f, std::uint64_t master_seed,
                       std::uint64_t circuit_id, std::size_t n_steps);

    const Geometry &geometry() const noexcept { return geometry_; }
    const GateRule &rule() const noexcept { return rule_; }
    std::size_t width() const noexcept { return rule_.width(); }
    double gate_probability() const noexcept { return f_; }
    std::uint64_t master_seed() const noexcept { return seed_; }
    std::uint64_t circuit_id() const noexcept { return circuit_id_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    std::size_t n_sites() const noexcept { return geometry_sites(geometry_); }

    /// Gate slots in one step: floor(N/k) for all-to-all, k * (windows per
    /// layer) for chains.
    std::size_t slots_per_step() const noexcept;

    /// Regenerates step `step` into `out`, reusing its storage.
    void fill_step(std::size_t step, StepSchedule &out) const;
    StepSchedule step(std::size_t step) const;

    /// Marks every slot active regardless of f. Used for hand-checked cases.
    void force_all_active(bool on) noexcept { force_active_ = on; }

  private:
    /// Nonzero identifier of a fixed chain slot layout; 0 for all-to-all.
    std::uint64_t layout_tag() const noexcept;

    Geometry geometry_;
    GateRule rule_;
    double f_;
    std::uint64_t seed_;
    std::uint64_t circuit_id_;
    std::size_t n_steps_;
    bool force_active_ = false;
};

/// Validates the geometry against k and derives the circuit id from `rng`.
CircuitRealization build_schedule(const Geometry &geometry, std::size_t k, double f,
                                  std::size_t n_steps, const RngStream &rng);

/// Applies one step's active gates to `state` in place. Reverse direction
/// walks the slots backwards; since every gate is an involution this undoes
/// a forward application.
void apply_step(const StepSchedule &step, const GateRule &rule, BitState &state,
                Direction direction = Direction::forward);

/// Evolves t steps. Forward applies steps 0..t-1; reverse applies t-1..0,
/// each in reverse slot order. Throws if t exceeds the schedule length.
BitState evolve(const BitState &state, const CircuitRealization &circuit, std::size_t t,
                Direction direction = Direction::forward);

}  // namespace opgrowth
