#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "opgrowth/lattice/sector.hpp"
#include "opgrowth/observables/observables.hpp"
#include "opgrowth/theory/syk.hpp"

namespace opgrowth::cli {

/// Invalid configuration text or values. Maps to exit code 2.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { otoc, autocorr, butterfly, exact_bound, syk_theory };

std::string kind_name(ExperimentKind k);
/// Throws ConfigError for an unknown name.
ExperimentKind parse_kind(const std::string &name);

/// Ordered `key = value` pairs. `#` starts a comment; blank lines are skipped.
/// Throws ConfigError on a line without `=`, an empty key or a repeated key.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string &text);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::otoc;
    std::uint64_t seed = 1;

    // QA circuits.
    bool chain = false;
    std::size_t n_sites = 2000;
    bool periodic = true;
    std::size_t k = 3;
    double f = 0.5;
    std::vector<double> densities = {0.02, 0.04, 0.08, 0.16};
    Filling filling = Filling::up_fraction;
    std::size_t samples = 1000;
    std::size_t t_max = 300;
    PairPolicy policy = PairPolicy::all_sites;
    Direction direction = Direction::forward;
    double noise_factor = 10.0;
    double fit_upper_fraction = 0.1;
    double fit_lower_multiple = 3.0;
    double decay_lower_fraction = 0.1;
    double decay_upper_fraction = 0.9;
    std::size_t stride = 20;
    std::size_t r_max = 0;
    double theta = 0.5;

    // Exact dynamics and SYK theory.
    std::size_t q = 4;
    double J = 1.0;
    std::vector<double> mus = {0.0, 1.0, 2.0, 4.0};
    std::size_t hamiltonians = 1;
    std::vector<std::pair<std::size_t, std::size_t>> blocks = {{1, 3}, {3, 1}, {3, 5}};
    std::vector<double> times = {0.0, 0.5, 1.0, 2.0};
    std::size_t operator_site = 0;
    bool allow_large = false;
    theory::Variant variant = theory::Variant::regular;
    double b = 0.0;
    std::optional<double> lambda_star;

    bool operator==(const ExperimentConfig &) const = default;
};

/// Keys accepted for `kind`, in serialization order.
std::vector<std::string> config_keys(ExperimentKind kind);

/// Defaults for `kind` overridden by `text`. When `kind_override` is set the
/// text may omit `kind` but must not contradict it. Unknown keys produce one
/// ConfigError naming every offending key. The result is validated.
ExperimentConfig parse_config(const std::string &text, std::optional<ExperimentKind> kind_override = std::nullopt);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig &config);

/// Throws ConfigError for values outside the ranges of the target module,
/// including even k, odd q, densities outside (0, 1) and exact runs above
/// the site cap.
void validate_config(const ExperimentConfig &config);

}  // namespace opgrowth::cli
