#include "opgrowth/observables/observables.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace opgrowth {

namespace {

__extension__ typedef unsigned __int128 u128;
__extension__ typedef __int128 i128;

/// Exact running sums of an integer statistic x_m over trajectories.
struct Moments {
    std::uint64_t sum = 0;
    u128 sum_sq = 0;

    void add(std::uint64_t x) noexcept {
        sum += x;
        sum_sq += static_cast<u128>(x) * x;
    }
    void merge(const Moments &o) noexcept {
        sum += o.sum;
        sum_sq += o.sum_sq;
    }
    /// Mean and standard error of scale * x.
    std::pair<double, double> estimate(std::size_t n, double scale) const {
        double mean = static_cast<double>(sum) / static_cast<double>(n) * scale;
        if (n < 2) {
            return {mean, 0.0};
        }
        i128 centered = static_cast<i128>(sum_sq) * static_cast<i128>(n) - static_cast<i128>(sum) * sum;
        double var = static_cast<double>(centered) / (static_cast<double>(n) * static_cast<double>(n - 1));
        return {mean, std::abs(scale) * std::sqrt(std::max(var, 0.0) / static_cast<double>(n))};
    }
};

std::uint64_t trajectory_circuit_id(std::uint64_t m) noexcept {
    return mix64(mix64(static_cast<std::uint64_t>(StreamRole::trajectory)) ^ m);
}

CircuitRealization trajectory_circuit(const SamplingSpec &spec, std::uint64_t m, std::size_t n_steps) {
    return CircuitRealization(spec.geometry, spec.k, spec.f, spec.seed, trajectory_circuit_id(m), n_steps);
}

BitState trajectory_state(const SamplingSpec &spec, const ChargeSector &sector, std::uint64_t m) {
    RngStream rng(spec.seed, {StreamRole::state_sample, m, 0, 0});
    return sample_sector_state(sector, rng);
}

std::size_t differing_bits(const BitState &a, const BitState &b) { return hamming_distance(a, b); }

/// Runs body(first, last, accumulator) on contiguous trajectory blocks and
/// returns the accumulators in block order.
template <class Acc, class Body>
std::vector<Acc> run_blocks(std::size_t n_samples, std::size_t workers, const Acc &proto, Body body) {
    workers = std::max<std::size_t>(1, std::min(workers, n_samples));
    std::vector<Acc> acc(workers, proto);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t first = n_samples * w / workers;
        std::size_t last = n_samples * (w + 1) / workers;
        auto task = [&, w, first, last] {
            try {
                body(first, last, acc[w]);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        };
        if (workers == 1) {
            task();
        } else {
            pool.emplace_back(task);
        }
    }
    for (auto &t : pool) {
        t.join();
    }
    for (auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return acc;
}

CurveMetadata make_metadata(const SamplingSpec &spec, const std::string &observable) {
    ChargeSector sector = spec.sector();
    CurveMetadata md;
    md.observable = observable;
    md.geometry = geometry_name(spec.geometry);
    md.n_sites = sector.n_sites();
    md.k = spec.k;
    md.f = spec.f;
    md.n_up = sector.n_up();
    md.density = sector.density();
    md.filling = spec.filling == Filling::up_fraction ? "up-fraction" : "down-fraction";
    md.policy = pair_policy_name(spec.policy);
    md.direction = spec.direction == Direction::forward ? "forward" : "reverse";
    md.seed = spec.seed;
    return md;
}

void validate(const SamplingSpec &spec) {
    if (spec.n_samples < 1) {
        throw std::invalid_argument("n_samples must be at least 1");
    }
    (void)spec.sector();
}

/// Produces the pair (s(t), s*(t)) for t = 0..t_max and calls visit(t, s, s*).
template <class Visit>
void evolve_pair(const CircuitRealization &circuit, const BitState &s0, std::size_t i, std::size_t t_max,
                 Direction direction, Visit visit) {
    BitState s = s0;
    BitState s_star = flip_bit(s0, i);
    visit(std::size_t{0}, s, s_star);
    if (direction == Direction::forward) {
        StepSchedule buffer;
        for (std::size_t t = 1; t <= t_max; ++t) {
            circuit.fill_step(t - 1, buffer);
            apply_step(buffer, circuit.rule(), s, Direction::forward);
            apply_step(buffer, circuit.rule(), s_star, Direction::forward);
            visit(t, s, s_star);
        }
    } else {
        // U(t)^dagger is not a prefix of U(t+1)^dagger; each t restarts from s0.
        BitState start_star = flip_bit(s0, i);
        for (std::size_t t = 1; t <= t_max; ++t) {
            s = evolve(s0, circuit, t, Direction::reverse);
            s_star = evolve(start_star, circuit, t, Direction::reverse);
            visit(t, s, s_star);
        }
    }
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    return out;
}

double parse_double(const std::string &s, std::size_t row) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::runtime_error("csv row " + std::to_string(row) + ": cannot parse '" + s + "'");
    }
    return v;
}

std::size_t parse_count(const std::string &s, std::size_t row) {
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::runtime_error("csv row " + std::to_string(row) + ": cannot parse '" + s + "'");
    }
    return v;
}

}  // namespace

std::string pair_policy_name(PairPolicy p) { return p == PairPolicy::all_sites ? "all-sites" : "random-site"; }

std::size_t chain_distance(const Chain &chain, std::size_t a, std::size_t b) noexcept {
    std::size_t d = a > b ? a - b : b - a;
    return chain.periodic ? std::min(d, chain.length - d) : d;
}

double otoc_value(const BitState &s, std::size_t i, std::size_t j, const CircuitRealization &circuit, std::size_t t,
                  Direction direction) {
    if (i >= s.n_sites() || j >= s.n_sites()) {
        throw std::out_of_range("otoc_value: site index out of range");
    }
    BitState a = evolve(s, circuit, t, direction);
    BitState b = evolve(flip_bit(s, i), circuit, t, direction);
    return a.get(j) != b.get(j) ? 4.0 : 0.0;
}

double otoc_sample(const ChargeSector &sector, std::size_t i, std::size_t j, const CircuitRealization &circuit,
                   std::size_t t, RngStream &rng) {
    if (sector.n_sites() != circuit.n_sites()) {
        throw std::invalid_argument("otoc_sample: sector size does not match circuit geometry");
    }
    return otoc_value(sample_sector_state(sector, rng), i, j, circuit, t);
}

CurveEstimate otoc_curve(const SamplingSpec &spec, std::size_t t_max) {
    validate(spec);
    const ChargeSector sector = spec.sector();
    const std::size_t n = sector.n_sites();
    if (n < 2) {
        throw std::invalid_argument("otoc_curve: need at least two sites");
    }
    std::vector<Moments> proto(t_max + 1);
    auto blocks = run_blocks(spec.n_samples, spec.workers, proto,
                             [&](std::size_t first, std::size_t last, std::vector<Moments> &acc) {
                                 for (std::size_t m = first; m < last; ++m) {
                                     CircuitRealization circuit = trajectory_circuit(spec, m, t_max);
                                     BitState s0 = trajectory_state(spec, sector, m);
                                     RngStream sites(spec.seed, {StreamRole::site_choice, m, 0, 0});
                                     std::size_t i = sites.below(n);
                                     std::size_t j = sites.below(n - 1);
                                     j += j >= i ? 1 : 0;
                                     evolve_pair(circuit, s0, i, t_max, spec.direction,
                                                 [&](std::size_t t, const BitState &a, const BitState &b) {
                                                     std::uint64_t x;
                                                     if (spec.policy == PairPolicy::all_sites) {
                                                         x = differing_bits(a, b) - (a.get(i) != b.get(i) ? 1 : 0);
                                                     } else {
                                                         x = a.get(j) != b.get(j) ? 1 : 0;
                                                     }
                                                     acc[t].add(x);
                                                 });
                                 }
                             });
    CurveEstimate out;
    out.n_samples = spec.n_samples;
    out.metadata = make_metadata(spec, "otoc");
    const double scale = spec.policy == PairPolicy::all_sites ? 4.0 / static_cast<double>(n - 1) : 4.0;
    for (std::size_t t = 0; t <= t_max; ++t) {
        Moments total;
        for (const auto &b : blocks) {
            total.merge(b[t]);
        }
        auto [mean, se] = total.estimate(spec.n_samples, scale);
        out.times.push_back(t);
        out.values.push_back(mean);
        out.std_error.push_back(se);
    }
    return out;
}

CurveEstimate autocorr_curve(const SamplingSpec &spec, std::size_t t_max) {
    validate(spec);
    const ChargeSector sector = spec.sector();
    const std::size_t n = sector.n_sites();
    std::vector<Moments> proto(t_max + 1);
    auto blocks = run_blocks(spec.n_samples, spec.workers, proto,
                             [&](std::size_t first, std::size_t last, std::vector<Moments> &acc) {
                                 for (std::size_t m = first; m < last; ++m) {
                                     CircuitRealization circuit = trajectory_circuit(spec, m, t_max);
                                     BitState s0 = trajectory_state(spec, sector, m);
                                     acc[0].add(0);
                                     if (spec.direction == Direction::forward) {
                                         BitState s = s0;
                                         StepSchedule buffer;
                                         for (std::size_t t = 1; t <= t_max; ++t) {
                                             circuit.fill_step(t - 1, buffer);
                                             apply_step(buffer, circuit.rule(), s, Direction::forward);
                                             acc[t].add(hamming_distance(s0, s));
                                         }
                                     } else {
                                         for (std::size_t t = 1; t <= t_max; ++t) {
                                             acc[t].add(hamming_distance(
                                                 s0, evolve(s0, circuit, t, Direction::reverse)));
                                         }
                                     }
                                 }
                             });
    CurveEstimate out;
    out.n_samples = spec.n_samples;
    out.metadata = make_metadata(spec, "autocorr");
    // C_Z = 1 - 2 h / N with h the Hamming distance to the initial state.
    const double scale = -2.0 / static_cast<double>(n);
    for (std::size_t t = 0; t <= t_max; ++t) {
        Moments total;
        for (const auto &b : blocks) {
            total.merge(b[t]);
        }
        auto [mean, se] = total.estimate(spec.n_samples, scale);
        out.times.push_back(t);
        out.values.push_back(1.0 + mean);
        out.std_error.push_back(se);
    }
    return out;
}

Profile otoc_profile(const SamplingSpec &spec, std::size_t i0, std::size_t t_max, std::size_t r_max,
                     std::size_t stride) {
    validate(spec);
    const auto *chain = std::get_if<Chain>(&spec.geometry);
    if (chain == nullptr) {
        throw std::invalid_argument("otoc_profile requires a chain geometry");
    }
    const std::size_t L = chain->length;
    if (i0 >= L) {
        throw std::out_of_range("otoc_profile: source site out of range");
    }
    if (stride == 0) {
        throw std::invalid_argument("otoc_profile: stride must be positive");
    }
    r_max = std::min(r_max, chain->periodic ? L / 2 : L - 1);
    const ChargeSector sector = spec.sector();

    std::vector<std::size_t> times;
    for (std::size_t t = 0; t <= t_max; t += stride) {
        times.push_back(t);
    }
    // Sites at distance r on each side of i0; sides[r] counts the distinct ones.
    std::vector<std::vector<std::size_t>> at_distance(r_max + 1);
    for (std::size_t r = 0; r <= r_max; ++r) {
        if (chain->periodic) {
            std::size_t right = (i0 + r) % L;
            std::size_t left = (i0 + L - r % L) % L;
            at_distance[r].push_back(right);
            if (left != right) {
                at_distance[r].push_back(left);
            }
        } else {
            if (i0 + r < L) {
                at_distance[r].push_back(i0 + r);
            }
            if (r > 0 && r <= i0) {
                at_distance[r].push_back(i0 - r);
            }
        }
    }

    const std::size_t cells = times.size() * (r_max + 1);
    std::vector<Moments> proto(cells);
    auto blocks = run_blocks(spec.n_samples, spec.workers, proto,
                             [&](std::size_t first, std::size_t last, std::vector<Moments> &acc) {
                                 for (std::size_t m = first; m < last; ++m) {
                                     CircuitRealization circuit = trajectory_circuit(spec, m, t_max);
                                     BitState s0 = trajectory_state(spec, sector, m);
                                     std::size_t slot = 0;
                                     evolve_pair(circuit, s0, i0, t_max, spec.direction,
                                                 [&](std::size_t t, const BitState &a, const BitState &b) {
                                                     if (t % stride != 0) {
                                                         return;
                                                     }
                                                     for (std::size_t r = 0; r <= r_max; ++r) {
                                                         std::uint64_t c = 0;
                                                         for (std::size_t site : at_distance[r]) {
                                                             c += a.get(site) != b.get(site) ? 1 : 0;
                                                         }
                                                         acc[slot * (r_max + 1) + r].add(c);
                                                     }
                                                     ++slot;
                                                 });
                                 }
                             });

    Profile out;
    out.k = spec.k;
    out.n_samples = spec.n_samples;
    out.metadata = make_metadata(spec, "otoc-profile");
    out.times = times;
    for (std::size_t r = 0; r <= r_max; ++r) {
        out.distances.push_back(r);
    }
    out.values.assign(times.size(), std::vector<double>(r_max + 1, 0.0));
    out.std_error.assign(times.size(), std::vector<double>(r_max + 1, 0.0));
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        for (std::size_t r = 0; r <= r_max; ++r) {
            Moments total;
            for (const auto &b : blocks) {
                total.merge(b[ti * (r_max + 1) + r]);
            }
            const std::size_t sides = at_distance[r].size();
            if (sides == 0) {
                continue;
            }
            auto [mean, se] = total.estimate(spec.n_samples, 4.0 / static_cast<double>(sides));
            out.values[ti][r] = mean;
            out.std_error[ti][r] = se;
        }
    }
    return out;
}

void write_curve_csv(std::ostream &os, const CurveEstimate &curve) {
    os << "t,value,stderr,n_samples\n";
    for (std::size_t idx = 0; idx < curve.times.size(); ++idx) {
        os << curve.times[idx] << ',' << format_double(curve.values[idx]) << ','
           << format_double(curve.std_error[idx]) << ',' << curve.n_samples << '\n';
    }
}

void write_profile_csv(std::ostream &os, const Profile &profile) {
    os << "t,r,value,stderr\n";
    for (std::size_t ti = 0; ti < profile.times.size(); ++ti) {
        for (std::size_t ri = 0; ri < profile.distances.size(); ++ri) {
            os << profile.times[ti] << ',' << profile.distances[ri] << ',' << format_double(profile.values[ti][ri])
               << ',' << format_double(profile.std_error[ti][ri]) << '\n';
        }
    }
}

CurveEstimate read_curve_csv(std::istream &is) {
    std::string line;
    if (!std::getline(is, line) || line != "t,value,stderr,n_samples") {
        throw std::runtime_error("curve csv: expected header 't,value,stderr,n_samples'");
    }
    CurveEstimate out;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        auto cells = split_csv(line);
        if (cells.size() != 4) {
            throw std::runtime_error("curve csv row " + std::to_string(row) + ": expected 4 columns");
        }
        out.times.push_back(parse_count(cells[0], row));
        out.values.push_back(parse_double(cells[1], row));
        out.std_error.push_back(parse_double(cells[2], row));
        out.n_samples = parse_count(cells[3], row);
    }
    return out;
}

Profile read_profile_csv(std::istream &is) {
    std::string line;
    if (!std::getline(is, line) || line != "t,r,value,stderr") {
        throw std::runtime_error("profile csv: expected header 't,r,value,stderr'");
    }
    Profile out;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        auto cells = split_csv(line);
        if (cells.size() != 4) {
            throw std::runtime_error("profile csv row " + std::to_string(row) + ": expected 4 columns");
        }
        std::size_t t = parse_count(cells[0], row);
        std::size_t r = parse_count(cells[1], row);
        if (out.times.empty() || out.times.back() != t) {
            out.times.push_back(t);
            out.values.emplace_back();
            out.std_error.emplace_back();
        }
        if (out.times.size() == 1) {
            out.distances.push_back(r);
        } else if (out.values.back().size() >= out.distances.size() ||
                   out.distances[out.values.back().size()] != r) {
            throw std::runtime_error("profile csv row " + std::to_string(row) + ": ragged distance grid");
        }
        out.values.back().push_back(parse_double(cells[2], row));
        out.std_error.back().push_back(parse_double(cells[3], row));
    }
    for (const auto &v : out.values) {
        if (v.size() != out.distances.size()) {
            throw std::runtime_error("profile csv: ragged distance grid");
        }
    }
    return out;
}

}  // namespace opgrowth
