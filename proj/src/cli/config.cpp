#include "opgrowth/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "opgrowth/cli/output.hpp"
#include "opgrowth/exact/exact.hpp"

namespace opgrowth::cli {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        out.push_back(trim(cur));
    }
    return out;
}

[[noreturn]] void bad(const std::string &key, const std::string &value, const std::string &what) {
    throw ConfigError("invalid value for '" + key + "': '" + value + "' (" + what + ")");
}

std::uint64_t to_u64(const std::string &key, const std::string &v) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
        bad(key, v, "expected a non-negative integer");
    }
    return x;
}

std::size_t to_size(const std::string &key, const std::string &v) { return static_cast<std::size_t>(to_u64(key, v)); }

double to_double(const std::string &key, const std::string &v) {
    double x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
        bad(key, v, "expected a finite number");
    }
    return x;
}

bool to_bool(const std::string &key, const std::string &v) {
    if (v == "true") {
        return true;
    }
    if (v == "false") {
        return false;
    }
    bad(key, v, "expected true or false");
}

std::vector<double> to_doubles(const std::string &key, const std::string &v) {
    std::vector<double> out;
    for (const auto &item : split(v, ',')) {
        out.push_back(to_double(key, item));
    }
    if (out.empty()) {
        bad(key, v, "expected a comma-separated list");
    }
    return out;
}

std::string join(const std::vector<double> &xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        s += (i ? "," : "") + format_double(xs[i]);
    }
    return s;
}

template <class E>
E pick(const std::string &key, const std::string &v, const std::vector<std::pair<std::string, E>> &names) {
    for (const auto &[n, e] : names) {
        if (n == v) {
            return e;
        }
    }
    std::string allowed;
    for (const auto &[n, e] : names) {
        allowed += (allowed.empty() ? "" : ", ") + n;
    }
    bad(key, v, "expected one of " + allowed);
}

template <class E>
std::string name_of(E e, const std::vector<std::pair<std::string, E>> &names) {
    for (const auto &[n, x] : names) {
        if (x == e) {
            return n;
        }
    }
    return "?";
}

const std::vector<std::pair<std::string, Filling>> filling_names = {{"up", Filling::up_fraction},
                                                                    {"down", Filling::down_fraction}};
const std::vector<std::pair<std::string, PairPolicy>> policy_names = {{"all-sites", PairPolicy::all_sites},
                                                                      {"random-site", PairPolicy::random_site}};
const std::vector<std::pair<std::string, Direction>> direction_names = {{"forward", Direction::forward},
                                                                        {"reverse", Direction::reverse}};
const std::vector<std::pair<std::string, bool>> geometry_names = {{"all-to-all", false}, {"chain", true}};
const std::vector<std::pair<std::string, theory::Variant>> variant_names = {{"regular", theory::Variant::regular},
                                                                            {"brownian", theory::Variant::brownian}};

using K = ExperimentKind;
using Setter = std::function<void(ExperimentConfig &, const std::string &, const std::string &)>;
using Getter = std::function<std::string(const ExperimentConfig &)>;

struct Field {
    std::string name;
    std::vector<K> kinds;
    Setter set;
    Getter get;
};

const std::vector<K> qa = {K::otoc, K::autocorr};
const std::vector<K> qa_front = {K::otoc, K::autocorr, K::butterfly};
const std::vector<K> all_kinds = {K::otoc, K::autocorr, K::butterfly, K::exact_bound, K::syk_theory};

const std::vector<Field> &fields() {
    static const std::vector<Field> table = {
        {"seed", all_kinds, [](auto &c, auto &k, auto &v) { c.seed = to_u64(k, v); },
         [](auto &c) { return std::to_string(c.seed); }},
        {"geometry", qa, [](auto &c, auto &k, auto &v) { c.chain = pick(k, v, geometry_names); },
         [](auto &c) { return name_of(c.chain, geometry_names); }},
        {"n_sites", {K::otoc, K::autocorr, K::butterfly, K::exact_bound},
         [](auto &c, auto &k, auto &v) { c.n_sites = to_size(k, v); }, [](auto &c) { return std::to_string(c.n_sites); }},
        {"periodic", qa_front, [](auto &c, auto &k, auto &v) { c.periodic = to_bool(k, v); },
         [](auto &c) { return std::string(c.periodic ? "true" : "false"); }},
        {"k", qa_front, [](auto &c, auto &k, auto &v) { c.k = to_size(k, v); },
         [](auto &c) { return std::to_string(c.k); }},
        {"f", qa_front, [](auto &c, auto &k, auto &v) { c.f = to_double(k, v); },
         [](auto &c) { return format_double(c.f); }},
        {"densities", qa_front, [](auto &c, auto &k, auto &v) { c.densities = to_doubles(k, v); },
         [](auto &c) { return join(c.densities); }},
        {"filling", qa_front, [](auto &c, auto &k, auto &v) { c.filling = pick(k, v, filling_names); },
         [](auto &c) { return name_of(c.filling, filling_names); }},
        {"samples", qa_front, [](auto &c, auto &k, auto &v) { c.samples = to_size(k, v); },
         [](auto &c) { return std::to_string(c.samples); }},
        {"t_max", qa_front, [](auto &c, auto &k, auto &v) { c.t_max = to_size(k, v); },
         [](auto &c) { return std::to_string(c.t_max); }},
        {"policy", {K::otoc}, [](auto &c, auto &k, auto &v) { c.policy = pick(k, v, policy_names); },
         [](auto &c) { return name_of(c.policy, policy_names); }},
        {"direction", {K::otoc}, [](auto &c, auto &k, auto &v) { c.direction = pick(k, v, direction_names); },
         [](auto &c) { return name_of(c.direction, direction_names); }},
        {"noise_factor", qa, [](auto &c, auto &k, auto &v) { c.noise_factor = to_double(k, v); },
         [](auto &c) { return format_double(c.noise_factor); }},
        {"fit_upper_fraction", {K::otoc}, [](auto &c, auto &k, auto &v) { c.fit_upper_fraction = to_double(k, v); },
         [](auto &c) { return format_double(c.fit_upper_fraction); }},
        {"fit_lower_multiple", {K::otoc}, [](auto &c, auto &k, auto &v) { c.fit_lower_multiple = to_double(k, v); },
         [](auto &c) { return format_double(c.fit_lower_multiple); }},
        {"decay_lower_fraction", {K::autocorr},
         [](auto &c, auto &k, auto &v) { c.decay_lower_fraction = to_double(k, v); },
         [](auto &c) { return format_double(c.decay_lower_fraction); }},
        {"decay_upper_fraction", {K::autocorr},
         [](auto &c, auto &k, auto &v) { c.decay_upper_fraction = to_double(k, v); },
         [](auto &c) { return format_double(c.decay_upper_fraction); }},
        {"stride", {K::butterfly}, [](auto &c, auto &k, auto &v) { c.stride = to_size(k, v); },
         [](auto &c) { return std::to_string(c.stride); }},
        {"r_max", {K::butterfly}, [](auto &c, auto &k, auto &v) { c.r_max = to_size(k, v); },
         [](auto &c) { return std::to_string(c.r_max); }},
        {"theta", {K::butterfly}, [](auto &c, auto &k, auto &v) { c.theta = to_double(k, v); },
         [](auto &c) { return format_double(c.theta); }},
        {"q", {K::exact_bound, K::syk_theory}, [](auto &c, auto &k, auto &v) { c.q = to_size(k, v); },
         [](auto &c) { return std::to_string(c.q); }},
        {"J", {K::exact_bound, K::syk_theory}, [](auto &c, auto &k, auto &v) { c.J = to_double(k, v); },
         [](auto &c) { return format_double(c.J); }},
        {"mus", {K::exact_bound, K::syk_theory}, [](auto &c, auto &k, auto &v) { c.mus = to_doubles(k, v); },
         [](auto &c) { return join(c.mus); }},
        {"hamiltonians", {K::exact_bound}, [](auto &c, auto &k, auto &v) { c.hamiltonians = to_size(k, v); },
         [](auto &c) { return std::to_string(c.hamiltonians); }},
        {"blocks", {K::exact_bound},
         [](auto &c, auto &k, auto &v) {
             c.blocks.clear();
             for (const auto &item : split(v, ',')) {
                 auto parts = split(item, ':');
                 if (parts.size() != 2) {
                     bad(k, v, "expected s:s' pairs separated by commas");
                 }
                 c.blocks.emplace_back(to_size(k, parts[0]), to_size(k, parts[1]));
             }
             if (c.blocks.empty()) {
                 bad(k, v, "expected at least one s:s' pair");
             }
         },
         [](auto &c) {
             std::string s;
             for (std::size_t i = 0; i < c.blocks.size(); ++i) {
                 s += (i ? "," : "") + std::to_string(c.blocks[i].first) + ":" + std::to_string(c.blocks[i].second);
             }
             return s;
         }},
        {"times", {K::exact_bound}, [](auto &c, auto &k, auto &v) { c.times = to_doubles(k, v); },
         [](auto &c) { return join(c.times); }},
        {"operator_site", {K::exact_bound}, [](auto &c, auto &k, auto &v) { c.operator_site = to_size(k, v); },
         [](auto &c) { return std::to_string(c.operator_site); }},
        {"allow_large", {K::exact_bound}, [](auto &c, auto &k, auto &v) { c.allow_large = to_bool(k, v); },
         [](auto &c) { return std::string(c.allow_large ? "true" : "false"); }},
        {"variant", {K::syk_theory}, [](auto &c, auto &k, auto &v) { c.variant = pick(k, v, variant_names); },
         [](auto &c) { return name_of(c.variant, variant_names); }},
        {"b", {K::syk_theory}, [](auto &c, auto &k, auto &v) { c.b = to_double(k, v); },
         [](auto &c) { return format_double(c.b); }},
        {"lambda_star", {K::syk_theory}, [](auto &c, auto &k, auto &v) { c.lambda_star = to_double(k, v); },
         [](auto &c) { return c.lambda_star ? format_double(*c.lambda_star) : std::string(); }},
    };
    return table;
}

bool applies(const Field &f, K kind) { return std::find(f.kinds.begin(), f.kinds.end(), kind) != f.kinds.end(); }

ExperimentConfig defaults_for(K kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
    case K::autocorr: c.t_max = 500; break;
    case K::butterfly:
        c.chain = true;
        c.n_sites = 1000;
        c.k = 5;
        c.densities = {0.1};
        c.filling = Filling::down_fraction;
        c.t_max = 1200;
        break;
    case K::exact_bound: c.n_sites = 6; break;
    case K::syk_theory: c.mus = {0.0}; break;
    case K::otoc: break;
    }
    return c;
}

void check(bool ok, const std::string &message) {
    if (!ok) {
        throw ConfigError(message);
    }
}

void check_fraction(double x, const std::string &key) { check(x > 0.0 && x <= 1.0, key + " must lie in (0, 1]"); }

}  // namespace

std::string kind_name(ExperimentKind k) {
    switch (k) {
    case K::otoc: return "otoc";
    case K::autocorr: return "autocorr";
    case K::butterfly: return "butterfly";
    case K::exact_bound: return "exact-bound";
    case K::syk_theory: return "syk-theory";
    }
    return "?";
}

ExperimentKind parse_kind(const std::string &name) {
    for (K k : all_kinds) {
        if (kind_name(k) == name) {
            return k;
        }
    }
    throw ConfigError("unknown experiment kind '" + name + "'");
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string &text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::set<std::string> seen;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        }
        if (!seen.insert(key).second) {
            throw ConfigError("line " + std::to_string(lineno) + ": repeated key '" + key + "'");
        }
        out.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return out;
}

std::vector<std::string> config_keys(ExperimentKind kind) {
    std::vector<std::string> keys = {"kind"};
    for (const auto &f : fields()) {
        if (applies(f, kind)) {
            keys.push_back(f.name);
        }
    }
    return keys;
}

ExperimentConfig parse_config(const std::string &text, std::optional<ExperimentKind> kind_override) {
    auto kv = parse_key_values(text);
    std::optional<K> kind = kind_override;
    for (const auto &[k, v] : kv) {
        if (k == "kind") {
            K declared = parse_kind(v);
            if (kind && *kind != declared) {
                throw ConfigError("config declares kind '" + v + "' but the command is '" + kind_name(*kind) + "'");
            }
            kind = declared;
        }
    }
    if (!kind) {
        throw ConfigError("missing key 'kind'");
    }
    std::vector<std::string> unknown;
    for (const auto &[k, v] : kv) {
        if (k == "kind") {
            continue;
        }
        auto it = std::find_if(fields().begin(), fields().end(), [&](const Field &f) { return f.name == k; });
        if (it == fields().end() || !applies(*it, *kind)) {
            unknown.push_back(k);
        }
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto &k : unknown) {
            list += (list.empty() ? "'" : ", '") + k + "'";
        }
        throw ConfigError("unknown key" + std::string(unknown.size() > 1 ? "s " : " ") + list + " for kind '" +
                          kind_name(*kind) + "'");
    }
    ExperimentConfig c = defaults_for(*kind);
    for (const auto &[k, v] : kv) {
        if (k == "kind") {
            continue;
        }
        for (const auto &f : fields()) {
            if (f.name == k) {
                f.set(c, k, v);
            }
        }
    }
    validate_config(c);
    return c;
}

std::string serialize_config(const ExperimentConfig &config) {
    std::string out = "kind = " + kind_name(config.kind) + "\n";
    for (const auto &f : fields()) {
        if (!applies(f, config.kind)) {
            continue;
        }
        std::string v = f.get(config);
        if (f.name == "lambda_star" && v.empty()) {
            continue;
        }
        out += f.name + " = " + v + "\n";
    }
    return out;
}

void validate_config(const ExperimentConfig &c) {
    const bool circuit = c.kind == K::otoc || c.kind == K::autocorr || c.kind == K::butterfly;
    if (circuit) {
        check(c.k % 2 == 1 && c.k >= 3 && c.k <= 31, "k must be odd with 3 <= k <= 31, got " + std::to_string(c.k));
        check(c.f >= 0.0 && c.f <= 1.0, "f must lie in [0, 1]");
        check(!c.densities.empty(), "densities must not be empty");
        for (double n : c.densities) {
            check(n > 0.0 && n < 1.0, "densities must lie in (0, 1), got " + format_double(n));
        }
        check(c.n_sites >= c.k && c.n_sites >= 2, "n_sites must be at least k");
        check(c.samples >= 1, "samples must be positive");
        check(c.t_max >= 1, "t_max must be positive");
        for (double n : c.densities) {
            auto sector = ChargeSector::from_density(c.n_sites, n, c.filling);
            check(sector.n_up() > 0 && sector.n_up() < c.n_sites,
                  "density " + format_double(n) + " rounds to an empty or full sector at n_sites = " +
                      std::to_string(c.n_sites));
        }
    }
    if (c.kind == K::otoc || c.kind == K::autocorr) {
        check(c.noise_factor >= 0.0, "noise_factor must be non-negative");
        check_fraction(c.fit_upper_fraction, "fit_upper_fraction");
        check(c.fit_lower_multiple >= 0.0, "fit_lower_multiple must be non-negative");
        check_fraction(c.decay_upper_fraction, "decay_upper_fraction");
        check(c.decay_lower_fraction >= 0.0 && c.decay_lower_fraction < c.decay_upper_fraction,
              "decay_lower_fraction must lie in [0, decay_upper_fraction)");
    }
    if (c.kind == K::butterfly) {
        check(c.stride >= 1, "stride must be positive");
        check(c.theta > 0.0 && c.theta < 1.0, "theta must lie in (0, 1)");
        check(c.r_max < c.n_sites, "r_max must be smaller than n_sites");
    }
    if (c.kind == K::exact_bound || c.kind == K::syk_theory) {
        check(c.q % 2 == 0, "q must be even, got " + std::to_string(c.q));
        check(c.J > 0.0, "J must be positive");
        check(!c.mus.empty(), "mus must not be empty");
    }
    if (c.kind == K::syk_theory) {
        check(c.q >= 4, "q must be at least 4");
        check(c.b >= 0.0 && c.b <= 0.5, "b must lie in [0, 1/2]");
        check(!c.lambda_star || *c.lambda_star > 0.0, "lambda_star must be positive");
    }
    if (c.kind == K::exact_bound) {
        check(c.n_sites <= exact::max_sites,
              "exact dynamics is capped at " + std::to_string(exact::max_sites) + " sites (4^N operator space); got " +
                  std::to_string(c.n_sites));
        check(c.n_sites <= 6 || c.allow_large,
              "n_sites = " + std::to_string(c.n_sites) + " needs allow_large = true (dense 4^N blocks, minutes to hours)");
        check(c.n_sites >= 2, "n_sites must be at least 2");
        check(c.q >= 2 && c.q <= 2 * c.n_sites, "q must satisfy 2 <= q <= 2 n_sites");
        check(c.hamiltonians >= 1, "hamiltonians must be positive");
        check(c.operator_site < c.n_sites, "operator_site must be below n_sites");
        for (auto [s, sp] : c.blocks) {
            check(s <= 2 * c.n_sites && sp <= 2 * c.n_sites, "block sizes must not exceed 2 n_sites");
        }
        for (double t : c.times) {
            check(t >= 0.0, "times must be non-negative");
        }
    }
}

}  // namespace opgrowth::cli
