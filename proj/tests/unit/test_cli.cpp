#include <filesystem>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "opgrowth/cli/config.hpp"
#include "opgrowth/cli/experiment.hpp"
#include "opgrowth/cli/output.hpp"
#include "opgrowth/cli/pipelines.hpp"
#include "opgrowth/cli/plot.hpp"

using namespace opgrowth;
using namespace opgrowth::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    auto p = fs::temp_directory_path() / ("opgrowth_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

double any_double(RngStream &rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

ExperimentConfig random_config(ExperimentKind kind, RngStream &rng) {
    auto c = parse_config("kind = " + kind_name(kind));
    c.seed = rng.next_u64();
    if (kind == ExperimentKind::otoc || kind == ExperimentKind::autocorr || kind == ExperimentKind::butterfly) {
        c.n_sites = 100 + rng.below(5000);
        c.periodic = rng.bernoulli(0.5);
        c.k = 3 + 2 * rng.below(4);
        c.f = rng.uniform();
        c.densities.clear();
        for (std::size_t i = 0, n = 1 + rng.below(4); i < n; ++i) {
            c.densities.push_back(any_double(rng, 0.05, 0.95));
        }
        c.filling = rng.bernoulli(0.5) ? Filling::up_fraction : Filling::down_fraction;
        c.samples = 1 + rng.below(10000);
        c.t_max = 1 + rng.below(2000);
    }
    if (kind == ExperimentKind::otoc || kind == ExperimentKind::autocorr) {
        c.chain = rng.bernoulli(0.5);
        c.noise_factor = any_double(rng, 0, 20);
    }
    if (kind == ExperimentKind::otoc) {
        c.policy = rng.bernoulli(0.5) ? PairPolicy::all_sites : PairPolicy::random_site;
        c.direction = rng.bernoulli(0.5) ? Direction::forward : Direction::reverse;
        c.fit_upper_fraction = any_double(rng, 0.01, 1.0);
        c.fit_lower_multiple = any_double(rng, 0, 5);
    }
    if (kind == ExperimentKind::autocorr) {
        c.decay_upper_fraction = any_double(rng, 0.5, 1.0);
        c.decay_lower_fraction = any_double(rng, 0.0, 0.4);
    }
    if (kind == ExperimentKind::butterfly) {
        c.stride = 1 + rng.below(50);
        c.r_max = rng.below(c.n_sites);
        c.theta = any_double(rng, 0.05, 0.95);
    }
    if (kind == ExperimentKind::exact_bound || kind == ExperimentKind::syk_theory) {
        c.q = 4 + 2 * rng.below(2);
        c.J = any_double(rng, 0.1, 3.0);
        c.mus = {any_double(rng, -5, 5), any_double(rng, -5, 5)};
    }
    if (kind == ExperimentKind::exact_bound) {
        c.n_sites = 3 + rng.below(4);
        c.hamiltonians = 1 + rng.below(30);
        c.blocks = {{rng.below(6), rng.below(6)}};
        c.times = {0.0, any_double(rng, 0, 4)};
        c.operator_site = rng.below(c.n_sites);
    }
    if (kind == ExperimentKind::syk_theory) {
        c.variant = rng.bernoulli(0.5) ? theory::Variant::regular : theory::Variant::brownian;
        c.b = any_double(rng, 0, 0.5);
        if (rng.bernoulli(0.5)) {
            c.lambda_star = any_double(rng, 0.1, 2.0);
        } else {
            c.lambda_star.reset();
        }
    }
    validate_config(c);
    return c;
}

std::vector<std::vector<std::pair<double, double>>> polylines(const std::string &svg) {
    std::vector<std::vector<std::pair<double, double>>> out;
    std::regex poly("<polyline[^>]*points=\"([^\"]*)\"");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), poly); it != std::sregex_iterator(); ++it) {
        std::vector<std::pair<double, double>> pts;
        std::istringstream is((*it)[1].str());
        std::string pair;
        while (is >> pair) {
            const auto comma = pair.find(',');
            pts.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
        }
        out.push_back(pts);
    }
    return out;
}

std::string manifest_outputs(const fs::path &dir) {
    auto j = nlohmann::json::parse(read_text(dir / "manifest.json"));
    return j["outputs"].dump();
}

}  // namespace

TEST_CASE("sha256 of a known string") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("number formatting round trips") {
    RngStream rng(1, {});
    for (int i = 0; i < 1000; ++i) {
        const double x = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<int>(rng.below(30)) - 15);
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(density_tag(0.1) == "0.1");
    CHECK(density_tag(0.25) == "0.25");
}

TEST_CASE("configs round trip through their text form") {
    RngStream rng(2, {});
    for (auto kind : {ExperimentKind::otoc, ExperimentKind::autocorr, ExperimentKind::butterfly,
                      ExperimentKind::exact_bound, ExperimentKind::syk_theory}) {
        CHECK(parse_kind(kind_name(kind)) == kind);
        for (int trial = 0; trial < 100; ++trial) {
            auto c = random_config(kind, rng);
            const auto text = serialize_config(c);
            CHECK(parse_config(text) == c);
            CHECK(serialize_config(parse_config(text)) == text);
        }
    }
}

TEST_CASE("unknown keys are all named") {
    try {
        parse_config("kind = otoc\nbogus = 1\nmus = 0\n");
        FAIL("expected a config error");
    } catch (const ConfigError &e) {
        const std::string what = e.what();
        CHECK(what.find("'bogus'") != std::string::npos);
        CHECK(what.find("'mus'") != std::string::npos);
    }
}

TEST_CASE("config syntax errors") {
    CHECK_THROWS_AS(parse_key_values("k = 1\nk = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_key_values("novalue\n"), ConfigError);
    CHECK_THROWS_AS(parse_key_values(" = 3\n"), ConfigError);
    CHECK(parse_key_values("# c\n\n a = b # tail\n").at(0).second == "b");
    CHECK_THROWS_AS(parse_config("seed = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("kind = otoc\n", ExperimentKind::autocorr), ConfigError);
    CHECK_THROWS_AS(parse_config("kind = nope\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("kind = otoc\nk = three\n"), ConfigError);
}

TEST_CASE("config validation rejects out-of-range values") {
    const std::vector<std::string> bad = {
        "kind = otoc\nk = 4\n",
        "kind = otoc\nk = 33\n",
        "kind = otoc\nf = 1.5\n",
        "kind = otoc\ndensities = 0\n",
        "kind = otoc\ndensities = 0.5, 1\n",
        "kind = otoc\nn_sites = 10\ndensities = 0.01\n",
        "kind = syk-theory\nq = 5\n",
        "kind = syk-theory\nb = 0.7\n",
        "kind = syk-theory\nJ = -1\n",
        "kind = exact-bound\nq = 5\n",
        "kind = exact-bound\nn_sites = 7\n",
        "kind = exact-bound\nn_sites = 9\nallow_large = true\n",
        "kind = butterfly\ntheta = 1\n",
    };
    for (const auto &text : bad) {
        CAPTURE(text);
        CHECK_THROWS_AS(parse_config(text), ConfigError);
    }
    CHECK_NOTHROW(parse_config("kind = exact-bound\nn_sites = 7\nallow_large = true\nhamiltonians = 1\n"));
}

TEST_CASE("syk-theory run reports the Brownian exponent") {
    auto dir = scratch("theory");
    auto c = parse_config("kind = syk-theory\nvariant = brownian\nq = 4\nJ = 1\nmus = 0\nlambda_star = 1\n");
    auto m = run_experiment(c, dir, 1);
    auto j = nlohmann::json::parse(read_text(dir / "theory.json"));
    CHECK(j["points"][0]["lambda"].get<double>() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(j["points"][0].contains("density_bounds"));
    auto man = nlohmann::json::parse(read_text(dir / "manifest.json"));
    CHECK(man["version"] == tool_version);
    CHECK(man["config_text"] == serialize_config(c));
    for (const auto &o : man["outputs"]) {
        CHECK(sha256_hex(read_text(dir / o["file"].get<std::string>())) == o["sha256"]);
    }
}

TEST_CASE("reruns and worker counts give identical outputs") {
    auto c = parse_config("kind = otoc\nn_sites = 300\ndensities = 0.1, 0.2, 0.3\nsamples = 40\nt_max = 60\nseed = 5\n");
    auto a = scratch("rerun_a"), b = scratch("rerun_b"), w = scratch("rerun_w");
    run_experiment(c, a, 1);
    run_experiment(c, b, 1);
    run_experiment(c, w, 3);
    CHECK(manifest_outputs(a) == manifest_outputs(b));
    CHECK(manifest_outputs(a) == manifest_outputs(w));
    auto manifest = nlohmann::json::parse(read_text(a / "manifest.json"));
    auto replay = parse_config(manifest["config_text"].get<std::string>());
    CHECK(replay == c);

    auto e = parse_config("kind = exact-bound\nn_sites = 4\nhamiltonians = 2\nmus = 0, 2\nblocks = 1:3\n");
    auto ea = scratch("exact_a"), eb = scratch("exact_b");
    run_experiment(e, ea, 1);
    run_experiment(e, eb, 2);
    CHECK(manifest_outputs(ea) == manifest_outputs(eb));
}

TEST_CASE("sub-seeds are distinct and stable") {
    CHECK(sub_seed(1, 2, 3) == sub_seed(1, 2, 3));
    CHECK(sub_seed(1, 2, 3) != sub_seed(1, 2, 4));
    CHECK(sub_seed(1, 2, 3) != sub_seed(1, 3, 3));
    CHECK(sub_seed(1, 2, 3) != sub_seed(2, 2, 3));
}

TEST_CASE("a two-point curve is one polyline with two vertices") {
    auto dir = scratch("plot2");
    write_text(dir / "c.csv", "t,value,stderr,n_samples\n0,0.5,0,10\n1,1.5,0,10\n");
    PlotRequest req;
    req.input = dir / "c.csv";
    auto svg = emit_plot(req);
    auto lines = polylines(svg);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].size() == 2);
    CHECK(svg.rfind("<svg", 0) != std::string::npos);
    CHECK(emit_plot(req) == svg);
}

TEST_CASE("log axes report the offending row") {
    auto dir = scratch("plotlog");
    write_text(dir / "c.csv", "t,value,stderr,n_samples\n0,1,0,10\n1,2,0,10\n2,-0.5,0,10\n");
    PlotRequest req;
    req.input = dir / "c.csv";
    req.y_scale = Scale::log;
    try {
        emit_plot(req);
        FAIL("expected a plot error");
    } catch (const PlotError &e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    req.y_scale = Scale::linear;
    CHECK_NOTHROW(emit_plot(req));
    write_text(dir / "bad.csv", "a,b\n1,2\n");
    req.input = dir / "bad.csv";
    CHECK_THROWS_AS(emit_plot(req), PlotError);
}

TEST_CASE("collapse plots place points at r - v t") {
    auto dir = scratch("collapse");
    std::ostringstream csv;
    csv << "t,r,value,stderr\n";
    const std::vector<int> times = {0, 10, 20, 30};
    for (int t : times) {
        for (int r = 0; r <= 8; ++r) {
            csv << t << ',' << r << ',' << 4.0 / (1.0 + r + 0.1 * t) << ",0\n";
        }
    }
    write_text(dir / "p.csv", csv.str());
    PlotRequest req;
    req.input = dir / "p.csv";
    req.velocity = 0.2;
    req.y_scale = Scale::linear;
    auto lines = polylines(emit_plot(req));
    REQUIRE(lines.size() == 3);
    // Data x for every vertex, in CSV order of the slices with t > 0.
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t s = 0; s < 3; ++s) {
        REQUIRE(lines[s].size() == 9);
        for (int r = 0; r <= 8; ++r) {
            pairs.emplace_back(r - 0.2 * times[s + 1], lines[s][r].first);
        }
    }
    auto lo = *std::min_element(pairs.begin(), pairs.end());
    auto hi = *std::max_element(pairs.begin(), pairs.end());
    const double slope = (hi.second - lo.second) / (hi.first - lo.first);
    CHECK(slope > 0);
    for (auto [x, px] : pairs) {
        CHECK(std::abs(lo.second + slope * (x - lo.first) - px) < 0.02);
    }
}

TEST_CASE("plot configs resolve inputs against their directory") {
    auto [req, out] = parse_plot_config("input = a.csv\noutput = a.svg\ny_scale = log\nvelocity = 0.3\n", "/tmp/x");
    CHECK(req.input == fs::path("/tmp/x/a.csv"));
    CHECK(out == fs::path("a.svg"));
    CHECK(req.y_scale == Scale::log);
    CHECK(req.velocity == 0.3);
    CHECK_THROWS(parse_plot_config("input = a.csv\nwhat = 1\n", "/tmp"));
}
