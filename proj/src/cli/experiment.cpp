#include "opgrowth/cli/experiment.hpp"

#include <chrono>
#include <sstream>

#include "json.hpp"
#include "opgrowth/cli/output.hpp"
#include "opgrowth/cli/pipelines.hpp"
#include "opgrowth/cli/plot.hpp"
#include "opgrowth/exact/exact.hpp"
#include "opgrowth/theory/syk.hpp"

namespace opgrowth::cli {

namespace {

using json = nlohmann::ordered_json;

json fit_or_error(const std::optional<FitResult> &fit, const std::string &error) {
    if (!fit) {
        return json{{"error", error}};
    }
    return json::parse(fit_report_json(*fit));
}

std::string rates_csv(const std::vector<std::pair<double, const std::optional<FitResult> *>> &rows) {
    std::ostringstream os;
    os << "density,rate,stderr\n";
    for (const auto &[d, fit] : rows) {
        if (*fit) {
            os << format_double(d) << ',' << format_double((*fit)->value) << ',' << format_double((*fit)->uncertainty)
               << '\n';
        }
    }
    return os.str();
}

std::size_t fitted(const std::vector<std::pair<double, const std::optional<FitResult> *>> &rows) {
    std::size_t n = 0;
    for (const auto &r : rows) {
        n += r.second->has_value() ? 1 : 0;
    }
    return n;
}

void plot_file(OutputDir &out, const std::string &csv, const std::string &svg, PlotRequest req) {
    req.input = out.root() / csv;
    out.write(svg, emit_plot(req));
}

void run_scan(const ExperimentConfig &c, std::size_t workers, OutputDir &out, RunManifest &m) {
    const bool otoc = c.kind == ExperimentKind::otoc;
    const std::string obs = otoc ? "otoc" : "autocorr";
    ScanSettings s;
    s.observable = otoc ? Observable::otoc : Observable::autocorr;
    s.geometry = c.chain ? Geometry{Chain{c.n_sites, c.periodic}} : Geometry{AllToAll{c.n_sites}};
    s.k = c.k;
    s.f = c.f;
    s.densities = c.densities;
    s.filling = c.filling;
    s.samples = c.samples;
    s.t_max = c.t_max;
    s.policy = c.policy;
    s.direction = c.direction;
    s.seed = c.seed;
    s.workers = workers;
    s.noise_factor = c.noise_factor;
    s.otoc_upper_fraction = c.fit_upper_fraction;
    s.otoc_lower_multiple = c.fit_lower_multiple;
    s.decay_lower_fraction = c.decay_lower_fraction;
    s.decay_upper_fraction = c.decay_upper_fraction;
    auto scan = density_scan(s);

    json points = json::array();
    std::vector<std::pair<double, const std::optional<FitResult> *>> rows;
    for (const auto &p : scan.points) {
        const std::string csv = obs + "_k" + std::to_string(c.k) + "_n" + density_tag(p.density) + ".csv";
        out.write(csv, curve_csv(p.curve));
        PlotRequest req;
        if (otoc) {
            req.y_offset = 4.0 / (static_cast<double>(c.n_sites) - 1.0);
            req.title = "C(t) + 4/(N-1), density " + density_tag(p.density);
        } else {
            req.y_scale = Scale::linear;
            req.title = "autocorrelator, density " + density_tag(p.density);
        }
        plot_file(out, csv, csv.substr(0, csv.size() - 4) + ".svg", req);
        m.seeds.push_back({obs + " density " + density_tag(p.density), p.seed});
        points.push_back(json{{"density", p.density}, {"seed", p.seed}, {"file", csv},
                              {otoc ? "lambda" : "kappa", fit_or_error(p.fit, p.fit_error)}});
        rows.emplace_back(p.density, &p.fit);
    }
    out.write(obs + "_rates.csv", rates_csv(rows));
    if (fitted(rows) >= 2) {
        PlotRequest req;
        req.title = (otoc ? "lambda" : "kappa") + std::string(" vs density");
        plot_file(out, obs + "_rates.csv", obs + "_rates.svg", req);
    }
    json report{{"observable", obs}, {"points", points}, {"exponent", fit_or_error(scan.exponent, scan.exponent_error)}};
    out.write("fits.json", report.dump(2) + "\n");
}

void run_butterfly(const ExperimentConfig &c, std::size_t workers, OutputDir &out, RunManifest &m) {
    FrontSettings s;
    s.length = c.n_sites;
    s.periodic = c.periodic;
    s.k = c.k;
    s.f = c.f;
    s.densities = c.densities;
    s.filling = c.filling;
    s.samples = c.samples;
    s.t_max = c.t_max;
    s.stride = c.stride;
    s.r_max = c.r_max;
    s.front.theta = c.theta;
    s.seed = c.seed;
    s.workers = workers;
    auto scan = front_scan(s);

    json points = json::array();
    std::vector<std::pair<double, const std::optional<FitResult> *>> thr, col;
    for (const auto &p : scan.points) {
        const std::string stem = "profile_k" + std::to_string(c.k) + "_n" + density_tag(p.density);
        out.write(stem + ".csv", profile_csv(p.profile));
        PlotRequest req;
        req.velocity = p.collapse ? p.collapse->value : (p.threshold ? p.threshold->value : 0.0);
        req.title = "C(r - v t, t), v = " + format_double(req.velocity);
        plot_file(out, stem + ".csv", stem + "_collapse.svg", req);
        m.seeds.push_back({"butterfly density " + density_tag(p.density), p.seed});
        points.push_back(json{{"density", p.density},
                              {"seed", p.seed},
                              {"file", stem + ".csv"},
                              {"threshold", fit_or_error(p.threshold, p.threshold_error)},
                              {"collapse", fit_or_error(p.collapse, p.collapse_error)}});
        thr.emplace_back(p.density, &p.threshold);
        col.emplace_back(p.density, &p.collapse);
    }
    out.write("velocities_threshold.csv", rates_csv(thr));
    out.write("velocities_collapse.csv", rates_csv(col));
    for (const char *method : {"threshold", "collapse"}) {
        const auto &rows = std::string(method) == "threshold" ? thr : col;
        if (fitted(rows) >= 2) {
            PlotRequest req;
            req.title = std::string("v_B (") + method + ") vs density";
            plot_file(out, std::string("velocities_") + method + ".csv", std::string("velocities_") + method + ".svg",
                      req);
        }
    }
    json report{{"points", points},
                {"threshold_exponent", fit_or_error(scan.threshold_exponent, "fewer than three velocities")},
                {"collapse_exponent", fit_or_error(scan.collapse_exponent, "fewer than three velocities")}};
    out.write("fronts.json", report.dump(2) + "\n");
}

void run_exact(const ExperimentConfig &c, OutputDir &out, RunManifest &m) {
    const std::size_t n = c.n_sites;
    std::vector<exact::BlockBoundReport> blocks;
    json sum_rules = json::array();
    for (std::size_t h = 0; h < c.hamiltonians; ++h) {
        RngStream rng(c.seed, StreamKey{StreamRole::couplings, h, n, c.q});
        m.seeds.push_back({"couplings hamiltonian " + std::to_string(h), c.seed});
        auto ham = exact::build_syk_hamiltonian(n, c.q, c.J, rng);
        for (auto [s, sp] : c.blocks) {
            blocks.push_back(exact::block_bound_report(ham, s, sp, c.mus));
        }
        exact::HeisenbergEvolver ev(ham);
        for (double mu : c.mus) {
            exact::MuEnsemble ens(mu, n);
            exact::SizeBasis basis(n, ens);
            const auto a = exact::annihilator(n, c.operator_site);
            const double norm0 = exact::inner_product(a, a, ens).real();
            std::vector<exact::SizeDistribution> dists;
            for (double t : c.times) {
                auto at = ev.evolve(a, t);
                auto rule = exact::otoc_exact_and_sumrule(ev, c.operator_site, t, ens, basis);
                sum_rules.push_back(json{{"hamiltonian", h},
                                         {"mu", mu},
                                         {"t", t},
                                         {"otoc", rule.c},
                                         {"otoc_sum", rule.sum},
                                         {"size_expectation", rule.size_expectation},
                                         {"slack", rule.slack},
                                         {"norm_deviation", exact::inner_product(at, at, ens).real() - norm0}});
                if (h == 0) {
                    dists.push_back(exact::size_distribution(at, basis, ens));
                }
            }
            if (h == 0) {
                std::ostringstream os;
                exact::write_size_csv(os, c.times, dists);
                out.write("sizes_mu" + density_tag(mu) + ".csv", os.str());
            }
        }
    }
    out.write("block_bounds.json", exact::block_report_json(blocks) + "\n");
    out.write("sum_rule.json", sum_rules.dump(2) + "\n");
}

void run_theory(const ExperimentConfig &c, OutputDir &out) {
    json points = json::array();
    for (double mu : c.mus) {
        theory::SykParams p{c.variant, static_cast<int>(c.q), c.J, mu, c.b};
        json j = json::parse(theory::theory_json(p));
        if (c.variant == theory::Variant::regular) {
            auto qr = theory::quadrature_check(p);
            j["quadrature"] = json{{"numeric", qr.numeric}, {"analytic", qr.analytic},
                                   {"relative_error", qr.relative_error}, {"cutoff", qr.cutoff}};
        }
        if (c.lambda_star) {
            auto b = theory::density_bounds(p.density(), static_cast<int>(c.q), *c.lambda_star);
            j["density_bounds"] = json{{"universal", b.universal},
                                       {"q_body", b.q_body},
                                       {"exponents", json{{"quantum", b.quantum_exponent},
                                                          {"classical", b.classical_exponent}}}};
        }
        points.push_back(j);
    }
    out.write("theory.json", json{{"points", points}}.dump(2) + "\n");
}

}  // namespace

void OutputDir::write(const std::string &name, const std::string &content) {
    write_text(root_ / name, content);
    records_.push_back({name, sha256_hex(content), content.size()});
}

void OutputDir::record(const std::string &name) {
    auto content = read_text(root_ / name);
    records_.push_back({name, sha256_hex(content), content.size()});
}

RunManifest run_experiment(const ExperimentConfig &config, const std::filesystem::path &out_dir, std::size_t workers) {
    validate_config(config);
    const auto start = std::chrono::steady_clock::now();
    RunManifest m;
    m.command = kind_name(config.kind);
    m.config_text = serialize_config(config);
    m.workers = workers;
    OutputDir out(out_dir);
    out.write("config.txt", m.config_text);
    switch (config.kind) {
    case ExperimentKind::otoc:
    case ExperimentKind::autocorr: run_scan(config, workers, out, m); break;
    case ExperimentKind::butterfly: run_butterfly(config, workers, out, m); break;
    case ExperimentKind::exact_bound: run_exact(config, out, m); break;
    case ExperimentKind::syk_theory: run_theory(config, out); break;
    }
    m.outputs = out.records();
    m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(out_dir / "manifest.json", manifest_json(m) + "\n");
    return m;
}

std::string manifest_json(const RunManifest &m) {
    json config = json::object();
    for (const auto &[k, v] : parse_key_values(m.config_text)) {
        config[k] = v;
    }
    json seeds = json::array();
    for (const auto &s : m.seeds) {
        seeds.push_back(json{{"stream", s.stream}, {"seed", s.seed}});
    }
    json outputs = json::array();
    for (const auto &o : m.outputs) {
        outputs.push_back(json{{"file", o.file}, {"sha256", o.sha256}, {"bytes", o.bytes}});
    }
    json j{{"tool", "opgrowth"},
           {"version", tool_version},
           {"command", m.command},
           {"config_text", m.config_text},
           {"config", config},
           {"workers", m.workers},
           {"wall_clock_seconds", m.wall_clock_seconds},
           {"seed_registry", seeds},
           {"outputs", outputs}};
    return j.dump(2);
}

}  // namespace opgrowth::cli
