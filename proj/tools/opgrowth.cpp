#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "opgrowth/cli/acceptance.hpp"
#include "opgrowth/cli/config.hpp"
#include "opgrowth/cli/experiment.hpp"
#include "opgrowth/cli/output.hpp"
#include "opgrowth/cli/plot.hpp"

namespace fs = std::filesystem;
using namespace opgrowth;
using namespace opgrowth::cli;

namespace {

constexpr int exit_usage = 1;
constexpr int exit_validation = 2;
constexpr int exit_runtime = 3;

struct Common {
    std::string config;
    std::string out = "out";
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App *sub, Common &c, bool config_required) {
    auto *opt = sub->add_option("--config", c.config, "Key-value configuration file");
    if (config_required) {
        opt->required()->check(CLI::ExistingFile);
    }
    sub->add_option("--out", c.out, "Output directory")->capture_default_str();
    sub->add_option("--workers", c.workers, "Worker threads (does not change outputs)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "Master seed, overrides the config");
}

int run_kind(ExperimentKind kind, const Common &c) {
    auto config = parse_config(read_text(c.config), kind);
    if (c.seed) {
        config.seed = *c.seed;
    }
    auto manifest = run_experiment(config, c.out, c.workers);
    std::cout << kind_name(kind) << ": wrote " << manifest.outputs.size() << " files to " << c.out << " in "
              << manifest.wall_clock_seconds << " s\n";
    return 0;
}

int run_plot(const Common &c) {
    const fs::path cfg(c.config);
    auto [req, name] = parse_plot_config(read_text(cfg), cfg.parent_path());
    const fs::path target = name.is_absolute() ? name : fs::path(c.out) / name;
    write_text(target, emit_plot(req));
    std::cout << "plot: wrote " << target.string() << "\n";
    return 0;
}

int run_reproduce(const Common &c, const std::vector<int> &criteria) {
    const auto start = std::chrono::steady_clock::now();
    CriterionOptions opts;
    opts.workers = c.workers;
    if (c.seed) {
        opts.seed = *c.seed;
    }
    OutputDir out(c.out);
    RunManifest manifest;
    manifest.command = "reproduce-paper";
    manifest.workers = c.workers;
    std::string criteria_list;
    for (int id : criteria) {
        criteria_list += (criteria_list.empty() ? "" : ",") + std::to_string(id);
    }
    manifest.config_text = "seed = " + std::to_string(opts.seed) + "\ncriteria = " + criteria_list + "\n";
    manifest.seeds.push_back({"acceptance master", opts.seed});
    std::string lines;
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    int failures = 0;
    for (int id : criteria) {
        const fs::path dir = fs::path(c.out) / ("criterion" + std::to_string(id));
        opts.out_dir = dir;
        auto r = run_criterion(id, opts);
        const auto line = format_line(r);
        std::cout << line << std::endl;
        lines += line + "\n";
        failures += r.pass ? 0 : 1;
        summary.push_back({{"criterion", id}, {"name", r.name}, {"pass", r.pass}, {"summary", r.summary}});
        for (const auto &f : r.files) {
            out.record(fs::relative(f, out.root()).generic_string());
        }
    }
    out.write("acceptance.txt", lines);
    out.write("acceptance.json", summary.dump(2) + "\n");
    manifest.outputs = out.records();
    manifest.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(fs::path(c.out) / "manifest.json", manifest_json(manifest) + "\n");
    if (failures > 0) {
        std::cerr << failures << " criteria failed; see " << (fs::path(c.out) / "acceptance.txt").string() << "\n";
        return exit_runtime;
    }
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Operator growth and scrambling experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    const std::vector<std::pair<ExperimentKind, std::string>> kinds = {
        {ExperimentKind::otoc, "OTOC curves and Lyapunov exponents of QA circuits"},
        {ExperimentKind::autocorr, "Autocorrelator decay of QA circuits"},
        {ExperimentKind::butterfly, "Chain OTOC profiles and butterfly velocities"},
        {ExperimentKind::exact_bound, "Exact small-N block bounds, size distributions and sum rule"},
        {ExperimentKind::syk_theory, "Closed-form SYK decay rate, rung, Lyapunov exponent and v_B"},
    };
    Common common;
    std::vector<std::pair<CLI::App *, ExperimentKind>> subs;
    for (const auto &[kind, help] : kinds) {
        auto *sub = app.add_subcommand(kind_name(kind), help);
        add_common(sub, common, true);
        subs.emplace_back(sub, kind);
    }
    auto *plot = app.add_subcommand("plot", "Render a curve, profile or rate CSV as SVG");
    add_common(plot, common, true);
    std::vector<int> criteria;
    auto *reproduce = app.add_subcommand("reproduce-paper", "Run the desk-scale acceptance suite end to end");
    add_common(reproduce, common, false);
    reproduce->add_option("--criterion", criteria, "Subset of criteria (default all)")
        ->check(CLI::Range(1, criterion_count));

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        for (const auto &[sub, kind] : subs) {
            if (sub->parsed()) {
                return run_kind(kind, common);
            }
        }
        if (plot->parsed()) {
            return run_plot(common);
        }
        if (criteria.empty()) {
            for (int i = 1; i <= criterion_count; ++i) {
                criteria.push_back(i);
            }
        }
        return run_reproduce(common, criteria);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_validation;
    } catch (const PlotError &e) {
        std::cerr << "plot error: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::invalid_argument &e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
}
