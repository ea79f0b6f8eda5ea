#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace opgrowth::cli {

struct CriterionOptions {
    std::uint64_t seed = 20240601;
    std::size_t workers = 1;
    /// When set, curves, profiles and reports are written here.
    std::optional<std::filesystem::path> out_dir;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    /// One-line human summary: measured values against pinned targets.
    std::string summary;
    /// Full report as a JSON document.
    std::string report_json;
    std::vector<std::filesystem::path> files;
};

constexpr int criterion_count = 10;

/// Runs acceptance criterion `id` (1..10). Throws std::out_of_range otherwise.
CriterionResult run_criterion(int id, const CriterionOptions &options);

/// "PASS criterion <id> <name>: <summary>" or the FAIL form.
std::string format_line(const CriterionResult &r);

}  // namespace opgrowth::cli
