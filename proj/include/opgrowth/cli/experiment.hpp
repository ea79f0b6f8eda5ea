#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "opgrowth/cli/config.hpp"

namespace opgrowth::cli {

inline constexpr const char *tool_version = "1.0.0";

struct OutputRecord {
    std::string file;
    std::string sha256;
    std::size_t bytes = 0;
};

struct SeedRecord {
    std::string stream;
    std::uint64_t seed = 0;
};

struct RunManifest {
    std::string command;
    std::string config_text;
    std::size_t workers = 1;
    double wall_clock_seconds = 0.0;
    std::vector<OutputRecord> outputs;
    std::vector<SeedRecord> seeds;
};

/// Collects output files under one directory and records their checksums.
class OutputDir {
  public:
    explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {}
    const std::filesystem::path &root() const noexcept { return root_; }
    /// Writes `content` to root/name and records it.
    void write(const std::string &name, const std::string &content);
    /// Records a file already present under root.
    void record(const std::string &name);
    const std::vector<OutputRecord> &records() const noexcept { return records_; }

  private:
    std::filesystem::path root_;
    std::vector<OutputRecord> records_;
};

/// Runs the pipeline of `config.kind`, writing CSV, JSON and SVG files into
/// `out_dir`. Outputs depend only on the config, never on `workers`.
RunManifest run_experiment(const ExperimentConfig &config, const std::filesystem::path &out_dir, std::size_t workers);

std::string manifest_json(const RunManifest &manifest);

}  // namespace opgrowth::cli
