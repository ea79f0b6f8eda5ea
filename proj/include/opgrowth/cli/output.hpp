#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "opgrowth/observables/observables.hpp"

namespace opgrowth::cli {

/// Writes `content` to `path`, creating parent directories. Throws
/// std::runtime_error on I/O failure.
void write_text(const std::filesystem::path &path, std::string_view content);
std::string read_text(const std::filesystem::path &path);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

std::string curve_csv(const CurveEstimate &curve);
std::string profile_csv(const Profile &profile);

/// "0.02" style tag for file names.
std::string density_tag(double density);

}  // namespace opgrowth::cli
