#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace opgrowth::cli {

/// Unplottable input: schema mismatch or a non-positive value on a log axis.
class PlotError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Scale { linear, log };

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Axes {
    std::string title;
    std::string x_label = "x";
    std::string y_label = "y";
    Scale x_scale = Scale::linear;
    Scale y_scale = Scale::linear;
};

/// Self-contained SVG. Each series with at least one point is one <polyline>;
/// axes, ticks and legend swatches use <line> and <text> only. Throws
/// PlotError if a log axis meets a non-positive coordinate.
std::string render_svg(const std::vector<Series> &series, const Axes &axes);

enum class CsvSchema { curve, profile, rates };

/// Schema from the header line: t,value,stderr,n_samples / t,r,value,stderr /
/// density,rate,stderr. Throws PlotError otherwise.
CsvSchema detect_schema(const std::string &header);

struct PlotRequest {
    std::filesystem::path input;
    std::optional<std::string> title;
    std::optional<Scale> x_scale;
    std::optional<Scale> y_scale;
    /// Added to every value before plotting.
    double y_offset = 0.0;
    /// Profile schema: slices are drawn against r - velocity * t.
    double velocity = 0.0;
};

/// Reads the CSV, builds series for its schema and renders them. Curves plot
/// value(t); profiles one series per t > 0; rates log-log rate(density).
/// A non-positive value on a log axis is reported with its 1-based data row.
std::string emit_plot(const PlotRequest &request);

/// Parses a plot config (`input`, `output`, `title`, `x_scale`, `y_scale`,
/// `y_offset`, `velocity`); relative inputs resolve against `base_dir`.
/// Returns the request and the output file name.
std::pair<PlotRequest, std::filesystem::path> parse_plot_config(const std::string &text,
                                                                const std::filesystem::path &base_dir);

}  // namespace opgrowth::cli
