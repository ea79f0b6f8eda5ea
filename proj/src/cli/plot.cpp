#include "opgrowth/cli/plot.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "opgrowth/cli/config.hpp"
#include "opgrowth/cli/output.hpp"

namespace opgrowth::cli {

namespace {

constexpr double width = 640, height = 420;
constexpr double left = 70, right = 160, top = 40, bottom = 50;

const std::array<const char *, 8> palette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                             "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"};

std::string num(double x) {
    std::array<char, 32> buf{};
    auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::fixed, 2);
    std::string s(buf.data(), r.ptr);
    return s == "-0.00" ? "0.00" : s;
}

std::string tick_label(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

std::string escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
};

double axis_value(double v, Scale s) { return s == Scale::log ? std::log10(v) : v; }

Range padded(Range r) {
    if (!(r.hi > r.lo)) {
        const double pad = r.lo == 0.0 ? 1.0 : std::abs(r.lo) * 0.1;
        return {r.lo - pad, r.hi + pad};
    }
    return r;
}

std::vector<double> ticks(Range r, Scale s) {
    std::vector<double> out;
    if (s == Scale::log) {
        for (double e = std::ceil(r.lo); e <= std::floor(r.hi) + 1e-12; e += 1.0) {
            out.push_back(e);
        }
        if (out.empty()) {
            out = {r.lo, r.hi};
        }
        return out;
    }
    const double span = r.hi - r.lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-9 * span; t += step) {
        out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    }
    return out;
}

std::vector<std::vector<std::string>> read_rows(const std::string &text, std::string &header) {
    std::istringstream is(text);
    if (!std::getline(is, header)) {
        throw PlotError("empty CSV");
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

double cell(const std::vector<std::vector<std::string>> &rows, std::size_t row, std::size_t col) {
    if (col >= rows[row].size()) {
        throw PlotError("row " + std::to_string(row + 1) + ": missing column " + std::to_string(col + 1));
    }
    const auto &s = rows[row][col];
    double x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw PlotError("row " + std::to_string(row + 1) + ": '" + s + "' is not a number");
    }
    return x;
}

void require_positive(double v, Scale s, std::size_t row, const char *axis) {
    if (s == Scale::log && !(v > 0)) {
        throw PlotError("row " + std::to_string(row + 1) + ": non-positive " + axis + " value " + tick_label(v) +
                        " on a log axis");
    }
}

Scale parse_scale(const std::string &key, const std::string &v) {
    if (v == "linear") {
        return Scale::linear;
    }
    if (v == "log") {
        return Scale::log;
    }
    throw ConfigError("invalid value for '" + key + "': '" + v + "' (expected linear or log)");
}

}  // namespace

std::string render_svg(const std::vector<Series> &series, const Axes &axes) {
    Range xr, yr;
    for (const auto &s : series) {
        if (s.x.size() != s.y.size()) {
            throw PlotError("series '" + s.label + "' has mismatched x and y lengths");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (axes.x_scale == Scale::log && !(s.x[i] > 0)) {
                throw PlotError("series '" + s.label + "' point " + std::to_string(i + 1) +
                                ": non-positive x on a log axis");
            }
            if (axes.y_scale == Scale::log && !(s.y[i] > 0)) {
                throw PlotError("series '" + s.label + "' point " + std::to_string(i + 1) +
                                ": non-positive y on a log axis");
            }
            const double x = axis_value(s.x[i], axes.x_scale), y = axis_value(s.y[i], axes.y_scale);
            xr = {std::min(xr.lo, x), std::max(xr.hi, x)};
            yr = {std::min(yr.lo, y), std::max(yr.hi, y)};
        }
    }
    if (!std::isfinite(xr.lo)) {
        xr = {0, 1};
        yr = {0, 1};
    }
    xr = padded(xr);
    yr = padded(yr);
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double x) { return left + (axis_value(x, axes.x_scale) - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return top + ph - (axis_value(y, axes.y_scale) - yr.lo) / (yr.hi - yr.lo) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
       << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height) << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"20.00\" text-anchor=\"middle\" font-size=\"13\">"
       << escape(axes.title) << "</text>\n";
    const double x0 = left, y0 = top + ph;
    os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0 + pw) << "\" y2=\"" << num(y0)
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(top) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(y0)
       << "\" stroke=\"black\"/>\n";
    for (double t : ticks(xr, axes.x_scale)) {
        const double x = left + (t - xr.lo) / (xr.hi - xr.lo) * pw;
        const double label = axes.x_scale == Scale::log ? std::pow(10.0, t) : t;
        os << "<line x1=\"" << num(x) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x) << "\" y2=\"" << num(y0 + 5)
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(x) << "\" y=\"" << num(y0 + 18) << "\" text-anchor=\"middle\">"
           << escape(tick_label(label)) << "</text>\n";
    }
    for (double t : ticks(yr, axes.y_scale)) {
        const double y = top + ph - (t - yr.lo) / (yr.hi - yr.lo) * ph;
        const double label = axes.y_scale == Scale::log ? std::pow(10.0, t) : t;
        os << "<line x1=\"" << num(x0 - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(y)
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
           << escape(tick_label(label)) << "</text>\n";
    }
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 10) << "\" text-anchor=\"middle\">"
       << escape(axes.x_label) << (axes.x_scale == Scale::log ? " (log)" : "") << "</text>\n";
    os << "<text x=\"15.00\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 15.00 "
       << num(top + ph / 2) << ")\">" << escape(axes.y_label) << (axes.y_scale == Scale::log ? " (log)" : "")
       << "</text>\n";
    std::size_t legend = 0;
    for (std::size_t s = 0; s < series.size(); ++s) {
        if (series[s].x.empty()) {
            continue;
        }
        const char *colour = palette[s % palette.size()];
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            os << (i ? " " : "") << num(px(series[s].x[i])) << ',' << num(py(series[s].y[i]));
        }
        os << "\"/>\n";
        if (legend < 20) {
            const double ly = top + 10 + 16 * static_cast<double>(legend);
            const double lx = width - right + 15;
            os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 20) << "\" y2=\""
               << num(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << num(lx + 25) << "\" y=\"" << num(ly + 4) << "\">" << escape(series[s].label)
               << "</text>\n";
        }
        ++legend;
    }
    os << "</svg>\n";
    return os.str();
}

CsvSchema detect_schema(const std::string &header) {
    std::string h = header;
    if (!h.empty() && h.back() == '\r') {
        h.pop_back();
    }
    if (h == "t,value,stderr,n_samples") {
        return CsvSchema::curve;
    }
    if (h == "t,r,value,stderr") {
        return CsvSchema::profile;
    }
    if (h == "density,rate,stderr") {
        return CsvSchema::rates;
    }
    throw PlotError("unrecognised CSV header '" + h + "'");
}

std::string emit_plot(const PlotRequest &req) {
    std::string header;
    auto rows = read_rows(read_text(req.input), header);
    const CsvSchema schema = detect_schema(header);
    Axes axes;
    std::vector<Series> series;
    const std::string name = req.input.filename().string();
    switch (schema) {
    case CsvSchema::curve: {
        axes = {name, "t", "C(t)", Scale::linear, Scale::log};
        break;
    }
    case CsvSchema::profile: {
        axes = {name, req.velocity != 0.0 ? "r - v t" : "r", "C(r, t)", Scale::linear, Scale::linear};
        break;
    }
    case CsvSchema::rates: {
        axes = {name, "density", "rate", Scale::log, Scale::log};
        break;
    }
    }
    if (req.title) {
        axes.title = *req.title;
    }
    if (req.x_scale) {
        axes.x_scale = *req.x_scale;
    }
    if (req.y_scale) {
        axes.y_scale = *req.y_scale;
    }
    if (schema == CsvSchema::profile) {
        std::map<double, Series> slices;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double t = cell(rows, i, 0), r = cell(rows, i, 1), v = cell(rows, i, 2) + req.y_offset;
            const double x = r - req.velocity * t;
            require_positive(x, axes.x_scale, i, "x");
            require_positive(v, axes.y_scale, i, "y");
            if (t <= 0) {
                continue;
            }
            auto &s = slices[t];
            s.label = "t=" + tick_label(t);
            s.x.push_back(x);
            s.y.push_back(v);
        }
        for (auto &[t, s] : slices) {
            series.push_back(std::move(s));
        }
    } else {
        Series s;
        s.label = schema == CsvSchema::curve ? "C(t)" : "rate";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double x = cell(rows, i, 0), v = cell(rows, i, 1) + req.y_offset;
            require_positive(x, axes.x_scale, i, "x");
            require_positive(v, axes.y_scale, i, "y");
            s.x.push_back(x);
            s.y.push_back(v);
        }
        series.push_back(std::move(s));
    }
    return render_svg(series, axes);
}

std::pair<PlotRequest, std::filesystem::path> parse_plot_config(const std::string &text,
                                                                const std::filesystem::path &base_dir) {
    PlotRequest req;
    std::filesystem::path output;
    std::vector<std::string> unknown;
    for (const auto &[k, v] : parse_key_values(text)) {
        if (k == "input") {
            std::filesystem::path p(v);
            req.input = p.is_absolute() ? p : base_dir / p;
        } else if (k == "output") {
            output = v;
        } else if (k == "title") {
            req.title = v;
        } else if (k == "x_scale") {
            req.x_scale = parse_scale(k, v);
        } else if (k == "y_scale") {
            req.y_scale = parse_scale(k, v);
        } else if (k == "y_offset" || k == "velocity") {
            double x = 0;
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
            if (v.empty() || ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
                throw ConfigError("invalid value for '" + k + "': '" + v + "' (expected a finite number)");
            }
            (k == "velocity" ? req.velocity : req.y_offset) = x;
        } else {
            unknown.push_back(k);
        }
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto &k : unknown) {
            list += (list.empty() ? "'" : ", '") + k + "'";
        }
        throw ConfigError("unknown key" + std::string(unknown.size() > 1 ? "s " : " ") + list + " for plot");
    }
    if (req.input.empty()) {
        throw ConfigError("missing key 'input'");
    }
    if (output.empty()) {
        output = req.input.stem().string() + ".svg";
    }
    return {req, output};
}

}  // namespace opgrowth::cli
