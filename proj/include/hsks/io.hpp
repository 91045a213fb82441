#pragma once
// Config parsing, CSV/JSON/SVG emission and output manifests.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bifurcation.hpp"
#include "geometry.hpp"
#include "simulator.hpp"

namespace hsks {

inline constexpr const char* kToolkitVersion = "0.3.0";

// ---------------------------------------------------------------------------------------------
// Flat key-path config.
//
//   # comment
//   preset = "fig2"
//   [params]
//   zeta = 2.1          -> params.zeta
//   grid.n_r = 64       -> dotted keys work at top level too
//
// Values are numbers, true/false, quoted strings or bare words. Keys are checked against a fixed set.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys = {
        "preset",          "params.zeta",       "params.gamma",  "params.p_h",    "params.k_e",
        "params.m0",       "grid.n_r",          "grid.n_phi",    "time.dt",       "time.t_end",
        "time.sample_every", "init.kind",       "init.amplitude", "init.mode",    "init.radius",
        "init.velocity",   "events.tol_converge", "events.blowup_tol"};
    return keys;
}

class FlatConfig {
public:
    static FlatConfig parse(std::string_view text, const std::string& source = "<config>") {
        FlatConfig cfg;
        std::string section;
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t end = std::min(text.find('\n', pos), text.size());
            std::string_view line = text.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            auto fail = [&](const std::string& what) {
                return ConfigError(source + ":" + std::to_string(line_no) + ": " + what);
            };
            line = trim(strip_comment(line));
            if (line.empty()) {
                if (end == text.size()) break;
                continue;
            }
            if (line.front() == '[') {
                if (line.back() != ']') throw fail("unterminated section header");
                section = std::string(trim(line.substr(1, line.size() - 2)));
                if (!valid_key(section)) throw fail("bad section name '" + section + "'");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw fail("expected 'key = value'");
            const std::string key(trim(line.substr(0, eq)));
            if (!valid_key(key)) throw fail("bad key '" + key + "'");
            const std::string full = section.empty() ? key : section + "." + key;
            if (!config_keys().count(full)) throw fail("unknown key '" + full + "'");
            if (cfg.values_.count(full)) throw fail("duplicate key '" + full + "'");
            std::string value(trim(line.substr(eq + 1)));
            if (value.empty()) throw fail("missing value for '" + full + "'");
            if (value.front() == '"') {
                if (value.size() < 2 || value.back() != '"') throw fail("unterminated string");
                value = value.substr(1, value.size() - 2);
                if (value.find('"') != std::string::npos) throw fail("embedded quote in string");
            } else if (value.find_first_of(" \t") != std::string::npos) {
                throw fail("unquoted value contains whitespace");
            }
            cfg.values_[full] = {value, line_no};
            if (end == text.size()) break;
        }
        cfg.source_ = source;
        return cfg;
    }

    static FlatConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError(path.string() + ": cannot open");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.string());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string text(const std::string& key, const std::string& fallback = "") const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second.first;
    }

    double number(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const auto& s = it->second.first;
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
            throw ConfigError(source_ + ":" + std::to_string(it->second.second) + ": '" + key + "' is not a number: " + s);
        return v;
    }

    int integer(const std::string& key, int fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const auto& s = it->second.first;
        int v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size())
            throw ConfigError(source_ + ":" + std::to_string(it->second.second) + ": '" + key + "' is not an integer: " + s);
        return v;
    }

    void set(const std::string& key, const std::string& value) {
        if (!config_keys().count(key)) throw ConfigError("unknown key '" + key + "'");
        values_[key] = {value, 0};
    }

    /// Sorted key=value lines; the input to the config hash.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + "=" + v.first + "\n";
        return out;
    }

private:
    static std::string_view trim(std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }
    static std::string_view strip_comment(std::string_view s) {
        bool quoted = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') quoted = !quoted;
            if (s[i] == '#' && !quoted) return s.substr(0, i);
        }
        return s;
    }
    static bool valid_key(std::string_view k) {
        if (k.empty() || k.front() == '.' || k.back() == '.') return false;
        return std::all_of(k.begin(), k.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; });
    }

    std::map<std::string, std::pair<std::string, int>> values_;
    std::string source_ = "<config>";
};

inline std::optional<FigurePreset> preset_by_name(const std::string& name) {
    if (name == "fig1") return fig1_preset();
    if (name == "fig2") return fig2_preset();
    return std::nullopt;
}

/// Resolves a config into simulation settings. A preset supplies the parameters at its critical radius;
/// params.m0 re-tunes p_h so the steady disk at init.radius carries that density.
inline SimConfig sim_config(const FlatConfig& c) {
    SimConfig s;
    double m0 = c.number("params.m0", 0.0);
    if (c.has("preset")) {
        const auto pr = preset_by_name(c.text("preset"));
        if (!pr) throw ConfigError("unknown preset '" + c.text("preset") + "'");
        s.params = pr->params();
        s.radius = pr->critical_R();
        if (!c.has("params.m0")) m0 = pr->m0;
    }
    s.params.zeta = c.number("params.zeta", s.params.zeta);
    s.params.gamma = c.number("params.gamma", s.params.gamma);
    s.params.p_h = c.number("params.p_h", s.params.p_h);
    s.params.k_e = c.number("params.k_e", s.params.k_e);
    s.radius = c.number("init.radius", s.radius);
    if (c.has("params.m0") || (c.has("preset") && c.has("init.radius"))) {
        if (c.has("params.p_h")) throw ConfigError("params.p_h and params.m0 are mutually exclusive");
        s.params = params_for_density(m0, s.params.zeta, s.params.gamma, s.radius, s.params.k_e);
    }
    s.n_r = c.integer("grid.n_r", s.n_r);
    s.n_phi = c.integer("grid.n_phi", s.n_phi);
    s.dt = c.number("time.dt", s.dt);
    s.t_end = c.number("time.t_end", s.t_end);
    s.sample_every = c.integer("time.sample_every", s.sample_every);
    const auto kind = c.text("init.kind", "steady");
    if (kind == "steady") s.init = InitKind::Steady;
    else if (kind == "perturbed") s.init = InitKind::Perturbed;
    else if (kind == "tw_seed") s.init = InitKind::TwSeed;
    else throw ConfigError("init.kind must be steady, perturbed or tw_seed (got '" + kind + "')");
    s.amplitude = c.number("init.amplitude", s.amplitude);
    s.mode = c.integer("init.mode", s.mode);
    s.velocity = c.number("init.velocity", s.velocity);
    s.tol_converge = c.number("events.tol_converge", s.tol_converge);
    s.blowup_tol = c.number("events.blowup_tol", s.blowup_tol);
    try {
        s.params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (s.n_r < 4 || s.n_phi < 8 || s.n_phi % 2) throw ConfigError("grid: need n_r >= 4 and even n_phi >= 8");
    if (!(s.dt > 0.0) || !(s.t_end >= 0.0) || s.sample_every < 1) throw ConfigError("time: need dt > 0, t_end >= 0, sample_every >= 1");
    if (!(s.radius > 0.0)) throw ConfigError("init.radius must be positive");
    return s;
}

// ---------------------------------------------------------------------------------------------
// Hashing and number formatting

/// FNV-1a 64-bit, as 16 hex digits.
inline std::string config_hash(std::string_view text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Shortest round-trip form, locale-independent.
inline std::string format_number(double v) {
    std::array<char, 32> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
    return std::string(buf.data(), p);
}

// ---------------------------------------------------------------------------------------------
// Tables

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row) {
        if (row.size() != header.size()) throw std::invalid_argument("Table: row width does not match header");
        rows.push_back(std::move(row));
    }

    std::string csv() const {
        std::string out;
        for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + header[k];
        out += "\n";
        for (const auto& r : rows) {
            for (std::size_t k = 0; k < r.size(); ++k) out += (k ? "," : "") + format_number(r[k]);
            out += "\n";
        }
        return out;
    }

    nlohmann::json json() const {
        nlohmann::json j = nlohmann::json::object();
        for (std::size_t k = 0; k < header.size(); ++k) {
            auto col = nlohmann::json::array();
            for (const auto& r : rows) col.push_back(r[k]);
            j[header[k]] = std::move(col);
        }
        return j;
    }
};

/// Parses CSV produced by Table::csv.
inline Table parse_csv(std::string_view text) {
    Table t;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("parse_csv: empty input");
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream rs(line);
        for (std::string cell; std::getline(rs, cell, ',');) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || p != cell.data() + cell.size()) throw std::invalid_argument("parse_csv: bad cell " + cell);
            row.push_back(v);
        }
        t.add(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------------------------
// Minimal SVG: polylines, filled circles and a colour-bar legend.

struct Rgb {
    int r, g, b;
    std::string hex() const {
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
        return buf;
    }
};

/// Piecewise-linear blue-to-yellow map on t in [0, 1].
inline Rgb colormap(double t) {
    static constexpr std::array<std::array<double, 3>, 5> stops = {{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (stops.size() - 1);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
    const double f = t - k;
    auto mix = [&](int c) { return static_cast<int>(std::lround(stops[k][c] * (1 - f) + stops[k + 1][c] * f)); };
    return {mix(0), mix(1), mix(2)};
}

class SvgPlot {
public:
    SvgPlot(double xmin, double xmax, double ymin, double ymax, int width = 480, int height = 480)
        : x0_(xmin), x1_(xmax), y0_(ymin), y1_(ymax), w_(width), h_(height) {
        if (!(xmax > xmin) || !(ymax > ymin)) throw std::invalid_argument("SvgPlot: empty data window");
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width = 1.5,
                  bool closed = false) {
        std::string d;
        for (const auto& [x, y] : pts) d += fmt(px(x)) + "," + fmt(py(y)) + " ";
        if (closed && !pts.empty()) d += fmt(px(pts.front().first)) + "," + fmt(py(pts.front().second));
        body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) + "\" points=\"" + d + "\"/>\n";
    }

    void circle(double x, double y, double radius_px, const std::string& fill) {
        body_ += "<circle cx=\"" + fmt(px(x)) + "\" cy=\"" + fmt(py(y)) + "\" r=\"" + fmt(radius_px) + "\" fill=\"" + fill + "\"/>\n";
    }

    void label(double x, double y, const std::string& text) {
        body_ += "<text x=\"" + fmt(px(x)) + "\" y=\"" + fmt(py(y)) + "\" font-size=\"12\" font-family=\"sans-serif\">" + text + "</text>\n";
    }

    /// Vertical colour bar along the right margin.
    void legend(double lo, double hi, const std::string& title) {
        legend_ = true;
        const int steps = 32, top = 30, height = h_ - 60, x = w_ + 20;
        for (int k = 0; k < steps; ++k) {
            const double t = 1.0 - (k + 0.5) / steps;
            legend_body_ += "<rect x=\"" + std::to_string(x) + "\" y=\"" + fmt(top + k * double(height) / steps) + "\" width=\"16\" height=\"" +
                            fmt(double(height) / steps + 0.5) + "\" fill=\"" + colormap(t).hex() + "\"/>\n";
        }
        auto text = [&](double y, const std::string& s) {
            legend_body_ += "<text x=\"" + std::to_string(x + 20) + "\" y=\"" + fmt(y) + "\" font-size=\"11\" font-family=\"sans-serif\">" + s + "</text>\n";
        };
        text(top + 4, short_number(hi));
        text(top + height + 4, short_number(lo));
        text(top - 10, title);
    }

    std::string str() const {
        const int total_w = w_ + (legend_ ? 90 : 0);
        return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(total_w) + "\" height=\"" + std::to_string(h_) +
               "\" viewBox=\"0 0 " + std::to_string(total_w) + " " + std::to_string(h_) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
               body_ + legend_body_ + "</svg>\n";
    }

private:
    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return buf;
    }
    static std::string short_number(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return buf;
    }
    double px(double x) const { return 20.0 + (x - x0_) / (x1_ - x0_) * (w_ - 40); }
    double py(double y) const { return h_ - 20.0 - (y - y0_) / (y1_ - y0_) * (h_ - 40); }

    double x0_, x1_, y0_, y1_;
    int w_, h_;
    bool legend_ = false;
    std::string body_, legend_body_;
};

// ---------------------------------------------------------------------------------------------
// Shape and field export

/// Boundary polyline of a shape offset by its centre.
inline std::vector<std::pair<double, double>> boundary_points(const BoundaryShape& shape, int n = 256) {
    std::vector<std::pair<double, double>> pts(n);
    for (int j = 0; j < n; ++j) {
        const double ph = 2.0 * kPi * j / n, a = shape.R + shape.rho(ph);
        pts[j] = {shape.Xc + a * std::cos(ph), a * std::sin(ph)};
    }
    return pts;
}

/// One row per reference node: physical position and field values; then the boundary with on_boundary = 1.
inline Table shape_field_table(const BoundaryShape& shape, MapKind kind, const std::vector<std::pair<std::string, const PolarField*>>& fields,
                               const std::vector<double>& boundary_values = {}) {
    Table t;
    t.header = {"x", "y"};
    for (const auto& f : fields) t.header.push_back(f.first);
    t.header.push_back("on_boundary");
    if (fields.empty()) throw std::invalid_argument("shape_field_table: no fields");
    const auto& ref = *fields.front().second;
    for (int i = 0; i < ref.n_r(); ++i)
        for (int j = 0; j < ref.n_phi; ++j) {
            const auto [x, y] = boundary_map(shape, 1.0, ref.grid.node(i), ref.phi(j), kind);
            std::vector<double> row{shape.Xc + x, y};
            for (const auto& f : fields) row.push_back(f.second->at(i, j));
            row.push_back(0.0);
            t.add(std::move(row));
        }
    const int nb = static_cast<int>(boundary_values.size());
    for (int j = 0; j < nb; ++j) {
        const double ph = 2.0 * kPi * j / nb, a = shape.R + shape.rho(ph);
        std::vector<double> row{shape.Xc + a * std::cos(ph), a * std::sin(ph), boundary_values[j]};
        row.resize(t.header.size() - 1, std::nan(""));
        row.push_back(1.0);
        t.add(std::move(row));
    }
    return t;
}

/// Field as coloured dots inside the boundary polyline, with a colour bar.
inline std::string shape_field_svg(const BoundaryShape& shape, MapKind kind, const PolarField& field, const std::string& title) {
    const auto outline = boundary_points(shape);
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& [x, y] : outline) {
        xmin = std::min(xmin, x), xmax = std::max(xmax, x), ymin = std::min(ymin, y), ymax = std::max(ymax, y);
    }
    const double span = 1.05 * std::max(xmax - xmin, ymax - ymin) / 2.0;
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    SvgPlot plot(cx - span, cx + span, cy - span, cy + span);
    const auto [lo_it, hi_it] = std::minmax_element(field.values.begin(), field.values.end());
    const double lo = *lo_it, hi = *hi_it, range = hi > lo ? hi - lo : 1.0;
    for (int i = 0; i < field.n_r(); ++i)
        for (int j = 0; j < field.n_phi; ++j) {
            const auto [x, y] = boundary_map(shape, 1.0, field.grid.node(i), field.phi(j), kind);
            plot.circle(shape.Xc + x, y, 2.5, colormap((field.at(i, j) - lo) / range).hex());
        }
    plot.polyline(outline, "black", 1.5, true);
    plot.legend(lo, hi, title);
    return plot.str();
}

/// Line chart of several series sharing an x column.
inline std::string line_chart_svg(const Table& t, const std::string& x_col, const std::vector<std::string>& y_cols) {
    auto col = [&](const std::string& name) {
        auto it = std::find(t.header.begin(), t.header.end(), name);
        if (it == t.header.end()) throw std::invalid_argument("line_chart_svg: no column " + name);
        return static_cast<std::size_t>(it - t.header.begin());
    };
    if (t.rows.size() < 2) throw std::invalid_argument("line_chart_svg: need at least two rows");
    const auto xi = col(x_col);
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& r : t.rows) {
        xmin = std::min(xmin, r[xi]), xmax = std::max(xmax, r[xi]);
        for (const auto& y : y_cols) {
            const double v = r[col(y)];
            if (std::isfinite(v)) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
        }
    }
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const double pad = 0.05 * (ymax - ymin);
    SvgPlot plot(xmin, xmax, ymin - pad, ymax + pad, 560, 400);
    static const std::array<const char*, 4> colours = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    for (std::size_t k = 0; k < y_cols.size(); ++k) {
        std::vector<std::pair<double, double>> pts;
        const auto yi = col(y_cols[k]);
        for (const auto& r : t.rows)
            if (std::isfinite(r[yi])) pts.emplace_back(r[xi], r[yi]);
        plot.polyline(pts, colours[k % colours.size()]);
        plot.label(xmin + 0.02 * (xmax - xmin), ymax - (0.06 * k) * (ymax - ymin), y_cols[k]);
    }
    return plot.str();
}

// ---------------------------------------------------------------------------------------------
// Output directory with a manifest

class OutputDir {
public:
    OutputDir(std::filesystem::path dir, std::string command, std::string hash)
        : dir_(std::move(dir)), command_(std::move(command)), hash_(std::move(hash)) {
        std::filesystem::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& content) {
        const auto path = dir_ / name;
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << content;
        files_.insert(name);
    }

    void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

    /// Writes manifest.json: one entry per file with the config hash and toolkit version.
    void finish() {
        nlohmann::json m;
        m["command"] = command_;
        m["config_hash"] = hash_;
        m["toolkit_version"] = kToolkitVersion;
        auto files = nlohmann::json::array();
        for (const auto& f : files_) files.push_back({{"file", f}, {"config_hash", hash_}, {"toolkit_version", kToolkitVersion}});
        m["files"] = files;
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << m.dump(2) << "\n";
    }

    const std::filesystem::path& path() const { return dir_; }
    const std::string& hash() const { return hash_; }

private:
    std::filesystem::path dir_;
    std::string command_, hash_;
    std::set<std::string> files_;
};

}  // namespace hsks
