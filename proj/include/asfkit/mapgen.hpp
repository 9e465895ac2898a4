#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "delaunay.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "kriging.hpp"
#include "spline.hpp"
#include "survey.hpp"
#include "text.hpp"
#include "variogram.hpp"

namespace asfkit {

enum class map_method { linear, uk, rk, truth };

inline std::string to_string(map_method m)
{
    switch (m) {
    case map_method::linear: return "linear";
    case map_method::uk: return "uk";
    case map_method::rk: return "rk";
    case map_method::truth: return "truth";
    }
    return "?";
}

inline map_method parse_map_method(std::string_view s)
{
    if (s == "linear") return map_method::linear;
    if (s == "uk") return map_method::uk;
    if (s == "rk") return map_method::rk;
    if (s == "truth") return map_method::truth;
    throw validation_error("unknown map method '" + std::string(s) + "'");
}

/// Regular grid aligned with the waterway: rows advance along track,
/// columns across. Node (i, j) sits at origin + i*spacing*along + j*spacing*cross.
struct grid_spec {
    vec2 origin = vec2::Zero();
    double heading_deg = 0.0;
    double spacing = 100.0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    waterway_frame axes() const { return waterway_frame::from_heading(origin, heading_deg); }

    vec2 node(std::size_t i, std::size_t j) const
    {
        const auto f = axes();
        return origin + (static_cast<double>(i) * spacing) * f.along_unit + (static_cast<double>(j) * spacing) * f.cross_unit;
    }

    void validate() const
    {
        if (!(spacing > 0.0)) throw validation_error("grid spacing must be positive");
        if (rows == 0 || cols == 0) throw validation_error("grid must have at least one row and column");
    }
};

/// Grid covering along-track [0, length] and the cross-track span
/// [-n*spacing, +n*spacing] with n = floor(half_width / spacing), so the
/// centerline is always a grid column.
inline grid_spec make_grid(const waterway_frame& frame, double length, double half_width, double spacing = 100.0)
{
    if (!(spacing > 0.0)) throw validation_error("grid spacing must be positive");
    if (!(length >= 0.0) || !(half_width > 0.0)) throw validation_error("waterway extent must be positive");
    const auto n_cross = static_cast<std::size_t>(std::floor(half_width / spacing + 1e-9));
    grid_spec g;
    g.spacing = spacing;
    g.heading_deg = frame.heading_deg();
    g.rows = static_cast<std::size_t>(std::floor(length / spacing + 1e-9)) + 1;
    g.cols = 2 * n_cross + 1;
    g.origin = to_global(frame, {0.0, -static_cast<double>(n_cross) * spacing});
    return g;
}

struct asf_map {
    std::string tx;
    grid_spec grid;
    map_method method = map_method::linear;
    std::vector<double> values; ///< row-major, µs
    std::vector<char> mask;     ///< 1 = valid node, 0 = extrapolated

    double& at(std::size_t i, std::size_t j) { return values[i * grid.cols + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * grid.cols + j]; }
    bool valid(std::size_t i, std::size_t j) const { return mask[i * grid.cols + j] != 0; }

    static asf_map blank(std::string tx, const grid_spec& grid, map_method method)
    {
        grid.validate();
        asf_map m;
        m.tx = std::move(tx);
        m.grid = grid;
        m.method = method;
        m.values.assign(grid.rows * grid.cols, 0.0);
        m.mask.assign(grid.rows * grid.cols, 1);
        return m;
    }
};

/// Delaunay + barycentric interpolation of survey ASF. Nodes outside the
/// hull take the nearest survey value and are masked as extrapolated.
inline asf_map build_map_linear(const survey_track& track, const grid_spec& grid, const std::string& tx)
{
    std::vector<vec2> raw_xy;
    std::vector<double> raw_v;
    for (const auto& m : track.measurements) {
        const auto it = m.asf.find(tx);
        if (it == m.asf.end()) throw validation_error("track has no ASF for transmitter " + tx);
        raw_xy.push_back(m.pos);
        raw_v.push_back(it->second);
    }
    if (raw_xy.size() < 3) throw validation_error("linear map needs at least 3 survey points");

    std::vector<vec2> xy;
    std::vector<double> v;
    for (const auto& c : detail::coincident_clusters(raw_xy, 0.01)) {
        vec2 p = vec2::Zero();
        double a = 0.0;
        for (std::size_t i : c) {
            p += raw_xy[i];
            a += raw_v[i];
        }
        xy.push_back(p / static_cast<double>(c.size()));
        v.push_back(a / static_cast<double>(c.size()));
    }
    const linear_interpolator interp(std::move(xy), std::move(v));

    auto map = asf_map::blank(tx, grid, map_method::linear);
    for (std::size_t i = 0; i < grid.rows; ++i)
        for (std::size_t j = 0; j < grid.cols; ++j) {
            const vec2 q = grid.node(i, j);
            if (const auto val = interp.interpolate(q)) {
                map.at(i, j) = *val;
            } else {
                map.at(i, j) = interp.nearest(q);
                map.mask[i * grid.cols + j] = 0;
            }
        }
    return map;
}

inline asf_map build_map_rk(const detrended_survey& survey, const variogram_model& model, const waterway_frame& frame,
    const grid_spec& grid, const std::string& tx, const kriging_options& opt = {})
{
    const regression_kriging_predictor rk(merge_coincident(survey), model, opt);
    auto map = asf_map::blank(tx, grid, map_method::rk);
    for (std::size_t i = 0; i < grid.rows; ++i)
        for (std::size_t j = 0; j < grid.cols; ++j) {
            const vec2 q = grid.node(i, j);
            map.at(i, j) = rk.predict(q, cross_track(frame, q));
        }
    return map;
}

inline asf_map build_map_uk(const detrended_survey& survey, const variogram_model& model, const waterway_frame& frame,
    const grid_spec& grid, const std::string& tx, const kriging_options& opt = {})
{
    const universal_kriging_predictor uk(merge_coincident(survey), model, opt);
    auto map = asf_map::blank(tx, grid, map_method::uk);
    for (std::size_t i = 0; i < grid.rows; ++i)
        for (std::size_t j = 0; j < grid.cols; ++j) {
            const vec2 q = grid.node(i, j);
            map.at(i, j) = uk.predict(q, cross_track(frame, q));
        }
    return map;
}

struct lookup_options {
    /// Positions up to this many cells outside the grid are clamped onto it.
    double clamp_cells = 1.0;
    /// When all four surrounding nodes are masked, use them anyway instead
    /// of failing.
    bool masked_fallback = false;
};

/// Bilinear interpolation of the map at p. Masked (extrapolated) nodes are
/// dropped and the remaining weights renormalized.
inline double lookup_asf(const asf_map& map, const vec2& p, const lookup_options& opt = {})
{
    const auto& g = map.grid;
    const auto axes = g.axes();
    const vec2 d = p - g.origin;
    double u = d.dot(axes.along_unit) / g.spacing;
    double v = d.dot(axes.cross_unit) / g.spacing;
    const double umax = static_cast<double>(g.rows - 1), vmax = static_cast<double>(g.cols - 1);
    if (u < -opt.clamp_cells || u > umax + opt.clamp_cells || v < -opt.clamp_cells || v > vmax + opt.clamp_cells
        || !std::isfinite(u) || !std::isfinite(v))
        throw validation_error("position outside ASF map for transmitter " + map.tx);
    u = std::clamp(u, 0.0, umax);
    v = std::clamp(v, 0.0, vmax);

    const std::size_t i0 = g.rows == 1 ? 0 : std::min(static_cast<std::size_t>(u), g.rows - 2);
    const std::size_t j0 = g.cols == 1 ? 0 : std::min(static_cast<std::size_t>(v), g.cols - 2);
    const std::size_t i1 = std::min(i0 + 1, g.rows - 1), j1 = std::min(j0 + 1, g.cols - 1);
    const double fu = u - static_cast<double>(i0), fv = v - static_cast<double>(j0);

    const std::size_t ii[4] = {i0, i1, i0, i1};
    const std::size_t jj[4] = {j0, j0, j1, j1};
    const double w[4] = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};

    double sum = 0.0, wsum = 0.0, all_sum = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double val = map.at(ii[k], jj[k]);
        all_sum += w[k] * val;
        if (map.valid(ii[k], jj[k]) && w[k] > 0.0) {
            sum += w[k] * val;
            wsum += w[k];
        }
    }
    if (wsum > 0.0) return sum / wsum;
    // Every node with nonzero weight is masked.
    if (opt.masked_fallback) return all_sum;
    throw validation_error("all surrounding ASF map nodes are masked for transmitter " + map.tx);
}

// ---------------------------------------------------------------------------
// Map file
//
// Header lines "key value", then `values` followed by one grid row per line
// (9 significant digits), then `mask` followed by 0/1 rows. Cross-track
// coordinates are positive toward the port side of the heading.

inline std::string format_map(const asf_map& m)
{
    const auto& g = m.grid;
    std::string out = "asfkit-map 1\n";
    out += "tx " + m.tx + "\n";
    out += "method " + to_string(m.method) + "\n";
    out += "origin_east_m " + text::format_exact(g.origin.x()) + "\n";
    out += "origin_north_m " + text::format_exact(g.origin.y()) + "\n";
    out += "spacing_m " + text::format_exact(g.spacing) + "\n";
    out += "heading_deg " + text::format_exact(g.heading_deg) + "\n";
    out += "cross_positive port\n";
    out += "rows " + std::to_string(g.rows) + "\n";
    out += "cols " + std::to_string(g.cols) + "\n";
    out += "values\n";
    for (std::size_t i = 0; i < g.rows; ++i) {
        for (std::size_t j = 0; j < g.cols; ++j) {
            if (j) out += ' ';
            out += text::format_sig(m.at(i, j), 9);
        }
        out += '\n';
    }
    out += "mask\n";
    for (std::size_t i = 0; i < g.rows; ++i) {
        for (std::size_t j = 0; j < g.cols; ++j) {
            if (j) out += ' ';
            out += m.valid(i, j) ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

inline void write_map(const std::string& path, const asf_map& m) { text::write_file(path, format_map(m)); }

inline asf_map parse_map(const std::string& content)
{
    const auto rows = text::lines(content);
    if (rows.empty() || rows[0] != "asfkit-map 1") throw parse_error("not an ASF map file", 1);
    std::size_t line = 1;
    auto header = [&](std::string_view key) -> std::string {
        if (line >= rows.size()) throw parse_error("missing '" + std::string(key) + "'", line + 1);
        const auto f = text::split(rows[line], ' ');
        if (f.size() != 2 || f[0] != key) throw parse_error("expected '" + std::string(key) + " <value>'", line + 1);
        ++line;
        return std::string(f[1]);
    };
    auto number = [&](std::string_view key) {
        const auto s = header(key);
        const auto v = text::parse_double(s);
        if (!v) throw parse_error("bad number for " + std::string(key), line);
        return *v;
    };
    auto count = [&](std::string_view key) {
        const auto s = header(key);
        const auto v = text::parse_int(s);
        if (!v || *v < 1) throw parse_error("bad count for " + std::string(key), line);
        return static_cast<std::size_t>(*v);
    };

    asf_map m;
    m.tx = header("tx");
    m.method = parse_map_method(header("method"));
    m.grid.origin.x() = number("origin_east_m");
    m.grid.origin.y() = number("origin_north_m");
    m.grid.spacing = number("spacing_m");
    m.grid.heading_deg = number("heading_deg");
    if (header("cross_positive") != "port") throw parse_error("unsupported cross-track sign convention", line);
    m.grid.rows = count("rows");
    m.grid.cols = count("cols");
    m.grid.validate();

    auto expect = [&](std::string_view word) {
        if (line >= rows.size() || rows[line] != word) throw parse_error("expected '" + std::string(word) + "'", line + 1);
        ++line;
    };
    auto grid_rows = [&](auto&& sink) {
        for (std::size_t i = 0; i < m.grid.rows; ++i, ++line) {
            if (line >= rows.size()) throw parse_error("truncated grid", line + 1);
            const auto f = text::split(rows[line], ' ');
            if (f.size() != m.grid.cols) throw parse_error("expected " + std::to_string(m.grid.cols) + " values", line + 1);
            for (auto s : f) sink(s);
        }
    };
    expect("values");
    grid_rows([&](std::string_view s) {
        const auto v = text::parse_double(s);
        if (!v) throw parse_error("bad map value '" + std::string(s) + "'", line + 1);
        m.values.push_back(*v);
    });
    expect("mask");
    grid_rows([&](std::string_view s) {
        if (s != "0" && s != "1") throw parse_error("mask flags must be 0 or 1", line + 1);
        m.mask.push_back(s == "1" ? 1 : 0);
    });
    for (std::size_t k = 0; k < m.values.size(); ++k)
        if (m.mask[k] && !std::isfinite(m.values[k])) throw validation_error("non-finite value at a valid map node");
    return m;
}

inline asf_map load_map(const std::string& path) { return parse_map(text::read_file(path)); }

} // namespace asfkit
