#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "banded.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "stats.hpp"
#include "survey.hpp"
#include "text.hpp"

namespace asfkit {

/// Cross-track ASF deviation z (µs) observed at cross-track distance l (m).
struct deviation_sample {
    double l = 0.0;
    double z = 0.0;
};

/// Natural cubic spline f_cross(l).
///
/// Interval k covers [knots[k], knots[k+1]] and holds the local polynomial
/// a + b t + c t^2 + d t^3 with t = l - knots[k]. Outside the knot span the
/// spline continues linearly with the boundary slope, which matches the
/// zero second derivative at both ends.
///
/// `p` is the smoothing weight of the objective
///     (1 - p) * sum_k (z_k - f(l_k))^2 + p * integral f''(l)^2 dl,
/// so p = 0 interpolates and p -> 1 tends to the least-squares line. This is
/// the reverse of tools that weight the residual term by p.
struct cross_track_trend {
    std::vector<double> knots;
    std::vector<std::array<double, 4>> coeffs;
    double p = 0.0;

    double value(double l) const { return eval(l, 0); }
    double slope(double l) const { return eval(l, 1); }
    double curvature(double l) const { return eval(l, 2); }

    /// Copy with `c` added to every value.
    cross_track_trend shifted(double c) const
    {
        auto out = *this;
        for (auto& cf : out.coeffs) cf[0] += c;
        return out;
    }

    /// Derivative `order` (0..2) of the piece on interval k at offset t.
    double piece(std::size_t k, double t, int order) const
    {
        const auto& [a, b, c, d] = coeffs[k];
        switch (order) {
        case 0: return a + t * (b + t * (c + t * d));
        case 1: return b + t * (2.0 * c + 3.0 * d * t);
        default: return 2.0 * c + 6.0 * d * t;
        }
    }

private:
    double eval(double l, int order) const
    {
        if (coeffs.empty()) throw error("trend is not fitted");
        const std::size_t last = coeffs.size() - 1;
        if (l < knots.front()) {
            const double f0 = coeffs.front()[0];
            const double d0 = coeffs.front()[1];
            return order == 0 ? f0 + d0 * (l - knots.front()) : order == 1 ? d0 : 0.0;
        }
        if (l > knots.back()) {
            const double h = knots.back() - knots[last];
            const double fe = piece(last, h, 0);
            const double de = piece(last, h, 1);
            return order == 0 ? fe + de * (l - knots.back()) : order == 1 ? de : 0.0;
        }
        auto it = std::upper_bound(knots.begin(), knots.end(), l);
        std::size_t k = static_cast<std::size_t>(it - knots.begin());
        k = k == 0 ? 0 : std::min(k - 1, last);
        return piece(k, l - knots[k], order);
    }
};

inline double eval_trend(const cross_track_trend& trend, double l) { return trend.value(l); }

/// Integral of f''(l)^2 over the knot span (exact for piecewise-linear f'').
inline double roughness(const cross_track_trend& trend)
{
    double sum = 0.0;
    for (std::size_t k = 0; k < trend.coeffs.size(); ++k) {
        const double h = trend.knots[k + 1] - trend.knots[k];
        const double g0 = trend.piece(k, 0.0, 2);
        const double g1 = trend.piece(k, h, 2);
        sum += h * (g0 * g0 + g0 * g1 + g1 * g1) / 3.0;
    }
    return sum;
}

/// Residual sum of squares of the trend against raw samples.
inline double residual_sum_of_squares(const cross_track_trend& trend, const std::vector<deviation_sample>& data)
{
    double rss = 0.0;
    for (const auto& s : data) {
        const double r = s.z - trend.value(s.l);
        rss += r * r;
    }
    return rss;
}

/// (1 - p) * RSS + p * roughness at the given p.
inline double smoothing_objective(const cross_track_trend& trend, const std::vector<deviation_sample>& data, double p)
{
    return (1.0 - p) * residual_sum_of_squares(trend, data) + p * roughness(trend);
}

struct deviation_set {
    std::vector<deviation_sample> samples;
    /// Median ASF of the samples inside the center band (µs).
    double asf_center = 0.0;
};

/// Deviations of one transmitter's ASF from the centerline value.
inline deviation_set make_deviations(const survey_track& track, const waterway_frame& frame,
    const std::string& tx, double center_band = 5.0)
{
    if (!(center_band > 0.0)) throw validation_error("center band must be positive");
    std::vector<double> center;
    deviation_set out;
    out.samples.reserve(track.size());
    for (const auto& m : track.measurements) {
        const auto it = m.asf.find(tx);
        if (it == m.asf.end()) throw validation_error("track has no ASF for transmitter " + tx);
        const double l = cross_track(frame, m.pos);
        out.samples.push_back({l, it->second});
        if (std::abs(l) <= center_band) center.push_back(it->second);
    }
    if (center.empty())
        throw validation_error("no samples within " + text::format_sig(center_band, 6)
            + " m of the centerline for transmitter " + tx + "; widen the center band");
    out.asf_center = stats::median(std::move(center));
    for (auto& s : out.samples) s.z -= out.asf_center;
    return out;
}

namespace detail {

struct merged_knots {
    std::vector<double> l, z, w;
};

/// Sorts by l and averages samples whose l coincide (weight = count).
inline merged_knots merge_duplicates(std::vector<deviation_sample> data)
{
    std::sort(data.begin(), data.end(), [](const auto& a, const auto& b) { return a.l < b.l; });
    merged_knots out;
    for (const auto& s : data) {
        if (!std::isfinite(s.l) || !std::isfinite(s.z)) throw validation_error("non-finite deviation sample");
        if (!out.l.empty() && std::abs(s.l - out.l.back()) <= 1e-9 * std::max(1.0, std::abs(s.l))) {
            double& w = out.w.back();
            out.z.back() = (out.z.back() * w + s.z) / (w + 1.0);
            w += 1.0;
        } else {
            out.l.push_back(s.l);
            out.z.push_back(s.z);
            out.w.push_back(1.0);
        }
    }
    return out;
}

/// Coefficients of the natural cubic through values f with second
/// derivatives g (g.front() = g.back() = 0).
inline cross_track_trend assemble(const std::vector<double>& x, const std::vector<double>& f,
    const std::vector<double>& g, double p)
{
    cross_track_trend t;
    t.knots = x;
    t.p = p;
    t.coeffs.resize(x.size() - 1);
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        const double h = x[k + 1] - x[k];
        t.coeffs[k] = {f[k], (f[k + 1] - f[k]) / h - h * (2.0 * g[k] + g[k + 1]) / 6.0, 0.5 * g[k],
            (g[k + 1] - g[k]) / (6.0 * h)};
    }
    return t;
}

inline cross_track_trend fit_merged(const merged_knots& m, double p)
{
    const std::size_t n = m.l.size();
    if (n < 2) throw validation_error("smoothing spline needs at least 2 distinct cross-track positions");
    if (n == 2) {
        const std::vector<double> g(2, 0.0);
        return assemble(m.l, m.z, g, p);
    }

    // Reinsch form with h_k = l_{k+1} - l_k, interior second derivatives
    // gamma solving ((1-p) R + p Q^T W^-1 Q) gamma' = Q^T z, then
    // f = z - p W^-1 Q gamma' and gamma = (1-p) gamma'.
    const std::size_t m_int = n - 2;
    std::vector<double> h(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) h[k] = m.l[k + 1] - m.l[k];

    // Column j of Q (j = 0..n-3) has entries at rows j, j+1, j+2.
    auto q = [&](std::size_t row, std::size_t j) -> double {
        if (row == j) return 1.0 / h[j];
        if (row == j + 1) return -1.0 / h[j] - 1.0 / h[j + 1];
        if (row == j + 2) return 1.0 / h[j + 1];
        return 0.0;
    };

    banded_spd a(m_int, 2);
    for (std::size_t j = 0; j < m_int; ++j) {
        a.at(j, j) = (1.0 - p) * (h[j] + h[j + 1]) / 3.0;
        if (j + 1 < m_int) a.at(j, j + 1) = (1.0 - p) * h[j + 1] / 6.0;
    }
    for (std::size_t i = 0; i < m_int; ++i) {
        for (std::size_t j = i; j < std::min(m_int, i + 3); ++j) {
            double s = 0.0;
            for (std::size_t row = j; row <= i + 2; ++row) s += q(row, i) * q(row, j) / m.w[row];
            a.at(i, j) += p * s;
        }
    }
    std::vector<double> rhs(m_int);
    for (std::size_t j = 0; j < m_int; ++j) rhs[j] = q(j, j) * m.z[j] + q(j + 1, j) * m.z[j + 1] + q(j + 2, j) * m.z[j + 2];

    const auto gp = a.solve(std::move(rhs));

    std::vector<double> f = m.z;
    for (std::size_t j = 0; j < m_int; ++j)
        for (std::size_t row = j; row <= j + 2; ++row) f[row] -= p * q(row, j) * gp[j] / m.w[row];

    std::vector<double> g(n, 0.0);
    for (std::size_t j = 0; j < m_int; ++j) g[j + 1] = (1.0 - p) * gp[j];
    return assemble(m.l, f, g, p);
}

} // namespace detail

/// Natural cubic smoothing spline minimizing
/// (1 - p) * RSS + p * integral f''^2, for p in [0, 1).
inline cross_track_trend fit_smoothing_spline(const std::vector<deviation_sample>& data, double p)
{
    if (!(p >= 0.0 && p < 1.0)) throw validation_error("smoothing parameter must lie in [0, 1)");
    return detail::fit_merged(detail::merge_duplicates(data), p);
}

/// Candidate smoothing parameters p = s / (1 + s) with s log-spaced over
/// [10^lo, 10^hi].
inline std::vector<double> default_p_grid(int count = 25, double lo_exp = -6.0, double hi_exp = 6.0)
{
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double e = count == 1 ? lo_exp : lo_exp + (hi_exp - lo_exp) * i / (count - 1);
        const double s = std::pow(10.0, e);
        grid.push_back(s / (1.0 + s));
    }
    return grid;
}

struct loocv_result {
    double p = 0.0;
    std::vector<double> grid;
    /// Leave-one-out squared-error sum per grid entry; +inf where a fold
    /// could not be fitted.
    std::vector<double> cv;
};

/// Leave-one-out CV score of a single smoothing parameter, by literal
/// refitting with each sample held out.
inline double loocv_score(const std::vector<deviation_sample>& data, double p)
{
    double sum = 0.0;
    std::vector<deviation_sample> rest;
    rest.reserve(data.size());
    for (std::size_t k = 0; k < data.size(); ++k) {
        rest.clear();
        for (std::size_t i = 0; i < data.size(); ++i)
            if (i != k) rest.push_back(data[i]);
        const auto fit = fit_smoothing_spline(rest, p);
        const double r = data[k].z - fit.value(data[k].l);
        sum += r * r;
    }
    return sum;
}

/// Picks the grid entry with the smallest LOOCV score. Scores equal up to
/// rounding go to the larger p (the smoother fit).
inline loocv_result select_p_loocv(const std::vector<deviation_sample>& data, const std::vector<double>& grid)
{
    if (data.size() < 3) throw validation_error("LOOCV needs at least 3 samples");
    if (grid.empty()) throw validation_error("empty smoothing-parameter grid");

    double scale = 0.0;
    for (const auto& s : data) scale += s.z * s.z;
    const double tie_tol = 1e-12 * scale + std::numeric_limits<double>::min();

    loocv_result out;
    out.grid = grid;
    out.cv.assign(grid.size(), std::numeric_limits<double>::infinity());
    std::size_t best = grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        try {
            out.cv[i] = loocv_score(data, grid[i]);
        } catch (const error&) {
            continue;
        }
        if (!std::isfinite(out.cv[i])) continue;
        if (best == grid.size() || out.cv[i] < out.cv[best] - tie_tol
            || (std::abs(out.cv[i] - out.cv[best]) <= tie_tol && grid[i] >= grid[best]))
            best = i;
    }
    if (best == grid.size()) throw singular_system_error("no smoothing parameter in the grid yields a valid fit");
    out.p = grid[best];
    return out;
}

// ---------------------------------------------------------------------------
// Trend file: one interval per line, exact decimal round trip.
//
//   asfkit-trend 1
//   p <p>
//   intervals <K-1>
//   <l_k> <a> <b> <c> <d>
//   ...
//   end <l_K>

inline std::string format_trend(const cross_track_trend& t)
{
    std::string out = "asfkit-trend 1\np " + text::format_exact(t.p) + "\nintervals "
        + std::to_string(t.coeffs.size()) + "\n";
    for (std::size_t k = 0; k < t.coeffs.size(); ++k) {
        out += text::format_exact(t.knots[k]);
        for (double c : t.coeffs[k]) out += ' ' + text::format_exact(c);
        out += '\n';
    }
    out += "end " + text::format_exact(t.knots.back()) + "\n";
    return out;
}

inline cross_track_trend parse_trend(const std::string& content)
{
    const auto rows = text::lines(content);
    auto fields = [&](std::size_t i) {
        if (i >= rows.size()) throw parse_error("unexpected end of trend file", i + 1);
        return text::split(rows[i], ' ');
    };
    auto number = [&](std::string_view s, std::size_t line) {
        const auto v = text::parse_double(s);
        if (!v) throw parse_error("bad number '" + std::string(s) + "'", line);
        return *v;
    };
    if (rows.empty() || rows[0] != "asfkit-trend 1") throw parse_error("not a trend file", 1);
    cross_track_trend t;
    auto f = fields(1);
    if (f.size() != 2 || f[0] != "p") throw parse_error("expected 'p <value>'", 2);
    t.p = number(f[1], 2);
    f = fields(2);
    if (f.size() != 2 || f[0] != "intervals") throw parse_error("expected 'intervals <count>'", 3);
    const auto count = text::parse_int(f[1]);
    if (!count || *count < 1) throw parse_error("bad interval count", 3);
    for (long long k = 0; k < *count; ++k) {
        const std::size_t row = 3 + static_cast<std::size_t>(k);
        f = fields(row);
        if (f.size() != 5) throw parse_error("expected 5 fields", row + 1);
        t.knots.push_back(number(f[0], row + 1));
        t.coeffs.push_back({number(f[1], row + 1), number(f[2], row + 1), number(f[3], row + 1), number(f[4], row + 1)});
    }
    const std::size_t end_row = 3 + static_cast<std::size_t>(*count);
    f = fields(end_row);
    if (f.size() != 2 || f[0] != "end") throw parse_error("expected 'end <l>'", end_row + 1);
    t.knots.push_back(number(f[1], end_row + 1));
    return t;
}

} // namespace asfkit
