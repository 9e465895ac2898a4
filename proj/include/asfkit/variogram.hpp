#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "text.hpp"

namespace asfkit {

enum class variogram_kind { exponential, spherical, gaussian };

inline std::string to_string(variogram_kind k)
{
    switch (k) {
    case variogram_kind::exponential: return "exponential";
    case variogram_kind::spherical: return "spherical";
    case variogram_kind::gaussian: return "gaussian";
    }
    return "?";
}

inline variogram_kind parse_variogram_kind(const std::string& s)
{
    if (s == "exponential") return variogram_kind::exponential;
    if (s == "spherical") return variogram_kind::spherical;
    if (s == "gaussian") return variogram_kind::gaussian;
    throw validation_error("unknown variogram model '" + s + "'");
}

/// Isotropic semivariance model. Units: nugget and partial_sill in µs^2,
/// range in meters. gamma(0) = 0; gamma(0+) = nugget.
struct variogram_model {
    variogram_kind kind = variogram_kind::exponential;
    double nugget = 0.0;
    double partial_sill = 0.0;
    double range = 1.0;

    /// Unit-sill shape g(h) in [0, 1].
    static double shape(variogram_kind kind, double h, double range)
    {
        const double r = h / range;
        switch (kind) {
        case variogram_kind::exponential: return 1.0 - std::exp(-r);
        case variogram_kind::spherical: return r >= 1.0 ? 1.0 : 1.5 * r - 0.5 * r * r * r;
        case variogram_kind::gaussian: return 1.0 - std::exp(-r * r);
        }
        return 0.0;
    }

    double operator()(double h) const
    {
        if (h <= 0.0) return 0.0;
        return nugget + partial_sill * shape(kind, h, range);
    }

    double sill() const { return nugget + partial_sill; }

    void validate() const
    {
        if (!(nugget >= 0.0) || !(partial_sill >= 0.0) || !(range > 0.0))
            throw validation_error("variogram parameters violate nugget >= 0, partial sill >= 0, range > 0");
    }
};

inline double gamma(const variogram_model& model, const vec2& xa, const vec2& xb)
{
    return model((xa - xb).norm());
}

struct spatial_sample {
    vec2 pos = vec2::Zero();
    double value = 0.0;
};

struct variogram_bin {
    double lag = 0.0;         ///< mean pair distance in the bin, m
    double semivariance = 0.0; ///< µs^2
    std::size_t pairs = 0;
};

struct empirical_variogram {
    double bin_width = 0.0;
    std::vector<variogram_bin> bins;
};

/// Matheron estimator over distance bins [k w, (k+1) w), pairs up to max_lag.
inline empirical_variogram compute_empirical_variogram(const std::vector<spatial_sample>& points,
    double bin_width, double max_lag)
{
    if (points.size() < 2) throw validation_error("variogram needs at least 2 points");
    if (!(bin_width > 0.0)) throw validation_error("variogram bin width must be positive");
    if (!(max_lag > 0.0)) throw validation_error("variogram max lag must be positive");

    const auto nbins = static_cast<std::size_t>(std::ceil(max_lag / bin_width)) + 1;
    std::vector<double> sum_sq(nbins, 0.0), sum_h(nbins, 0.0);
    std::vector<std::size_t> count(nbins, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            const double h = (points[i].pos - points[j].pos).norm();
            if (h > max_lag) continue;
            const auto b = static_cast<std::size_t>(h / bin_width);
            const double d = points[i].value - points[j].value;
            sum_sq[b] += d * d;
            sum_h[b] += h;
            ++count[b];
        }
    }
    empirical_variogram out;
    out.bin_width = bin_width;
    for (std::size_t b = 0; b < nbins; ++b) {
        if (count[b] == 0) continue;
        const double n = static_cast<double>(count[b]);
        out.bins.push_back({sum_h[b] / n, sum_sq[b] / (2.0 * n), count[b]});
    }
    if (out.bins.empty()) throw validation_error("no point pairs within the maximum lag");
    return out;
}

struct variogram_fit {
    variogram_model model;
    double residual_norm = 0.0; ///< sqrt(sum_b n_b (gamma_b - model(h_b))^2)
    bool degenerate = false;
};

inline double weighted_residual_norm(const empirical_variogram& emp, const variogram_model& m)
{
    double s = 0.0;
    for (const auto& b : emp.bins) {
        const double r = b.semivariance - m(b.lag);
        s += static_cast<double>(b.pairs) * r * r;
    }
    return std::sqrt(s);
}

namespace detail {

/// Best non-negative (nugget, partial sill) for a fixed range.
inline variogram_model fit_sills(const empirical_variogram& emp, variogram_kind kind, double range)
{
    double sw = 0, sg = 0, sgg = 0, sy = 0, sgy = 0;
    for (const auto& b : emp.bins) {
        const double w = static_cast<double>(b.pairs);
        const double g = variogram_model::shape(kind, b.lag, range);
        sw += w;
        sg += w * g;
        sgg += w * g * g;
        sy += w * b.semivariance;
        sgy += w * g * b.semivariance;
    }
    std::vector<variogram_model> candidates;
    const double det = sw * sgg - sg * sg;
    if (std::abs(det) > 1e-14 * sw * sgg) {
        const double c0 = (sgg * sy - sg * sgy) / det;
        const double c1 = (sw * sgy - sg * sy) / det;
        if (c0 >= 0.0 && c1 >= 0.0) candidates.push_back({kind, c0, c1, range});
    }
    if (sgg > 0.0) candidates.push_back({kind, 0.0, std::max(0.0, sgy / sgg), range});
    candidates.push_back({kind, std::max(0.0, sy / sw), 0.0, range});

    variogram_model best = candidates.front();
    double best_norm = weighted_residual_norm(emp, best);
    for (const auto& c : candidates) {
        const double r = weighted_residual_norm(emp, c);
        if (r < best_norm) {
            best = c;
            best_norm = r;
        }
    }
    return best;
}

} // namespace detail

/// Pair-count weighted least squares. Nugget and partial sill enter
/// linearly and are solved exactly (with non-negativity) for each trial
/// range; the range is found by a log-spaced scan refined with golden
/// section search.
inline variogram_fit fit_model(const empirical_variogram& emp, variogram_kind kind = variogram_kind::exponential)
{
    if (emp.bins.size() < 3) throw validation_error("variogram fit needs at least 3 bins");

    const bool all_zero = std::all_of(emp.bins.begin(), emp.bins.end(),
        [](const variogram_bin& b) { return b.semivariance == 0.0; });
    if (all_zero) return {{kind, 0.0, 0.0, emp.bin_width}, 0.0, true};

    double h_max = 0.0, h_min = std::numeric_limits<double>::infinity();
    double g_max = 0.0;
    for (const auto& b : emp.bins) {
        h_max = std::max(h_max, b.lag);
        if (b.lag > 0.0) h_min = std::min(h_min, b.lag);
        g_max = std::max(g_max, b.semivariance);
    }
    if (!std::isfinite(h_min)) h_min = emp.bin_width;

    // Initial guess in the usual eyeball style.
    variogram_model initial{kind, std::clamp(emp.bins.front().semivariance, 0.0, g_max), 0.0, h_max / 3.0};
    initial.partial_sill = std::max(0.0, g_max - initial.nugget);

    auto objective = [&](double log_a) {
        return weighted_residual_norm(emp, detail::fit_sills(emp, kind, std::exp(log_a)));
    };

    const double lo = std::log(0.01 * h_min), hi = std::log(100.0 * h_max);
    constexpr int scan = 400;
    int best_i = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= scan; ++i) {
        const double v = objective(lo + (hi - lo) * i / scan);
        if (v < best_v) {
            best_v = v;
            best_i = i;
        }
    }
    const double step = (hi - lo) / scan;
    double a = lo + step * std::max(0, best_i - 1);
    double b = lo + step * std::min(scan, best_i + 1);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = objective(x2);
        }
    }
    double log_best = lo + step * best_i;
    if (std::min(f1, f2) < best_v) log_best = f1 < f2 ? x1 : x2;

    variogram_fit out;
    out.model = detail::fit_sills(emp, kind, std::exp(log_best));
    out.residual_norm = weighted_residual_norm(emp, out.model);
    if (const double r0 = weighted_residual_norm(emp, initial); r0 < out.residual_norm) {
        out.model = initial;
        out.residual_norm = r0;
    }
    return out;
}

/// Plain-text report: fitted parameters then one line per bin.
inline std::string format_variogram_report(const empirical_variogram& emp, const variogram_fit& fit)
{
    std::string out = "# variogram model " + to_string(fit.model.kind) + "\n";
    out += "nugget_us2 " + text::format_sig(fit.model.nugget, 9) + "\n";
    out += "partial_sill_us2 " + text::format_sig(fit.model.partial_sill, 9) + "\n";
    out += "range_m " + text::format_sig(fit.model.range, 9) + "\n";
    out += "residual_norm " + text::format_sig(fit.residual_norm, 9) + "\n";
    out += std::string("degenerate ") + (fit.degenerate ? "1" : "0") + "\n";
    out += "# lag_m semivariance_us2 pairs model_us2\n";
    for (const auto& b : emp.bins)
        out += text::format_sig(b.lag, 9) + ' ' + text::format_sig(b.semivariance, 9) + ' '
            + std::to_string(b.pairs) + ' ' + text::format_sig(fit.model(b.lag), 9) + '\n';
    return out;
}

} // namespace asfkit
