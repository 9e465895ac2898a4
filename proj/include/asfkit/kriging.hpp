#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "geometry.hpp"
#include "spline.hpp"
#include "survey.hpp"
#include "text.hpp"
#include "variogram.hpp"

namespace asfkit {

struct detrended_point {
    vec2 pos = vec2::Zero();
    double l = 0.0;   ///< cross-track distance, m
    double asf = 0.0; ///< measured ASF, µs
    double eps = 0.0; ///< residual asf - mu0 - f_cross(l), µs
};

/// ASF_n = mu0 + f_cross(l_n) + eps_n for one transmitter.
struct detrended_survey {
    std::vector<detrended_point> points;
    double mu0 = 0.0;
    cross_track_trend trend;

    std::vector<vec2> positions() const
    {
        std::vector<vec2> out;
        out.reserve(points.size());
        for (const auto& p : points) out.push_back(p.pos);
        return out;
    }
};

namespace detail {

inline detrended_survey detrend_points(std::vector<detrended_point> pts, const cross_track_trend& trend)
{
    if (pts.empty()) throw validation_error("cannot detrend an empty survey");
    detrended_survey out;
    out.trend = trend;
    double sum = 0.0;
    for (const auto& p : pts) sum += p.asf - trend.value(p.l);
    out.mu0 = sum / static_cast<double>(pts.size());
    for (auto& p : pts) p.eps = p.asf - out.mu0 - trend.value(p.l);
    out.points = std::move(pts);
    return out;
}

} // namespace detail

inline detrended_survey detrend(const survey_track& track, const waterway_frame& frame,
    const cross_track_trend& trend, const std::string& tx)
{
    std::vector<detrended_point> pts;
    pts.reserve(track.size());
    for (const auto& m : track.measurements) {
        const auto it = m.asf.find(tx);
        if (it == m.asf.end()) throw validation_error("track has no ASF for transmitter " + tx);
        pts.push_back({m.pos, cross_track(frame, m.pos), it->second, 0.0});
    }
    return detail::detrend_points(std::move(pts), trend);
}

namespace detail {

/// Groups of point indices closer than `tol` (greedy, seeded by x order).
inline std::vector<std::vector<std::size_t>> coincident_clusters(std::span<const vec2> pos, double tol)
{
    std::vector<std::size_t> order(pos.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pos[a].x() < pos[b].x(); });
    std::vector<char> used(pos.size(), 0);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t a = 0; a < order.size(); ++a) {
        const std::size_t i = order[a];
        if (used[i]) continue;
        out.push_back({i});
        for (std::size_t b = a + 1; b < order.size() && pos[order[b]].x() - pos[i].x() < tol; ++b) {
            const std::size_t j = order[b];
            if (!used[j] && (pos[j] - pos[i]).norm() < tol) {
                used[j] = 1;
                out.back().push_back(j);
            }
        }
        std::sort(out.back().begin(), out.back().end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace detail

/// Averages points closer than `tol` meters and recomputes mu0 and the
/// residuals on the merged set.
inline detrended_survey merge_coincident(const detrended_survey& survey, double tol = 0.01)
{
    const auto pos = survey.positions();
    const auto clusters = detail::coincident_clusters(pos, tol);
    if (clusters.size() == pos.size()) return survey;
    std::vector<detrended_point> merged;
    merged.reserve(clusters.size());
    for (const auto& c : clusters) {
        detrended_point acc{vec2::Zero(), 0.0, 0.0, 0.0};
        for (std::size_t i : c) {
            acc.pos += survey.points[i].pos;
            acc.l += survey.points[i].l;
            acc.asf += survey.points[i].asf;
        }
        const double n = static_cast<double>(c.size());
        acc.pos /= n;
        acc.l /= n;
        acc.asf /= n;
        merged.push_back(acc);
    }
    return detail::detrend_points(std::move(merged), survey.trend);
}

struct kriging_weights {
    std::vector<double> w;
    /// Lagrange multipliers: one for ordinary kriging, two for universal
    /// kriging (unit row, drift row).
    std::vector<double> multipliers;
};

struct kriging_options {
    /// Reciprocal-condition threshold; above 1 / rcond the diagonal gets
    /// `jitter` µs^2 of extra nugget.
    double max_condition = 1e12;
    double jitter = 1e-10;
    /// Points used per target: the nearest `neighbors` survey points, or all
    /// of them when 0 or not fewer than the survey size.
    std::size_t neighbors = 0;
    std::function<void(const std::string&)> log = [](const std::string& msg) { std::clog << msg << '\n'; };
};

namespace detail {

/// Closest pair of points, as a hint when a kriging matrix is singular.
inline std::string closest_pair_hint(std::span<const vec2> pts)
{
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (const double d = (pts[i] - pts[j]).norm(); d < best) {
                best = d;
                bi = i;
                bj = j;
            }
    if (!std::isfinite(best)) return "no point pairs";
    return "closest points #" + std::to_string(bi) + " and #" + std::to_string(bj) + " are "
        + text::format_sig(best, 6) + " m apart (possible duplicates)";
}

/// LU factorization of a kriging matrix whose leading n x n block is the
/// semivariance matrix, with the conditioning guard applied.
inline Eigen::PartialPivLU<Eigen::MatrixXd> factor_kriging_matrix(Eigen::MatrixXd a, std::size_t n,
    std::span<const vec2> pts, const kriging_options& opt)
{
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    double rcond = lu.rcond();
    if (!(rcond * opt.max_condition >= 1.0)) {
        // Subtracting on the gamma diagonal equals adding to the covariance
        // diagonal; the unit row absorbs the constant shift.
        for (std::size_t i = 0; i < n; ++i) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= opt.jitter;
        if (opt.log)
            opt.log("kriging: condition estimate " + text::format_sig(1.0 / rcond, 3) + " exceeds "
                + text::format_sig(opt.max_condition, 3) + "; added " + text::format_sig(opt.jitter, 3)
                + " us^2 diagonal nugget");
        lu.compute(a);
        rcond = lu.rcond();
    }
    if (!(rcond > std::numeric_limits<double>::epsilon()))
        throw singular_system_error("kriging system is singular (condition estimate "
            + text::format_sig(1.0 / rcond, 3) + "); " + closest_pair_hint(pts));
    return lu;
}

} // namespace detail

/// Ordinary kriging system, factored once for repeated targets:
///   [ G  1 ] [w     ]   [ g(x_n, x0) ]
///   [ 1' 0 ] [lambda] = [ 1          ]
class ordinary_kriging {
public:
    ordinary_kriging(std::vector<vec2> points, const variogram_model& model, const kriging_options& opt = {})
        : points_(std::move(points)), model_(model)
    {
        if (points_.empty()) throw validation_error("kriging needs at least one point");
        const auto n = static_cast<Eigen::Index>(points_.size());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j)
                a(i, j) = a(j, i) = gamma(model_, points_[static_cast<std::size_t>(i)], points_[static_cast<std::size_t>(j)]);
            a(i, n) = a(n, i) = 1.0;
        }
        lu_ = detail::factor_kriging_matrix(std::move(a), points_.size(), points_, opt);
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<vec2>& points() const { return points_; }

    kriging_weights weights(const vec2& target) const
    {
        const auto n = static_cast<Eigen::Index>(points_.size());
        Eigen::VectorXd rhs(n + 1);
        for (Eigen::Index i = 0; i < n; ++i) rhs(i) = gamma(model_, points_[static_cast<std::size_t>(i)], target);
        rhs(n) = 1.0;
        const Eigen::VectorXd x = lu_.solve(rhs);
        kriging_weights out;
        out.w.assign(x.data(), x.data() + n);
        out.multipliers = {x(n)};
        return out;
    }

private:
    std::vector<vec2> points_;
    variogram_model model_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// Universal kriging with a single drift basis d(x) besides the constant:
///   [ G  1 d ] [w      ]   [ g(x_n, x0) ]
///   [ 1' 0 0 ] [lambda0] = [ 1          ]
///   [ d' 0 0 ] [lambda1]   [ d(x0)      ]
class universal_kriging {
public:
    universal_kriging(std::vector<vec2> points, std::vector<double> drift, const variogram_model& model,
        const kriging_options& opt = {})
        : points_(std::move(points)), drift_(std::move(drift)), model_(model)
    {
        if (points_.size() < 2) throw validation_error("universal kriging needs at least two points");
        if (drift_.size() != points_.size()) throw validation_error("drift/point count mismatch");
        const auto [lo, hi] = std::minmax_element(drift_.begin(), drift_.end());
        const double scale = std::max({1.0, std::abs(*lo), std::abs(*hi)});
        if (*hi - *lo <= 1e-12 * scale)
            throw degenerate_drift_error("universal kriging drift values are all equal, so the drift row "
                                         "duplicates the unit row; use regression kriging instead");
        const auto n = static_cast<Eigen::Index>(points_.size());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 2, n + 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j)
                a(i, j) = a(j, i) = gamma(model_, points_[static_cast<std::size_t>(i)], points_[static_cast<std::size_t>(j)]);
            a(i, n) = a(n, i) = 1.0;
            a(i, n + 1) = a(n + 1, i) = drift_[static_cast<std::size_t>(i)];
        }
        lu_ = detail::factor_kriging_matrix(std::move(a), points_.size(), points_, opt);
    }

    std::size_t size() const { return points_.size(); }

    kriging_weights weights(const vec2& target, double drift_target) const
    {
        const auto n = static_cast<Eigen::Index>(points_.size());
        Eigen::VectorXd rhs(n + 2);
        for (Eigen::Index i = 0; i < n; ++i) rhs(i) = gamma(model_, points_[static_cast<std::size_t>(i)], target);
        rhs(n) = 1.0;
        rhs(n + 1) = drift_target;
        const Eigen::VectorXd x = lu_.solve(rhs);
        kriging_weights out;
        out.w.assign(x.data(), x.data() + n);
        out.multipliers = {x(n), x(n + 1)};
        return out;
    }

private:
    std::vector<vec2> points_;
    std::vector<double> drift_;
    variogram_model model_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// One-shot ordinary kriging weights.
inline kriging_weights ok_weights(std::span<const vec2> points, const vec2& target, const variogram_model& model,
    const kriging_options& opt = {})
{
    return ordinary_kriging({points.begin(), points.end()}, model, opt).weights(target);
}

namespace detail {

/// Indices of the k points nearest to target, in ascending index order.
inline std::vector<std::size_t> nearest_indices(std::span<const vec2> pts, const vec2& target, std::size_t k)
{
    std::vector<std::size_t> idx(pts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto closer = [&](std::size_t a, std::size_t b) {
        const double da = (pts[a] - target).squaredNorm(), db = (pts[b] - target).squaredNorm();
        return da < db || (da == db && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(), closer);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline bool is_global(const kriging_options& opt, std::size_t n) { return opt.neighbors == 0 || opt.neighbors >= n; }

/// Scatters neighborhood weights back onto the full survey.
inline kriging_weights expand(const kriging_weights& local, const std::vector<std::size_t>& idx, std::size_t n)
{
    kriging_weights out;
    out.w.assign(n, 0.0);
    for (std::size_t k = 0; k < idx.size(); ++k) out.w[idx[k]] = local.w[k];
    out.multipliers = local.multipliers;
    return out;
}

} // namespace detail

/// Regression kriging: mu0 + f_cross(l) plus ordinary kriging of residuals.
class regression_kriging_predictor {
public:
    regression_kriging_predictor(detrended_survey survey, const variogram_model& model, const kriging_options& opt = {})
        : survey_(std::move(survey)), positions_(survey_.positions()), model_(model), opt_(opt)
    {
        if (detail::is_global(opt_, positions_.size())) global_.emplace(positions_, model_, opt_);
    }

    double predict(const vec2& target, double l_target) const
    {
        const auto kw = weights(target);
        double sum = 0.0;
        for (std::size_t n = 0; n < kw.w.size(); ++n) sum += kw.w[n] * survey_.points[n].eps;
        return survey_.mu0 + survey_.trend.value(l_target) + sum;
    }

    kriging_weights weights(const vec2& target) const
    {
        if (global_) return global_->weights(target);
        const auto idx = detail::nearest_indices(positions_, target, opt_.neighbors);
        std::vector<vec2> local;
        for (auto i : idx) local.push_back(positions_[i]);
        return detail::expand(ordinary_kriging(std::move(local), model_, opt_).weights(target), idx, positions_.size());
    }

    const detrended_survey& survey() const { return survey_; }

private:
    detrended_survey survey_;
    std::vector<vec2> positions_;
    variogram_model model_;
    kriging_options opt_;
    std::optional<ordinary_kriging> global_;
};

/// Universal kriging with f_cross as drift; the prediction combines raw ASF.
class universal_kriging_predictor {
public:
    universal_kriging_predictor(detrended_survey survey, const variogram_model& model, const kriging_options& opt = {})
        : survey_(std::move(survey)), positions_(survey_.positions()), drift_(drift_values(survey_)), model_(model),
          opt_(opt)
    {
        if (detail::is_global(opt_, positions_.size())) global_.emplace(positions_, drift_, model_, opt_);
    }

    double predict(const vec2& target, double l_target) const
    {
        const auto kw = weights(target, l_target);
        double sum = 0.0;
        for (std::size_t n = 0; n < kw.w.size(); ++n) sum += kw.w[n] * survey_.points[n].asf;
        return sum;
    }

    kriging_weights weights(const vec2& target, double l_target) const
    {
        const double d0 = survey_.trend.value(l_target);
        if (global_) return global_->weights(target, d0);
        const auto idx = detail::nearest_indices(positions_, target, opt_.neighbors);
        std::vector<vec2> local;
        std::vector<double> drift;
        for (auto i : idx) {
            local.push_back(positions_[i]);
            drift.push_back(drift_[i]);
        }
        return detail::expand(universal_kriging(std::move(local), std::move(drift), model_, opt_).weights(target, d0), idx,
            positions_.size());
    }

    const detrended_survey& survey() const { return survey_; }

private:
    static std::vector<double> drift_values(const detrended_survey& s)
    {
        std::vector<double> d;
        d.reserve(s.points.size());
        for (const auto& p : s.points) d.push_back(s.trend.value(p.l));
        return d;
    }

    detrended_survey survey_;
    std::vector<vec2> positions_;
    std::vector<double> drift_;
    variogram_model model_;
    kriging_options opt_;
    std::optional<universal_kriging> global_;
};

inline double rk_predict(const detrended_survey& survey, const vec2& target, double l_target,
    const variogram_model& model, const kriging_options& opt = {})
{
    return regression_kriging_predictor(survey, model, opt).predict(target, l_target);
}

inline double uk_predict(const detrended_survey& survey, const vec2& target, double l_target,
    const variogram_model& model, const kriging_options& opt = {})
{
    return universal_kriging_predictor(survey, model, opt).predict(target, l_target);
}

} // namespace asfkit
