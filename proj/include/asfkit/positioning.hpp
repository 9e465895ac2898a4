#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "geometry.hpp"
#include "mapgen.hpp"
#include "stats.hpp"
#include "survey.hpp"
#include "text.hpp"

namespace asfkit {

/// Propagation speed in m/µs.
inline constexpr double speed_of_light = 299.792458;

/// UTC-synchronized transmitter.
struct transmitter {
    std::string id;
    vec2 pos = vec2::Zero();
};

using map_set = std::map<std::string, asf_map>; // keyed by transmitter id

struct position_fix {
    vec2 pos = vec2::Zero();
    double clock_bias = 0.0;                 ///< µs
    std::map<std::string, double> residuals; ///< µs, measured - modeled
    int iterations = 0;
    bool converged = false;
    /// Condition number of the range/bias Jacobian (bias scaled to meters).
    double condition = 0.0;
    bool poor_geometry = false;
};

struct solver_options {
    int max_iterations = 25;
    double step_tolerance = 1e-4; ///< m
    int divergence_run = 5;       ///< consecutive growing steps that abort
    double poor_geometry_condition = 1e8;
};

namespace detail {

struct usable_measurement {
    const transmitter* tx;
    const asf_map* map;
    double toa;
};

inline std::vector<usable_measurement> usable(const std::map<std::string, double>& toas,
    const std::vector<transmitter>& txs, const map_set& maps)
{
    std::vector<usable_measurement> out;
    for (const auto& tx : txs) {
        const auto t = toas.find(tx.id);
        const auto m = maps.find(tx.id);
        if (t == toas.end() || m == maps.end() || !std::isfinite(t->second)) continue;
        out.push_back({&tx, &m->second, t->second});
    }
    return out;
}

/// ASF correction used inside the solver. Iterates may wander far off the
/// grid before converging, so positions are clamped onto the grid and fully
/// masked cells fall back to their extrapolated values.
inline double solver_asf(const asf_map& map, const vec2& p)
{
    return lookup_asf(map, p, {std::numeric_limits<double>::infinity(), true});
}

} // namespace detail

/// 0.5 * sum (TOA - |x - tx|/c - ASF(x) - b)^2 in µs^2.
inline double fix_cost(const std::map<std::string, double>& toas, const std::vector<transmitter>& txs,
    const map_set& maps, const vec2& pos, double clock_bias)
{
    double c = 0.0;
    for (const auto& u : detail::usable(toas, txs, maps)) {
        const double r = u.toa - (pos - u.tx->pos).norm() / speed_of_light - detail::solver_asf(*u.map, pos) - clock_bias;
        c += 0.5 * r * r;
    }
    return c;
}

/// Gradient of fix_cost with respect to (east m, north m, bias µs), treating
/// the ASF map as locally constant.
inline Eigen::Vector3d fix_cost_gradient(const std::map<std::string, double>& toas, const std::vector<transmitter>& txs,
    const map_set& maps, const vec2& pos, double clock_bias)
{
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (const auto& u : detail::usable(toas, txs, maps)) {
        const vec2 d = pos - u.tx->pos;
        const double rho = d.norm();
        const double r = u.toa - rho / speed_of_light - detail::solver_asf(*u.map, pos) - clock_bias;
        g.head<2>() -= r * d / (rho * speed_of_light);
        g(2) -= r;
    }
    return g;
}

/// Gauss-Newton TOA fix for (position, clock bias). The model is
/// TOA_n = |x - tx_n| / c + ASF_n(x) + b; the ASF term is re-evaluated each
/// iteration but left out of the Jacobian.
inline position_fix solve_fix(const std::map<std::string, double>& toas, const std::vector<transmitter>& txs,
    const map_set& maps, const vec2& initial, const solver_options& opt = {})
{
    const auto meas = detail::usable(toas, txs, maps);
    if (meas.size() < 3)
        throw validation_error("position fix needs at least 3 transmitters with TOA and map, got "
            + std::to_string(meas.size()));

    const auto n = static_cast<Eigen::Index>(meas.size());
    Eigen::Vector3d state(initial.x(), initial.y(), 0.0); // bias in meters
    {
        // Bias start: mean of TOA minus range and ASF.
        double b = 0.0;
        for (const auto& u : meas)
            b += u.toa - (initial - u.tx->pos).norm() / speed_of_light - detail::solver_asf(*u.map, initial);
        state(2) = speed_of_light * b / static_cast<double>(meas.size());
    }

    position_fix fix;
    Eigen::MatrixXd jac(n, 3);
    Eigen::VectorXd res(n);
    double prev_step = std::numeric_limits<double>::infinity();
    int growing = 0;

    auto linearize = [&] {
        const vec2 x = state.head<2>();
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto& u = meas[static_cast<std::size_t>(k)];
            const vec2 d = x - u.tx->pos;
            const double rho = d.norm();
            const double modeled = rho + speed_of_light * detail::solver_asf(*u.map, x) + state(2);
            res(k) = speed_of_light * u.toa - modeled;
            jac.row(k) << d.x() / rho, d.y() / rho, 1.0;
        }
    };

    for (int it = 0; it < opt.max_iterations; ++it) {
        linearize();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        fix.condition = sv(2) > 0.0 ? sv(0) / sv(2) : std::numeric_limits<double>::infinity();
        svd.setThreshold(1e-12);
        const Eigen::Vector3d step = svd.solve(res);
        state += step;
        fix.iterations = it + 1;

        const double step_norm = step.head<2>().norm();
        if (step_norm < opt.step_tolerance) {
            fix.converged = true;
            break;
        }
        growing = step_norm > prev_step ? growing + 1 : 0;
        if (growing >= opt.divergence_run) break;
        prev_step = step_norm;
    }

    linearize();
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
        const auto& sv = svd.singularValues();
        fix.condition = sv(2) > 0.0 ? sv(0) / sv(2) : std::numeric_limits<double>::infinity();
    }
    fix.poor_geometry = !(fix.condition <= opt.poor_geometry_condition);
    fix.pos = state.head<2>();
    fix.clock_bias = state(2) / speed_of_light;
    for (Eigen::Index k = 0; k < n; ++k) fix.residuals[meas[static_cast<std::size_t>(k)].tx->id] = res(k) / speed_of_light;
    return fix;
}

inline vec2 transmitter_centroid(const std::vector<transmitter>& txs)
{
    vec2 c = vec2::Zero();
    for (const auto& t : txs) c += t.pos;
    return txs.empty() ? c : vec2(c / static_cast<double>(txs.size()));
}

// ---------------------------------------------------------------------------
// Route evaluation

struct epoch_error {
    std::string track;
    double t = 0.0;
    vec2 truth = vec2::Zero();
    vec2 fix = vec2::Zero();
    double error = 0.0; ///< horizontal error, m
    bool converged = false;
};

struct method_accuracy {
    std::string method;
    double rms = 0.0; ///< 2-D RMS error, m
    double p95 = 0.0; ///< 95th percentile (nearest rank), m
    std::size_t count = 0;
    std::size_t nonconverged = 0;
    std::vector<epoch_error> epochs;
};

struct accuracy_report {
    std::vector<method_accuracy> methods;

    const method_accuracy& at(const std::string& method) const
    {
        for (const auto& m : methods)
            if (m.method == method) return m;
        throw error("no accuracy entry for method '" + method + "'");
    }
};

/// Positions every epoch of every track with each method's maps and scores
/// the fixes against the recorded (true) positions. Fixes are warm-started
/// from the previous converged epoch of the same track.
inline accuracy_report evaluate_routes(const std::vector<survey_track>& tracks, const std::vector<transmitter>& txs,
    const std::map<std::string, map_set>& maps_by_method, const solver_options& opt = {})
{
    std::size_t epochs = 0;
    for (const auto& t : tracks) epochs += t.size();
    if (epochs == 0) throw validation_error("evaluation set is empty");
    if (maps_by_method.empty()) throw validation_error("no maps to evaluate");

    accuracy_report report;
    const vec2 centroid = transmitter_centroid(txs);
    for (const auto& [method, maps] : maps_by_method) {
        method_accuracy acc;
        acc.method = method;
        double sum_sq = 0.0;
        std::vector<double> errors;
        for (const auto& track : tracks) {
            vec2 start = centroid;
            for (const auto& m : track.measurements) {
                const auto fix = solve_fix(m.toa, txs, maps, start, opt);
                const double e = (fix.pos - m.pos).norm();
                acc.epochs.push_back({track.label, m.t, m.pos, fix.pos, e, fix.converged});
                if (!fix.converged) ++acc.nonconverged;
                start = fix.converged ? fix.pos : centroid;
                sum_sq += e * e;
                errors.push_back(e);
            }
        }
        acc.count = errors.size();
        acc.rms = std::sqrt(sum_sq / static_cast<double>(acc.count));
        acc.p95 = stats::percentile(errors, 0.95);
        report.methods.push_back(std::move(acc));
    }
    return report;
}

inline std::string format_epoch_csv(const accuracy_report& report)
{
    std::string out = "track,t_sec,truth_east_m,truth_north_m,method,fix_east_m,fix_north_m,error_m,converged\n";
    for (const auto& m : report.methods)
        for (const auto& e : m.epochs)
            out += e.track + ',' + text::format_exact(e.t) + ',' + text::format_sig(e.truth.x(), 12) + ','
                + text::format_sig(e.truth.y(), 12) + ',' + m.method + ',' + text::format_sig(e.fix.x(), 12) + ','
                + text::format_sig(e.fix.y(), 12) + ',' + text::format_sig(e.error, 9) + ','
                + (e.converged ? "1" : "0") + '\n';
    return out;
}

inline std::string format_summary(const accuracy_report& report)
{
    std::string out = "# method rms_m p95_m count nonconverged\n";
    for (const auto& m : report.methods)
        out += m.method + ' ' + text::format_sig(m.rms, 9) + ' ' + text::format_sig(m.p95, 9) + ' '
            + std::to_string(m.count) + ' ' + std::to_string(m.nonconverged) + '\n';
    return out;
}

} // namespace asfkit
