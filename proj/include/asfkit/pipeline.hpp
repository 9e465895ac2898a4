#pragma once

// End-to-end map building and route evaluation, shared by the command-line
// tool and the acceptance suite.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kriging.hpp"
#include "mapgen.hpp"
#include "positioning.hpp"
#include "spline.hpp"
#include "survey.hpp"
#include "variogram.hpp"

namespace asfkit {

struct build_options {
    double window_sec = 60.0;
    double mad_k = 2.0;
    double center_band = 5.0;
    std::vector<double> p_grid = default_p_grid();
    std::optional<double> bin_width; ///< defaults to the grid spacing
    std::optional<double> max_lag;   ///< defaults to half the survey extent
    variogram_kind model_kind = variogram_kind::exponential;
    /// Time window of the cross-track survey leg. When set, the trend is fit
    /// to samples inside it only.
    std::optional<std::pair<double, double>> cross_window;
    /// Drop the cross-track leg entirely (conventional survey).
    bool drop_cross_leg = false;
    std::set<map_method> methods{map_method::linear, map_method::uk, map_method::rk};
    kriging_options kriging;
};

struct transmitter_build {
    std::string tx;
    deviation_set deviations;
    loocv_result loocv;
    cross_track_trend trend; ///< normalized so that trend(0) = 0
    detrended_survey detrended;
    empirical_variogram variogram;
    variogram_fit fit;
    std::map<map_method, asf_map> maps;
};

struct build_result {
    survey_track filtered;
    std::vector<std::size_t> rejected;
    std::vector<transmitter_build> transmitters;
};

inline bool in_window(double t, const std::pair<double, double>& w) { return t >= w.first && t <= w.second; }

inline double half_extent(const survey_track& track)
{
    vec2 lo = track.measurements.front().pos, hi = lo;
    for (const auto& m : track.measurements) {
        lo = lo.cwiseMin(m.pos);
        hi = hi.cwiseMax(m.pos);
    }
    return 0.5 * (hi - lo).norm();
}

/// Filter -> trend -> variogram -> maps for every transmitter in the track.
inline build_result build_maps(const survey_track& track, const waterway_frame& frame, const grid_spec& grid,
    const build_options& opt = {})
{
    track.validate();
    build_result out;
    {
        auto filtered = mad_filter(track, opt.window_sec, opt.mad_k);
        out.filtered = std::move(filtered.track);
        out.rejected = std::move(filtered.rejected);
    }
    if (opt.drop_cross_leg) {
        if (!opt.cross_window) throw validation_error("dropping the cross-track leg needs its time window");
        std::erase_if(out.filtered.measurements,
            [&](const survey_measurement& m) { return in_window(m.t, *opt.cross_window); });
    }
    if (out.filtered.size() < 3) throw validation_error("fewer than 3 survey points remain after filtering");

    survey_track trend_track;
    trend_track.label = out.filtered.label;
    for (const auto& m : out.filtered.measurements)
        if (!opt.cross_window || opt.drop_cross_leg || in_window(m.t, *opt.cross_window))
            trend_track.measurements.push_back(m);

    const bool need_trend = opt.methods.count(map_method::uk) || opt.methods.count(map_method::rk);
    for (const auto& tx : out.filtered.transmitters()) {
        transmitter_build b;
        b.tx = tx;
        if (opt.methods.count(map_method::linear)) b.maps.emplace(map_method::linear, build_map_linear(out.filtered, grid, tx));
        if (need_trend) {
            b.deviations = make_deviations(trend_track, frame, tx, opt.center_band);
            b.loocv = select_p_loocv(b.deviations.samples, opt.p_grid);
            const auto raw = fit_smoothing_spline(b.deviations.samples, b.loocv.p);
            const double at_center = raw.value(0.0);
            b.trend = raw.shifted(-at_center);
            b.deviations.asf_center += at_center;

            b.detrended = detrend(out.filtered, frame, b.trend, tx);
            std::vector<spatial_sample> resid;
            resid.reserve(b.detrended.points.size());
            for (const auto& p : b.detrended.points) resid.push_back({p.pos, p.eps});
            b.variogram = compute_empirical_variogram(resid, opt.bin_width.value_or(grid.spacing),
                opt.max_lag.value_or(half_extent(out.filtered)));
            b.fit = fit_model(b.variogram, opt.model_kind);

            if (opt.methods.count(map_method::rk))
                b.maps.emplace(map_method::rk, build_map_rk(b.detrended, b.fit.model, frame, grid, tx, opt.kriging));
            if (opt.methods.count(map_method::uk))
                b.maps.emplace(map_method::uk, build_map_uk(b.detrended, b.fit.model, frame, grid, tx, opt.kriging));
        }
        out.transmitters.push_back(std::move(b));
    }
    return out;
}

/// Maps of a build result regrouped as method name -> transmitter -> map.
inline std::map<std::string, map_set> maps_by_method(const build_result& r, const std::string& suffix = "")
{
    std::map<std::string, map_set> out;
    for (const auto& b : r.transmitters)
        for (const auto& [method, map] : b.maps) out[to_string(method) + suffix].emplace(b.tx, map);
    return out;
}

struct evaluate_options {
    /// Screen evaluation epochs with the same MAD filter as the survey.
    bool filter = true;
    double window_sec = 60.0;
    double mad_k = 2.0;
    solver_options solver;
};

inline accuracy_report evaluate(const std::vector<survey_track>& tracks, const std::vector<transmitter>& txs,
    const std::map<std::string, map_set>& maps, const evaluate_options& opt = {})
{
    std::vector<survey_track> used;
    for (const auto& t : tracks) used.push_back(opt.filter ? mad_filter(t, opt.window_sec, opt.mad_k).track : t);
    return evaluate_routes(used, txs, maps, opt.solver);
}

} // namespace asfkit
