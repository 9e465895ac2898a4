#pragma once

#include <map>
#include <string>
#include <vector>

#include "pipeline.hpp"
#include "simulator.hpp"

namespace asfkit {

/// One full scenario run: simulate, build every map from the build track
/// (plus a linear map without the cross-track leg) and position the held-out
/// routes with each map set.
struct benchmark_run {
    simulation sim;
    build_result build;
    build_result build_nocross;
    accuracy_report report;
};

inline benchmark_run run_benchmark(const scenario_config& cfg, build_options opt = {}, const evaluate_options& eval = {})
{
    benchmark_run out;
    out.sim = synth_survey(cfg);
    const auto grid = cfg.grid();
    if (out.sim.build.cross_t_end >= out.sim.build.cross_t_begin)
        opt.cross_window = {{out.sim.build.cross_t_begin, out.sim.build.cross_t_end}};
    out.build = build_maps(out.sim.build.track, cfg.frame, grid, opt);
    auto maps = maps_by_method(out.build);

    if (opt.cross_window) {
        auto nc = opt;
        nc.drop_cross_leg = true;
        nc.methods = {map_method::linear};
        out.build_nocross = build_maps(out.sim.build.track, cfg.frame, grid, nc);
        for (auto& [method, set] : maps_by_method(out.build_nocross, "_nocross")) maps.emplace(method, std::move(set));
    }

    std::vector<survey_track> tracks;
    for (const auto& e : out.sim.eval) tracks.push_back(e.track);
    out.report = evaluate(tracks, cfg.txs(), maps, eval);
    return out;
}

} // namespace asfkit
