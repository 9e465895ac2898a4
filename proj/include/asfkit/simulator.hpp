#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "config.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "mapgen.hpp"
#include "positioning.hpp"
#include "random.hpp"
#include "survey.hpp"

namespace asfkit {

/// Truth ASF field parameters of one transmitter.
struct field_params {
    double center_offset = 0.0;     ///< µs at s = 0, l = 0
    double profile_amplitude = 0.0; ///< µs, profile value at l = +half_width
    double profile_asymmetry = 0.5; ///< share of the odd (linear) profile term, [0, 1]
    double drift_per_km = 0.0;      ///< µs per km along track
    double gp_sill = 0.0;           ///< µs^2
    double gp_range = 300.0;        ///< m
};

struct scenario_transmitter {
    transmitter tx;
    field_params field;
};

struct survey_plan {
    double speed = 3.0;          ///< m/s
    double sample_rate = 1.0;    ///< Hz
    double end_margin = 10.0;    ///< m kept clear of both waterway ends
    double weave_amplitude = 15; ///< m, build route meander around the centerline
    double weave_period = 600;   ///< m
    double cross_center = 1500;  ///< along-track position of the cross-track leg, m
    double cross_span = 200;     ///< along-track extent of the cross-track leg, m
    double cross_reach = 110;    ///< |l| reached on each crossing, m
    int crossings = 4;
    std::vector<double> eval_offsets{-85, -35, 40, 90}; ///< m, one evaluation route each
    double eval_weave_amplitude = 5; ///< m
};

struct scenario_config {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    waterway_frame frame;
    double half_width = 120.0;
    double length = 3000.0;
    double grid_spacing = 100.0;
    std::vector<scenario_transmitter> transmitters;
    survey_plan plan;
    double noise_sigma = 0.05;    ///< µs
    double outlier_rate = 0.02;
    double outlier_magnitude = 0.5; ///< µs
    double clock_bias = 3.0;        ///< µs at t = 0
    double clock_drift = 1e-4;      ///< µs/s
    int gp_components = 256;

    std::vector<transmitter> txs() const
    {
        std::vector<transmitter> out;
        for (const auto& t : transmitters) out.push_back(t.tx);
        return out;
    }

    grid_spec grid() const { return make_grid(frame, length, half_width, grid_spacing); }

    void validate() const
    {
        frame.validate();
        if (!(half_width > 0.0)) throw config_error("waterway.half_width_m", "must be positive");
        if (!(length > 0.0)) throw config_error("waterway.length_m", "must be positive");
        if (!(grid_spacing > 0.0)) throw config_error("grid.spacing_m", "must be positive");
        if (!(plan.sample_rate > 0.0)) throw config_error("survey.sample_rate_hz", "must be positive");
        if (!(plan.speed > 0.0)) throw config_error("survey.speed_mps", "must be positive");
        if (plan.crossings < 0) throw config_error("survey.crossings", "must be non-negative");
        if (!(noise_sigma >= 0.0)) throw config_error("noise.sigma_us", "must be non-negative");
        if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0)) throw config_error("noise.outlier_rate", "must lie in [0, 1]");
        if (transmitters.empty()) throw config_error("transmitters", "at least one transmitter required");
        for (std::size_t i = 0; i < transmitters.size(); ++i) {
            const auto& f = transmitters[i].field;
            const auto key = "tx." + transmitters[i].tx.id;
            if (!(f.gp_sill >= 0.0)) throw config_error(key + ".gp_sill_us2", "must be non-negative");
            if (!(f.gp_range > 0.0)) throw config_error(key + ".gp_range_m", "must be positive");
            for (std::size_t j = 0; j < i; ++j)
                if ((transmitters[j].tx.pos - transmitters[i].tx.pos).norm() == 0.0)
                    throw config_error(key + ".east_m", "transmitter positions must be distinct");
        }
    }
};

/// Parses the key-value scenario format (see scenarios/narrowwater-1.cfg).
inline scenario_config parse_scenario(const std::string& content)
{
    const auto kv = key_value_file::parse(content);
    scenario_config c;
    c.name = kv.get_string("name");
    const auto seed = kv.get_int("seed");
    if (seed < 0) throw config_error("seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);
    c.frame = waterway_frame::from_heading({kv.get_double("frame.origin_east_m"), kv.get_double("frame.origin_north_m")},
        kv.get_double("frame.heading_deg"));
    c.half_width = kv.get_double("waterway.half_width_m");
    c.length = kv.get_double("waterway.length_m");
    c.grid_spacing = kv.get_double("grid.spacing_m", 100.0);

    for (const auto& id : kv.get_strings("transmitters")) {
        const auto k = "tx." + id + ".";
        scenario_transmitter t;
        t.tx.id = id;
        t.tx.pos = {kv.get_double(k + "east_m"), kv.get_double(k + "north_m")};
        t.field.center_offset = kv.get_double(k + "center_offset_us");
        t.field.profile_amplitude = kv.get_double(k + "profile_amplitude_us");
        t.field.profile_asymmetry = kv.get_double(k + "profile_asymmetry");
        t.field.drift_per_km = kv.get_double(k + "drift_us_per_km");
        t.field.gp_sill = kv.get_double(k + "gp_sill_us2");
        t.field.gp_range = kv.get_double(k + "gp_range_m");
        c.transmitters.push_back(t);
    }

    auto& p = c.plan;
    p.speed = kv.get_double("survey.speed_mps");
    p.sample_rate = kv.get_double("survey.sample_rate_hz");
    p.end_margin = kv.get_double("survey.end_margin_m", p.end_margin);
    p.weave_amplitude = kv.get_double("survey.weave_amplitude_m");
    p.weave_period = kv.get_double("survey.weave_period_m");
    p.cross_center = kv.get_double("survey.cross_center_m");
    p.cross_span = kv.get_double("survey.cross_span_m");
    p.cross_reach = kv.get_double("survey.cross_reach_m");
    p.crossings = static_cast<int>(kv.get_int("survey.crossings"));
    p.eval_offsets = kv.get_doubles("eval.offsets_m");
    p.eval_weave_amplitude = kv.get_double("eval.weave_amplitude_m");

    c.noise_sigma = kv.get_double("noise.sigma_us");
    c.outlier_rate = kv.get_double("noise.outlier_rate");
    c.outlier_magnitude = kv.get_double("noise.outlier_magnitude_us");
    c.clock_bias = kv.get_double("clock.bias_us");
    c.clock_drift = kv.get_double("clock.drift_us_per_s");
    if (kv.has("field.gp_components")) c.gp_components = static_cast<int>(kv.get_int("field.gp_components"));
    kv.reject_unused();
    c.validate();
    return c;
}

inline scenario_config load_scenario(const std::string& path) { return parse_scenario(text::read_file(path)); }

/// Deterministic truth ASF fields of a scenario:
///   offset + profile(l) + drift * s + g(x)
/// with profile(l) = A (a u + (1 - a) u^2), u = l / half_width, and g a
/// stationary Gaussian-covariance random field (sill, range) realized by
/// seeded sum-of-cosines spectral synthesis.
class truth_field {
public:
    explicit truth_field(const scenario_config& cfg) : cfg_(cfg)
    {
        for (std::size_t i = 0; i < cfg.transmitters.size(); ++i) {
            const auto& t = cfg.transmitters[i];
            component_set set;
            if (t.field.gp_sill > 0.0 && cfg.gp_components > 0) {
                rng r(mix_seed(cfg.seed, 1000 + i));
                // C(h) = sill exp(-(h/a)^2) has a Gaussian spectral measure
                // with per-axis standard deviation sqrt(2) / a.
                const double k_sd = std::sqrt(2.0) / t.field.gp_range;
                set.amplitude = std::sqrt(2.0 * t.field.gp_sill / cfg.gp_components);
                for (int m = 0; m < cfg.gp_components; ++m) {
                    const double kx = k_sd * r.normal();
                    const double ky = k_sd * r.normal();
                    const double phase = r.uniform(0.0, 2.0 * std::numbers::pi);
                    set.waves.push_back({kx, ky, phase});
                }
            }
            fields_.emplace(t.tx.id, std::pair{t.field, std::move(set)});
        }
    }

    double profile(const std::string& tx, double l) const
    {
        const auto& f = find(tx).first;
        const double u = l / cfg_.half_width;
        return f.profile_amplitude * (f.profile_asymmetry * u + (1.0 - f.profile_asymmetry) * u * u);
    }

    double correlated(const std::string& tx, const vec2& p) const
    {
        const auto& set = find(tx).second;
        double g = 0.0;
        for (const auto& w : set.waves) g += std::cos(w.kx * p.x() + w.ky * p.y() + w.phase);
        return set.amplitude * g;
    }

    double operator()(const std::string& tx, const vec2& p) const
    {
        const auto& f = find(tx).first;
        const auto c = to_local(cfg_.frame, p);
        return f.center_offset + profile(tx, c.l) + f.drift_per_km * c.s / 1000.0 + correlated(tx, p);
    }

    const scenario_config& config() const { return cfg_; }

private:
    struct wave {
        double kx, ky, phase;
    };
    struct component_set {
        double amplitude = 0.0;
        std::vector<wave> waves;
    };

    const std::pair<field_params, component_set>& find(const std::string& tx) const
    {
        const auto it = fields_.find(tx);
        if (it == fields_.end()) throw validation_error("unknown transmitter " + tx);
        return it->second;
    }

    scenario_config cfg_;
    std::map<std::string, std::pair<field_params, component_set>> fields_;
};

inline double truth_asf(const truth_field& field, const std::string& tx, const vec2& p) { return field(tx, p); }

/// Planned vessel path in (s, l) and the time span of the cross-track leg.
struct planned_route {
    std::string label;
    std::vector<local_coord> samples;
    double t0 = 0.0;
    double cross_t_begin = 0.0, cross_t_end = -1.0; ///< empty when end < begin
};

namespace detail {

/// Resamples a dense polyline at equal arc-length steps.
inline std::vector<local_coord> resample(const std::vector<local_coord>& poly, double step)
{
    std::vector<local_coord> out;
    if (poly.empty()) return out;
    out.push_back(poly.front());
    double carried = 0.0; // distance travelled since the last sample
    for (std::size_t i = 1; i < poly.size(); ++i) {
        const double ds = poly[i].s - poly[i - 1].s, dl = poly[i].l - poly[i - 1].l;
        const double seg = std::hypot(ds, dl);
        double pos = step - carried;
        while (pos <= seg) {
            const double f = pos / seg;
            out.push_back({poly[i - 1].s + f * ds, poly[i - 1].l + f * dl});
            pos += step;
        }
        carried = seg - (pos - step);
    }
    return out;
}

inline void append_weave(std::vector<local_coord>& poly, double s0, double s1, double amplitude, double period,
    double phase)
{
    const double dir = s1 >= s0 ? 1.0 : -1.0;
    const auto n = static_cast<int>(std::ceil(std::abs(s1 - s0)));
    for (int k = 0; k <= n; ++k) {
        const double s = k == n ? s1 : s0 + dir * k;
        poly.push_back({s, amplitude * std::sin(2.0 * std::numbers::pi * s / period + phase)});
    }
}

} // namespace detail

/// Build route: meandering along-track pass with a zig-zag cross-track leg
/// centred at plan.cross_center.
inline planned_route plan_build_route(const scenario_config& cfg)
{
    const auto& p = cfg.plan;
    const double s_begin = p.end_margin, s_end = cfg.length - p.end_margin;
    const double c0 = p.cross_center - 0.5 * p.cross_span, c1 = p.cross_center + 0.5 * p.cross_span;
    if (p.crossings > 0 && (c0 < s_begin || c1 > s_end))
        throw config_error("survey.cross_center_m", "cross-track leg leaves the waterway");
    const double step = p.speed / p.sample_rate;

    planned_route r;
    r.label = "route1";
    std::vector<local_coord> poly;
    if (p.crossings == 0) {
        detail::append_weave(poly, s_begin, s_end, p.weave_amplitude, p.weave_period, 0.0);
        r.samples = detail::resample(poly, step);
        return r;
    }
    detail::append_weave(poly, s_begin, c0, p.weave_amplitude, p.weave_period, 0.0);
    const std::size_t leg_first_vertex = poly.size() - 1;
    for (int k = 1; k <= p.crossings; ++k)
        poly.push_back({c0 + p.cross_span * (k - 0.5) / p.crossings, (k % 2 ? 1.0 : -1.0) * p.cross_reach});
    std::vector<local_coord> tail;
    detail::append_weave(tail, c1, s_end, p.weave_amplitude, p.weave_period, 0.0);
    const std::size_t leg_last_vertex = poly.size();
    poly.insert(poly.end(), tail.begin(), tail.end());

    // Arc length at the leg boundaries gives its time window.
    double arc = 0.0, arc0 = 0.0, arc1 = 0.0;
    for (std::size_t i = 1; i < poly.size(); ++i) {
        arc += std::hypot(poly[i].s - poly[i - 1].s, poly[i].l - poly[i - 1].l);
        if (i == leg_first_vertex) arc0 = arc;
        if (i == leg_last_vertex) arc1 = arc;
    }
    r.cross_t_begin = arc0 / p.speed;
    r.cross_t_end = arc1 / p.speed;
    r.samples = detail::resample(poly, step);
    return r;
}

/// Evaluation routes at fixed cross-track offsets, alternating direction.
inline std::vector<planned_route> plan_eval_routes(const scenario_config& cfg)
{
    const auto& p = cfg.plan;
    std::vector<planned_route> out;
    for (std::size_t i = 0; i < p.eval_offsets.size(); ++i) {
        const double s0 = i % 2 ? cfg.length - p.end_margin : p.end_margin;
        const double s1 = i % 2 ? p.end_margin : cfg.length - p.end_margin;
        std::vector<local_coord> poly;
        detail::append_weave(poly, s0, s1, p.eval_weave_amplitude, p.weave_period, 1.0 + static_cast<double>(i));
        for (auto& c : poly) c.l += p.eval_offsets[i];
        planned_route r;
        r.label = "route" + std::to_string(i + 2);
        r.samples = detail::resample(poly, p.speed / p.sample_rate);
        out.push_back(std::move(r));
    }
    return out;
}

struct simulated_track {
    survey_track track;
    std::vector<std::size_t> outliers; ///< row indices with injected outliers (any transmitter)
    double cross_t_begin = 0.0, cross_t_end = -1.0;
};

struct simulation {
    scenario_config config;
    simulated_track build;
    std::vector<simulated_track> eval;
    std::vector<asf_map> truth_maps;
};

inline simulated_track synth_track(const scenario_config& cfg, const truth_field& field, const planned_route& route,
    std::uint64_t stream)
{
    rng r(mix_seed(cfg.seed, stream));
    simulated_track out;
    out.track.label = route.label;
    out.cross_t_begin = route.cross_t_begin;
    out.cross_t_end = route.cross_t_end;
    for (std::size_t k = 0; k < route.samples.size(); ++k) {
        const auto& c = route.samples[k];
        if (std::abs(c.l) > cfg.half_width)
            throw config_error("survey.cross_reach_m", "planned path leaves the waterway (|l| = "
                + text::format_sig(std::abs(c.l), 6) + " m)");
        survey_measurement m;
        m.t = route.t0 + static_cast<double>(k) / cfg.plan.sample_rate;
        m.pos = to_global(cfg.frame, c);
        const double bias = cfg.clock_bias + cfg.clock_drift * m.t;
        bool outlier = false;
        for (const auto& t : cfg.transmitters) {
            const double truth = field(t.tx.id, m.pos);
            double asf = truth + cfg.noise_sigma * r.normal();
            if (r.bernoulli(cfg.outlier_rate)) {
                asf = truth + (r.uniform() < 0.5 ? -1.0 : 1.0) * cfg.outlier_magnitude;
                outlier = true;
            }
            m.asf[t.tx.id] = asf;
            m.toa[t.tx.id] = (m.pos - t.tx.pos).norm() / speed_of_light + asf + bias;
        }
        if (outlier) out.outliers.push_back(k);
        out.track.measurements.push_back(std::move(m));
    }
    out.track.validate();
    return out;
}

inline asf_map rasterize_truth(const truth_field& field, const std::string& tx, const grid_spec& grid)
{
    auto map = asf_map::blank(tx, grid, map_method::truth);
    for (std::size_t i = 0; i < grid.rows; ++i)
        for (std::size_t j = 0; j < grid.cols; ++j) map.at(i, j) = field(tx, grid.node(i, j));
    return map;
}

/// Full scenario: build track, evaluation tracks and truth maps.
inline simulation synth_survey(const scenario_config& cfg)
{
    cfg.validate();
    const truth_field field(cfg);
    simulation sim;
    sim.config = cfg;
    sim.build = synth_track(cfg, field, plan_build_route(cfg), 1);
    const auto routes = plan_eval_routes(cfg);
    for (std::size_t i = 0; i < routes.size(); ++i) sim.eval.push_back(synth_track(cfg, field, routes[i], 2 + i));
    const auto grid = cfg.grid();
    for (const auto& t : cfg.transmitters) sim.truth_maps.push_back(rasterize_truth(field, t.tx.id, grid));
    return sim;
}

} // namespace asfkit
