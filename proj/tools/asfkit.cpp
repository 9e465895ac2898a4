// asfkit command-line front end: simulate, buildmap, evaluate.
#include <CLI11.hpp>

#include <asfkit/asfkit.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace asfkit;

namespace {

/// Collects output files in a scratch directory next to the target and
/// renames it into place once everything has been written.
class staged_output {
public:
    staged_output(const std::string& target, bool force) : target_(target)
    {
        if (fs::exists(target_)) {
            if (!force) throw error("output directory " + target_.string() + " already exists (use --force to replace)");
        }
        const auto parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
        fs::create_directories(parent);
        stage_ = parent / ("." + target_.filename().string() + ".tmp-" + std::to_string(::getpid()));
        fs::remove_all(stage_);
        fs::create_directory(stage_);
    }

    ~staged_output()
    {
        std::error_code ec;
        if (!committed_) fs::remove_all(stage_, ec);
    }

    void write(const std::string& name, const std::string& content)
    {
        text::write_file((stage_ / name).string(), content);
        files_[name] = text::sha256_hex(content);
    }

    /// Writes manifest.txt (extra lines first, then one hash per file) and
    /// moves the directory into place.
    void commit(const std::vector<std::string>& extra)
    {
        std::string m = "# asfkit manifest\n";
        for (const auto& line : extra) m += line + "\n";
        for (const auto& [name, hash] : files_) m += "sha256." + name + " = " + hash + "\n";
        text::write_file((stage_ / "manifest.txt").string(), m);
        if (fs::exists(target_)) fs::remove_all(target_);
        fs::rename(stage_, target_);
        committed_ = true;
    }

private:
    fs::path target_, stage_;
    std::map<std::string, std::string> files_;
    bool committed_ = false;
};

std::string input_hash(const std::string& path) { return text::sha256_hex(text::read_file(path)); }

std::optional<std::pair<double, double>> parse_window(const std::string& s)
{
    const auto parts = text::split(s, ',');
    if (parts.size() != 2) return std::nullopt;
    const auto a = text::parse_double(parts[0]), b = text::parse_double(parts[1]);
    if (!a || !b || *b < *a) return std::nullopt;
    return std::pair{*a, *b};
}

// Cross-track leg window recorded by `simulate` in the manifest beside the track.
std::optional<std::pair<double, double>> window_from_manifest(const std::string& track_path, const std::string& label)
{
    const auto manifest = fs::path(track_path).parent_path() / "manifest.txt";
    if (!fs::exists(manifest)) return std::nullopt;
    const auto kv = key_value_file::parse(text::read_file(manifest.string()));
    const auto key = label + ".cross_window_s";
    if (!kv.has(key)) return std::nullopt;
    return parse_window(kv.get_string(key));
}

struct simulate_args {
    std::string config, out;
    std::optional<long long> seed;
    bool force = false;
};

int cmd_simulate(const simulate_args& a)
{
    auto cfg = load_scenario(a.config);
    if (a.seed) {
        if (*a.seed < 0) throw config_error("seed", "must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(*a.seed);
    }
    const auto sim = synth_survey(cfg);
    staged_output out(a.out, a.force);
    out.write(sim.build.track.label + ".csv", format_track_csv(sim.build.track));
    for (const auto& e : sim.eval) out.write(e.track.label + ".csv", format_track_csv(e.track));
    for (const auto& m : sim.truth_maps) out.write("truth_" + m.tx + ".map", format_map(m));

    std::vector<std::string> extra{"scenario = " + cfg.name, "seed = " + std::to_string(cfg.seed),
        "config_sha256 = " + input_hash(a.config)};
    if (sim.build.cross_t_end >= sim.build.cross_t_begin)
        extra.push_back(sim.build.track.label + ".cross_window_s = " + text::format_exact(sim.build.cross_t_begin) + ","
            + text::format_exact(sim.build.cross_t_end));
    std::string outliers;
    for (auto k : sim.build.outliers) outliers += (outliers.empty() ? "" : ",") + std::to_string(k);
    extra.push_back(sim.build.track.label + ".outlier_rows = " + outliers);
    out.commit(extra);
    std::cout << "wrote " << 1 + sim.eval.size() << " tracks and " << sim.truth_maps.size() << " truth maps to " << a.out
              << "\n";
    return 0;
}

struct buildmap_args {
    std::string scenario, track, method = "all", out, cross_window, model = "exponential";
    double window_sec = 60.0, mad_k = 2.0, grid_m = 100.0, center_band = 5.0, bin_m = 0.0, max_lag = 0.0;
    std::size_t neighbors = 0;
    bool no_cross_leg = false, force = false;
};

int cmd_buildmap(const buildmap_args& a)
{
    const auto cfg = load_scenario(a.scenario);
    const auto track = load_track(a.track);
    track.validate();

    build_options opt;
    opt.window_sec = a.window_sec;
    opt.mad_k = a.mad_k;
    opt.center_band = a.center_band;
    if (a.bin_m > 0) opt.bin_width = a.bin_m;
    if (a.max_lag > 0) opt.max_lag = a.max_lag;
    opt.model_kind = parse_variogram_kind(a.model);
    opt.kriging.neighbors = a.neighbors;
    if (a.method == "all")
        opt.methods = {map_method::linear, map_method::uk, map_method::rk};
    else
        opt.methods = {parse_map_method(a.method)};
    if (opt.methods.count(map_method::truth)) throw validation_error("truth maps come from `simulate`, not `buildmap`");
    if (!a.cross_window.empty()) {
        opt.cross_window = parse_window(a.cross_window);
        if (!opt.cross_window) throw validation_error("--cross-window expects 't_begin,t_end' in seconds");
    } else {
        opt.cross_window = window_from_manifest(a.track, track.label);
    }
    opt.drop_cross_leg = a.no_cross_leg;

    const auto grid = make_grid(cfg.frame, cfg.length, cfg.half_width, a.grid_m);
    const auto result = build_maps(track, cfg.frame, grid, opt);

    staged_output out(a.out, a.force);
    std::string report = "# asfkit build report\ntrack " + track.label + "\nrows " + std::to_string(track.size())
        + "\nrejected " + std::to_string(result.rejected.size()) + "\n";
    for (const auto& b : result.transmitters) {
        for (const auto& [method, m] : b.maps) out.write(to_string(method) + "_" + b.tx + ".map", format_map(m));
        if (b.maps.count(map_method::uk) || b.maps.count(map_method::rk)) {
            out.write("trend_" + b.tx + ".txt", format_trend(b.trend));
            out.write("variogram_" + b.tx + ".txt", format_variogram_report(b.variogram, b.fit));
            report += "tx " + b.tx + " p " + text::format_exact(b.loocv.p) + " asf_center_us "
                + text::format_sig(b.deviations.asf_center, 9) + " trend_samples "
                + std::to_string(b.deviations.samples.size()) + " mu0_us " + text::format_sig(b.detrended.mu0, 9)
                + (b.fit.degenerate ? " variogram degenerate" : "") + "\n";
        }
    }
    out.write("build_report.txt", report);
    out.commit({"track_sha256 = " + input_hash(a.track), "scenario_sha256 = " + input_hash(a.scenario),
        "method = " + a.method, "window_sec = " + text::format_exact(a.window_sec),
        "mad_k = " + text::format_exact(a.mad_k), "grid_m = " + text::format_exact(a.grid_m),
        "cross_leg = " + std::string(a.no_cross_leg ? "dropped" : "kept")});
    std::cout << "built maps for " << result.transmitters.size() << " transmitters (" << result.rejected.size()
              << " rows rejected) in " << a.out << "\n";
    return 0;
}

struct evaluate_args {
    std::string scenario, maps, out, build_track;
    std::vector<std::string> tracks;
    double window_sec = 60.0, mad_k = 2.0;
    bool no_filter = false, force = false;
};

int cmd_evaluate(const evaluate_args& a)
{
    const auto cfg = load_scenario(a.scenario);

    // Method label = file stem without the trailing "_<tx>".
    std::map<std::string, map_set> maps;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.maps))
        if (entry.path().extension() == ".map") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto m = load_map(f.string());
        const auto stem = f.stem().string();
        const auto suffix = "_" + m.tx;
        if (stem.size() <= suffix.size() || stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) != 0)
            throw validation_error("map file " + f.string() + " is not named <method>_" + m.tx + ".map");
        maps[stem.substr(0, stem.size() - suffix.size())].emplace(m.tx, std::move(m));
    }
    if (maps.empty()) throw validation_error("no .map files in " + a.maps);

    std::vector<survey_track> tracks;
    for (const auto& p : a.tracks) tracks.push_back(load_track(p));
    if (!a.build_track.empty()) {
        const auto build = load_track(a.build_track);
        std::set<std::pair<double, double>> seen;
        for (const auto& m : build.measurements) seen.insert({m.pos.x(), m.pos.y()});
        for (const auto& t : tracks) {
            std::size_t shared = 0;
            for (const auto& m : t.measurements) shared += seen.count({m.pos.x(), m.pos.y()});
            if (shared > 0 || input_hash(a.build_track) == text::sha256_hex(format_track_csv(t)))
                std::cerr << "warning: evaluation track " << t.label << " shares " << shared
                          << " positions with build track " << build.label << "; the evaluation is not held out\n";
        }
    }

    evaluate_options opt;
    opt.filter = !a.no_filter;
    opt.window_sec = a.window_sec;
    opt.mad_k = a.mad_k;
    const auto report = evaluate(tracks, cfg.txs(), maps, opt);

    staged_output out(a.out, a.force);
    out.write("epochs.csv", format_epoch_csv(report));
    out.write("summary.txt", format_summary(report));
    std::vector<std::string> extra{"scenario_sha256 = " + input_hash(a.scenario)};
    for (const auto& p : a.tracks) extra.push_back("track_sha256." + fs::path(p).filename().string() + " = " + input_hash(p));
    for (const auto& f : files) extra.push_back("map_sha256." + f.filename().string() + " = " + input_hash(f.string()));
    out.commit(extra);
    std::cout << format_summary(report);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"asfkit: ASF maps for narrow waterways from cross-track trends and kriging"};
    app.require_subcommand(1);

    simulate_args sa;
    auto* sim = app.add_subcommand("simulate", "synthesize survey and evaluation tracks plus truth maps");
    sim->add_option("--config", sa.config, "scenario file")->required()->check(CLI::ExistingFile)->envname("ASFKIT_CONFIG");
    sim->add_option("--out", sa.out, "output directory")->required()->envname("ASFKIT_OUT");
    sim->add_option("--seed", sa.seed, "override the scenario seed")->envname("ASFKIT_SEED");
    sim->add_flag("--force", sa.force, "replace an existing output directory");

    buildmap_args ba;
    auto* bm = app.add_subcommand("buildmap", "filter a survey track, fit trend and variogram, and write ASF maps");
    bm->add_option("--scenario", ba.scenario, "scenario file (waterway frame and extent)")
        ->required()->check(CLI::ExistingFile)->envname("ASFKIT_CONFIG");
    bm->add_option("--track", ba.track, "survey track CSV")->required()->check(CLI::ExistingFile);
    bm->add_option("--method", ba.method, "linear, uk, rk or all")
        ->check(CLI::IsMember({"linear", "uk", "rk", "all"}))->capture_default_str()->envname("ASFKIT_METHOD");
    bm->add_option("--out", ba.out, "output directory")->required()->envname("ASFKIT_OUT");
    bm->add_option("--window-sec", ba.window_sec, "MAD filter window, s")->capture_default_str()->envname("ASFKIT_WINDOW_SEC");
    bm->add_option("--mad-k", ba.mad_k, "MAD rejection multiplier")->capture_default_str()->envname("ASFKIT_MAD_K");
    bm->add_option("--grid-m", ba.grid_m, "map grid spacing, m")->capture_default_str()->envname("ASFKIT_GRID_M");
    bm->add_option("--center-band-m", ba.center_band, "centerline band for the reference ASF, m")->capture_default_str();
    bm->add_option("--bin-m", ba.bin_m, "variogram bin width, m (default: grid spacing)");
    bm->add_option("--max-lag-m", ba.max_lag, "variogram max lag, m (default: half the survey extent)");
    bm->add_option("--model", ba.model, "variogram model")
        ->check(CLI::IsMember({"exponential", "spherical", "gaussian"}))->capture_default_str();
    bm->add_option("--neighbors", ba.neighbors, "kriging neighborhood size (0 = all points)")->capture_default_str();
    bm->add_option("--cross-window", ba.cross_window,
        "time window 't0,t1' of the cross-track leg (default: from manifest.txt beside the track)");
    bm->add_flag("--no-cross-leg", ba.no_cross_leg, "drop the cross-track leg (conventional survey)");
    bm->add_flag("--force", ba.force, "replace an existing output directory");

    evaluate_args ea;
    auto* ev = app.add_subcommand("evaluate", "position evaluation tracks with each map set and report 2-D RMS error");
    ev->add_option("--scenario", ea.scenario, "scenario file (transmitter positions)")
        ->required()->check(CLI::ExistingFile)->envname("ASFKIT_CONFIG");
    ev->add_option("--maps", ea.maps, "directory of <method>_<tx>.map files")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--tracks", ea.tracks, "evaluation track CSVs")->required()->check(CLI::ExistingFile);
    ev->add_option("--build-track", ea.build_track, "build track, to warn about overlap")->check(CLI::ExistingFile);
    ev->add_option("--out", ea.out, "output directory")->required()->envname("ASFKIT_OUT");
    ev->add_option("--window-sec", ea.window_sec, "MAD filter window, s")->capture_default_str()->envname("ASFKIT_WINDOW_SEC");
    ev->add_option("--mad-k", ea.mad_k, "MAD rejection multiplier")->capture_default_str()->envname("ASFKIT_MAD_K");
    ev->add_flag("--no-filter", ea.no_filter, "use every evaluation epoch");
    ev->add_flag("--force", ea.force, "replace an existing output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code != 0) std::cerr << "\n" << app.help();
        return code;
    }

    try {
        if (*sim) return cmd_simulate(sa);
        if (*bm) return cmd_buildmap(ba);
        if (*ev) return cmd_evaluate(ea);
    } catch (const std::exception& e) {
        std::cerr << "asfkit: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
