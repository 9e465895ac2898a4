#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "stats.hpp"
#include "text.hpp"

namespace asfkit {

/// One survey sample. ASF and TOA values are in microseconds, keyed by
/// transmitter id.
struct survey_measurement {
    double t = 0.0;
    vec2 pos = vec2::Zero();
    std::map<std::string, double> asf;
    std::map<std::string, double> toa;
};

struct survey_track {
    std::string label;
    std::vector<survey_measurement> measurements;

    std::size_t size() const { return measurements.size(); }
    bool empty() const { return measurements.empty(); }

    /// Transmitter ids that carry an ASF value in every row.
    std::vector<std::string> transmitters() const
    {
        std::vector<std::string> out;
        if (measurements.empty()) return out;
        for (const auto& [id, v] : measurements.front().asf) {
            const bool everywhere = std::all_of(measurements.begin(), measurements.end(),
                [&](const survey_measurement& m) { return m.asf.count(id) != 0; });
            if (everywhere) out.push_back(id);
        }
        return out;
    }

    void validate() const
    {
        if (measurements.empty()) throw validation_error("survey track '" + label + "' is empty");
        for (std::size_t i = 0; i < measurements.size(); ++i) {
            const auto& m = measurements[i];
            for (const auto& [id, v] : m.asf)
                if (!std::isfinite(v))
                    throw validation_error("non-finite ASF for transmitter " + id + " at row "
                        + std::to_string(i));
            if (i > 0 && !(m.t > measurements[i - 1].t))
                throw validation_error("timestamps not strictly increasing at row "
                    + std::to_string(i) + " of track '" + label + "'");
        }
    }
};

// ---------------------------------------------------------------------------
// CSV I/O
//
// Header: t_sec,east_m,north_m,asf_<tx>_us...,toa_<tx>_us...
// Values are written in shortest round-trip form so a reload is bit-exact.

inline std::string format_track_csv(const survey_track& track)
{
    std::set<std::string> asf_ids, toa_ids;
    for (const auto& m : track.measurements) {
        for (const auto& [id, v] : m.asf) asf_ids.insert(id);
        for (const auto& [id, v] : m.toa) toa_ids.insert(id);
    }
    std::string out = "t_sec,east_m,north_m";
    for (const auto& id : asf_ids) out += ",asf_" + id + "_us";
    for (const auto& id : toa_ids) out += ",toa_" + id + "_us";
    out += '\n';
    for (const auto& m : track.measurements) {
        out += text::format_exact(m.t);
        out += ',' + text::format_exact(m.pos.x());
        out += ',' + text::format_exact(m.pos.y());
        for (const auto& id : asf_ids) out += ',' + text::format_exact(m.asf.at(id));
        for (const auto& id : toa_ids) out += ',' + text::format_exact(m.toa.at(id));
        out += '\n';
    }
    return out;
}

inline void write_track(const std::string& path, const survey_track& track)
{
    text::write_file(path, format_track_csv(track));
}

inline survey_track parse_track_csv(const std::string& content, std::string label)
{
    const auto rows = text::lines(content);
    if (rows.empty()) throw parse_error("missing header row", 1);

    enum class kind { t, east, north, asf, toa };
    struct column {
        kind k;
        std::string tx;
    };
    std::vector<column> cols;
    bool has_t = false, has_e = false, has_n = false;
    for (auto name : text::split(rows[0], ',')) {
        if (name == "t_sec") {
            cols.push_back({kind::t, {}});
            has_t = true;
        } else if (name == "east_m") {
            cols.push_back({kind::east, {}});
            has_e = true;
        } else if (name == "north_m") {
            cols.push_back({kind::north, {}});
            has_n = true;
        } else if ((text::starts_with(name, "asf_") || text::starts_with(name, "toa_"))
            && name.size() > 7 && name.substr(name.size() - 3) == "_us") {
            const auto tx = std::string(name.substr(4, name.size() - 7));
            cols.push_back({name[0] == 'a' ? kind::asf : kind::toa, tx});
        } else {
            throw parse_error("unknown column '" + std::string(name) + "'", 1);
        }
    }
    if (!has_t || !has_e || !has_n) throw parse_error("header must contain t_sec, east_m, north_m", 1);

    survey_track track;
    track.label = std::move(label);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (text::trim(rows[r]).empty()) continue;
        const auto fields = text::split(rows[r], ',');
        if (fields.size() != cols.size())
            throw parse_error("expected " + std::to_string(cols.size()) + " fields, got "
                + std::to_string(fields.size()), r + 1);
        survey_measurement m;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const auto v = text::parse_double(fields[c]);
            if (!v) throw parse_error("non-numeric field '" + std::string(fields[c]) + "'", r + 1);
            switch (cols[c].k) {
            case kind::t: m.t = *v; break;
            case kind::east: m.pos.x() = *v; break;
            case kind::north: m.pos.y() = *v; break;
            case kind::asf:
                if (!std::isfinite(*v)) throw parse_error("non-finite ASF", r + 1);
                m.asf[cols[c].tx] = *v;
                break;
            case kind::toa: m.toa[cols[c].tx] = *v; break;
            }
        }
        if (!track.measurements.empty() && !(m.t > track.measurements.back().t))
            throw validation_error("timestamps not strictly increasing at line " + std::to_string(r + 1));
        track.measurements.push_back(std::move(m));
    }
    return track;
}

inline survey_track load_track(const std::string& path)
{
    std::string label = path;
    if (auto slash = label.find_last_of('/'); slash != std::string::npos) label = label.substr(slash + 1);
    if (auto dot = label.rfind('.'); dot != std::string::npos) label = label.substr(0, dot);
    return parse_track_csv(text::read_file(path), label);
}

// ---------------------------------------------------------------------------
// Outlier removal

struct mad_filter_result {
    survey_track track;
    std::vector<std::size_t> rejected;
};

/// Sliding-window MAD screen. For every transmitter and every row, the
/// median m and unscaled MAD of the ASF values with timestamps inside
/// [t - window/2, t + window/2] are computed; the row is rejected when
/// |asf - m| > k * MAD for any transmitter. Windows with a single sample
/// never reject.
inline mad_filter_result mad_filter(const survey_track& track, double window_sec = 60.0, double k = 2.0)
{
    if (!(window_sec > 0.0)) throw validation_error("MAD window must be positive");
    if (!(k > 0.0)) throw validation_error("MAD multiplier must be positive");

    const auto& ms = track.measurements;
    const std::size_t n = ms.size();
    const double half = 0.5 * window_sec;
    std::vector<char> reject(n, 0);
    std::vector<double> window;

    for (const auto& tx : track.transmitters()) {
        std::size_t lo = 0, hi = 0; // window is [lo, hi)
        for (std::size_t i = 0; i < n; ++i) {
            while (ms[lo].t < ms[i].t - half) ++lo;
            while (hi < n && ms[hi].t <= ms[i].t + half) ++hi;
            if (hi - lo < 2) continue;
            window.clear();
            for (std::size_t j = lo; j < hi; ++j) window.push_back(ms[j].asf.at(tx));
            const double m = stats::median(window);
            const double dev = stats::mad(window, m);
            if (std::abs(ms[i].asf.at(tx) - m) > k * dev) reject[i] = 1;
        }
    }

    mad_filter_result out;
    out.track.label = track.label;
    for (std::size_t i = 0; i < n; ++i) {
        if (reject[i])
            out.rejected.push_back(i);
        else
            out.track.measurements.push_back(ms[i]);
    }
    return out;
}

} // namespace asfkit
