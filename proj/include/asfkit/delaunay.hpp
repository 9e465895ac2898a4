#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"

namespace asfkit {

/// Bowyer-Watson Delaunay triangulation of planar points. Coordinates are
/// centered and scaled before insertion and predicates are evaluated in
/// long double.
class delaunay_triangulation {
public:
    using triangle = std::array<std::size_t, 3>; // counter-clockwise

    explicit delaunay_triangulation(std::vector<vec2> points) : points_(std::move(points))
    {
        if (points_.size() < 3) throw validation_error("triangulation needs at least 3 points");
        check_not_collinear();
        build();
    }

    const std::vector<vec2>& points() const { return points_; }
    const std::vector<triangle>& triangles() const { return tris_; }

    /// Containing triangle and barycentric weights, or nullopt outside the
    /// triangulated hull.
    std::optional<std::pair<std::size_t, std::array<double, 3>>> locate(const vec2& q) const
    {
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            const auto& [i, j, k] = tris_[t];
            const vec2& a = points_[i];
            const vec2& b = points_[j];
            const vec2& c = points_[k];
            const double det = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
            const double wb = ((q - a).x() * (c - a).y() - (q - a).y() * (c - a).x()) / det;
            const double wc = ((b - a).x() * (q - a).y() - (b - a).y() * (q - a).x()) / det;
            const double wa = 1.0 - wb - wc;
            constexpr double tol = -1e-12;
            if (wa >= tol && wb >= tol && wc >= tol) return std::pair{t, std::array{wa, wb, wc}};
        }
        return std::nullopt;
    }

private:
    using ld = long double;

    struct lpoint {
        ld x, y;
    };

    static ld orient(const lpoint& a, const lpoint& b, const lpoint& c)
    {
        return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    }

    /// > 0 when d is strictly inside the circumcircle of ccw triangle abc.
    static ld incircle(const lpoint& a, const lpoint& b, const lpoint& c, const lpoint& d)
    {
        const ld adx = a.x - d.x, ady = a.y - d.y;
        const ld bdx = b.x - d.x, bdy = b.y - d.y;
        const ld cdx = c.x - d.x, cdy = c.y - d.y;
        const ld ad = adx * adx + ady * ady;
        const ld bd = bdx * bdx + bdy * bdy;
        const ld cd = cdx * cdx + cdy * cdy;
        return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
    }

    void check_not_collinear() const
    {
        // Farthest pair from the first point, then the largest offset from
        // that line.
        std::size_t far = 0;
        double dmax = 0.0;
        for (std::size_t i = 1; i < points_.size(); ++i)
            if (const double d = (points_[i] - points_[0]).norm(); d > dmax) {
                dmax = d;
                far = i;
            }
        if (dmax == 0.0) throw validation_error("all survey points coincide; no 2-D triangulation");
        const vec2 u = (points_[far] - points_[0]) / dmax;
        double off = 0.0;
        for (const auto& p : points_) {
            const vec2 d = p - points_[0];
            off = std::max(off, std::abs(u.x() * d.y() - u.y() * d.x()));
        }
        if (off <= 1e-9 * dmax) throw validation_error("survey points are collinear; no 2-D triangulation");
    }

    void build()
    {
        const std::size_t n = points_.size();
        vec2 lo = points_[0], hi = points_[0];
        for (const auto& p : points_) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const vec2 mid = 0.5 * (lo + hi);
        const double scale = std::max((hi - lo).maxCoeff(), 1e-300);

        std::vector<lpoint> lp;
        lp.reserve(n + 3);
        for (const auto& p : points_) lp.push_back({ld((p.x() - mid.x()) / scale), ld((p.y() - mid.y()) / scale)});
        constexpr ld big = 1e5L;
        lp.push_back({-3 * big, -3 * big});
        lp.push_back({3 * big, -3 * big});
        lp.push_back({0, 3 * big});

        std::vector<triangle> tris{{n, n + 1, n + 2}};
        std::vector<triangle> bad, keep;
        std::vector<std::pair<std::size_t, std::size_t>> edges;

        for (std::size_t ip = 0; ip < n; ++ip) {
            const auto& p = lp[ip];
            bad.clear();
            keep.clear();
            for (const auto& t : tris)
                (incircle(lp[t[0]], lp[t[1]], lp[t[2]], p) > 0 ? bad : keep).push_back(t);
            if (bad.empty()) continue; // duplicate of an existing vertex

            edges.clear();
            for (const auto& t : bad)
                for (int e = 0; e < 3; ++e) edges.emplace_back(t[e], t[(e + 1) % 3]);
            tris.swap(keep);
            for (const auto& [a, b] : edges) {
                const bool shared = std::any_of(edges.begin(), edges.end(),
                    [&](const auto& o) { return o.first == b && o.second == a; });
                if (shared) continue;
                if (orient(lp[a], lp[b], p) > 0) tris.push_back({a, b, ip});
            }
        }
        for (const auto& t : tris)
            if (t[0] < n && t[1] < n && t[2] < n) tris_.push_back(t);
        if (tris_.empty()) throw validation_error("triangulation produced no triangles");
    }

    std::vector<vec2> points_;
    std::vector<triangle> tris_;
};

/// Piecewise-linear interpolation over a Delaunay triangulation, with
/// nearest-point fallback outside the hull.
class linear_interpolator {
public:
    linear_interpolator(std::vector<vec2> points, std::vector<double> values)
        : tri_(std::move(points)), values_(std::move(values))
    {
        if (values_.size() != tri_.points().size()) throw validation_error("point/value count mismatch");
    }

    /// Barycentric value inside the hull, nullopt outside.
    std::optional<double> interpolate(const vec2& q) const
    {
        const auto hit = tri_.locate(q);
        if (!hit) return std::nullopt;
        const auto& [t, w] = *hit;
        const auto& tri = tri_.triangles()[t];
        return w[0] * values_[tri[0]] + w[1] * values_[tri[1]] + w[2] * values_[tri[2]];
    }

    double nearest(const vec2& q) const
    {
        const auto& pts = tri_.points();
        std::size_t best = 0;
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (const double d = (pts[i] - q).squaredNorm(); d < dmin) {
                dmin = d;
                best = i;
            }
        return values_[best];
    }

    const delaunay_triangulation& triangulation() const { return tri_; }

private:
    delaunay_triangulation tri_;
    std::vector<double> values_;
};

} // namespace asfkit
