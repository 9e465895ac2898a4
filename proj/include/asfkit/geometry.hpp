#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "error.hpp"

namespace asfkit {

/// Planar east/north position in meters.
using vec2 = Eigen::Vector2d;

/// Along-track / cross-track coordinates. `l` is positive on the
/// `cross_unit` side of the centerline.
struct local_coord {
    double s = 0.0;
    double l = 0.0;
};

/// Straight-waterway frame: origin on the centerline plus an orthonormal
/// (along, cross) basis.
struct waterway_frame {
    vec2 origin = vec2::Zero();
    vec2 along_unit = vec2::UnitX();
    vec2 cross_unit = vec2::UnitY();

    /// Frame from a heading in degrees clockwise from north. The cross axis
    /// points to port (along_unit rotated +90 deg counter-clockwise), so a
    /// heading of 90 gives along = east, cross = north.
    static waterway_frame from_heading(const vec2& origin, double heading_deg)
    {
        const double h = heading_deg * std::numbers::pi / 180.0;
        waterway_frame f;
        f.origin = origin;
        f.along_unit = vec2(std::sin(h), std::cos(h));
        f.cross_unit = vec2(-std::cos(h), std::sin(h));
        return f;
    }

    /// Heading of along_unit, degrees clockwise from north, in [0, 360).
    double heading_deg() const
    {
        double d = std::atan2(along_unit.x(), along_unit.y()) * 180.0 / std::numbers::pi;
        if (d < 0.0) d += 360.0;
        return d;
    }

    bool is_orthonormal(double tol = 1e-12) const
    {
        return std::abs(along_unit.norm() - 1.0) <= tol
            && std::abs(cross_unit.norm() - 1.0) <= tol
            && std::abs(along_unit.dot(cross_unit)) <= tol;
    }

    void validate() const
    {
        if (!is_orthonormal())
            throw validation_error("waterway frame axes are not orthonormal");
    }
};

inline local_coord to_local(const waterway_frame& frame, const vec2& p)
{
    const vec2 d = p - frame.origin;
    return {d.dot(frame.along_unit), d.dot(frame.cross_unit)};
}

inline vec2 to_global(const waterway_frame& frame, const local_coord& c)
{
    return frame.origin + c.s * frame.along_unit + c.l * frame.cross_unit;
}

inline double cross_track(const waterway_frame& frame, const vec2& p)
{
    return (p - frame.origin).dot(frame.cross_unit);
}

} // namespace asfkit
