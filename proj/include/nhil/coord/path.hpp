#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "nhil/coord/geometry.hpp"

namespace nhil {

struct Pose2 {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double theta = 0.0;
};

/// Piecewise-linear path parameterized by arc length. `s[i]` and `theta[i]`
/// belong to waypoint i; theta[i] is the heading of the segment leaving it
/// (the last waypoint repeats the final segment's heading).
struct PathGeom {
    std::vector<Eigen::Vector2d> waypoints;
    std::vector<double> s;
    std::vector<double> theta;

    double length() const { return s.empty() ? 0.0 : s.back(); }

    /// Pose at arc position `arc`, clamped to [0, length].
    Pose2 pose_at(double arc) const;

    /// Arc position of the point on the path nearest to `point`, searched
    /// over segments overlapping [arc_lo, arc_hi].
    double project(const Eigen::Vector2d& point, double arc_lo, double arc_hi) const;
};

class PathError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Throws PathError on an empty list or repeated consecutive waypoints.
PathGeom arc_length_parameterize(std::span<const Eigen::Vector2d> waypoints);

} // namespace nhil
