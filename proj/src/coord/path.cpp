#include "nhil/coord/path.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

namespace nhil {

PathGeom arc_length_parameterize(std::span<const Eigen::Vector2d> waypoints)
{
    if (waypoints.empty()) {
        throw PathError("path needs at least one waypoint");
    }
    PathGeom path;
    path.waypoints.assign(waypoints.begin(), waypoints.end());
    path.s.resize(waypoints.size(), 0.0);
    path.theta.resize(waypoints.size(), 0.0);
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        const Eigen::Vector2d d = waypoints[i] - waypoints[i - 1];
        const double len = d.norm();
        if (len == 0.0) {
            throw PathError(fmt::format("waypoints {} and {} coincide", i - 1, i));
        }
        path.s[i] = path.s[i - 1] + len;
        path.theta[i - 1] = std::atan2(d.y(), d.x());
    }
    if (waypoints.size() > 1) {
        path.theta.back() = path.theta[waypoints.size() - 2];
    }
    return path;
}

Pose2 PathGeom::pose_at(double arc) const
{
    if (waypoints.size() == 1 || arc <= 0.0) {
        return Pose2{waypoints.front(), theta.front()};
    }
    if (arc >= length()) {
        return Pose2{waypoints.back(), theta.back()};
    }
    const auto it = std::upper_bound(s.begin(), s.end(), arc);
    const auto seg = static_cast<std::size_t>(std::distance(s.begin(), it)) - 1;
    const double t = (arc - s[seg]) / (s[seg + 1] - s[seg]);
    return Pose2{waypoints[seg] + t * (waypoints[seg + 1] - waypoints[seg]), theta[seg]};
}

double PathGeom::project(const Eigen::Vector2d& point, double arc_lo, double arc_hi) const
{
    if (waypoints.size() == 1) {
        return 0.0;
    }
    double best_arc = 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t seg = 0; seg + 1 < waypoints.size(); ++seg) {
        if (s[seg + 1] < arc_lo || s[seg] > arc_hi) {
            continue;
        }
        const Eigen::Vector2d a = waypoints[seg];
        const Eigen::Vector2d ab = waypoints[seg + 1] - a;
        const double t = std::clamp((point - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        const double dist = (a + t * ab - point).squaredNorm();
        if (dist < best_dist) {
            best_dist = dist;
            best_arc = s[seg] + t * (s[seg + 1] - s[seg]);
        }
    }
    if (!std::isfinite(best_dist)) {
        return project(point, 0.0, length());
    }
    return best_arc;
}

} // namespace nhil
