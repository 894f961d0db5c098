#pragma once

#include <cstdint>
#include <vector>

#include "nhil/coord/geometry.hpp"
#include "nhil/coord/path.hpp"
#include "nhil/coord/robot.hpp"

namespace nhil {

/// Footprint swept along a path, one rectangle per sample at arc positions
/// 0, ds, 2ds, ... plus the path end when it is not a multiple of ds.
struct Envelope {
    double ds = 1.0;
    std::vector<double> arc;
    std::vector<Rect> rects;

    std::int32_t size() const { return static_cast<std::int32_t>(rects.size()); }
    std::int32_t last_index() const { return size() - 1; }

    /// Index of the sample at or before arc position `s`.
    std::int32_t index_at(double s) const;

    /// Arc position of sample `index`, clamped to the valid range.
    double arc_of(std::int32_t index) const;
};

Envelope sweep_envelope(const PathGeom& path, const RobotSpec& spec, double ds);

struct IndexRange {
    std::int32_t lo = 0;
    std::int32_t hi = 0;

    bool contains(std::int32_t i) const { return i >= lo && i <= hi; }
    bool overlaps(const IndexRange& o) const { return lo <= o.hi && o.lo <= hi; }
    bool operator==(const IndexRange&) const = default;
};

/// Index ranges on two envelopes whose samples overlap.
struct CsGeometry {
    IndexRange a;
    IndexRange b;
    bool operator==(const CsGeometry&) const = default;
};

/// Groups all intersecting sample pairs into maximal regions: 8-connected
/// components of the intersection grid, merged while their index boxes
/// overlap on both envelopes. Ordered by (a.lo, b.lo).
std::vector<CsGeometry> find_critical_sections(const Envelope& env_a, const Envelope& env_b);

/// A critical section between the current missions of two robots.
struct CriticalSection {
    std::uint32_t cs_id = 0;
    RobotId robot_a = 0;
    RobotId robot_b = 0;
    std::uint32_t mission_a = 0;
    std::uint32_t mission_b = 0;
    IndexRange range_a;
    IndexRange range_b;

    bool involves(RobotId r) const { return r == robot_a || r == robot_b; }
    RobotId other(RobotId r) const { return r == robot_a ? robot_b : robot_a; }
    const IndexRange& range_of(RobotId r) const { return r == robot_a ? range_a : range_b; }
    std::uint32_t mission_of(RobotId r) const { return r == robot_a ? mission_a : mission_b; }
};

} // namespace nhil
