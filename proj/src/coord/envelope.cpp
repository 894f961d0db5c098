#include "nhil/coord/envelope.hpp"

#include <algorithm>
#include <cmath>

namespace nhil {
namespace {

struct Aabb {
    double min_x, min_y, max_x, max_y;

    bool overlaps(const Aabb& o) const
    {
        return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
    }
};

Aabb bounds_of(const Rect& r)
{
    const double ex = r.half_length * std::abs(std::cos(r.angle)) + r.half_width * std::abs(std::sin(r.angle));
    const double ey = r.half_length * std::abs(std::sin(r.angle)) + r.half_width * std::abs(std::cos(r.angle));
    return Aabb{r.center.x() - ex, r.center.y() - ey, r.center.x() + ex, r.center.y() + ey};
}

} // namespace

std::int32_t Envelope::index_at(double s) const
{
    if (s <= 0.0) {
        return 0;
    }
    const auto it = std::upper_bound(arc.begin(), arc.end(), s);
    return static_cast<std::int32_t>(std::distance(arc.begin(), it)) - 1;
}

double Envelope::arc_of(std::int32_t index) const
{
    return arc[static_cast<std::size_t>(std::clamp(index, 0, last_index()))];
}

Envelope sweep_envelope(const PathGeom& path, const RobotSpec& spec, double ds)
{
    Envelope env;
    env.ds = ds;
    const double length = path.length();
    const auto full_steps = static_cast<std::int64_t>(std::floor(length / ds));
    for (std::int64_t k = 0; k <= full_steps; ++k) {
        env.arc.push_back(static_cast<double>(k) * ds);
    }
    // Keep the end sample unless the last multiple already lands on it.
    if (length - env.arc.back() > 1e-9 * std::max(1.0, length)) {
        env.arc.push_back(length);
    }
    env.rects.reserve(env.arc.size());
    for (double s : env.arc) {
        const Pose2 pose = path.pose_at(s);
        env.rects.push_back(Rect{pose.position, spec.length_m / 2, spec.width_m / 2, pose.theta});
    }
    return env;
}

std::vector<CsGeometry> find_critical_sections(const Envelope& env_a, const Envelope& env_b)
{
    const auto n = static_cast<std::size_t>(env_a.size());
    const auto m = static_cast<std::size_t>(env_b.size());
    std::vector<Aabb> boxes_b(m);
    for (std::size_t j = 0; j < m; ++j) {
        boxes_b[j] = bounds_of(env_b.rects[j]);
    }
    std::vector<char> hit(n * m, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const Aabb box_a = bounds_of(env_a.rects[i]);
        for (std::size_t j = 0; j < m; ++j) {
            if (box_a.overlaps(boxes_b[j]) && obb_intersect(env_a.rects[i], env_b.rects[j])) {
                hit[i * m + j] = 1;
            }
        }
    }

    std::vector<CsGeometry> regions;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n * m; ++start) {
        if (hit[start] != 1) {
            continue;
        }
        CsGeometry region{{static_cast<std::int32_t>(start / m), static_cast<std::int32_t>(start / m)},
                          {static_cast<std::int32_t>(start % m), static_cast<std::int32_t>(start % m)}};
        hit[start] = 2;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t cell = stack.back();
            stack.pop_back();
            const auto i = static_cast<std::int64_t>(cell / m);
            const auto j = static_cast<std::int64_t>(cell % m);
            region.a.lo = std::min<std::int32_t>(region.a.lo, static_cast<std::int32_t>(i));
            region.a.hi = std::max<std::int32_t>(region.a.hi, static_cast<std::int32_t>(i));
            region.b.lo = std::min<std::int32_t>(region.b.lo, static_cast<std::int32_t>(j));
            region.b.hi = std::max<std::int32_t>(region.b.hi, static_cast<std::int32_t>(j));
            for (std::int64_t di = -1; di <= 1; ++di) {
                for (std::int64_t dj = -1; dj <= 1; ++dj) {
                    const std::int64_t ni = i + di;
                    const std::int64_t nj = j + dj;
                    if (ni < 0 || nj < 0 || ni >= static_cast<std::int64_t>(n) || nj >= static_cast<std::int64_t>(m)) {
                        continue;
                    }
                    const std::size_t next = static_cast<std::size_t>(ni) * m + static_cast<std::size_t>(nj);
                    if (hit[next] == 1) {
                        hit[next] = 2;
                        stack.push_back(next);
                    }
                }
            }
        }
        regions.push_back(region);
    }

    // Regions whose boxes overlap on both envelopes describe one conflict.
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t p = 0; p < regions.size() && !merged; ++p) {
            for (std::size_t q = p + 1; q < regions.size(); ++q) {
                if (regions[p].a.overlaps(regions[q].a) && regions[p].b.overlaps(regions[q].b)) {
                    regions[p].a = {std::min(regions[p].a.lo, regions[q].a.lo), std::max(regions[p].a.hi, regions[q].a.hi)};
                    regions[p].b = {std::min(regions[p].b.lo, regions[q].b.lo), std::max(regions[p].b.hi, regions[q].b.hi)};
                    regions.erase(regions.begin() + static_cast<std::ptrdiff_t>(q));
                    merged = true;
                    break;
                }
            }
        }
    }
    std::sort(regions.begin(), regions.end(), [](const CsGeometry& x, const CsGeometry& y) {
        return x.a.lo != y.a.lo ? x.a.lo < y.a.lo : x.b.lo < y.b.lo;
    });
    return regions;
}

} // namespace nhil
