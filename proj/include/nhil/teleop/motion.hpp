#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "nhil/common/vec.hpp"
#include "nhil/netchan/random.hpp"

namespace nhil {

/// Synthetic operator swing: y = y0 + amplitude * sin(2 pi t / loop_period),
/// x fixed, sampled at rate_hz.
struct MotionProfile {
    double rate_hz = 125.0;
    double loop_period_s = 4.033;
    std::uint32_t loops = 890;
    double amplitude_m = 0.3;
    Eigen::Vector2d center{0.0, 0.0};

    /// round(rate * loop_period * loops).
    std::size_t sample_count() const;
    Nanos frame_time_ns(std::size_t k) const;

    /// Throws std::invalid_argument naming the field.
    void validate() const;
};

struct SwingSample {
    Nanos t_ns = 0;
    Eigen::Vector2d point = Eigen::Vector2d::Zero();
};

std::vector<SwingSample> generate_swing(const MotionProfile& profile);

/// robot_center + scale * (human - human_center).
template <typename Scalar>
Vec2<Scalar> map_motion(const Vec2<Scalar>& human, const Vec2<Scalar>& human_center, const Vec2<Scalar>& robot_center,
                        Scalar scale)
{
    return robot_center + scale * (human - human_center);
}

template <typename Scalar>
Vec2<Scalar> fk_2link(Scalar q1, Scalar q2, Scalar l1, Scalar l2)
{
    using std::cos;
    using std::sin;
    return Vec2<Scalar>(l1 * cos(q1) + l2 * cos(q1 + q2), l1 * sin(q1) + l2 * sin(q1 + q2));
}

/// Down keeps q2 >= 0, Up keeps q2 <= 0.
enum class ElbowBranch { Down, Up };

class ReachabilityError : public std::domain_error {
public:
    ReachabilityError(double distance, double min_reach, double max_reach)
        : std::domain_error(fmt::format("target at distance {} m is outside the reachable annulus [{}, {}] m", distance,
                                        min_reach, max_reach)),
          distance_(distance),
          min_reach_(min_reach),
          max_reach_(max_reach)
    {
    }

    double distance() const noexcept { return distance_; }
    double min_reach() const noexcept { return min_reach_; }
    double max_reach() const noexcept { return max_reach_; }

private:
    double distance_;
    double min_reach_;
    double max_reach_;
};

inline constexpr double kReachTolerance = 1e-9;

template <typename Scalar>
std::pair<Scalar, Scalar> ik_2link(const Vec2<Scalar>& target, Scalar l1, Scalar l2, ElbowBranch branch)
{
    using std::abs;
    using std::acos;
    using std::atan2;
    using std::cos;
    using std::sin;
    const Scalar r2 = target.squaredNorm();
    const Scalar r = std::sqrt(r2);
    const Scalar min_reach = abs(l1 - l2);
    const Scalar max_reach = l1 + l2;
    if (r < min_reach - Scalar(kReachTolerance) || r > max_reach + Scalar(kReachTolerance)) {
        throw ReachabilityError(static_cast<double>(r), static_cast<double>(min_reach), static_cast<double>(max_reach));
    }
    Scalar c2 = (r2 - l1 * l1 - l2 * l2) / (Scalar(2) * l1 * l2);
    c2 = c2 > Scalar(1) ? Scalar(1) : (c2 < Scalar(-1) ? Scalar(-1) : c2);
    Scalar q2 = acos(c2);
    if (branch == ElbowBranch::Up) {
        q2 = -q2;
    }
    const Scalar q1 = atan2(target.y(), target.x()) - atan2(l2 * sin(q2), l1 + l2 * cos(q2));
    return {q1, q2};
}

/// Moves each joint toward its target by at most qdot_max * dt.
std::vector<double> robot_joint_step(const std::vector<double>& current, const std::vector<double>& target, double dt,
                                     double qdot_max);

} // namespace nhil
