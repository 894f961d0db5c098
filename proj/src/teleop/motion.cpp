#include "nhil/teleop/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nhil {

std::size_t MotionProfile::sample_count() const
{
    return static_cast<std::size_t>(std::llround(rate_hz * loop_period_s * static_cast<double>(loops)));
}

Nanos MotionProfile::frame_time_ns(std::size_t k) const
{
    return static_cast<Nanos>(std::llround(static_cast<double>(k) * 1e9 / rate_hz));
}

void MotionProfile::validate() const
{
    if (!(rate_hz > 0)) {
        throw std::invalid_argument("rate_hz: must be positive");
    }
    if (!(loop_period_s > 0)) {
        throw std::invalid_argument("loop_period_s: must be positive");
    }
    if (loops < 1) {
        throw std::invalid_argument("loops: must be at least 1");
    }
    if (!(amplitude_m >= 0)) {
        throw std::invalid_argument("amplitude_m: must be >= 0");
    }
}

std::vector<SwingSample> generate_swing(const MotionProfile& profile)
{
    profile.validate();
    const std::size_t n = profile.sample_count();
    std::vector<SwingSample> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Nanos t = profile.frame_time_ns(k);
        const double phase = 2.0 * std::numbers::pi * nanos_to_seconds(t) / profile.loop_period_s;
        out.push_back(SwingSample{t, profile.center + Eigen::Vector2d(0.0, profile.amplitude_m * std::sin(phase))});
    }
    return out;
}

std::vector<double> robot_joint_step(const std::vector<double>& current, const std::vector<double>& target, double dt,
                                     double qdot_max)
{
    std::vector<double> next = current;
    const double step = qdot_max * dt;
    for (std::size_t j = 0; j < next.size() && j < target.size(); ++j) {
        const double error = target[j] - next[j];
        next[j] = std::abs(error) <= step ? target[j] : next[j] + std::copysign(step, error);
    }
    return next;
}

} // namespace nhil
