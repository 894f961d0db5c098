#include "nhil/coord/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace nhil {

TrapezoidProfile trapezoid_profile(double length_m, double v_max, double a_max)
{
    TrapezoidProfile p;
    p.length = length_m;
    p.a_max = a_max;
    if (length_m <= 0.0) {
        return p;
    }
    if (length_m >= v_max * v_max / a_max) {
        p.v_peak = v_max;
        p.t_accel = v_max / a_max;
        p.t_cruise = (length_m - v_max * v_max / a_max) / v_max;
    } else {
        p.v_peak = std::sqrt(length_m * a_max);
        p.t_accel = p.v_peak / a_max;
        p.t_cruise = 0.0;
    }
    p.duration = 2.0 * p.t_accel + p.t_cruise;
    return p;
}

double TrapezoidProfile::position(double t) const
{
    if (t <= 0.0) {
        return 0.0;
    }
    if (t >= duration) {
        return length;
    }
    const double d_accel = 0.5 * a_max * t_accel * t_accel;
    if (t < t_accel) {
        return 0.5 * a_max * t * t;
    }
    if (t < t_accel + t_cruise) {
        return d_accel + v_peak * (t - t_accel);
    }
    const double r = duration - t;
    return length - 0.5 * a_max * r * r;
}

double TrapezoidProfile::velocity(double t) const
{
    if (t <= 0.0 || t >= duration) {
        return 0.0;
    }
    if (t < t_accel) {
        return a_max * t;
    }
    if (t < t_accel + t_cruise) {
        return v_peak;
    }
    return a_max * (duration - t);
}

double time_to_cover(double distance, double v, double v_max, double a_max)
{
    if (distance <= 0.0) {
        return 0.0;
    }
    v = std::min(v, v_max);
    const double ramp = (v_max * v_max - v * v) / (2.0 * a_max);
    if (distance <= ramp) {
        return (std::sqrt(v * v + 2.0 * a_max * distance) - v) / a_max;
    }
    return (v_max - v) / a_max + (distance - ramp) / v_max;
}

RobotState tracker_step(const RobotState& state, double dt, const RobotSpec& spec, const PathGeom& path,
                        const Envelope& envelope)
{
    RobotState next = state;
    const double a = spec.a_max;
    const double length = path.length();
    const bool restricted = state.last_received_cp >= 0;
    const double target = restricted ? std::min(envelope.arc_of(state.last_received_cp), length) : length;
    const double gap = target - state.s;

    double v_new = 0.0;
    bool on_curve = false;
    if (gap <= 0.0) {
        v_new = std::max(0.0, state.v - a * dt);
    } else {
        // Largest v_new whose trapezoid-integrated step still leaves v_new^2 <= 2 a gap'.
        const double c = 2.0 * a * gap - a * dt * state.v;
        const double v_curve = c >= 0.0 ? 0.5 * (-a * dt + std::sqrt(a * a * dt * dt + 4.0 * c)) : 0.0;
        const double v_floor = std::max(0.0, state.v - a * dt);
        on_curve = v_curve >= v_floor;
        v_new = std::min({state.v + a * dt, spec.v_max, v_curve});
        v_new = std::max(v_new, v_floor);
    }

    double s_new = state.s + 0.5 * (state.v + v_new) * dt;
    if (on_curve && s_new > target) {
        // Only the final sub-a*dt approach (or rounding) can land past the target.
        s_new = target;
        v_new = 0.0;
    }
    if (s_new >= length) {
        s_new = length;
        v_new = 0.0;
    }

    next.s = s_new;
    next.v = v_new;
    next.pose = path.pose_at(s_new);
    next.path_index = envelope.index_at(s_new);
    return next;
}

} // namespace nhil
