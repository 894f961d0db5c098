#pragma once

#include "nhil/coord/envelope.hpp"
#include "nhil/coord/path.hpp"
#include "nhil/coord/robot.hpp"

namespace nhil {

/// Rest-to-rest motion along a fixed path: accelerate at a_max, cruise at
/// v_max, decelerate at a_max. Triangular when the path is too short to
/// reach v_max.
struct TrapezoidProfile {
    double length = 0.0;
    double a_max = 1.0;
    double v_peak = 0.0;
    double t_accel = 0.0;
    double t_cruise = 0.0;
    double duration = 0.0;

    double position(double t) const;
    double velocity(double t) const;
};

TrapezoidProfile trapezoid_profile(double length_m, double v_max, double a_max);

/// Time to cover `distance` starting at speed v, accelerating at a_max up to
/// v_max and never braking.
double time_to_cover(double distance, double v, double v_max, double a_max);

inline double braking_distance(double v, double a_max) { return v * v / (2.0 * a_max); }

/// Advances the robot by one tracker tick along its mission path.
///
/// The stop target is the arc position of the received critical point, or
/// the path end when unrestricted. Speed approaches v_max at a_max and is
/// capped by the braking curve towards the target; once the curve would need
/// more than a_max the robot brakes at a_max and overshoots. That overshoot is
/// the collision mechanism under late or lost commands.
RobotState tracker_step(const RobotState& state, double dt, const RobotSpec& spec, const PathGeom& path,
                        const Envelope& envelope);

} // namespace nhil
