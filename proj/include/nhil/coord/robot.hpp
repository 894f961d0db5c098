#pragma once

#include <cstdint>
#include <string_view>

#include "nhil/coord/path.hpp"

namespace nhil {

using RobotId = std::uint16_t;

/// Footprint and motion limits of one robot.
struct RobotSpec {
    RobotId robot_id = 0;
    double length_m = 1.0;
    double width_m = 1.0;
    double v_max = 1.0;
    double a_max = 1.0;

    bool operator==(const RobotSpec&) const = default;
};

/// Large, fast container-terminal vehicle: 14.8 x 3.0 m, 6 m/s, 2 m/s^2.
RobotSpec harbor_spec(RobotId id);
/// Small warehouse vehicle: 2 x 0.5 m, 2 m/s, 1 m/s^2.
RobotSpec warehouse_spec(RobotId id);

inline constexpr int kPresetFleetSize = 7;

/// Robot-side state. `last_received_cp` is the stop-before envelope index
/// for the current mission, -1 when unrestricted.
struct RobotState {
    RobotId robot_id = 0;
    std::uint32_t mission_id = 0;
    double s = 0.0;
    double v = 0.0;
    Pose2 pose;
    std::int32_t path_index = 0;
    std::int32_t last_received_cp = -1;
    std::uint32_t last_status_seq = 0;
};

} // namespace nhil
