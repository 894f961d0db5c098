#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nhil/coord/robot.hpp"
#include "nhil/netchan/random.hpp"

namespace nhil {

struct Box {
    Eigen::Vector2d min = Eigen::Vector2d::Zero();
    Eigen::Vector2d max = Eigen::Vector2d::Zero();

    bool contains(const Eigen::Vector2d& p) const
    {
        return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
    }
};

struct ScenarioRobot {
    RobotSpec spec;
    std::string start;
    /// Goals the mission generator draws from, including `start`.
    std::vector<std::string> locations;
};

struct ScenarioPath {
    std::string from;
    std::string to;
    std::vector<Eigen::Vector2d> waypoints;
};

/// Map, fleet, authored paths and coordination timing for one case.
struct Scenario {
    std::string name;
    Box bounds;
    /// Layout only; paths are authored clear of them.
    std::vector<Box> obstacles;
    std::map<std::string, Eigen::Vector2d> locations;
    std::vector<ScenarioRobot> robots;
    std::vector<ScenarioPath> paths;

    Nanos control_period_ns = 100 * kNanosPerMilli;
    Nanos tracker_period_ns = 10 * kNanosPerMilli;
    double ds = 0.5;
    int safety_margin_indices = 2;
    /// Time the coordinator budgets for a command to take effect when it
    /// checks that a robot can still stop. Defaults to one control period,
    /// the wait for a replacement when a command is lost.
    Nanos reaction_allowance_ns = 100 * kNanosPerMilli;
    /// Grant precedence at the last safe period rather than at creation.
    bool defer_grants = false;
    /// Abort when no critical section is created for this long.
    Nanos progress_budget_ns = 600 * kNanosPerSecond;
    /// Fixed mission sequence regardless of the run seed, when set.
    std::optional<std::uint64_t> mission_seed;

    /// Waypoints from `from` to `to`; an authored reverse path is reversed.
    std::optional<std::vector<Eigen::Vector2d>> route(const std::string& from, const std::string& to) const;
};

class ScenarioError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// ceil(1 m / ds).
int default_safety_margin(double ds);

/// Throws ScenarioError whose message starts with the offending field path.
void validate_scenario(const Scenario& scenario);

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);

/// Built-in crossing-corridor layouts "harbor" and "warehouse": 3 east-west
/// and 4 north-south lanes, one robot per lane, stations at the lane ends and
/// just past each crossing.
std::optional<Scenario> preset_scenario(std::string_view name);

} // namespace nhil
