#include "nhil/coord/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace nhil {
namespace {

using nlohmann::json;

json vec_to_json(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

Eigen::Vector2d vec_from_json(const json& doc, const std::string& where)
{
    if (!doc.is_array() || doc.size() != 2 || !doc[0].is_number() || !doc[1].is_number()) {
        throw ScenarioError(fmt::format("{}: expected [x, y]", where));
    }
    return {doc[0].get<double>(), doc[1].get<double>()};
}

Box box_from_json(const json& doc, const std::string& where)
{
    if (!doc.is_object() || !doc.contains("min") || !doc.contains("max")) {
        throw ScenarioError(fmt::format("{}: expected {{\"min\": [x, y], \"max\": [x, y]}}", where));
    }
    return Box{vec_from_json(doc.at("min"), where + ".min"), vec_from_json(doc.at("max"), where + ".max")};
}

json box_to_json(const Box& b) { return json{{"min", vec_to_json(b.min)}, {"max", vec_to_json(b.max)}}; }

const json& require(const json& doc, const char* key, const std::string& where)
{
    if (!doc.is_object() || !doc.contains(key)) {
        throw ScenarioError(fmt::format("{}.{}: missing", where, key));
    }
    return doc.at(key);
}

template <typename T>
T number(const json& doc, const char* key, const std::string& where)
{
    const json& v = require(doc, key, where);
    if (!v.is_number()) {
        throw ScenarioError(fmt::format("{}.{}: expected a number", where, key));
    }
    return v.get<T>();
}

std::string text(const json& doc, const char* key, const std::string& where)
{
    const json& v = require(doc, key, where);
    if (!v.is_string()) {
        throw ScenarioError(fmt::format("{}.{}: expected a string", where, key));
    }
    return v.get<std::string>();
}

RobotSpec spec_for_preset(const std::string& preset, RobotId id, const std::string& where)
{
    if (preset == "harbor") {
        return harbor_spec(id);
    }
    if (preset == "warehouse") {
        return warehouse_spec(id);
    }
    throw ScenarioError(fmt::format("{}: unknown robot preset '{}'", where, preset));
}

struct LayoutParams {
    std::string name;
    double lane_spacing;
    double end_overhang;
    double ds;
    double obstacle_inset;
    /// Stations sit this far past each crossing.
    double station_offset;
    RobotSpec (*spec)(RobotId);
};

Scenario crossing_corridors(const LayoutParams& p)
{
    Scenario sc;
    sc.name = p.name;
    sc.ds = p.ds;
    sc.safety_margin_indices = default_safety_margin(p.ds);
    const int rows = 3;
    const int cols = 4;
    const double width = (cols - 1) * p.lane_spacing;
    const double height = (rows - 1) * p.lane_spacing;
    const double margin = p.end_overhang + p.lane_spacing * 0.2;
    sc.bounds = Box{{-margin, -margin}, {width + margin, height + margin}};

    for (int r = 0; r + 1 < rows; ++r) {
        for (int c = 0; c + 1 < cols; ++c) {
            const Eigen::Vector2d lo(c * p.lane_spacing + p.obstacle_inset, r * p.lane_spacing + p.obstacle_inset);
            const Eigen::Vector2d hi((c + 1) * p.lane_spacing - p.obstacle_inset, (r + 1) * p.lane_spacing - p.obstacle_inset);
            sc.obstacles.push_back(Box{lo, hi});
        }
    }

    RobotId next_id = 0;
    const auto add_lane = [&](const std::string& prefix, const std::vector<double>& stops, auto to_point) {
        ScenarioRobot robot;
        robot.spec = p.spec(next_id++);
        std::vector<std::string> names;
        for (std::size_t k = 0; k < stops.size(); ++k) {
            const std::string loc = fmt::format("{}_{}", prefix, k);
            sc.locations[loc] = to_point(stops[k]);
            names.push_back(loc);
        }
        robot.start = names.front();
        robot.locations = names;
        for (std::size_t a = 0; a < names.size(); ++a) {
            for (std::size_t b = a + 1; b < names.size(); ++b) {
                sc.paths.push_back(ScenarioPath{names[a], names[b], {sc.locations[names[a]], sc.locations[names[b]]}});
            }
        }
        sc.robots.push_back(robot);
    };

    std::vector<double> ew_stops{-p.end_overhang};
    for (int c = 0; c < cols; ++c) {
        ew_stops.push_back(c * p.lane_spacing + p.station_offset);
    }
    ew_stops.push_back(width + p.end_overhang);
    std::vector<double> ns_stops{-p.end_overhang};
    for (int r = 0; r < rows; ++r) {
        ns_stops.push_back(r * p.lane_spacing + p.station_offset);
    }
    ns_stops.push_back(height + p.end_overhang);

    for (int r = 0; r < rows; ++r) {
        const double y = r * p.lane_spacing;
        add_lane(fmt::format("ew{}", r), ew_stops, [y](double x) { return Eigen::Vector2d(x, y); });
    }
    for (int c = 0; c < cols; ++c) {
        const double x = c * p.lane_spacing;
        add_lane(fmt::format("ns{}", c), ns_stops, [x](double y) { return Eigen::Vector2d(x, y); });
    }
    return sc;
}

} // namespace

RobotSpec harbor_spec(RobotId id) { return RobotSpec{id, 14.8, 3.0, 6.0, 2.0}; }
RobotSpec warehouse_spec(RobotId id) { return RobotSpec{id, 2.0, 0.5, 2.0, 1.0}; }

int default_safety_margin(double ds) { return static_cast<int>(std::ceil(1.0 / ds - 1e-12)); }

std::optional<std::vector<Eigen::Vector2d>> Scenario::route(const std::string& from, const std::string& to) const
{
    for (const auto& path : paths) {
        if (path.from == from && path.to == to) {
            return path.waypoints;
        }
    }
    for (const auto& path : paths) {
        if (path.from == to && path.to == from) {
            std::vector<Eigen::Vector2d> reversed(path.waypoints.rbegin(), path.waypoints.rend());
            return reversed;
        }
    }
    return std::nullopt;
}

void validate_scenario(const Scenario& sc)
{
    if (sc.name.empty()) {
        throw ScenarioError("name: must be nonempty");
    }
    if (!(sc.bounds.max.x() > sc.bounds.min.x() && sc.bounds.max.y() > sc.bounds.min.y())) {
        throw ScenarioError("bounds: max must exceed min");
    }
    if (sc.control_period_ns <= 0 || sc.tracker_period_ns <= 0) {
        throw ScenarioError("control_period_ms/tracker_period_ms: must be positive");
    }
    if (sc.control_period_ns % sc.tracker_period_ns != 0) {
        throw ScenarioError("control_period_ms: must be a multiple of tracker_period_ms");
    }
    if (!(sc.ds > 0.0)) {
        throw ScenarioError("ds_m: must be positive");
    }
    if (sc.safety_margin_indices < 0) {
        throw ScenarioError("safety_margin_indices: must be >= 0");
    }
    if (sc.reaction_allowance_ns < 0 || sc.progress_budget_ns <= 0) {
        throw ScenarioError("reaction_allowance_ms/progress_budget_s: out of range");
    }

    std::set<std::pair<double, double>> positions;
    for (const auto& [name, pos] : sc.locations) {
        if (!sc.bounds.contains(pos)) {
            throw ScenarioError(fmt::format("locations.{}: outside bounds", name));
        }
        if (!positions.insert({pos.x(), pos.y()}).second) {
            throw ScenarioError(fmt::format("locations.{}: duplicates another location's position", name));
        }
    }

    if (sc.robots.empty()) {
        throw ScenarioError("robots: at least one robot is required");
    }
    for (std::size_t i = 0; i < sc.robots.size(); ++i) {
        const auto& robot = sc.robots[i];
        const std::string where = fmt::format("robots[{}]", i);
        const auto& s = robot.spec;
        if (s.robot_id != i) {
            throw ScenarioError(fmt::format("{}.id: robots must be numbered 0..n-1 in order", where));
        }
        if (!(s.length_m > 0 && s.width_m > 0 && s.v_max > 0 && s.a_max > 0)) {
            throw ScenarioError(fmt::format("{}.spec: length, width, v_max and a_max must be positive", where));
        }
        if (!sc.locations.contains(robot.start)) {
            throw ScenarioError(fmt::format("{}.start: unknown location '{}'", where, robot.start));
        }
        if (robot.locations.size() < 2) {
            throw ScenarioError(fmt::format("{}.locations: at least two are required", where));
        }
        for (std::size_t k = 0; k < robot.locations.size(); ++k) {
            if (!sc.locations.contains(robot.locations[k])) {
                throw ScenarioError(
                    fmt::format("{}.locations[{}]: unknown location '{}'", where, k, robot.locations[k]));
            }
        }
        if (std::find(robot.locations.begin(), robot.locations.end(), robot.start) == robot.locations.end()) {
            throw ScenarioError(fmt::format("{}.start: must be one of the robot's locations", where));
        }
        for (const auto& a : robot.locations) {
            for (const auto& b : robot.locations) {
                if (a != b && !sc.route(a, b)) {
                    throw ScenarioError(fmt::format("{}.locations: no path between '{}' and '{}'", where, a, b));
                }
            }
        }
    }

    for (std::size_t i = 0; i < sc.paths.size(); ++i) {
        const auto& path = sc.paths[i];
        const std::string where = fmt::format("paths[{}]", i);
        if (!sc.locations.contains(path.from)) {
            throw ScenarioError(fmt::format("{}.from: unknown location '{}'", where, path.from));
        }
        if (!sc.locations.contains(path.to)) {
            throw ScenarioError(fmt::format("{}.to: unknown location '{}'", where, path.to));
        }
        if (path.waypoints.size() < 2) {
            throw ScenarioError(fmt::format("{}.waypoints: at least two are required", where));
        }
        if ((path.waypoints.front() - sc.locations.at(path.from)).norm() > 1e-9 ||
            (path.waypoints.back() - sc.locations.at(path.to)).norm() > 1e-9) {
            throw ScenarioError(fmt::format("{}.waypoints: must start at '{}' and end at '{}'", where, path.from, path.to));
        }
        for (std::size_t k = 0; k < path.waypoints.size(); ++k) {
            if (!sc.bounds.contains(path.waypoints[k])) {
                throw ScenarioError(fmt::format("{}.waypoints[{}]: outside bounds", where, k));
            }
            if (k > 0 && path.waypoints[k] == path.waypoints[k - 1]) {
                throw ScenarioError(fmt::format("{}.waypoints[{}]: repeats the previous waypoint", where, k));
            }
        }
    }
}

Scenario scenario_from_json(const json& doc)
{
    if (!doc.is_object()) {
        throw ScenarioError("scenario: expected an object");
    }
    Scenario sc;
    sc.name = text(doc, "name", "scenario");
    sc.bounds = box_from_json(require(doc, "bounds", "scenario"), "bounds");
    if (doc.contains("obstacles")) {
        const json& obstacles = doc.at("obstacles");
        for (std::size_t i = 0; i < obstacles.size(); ++i) {
            sc.obstacles.push_back(box_from_json(obstacles[i], fmt::format("obstacles[{}]", i)));
        }
    }
    const json& locations = require(doc, "locations", "scenario");
    if (!locations.is_object()) {
        throw ScenarioError("locations: expected an object of name -> [x, y]");
    }
    for (const auto& [name, pos] : locations.items()) {
        sc.locations[name] = vec_from_json(pos, "locations." + name);
    }

    const std::string preset = doc.value("robot_preset", std::string{});
    const json& robots = require(doc, "robots", "scenario");
    if (!robots.is_array()) {
        throw ScenarioError("robots: expected an array");
    }
    for (std::size_t i = 0; i < robots.size(); ++i) {
        const json& r = robots[i];
        const std::string where = fmt::format("robots[{}]", i);
        ScenarioRobot robot;
        const auto id = static_cast<RobotId>(r.is_object() && r.contains("id") ? number<int>(r, "id", where) : static_cast<int>(i));
        if (r.is_object() && r.contains("spec")) {
            const json& s = r.at("spec");
            robot.spec = RobotSpec{id, number<double>(s, "length_m", where + ".spec"), number<double>(s, "width_m", where + ".spec"),
                                   number<double>(s, "v_max", where + ".spec"), number<double>(s, "a_max", where + ".spec")};
        } else if (!preset.empty()) {
            robot.spec = spec_for_preset(preset, id, "robot_preset");
        } else {
            throw ScenarioError(fmt::format("{}.spec: missing and no robot_preset given", where));
        }
        robot.start = text(r, "start", where);
        const json& locs = require(r, "locations", where);
        if (!locs.is_array()) {
            throw ScenarioError(fmt::format("{}.locations: expected an array", where));
        }
        for (std::size_t k = 0; k < locs.size(); ++k) {
            if (!locs[k].is_string()) {
                throw ScenarioError(fmt::format("{}.locations[{}]: expected a string", where, k));
            }
            robot.locations.push_back(locs[k].get<std::string>());
        }
        sc.robots.push_back(robot);
    }

    const json& paths = require(doc, "paths", "scenario");
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const std::string where = fmt::format("paths[{}]", i);
        ScenarioPath path;
        path.from = text(paths[i], "from", where);
        path.to = text(paths[i], "to", where);
        const json& wps = require(paths[i], "waypoints", where);
        for (std::size_t k = 0; k < wps.size(); ++k) {
            path.waypoints.push_back(vec_from_json(wps[k], fmt::format("{}.waypoints[{}]", where, k)));
        }
        sc.paths.push_back(path);
    }

    const auto ms = [&](const char* key, Nanos fallback) {
        return doc.contains(key) ? millis_to_nanos(number<double>(doc, key, "scenario")) : fallback;
    };
    sc.control_period_ns = ms("control_period_ms", sc.control_period_ns);
    sc.tracker_period_ns = ms("tracker_period_ms", sc.tracker_period_ns);
    sc.ds = doc.contains("ds_m") ? number<double>(doc, "ds_m", "scenario") : sc.ds;
    sc.safety_margin_indices = doc.contains("safety_margin_indices") ? number<int>(doc, "safety_margin_indices", "scenario")
                                                                     : default_safety_margin(sc.ds);
    sc.reaction_allowance_ns = ms("reaction_allowance_ms", sc.control_period_ns);
    if (doc.contains("progress_budget_s")) {
        sc.progress_budget_ns = static_cast<Nanos>(number<double>(doc, "progress_budget_s", "scenario") * 1e9);
    }
    if (doc.contains("defer_grants")) {
        const json& v = doc.at("defer_grants");
        if (!v.is_boolean()) {
            throw ScenarioError("defer_grants: expected a boolean");
        }
        sc.defer_grants = v.get<bool>();
    }
    if (doc.contains("mission_seed") && !doc.at("mission_seed").is_null()) {
        const json& seed = doc.at("mission_seed");
        if (seed.is_string() && seed.get<std::string>() == "run") {
            sc.mission_seed.reset();
        } else if (seed.is_number_unsigned()) {
            sc.mission_seed = seed.get<std::uint64_t>();
        } else {
            throw ScenarioError("mission_seed: expected \"run\" or an unsigned integer");
        }
    }
    validate_scenario(sc);
    return sc;
}

json scenario_to_json(const Scenario& sc)
{
    json doc;
    doc["name"] = sc.name;
    doc["bounds"] = box_to_json(sc.bounds);
    doc["obstacles"] = json::array();
    for (const auto& box : sc.obstacles) {
        doc["obstacles"].push_back(box_to_json(box));
    }
    doc["locations"] = json::object();
    for (const auto& [name, pos] : sc.locations) {
        doc["locations"][name] = vec_to_json(pos);
    }
    doc["robots"] = json::array();
    for (const auto& robot : sc.robots) {
        const auto& s = robot.spec;
        doc["robots"].push_back(json{{"id", s.robot_id},
                                     {"spec", {{"length_m", s.length_m}, {"width_m", s.width_m}, {"v_max", s.v_max}, {"a_max", s.a_max}}},
                                     {"start", robot.start},
                                     {"locations", robot.locations}});
    }
    doc["paths"] = json::array();
    for (const auto& path : sc.paths) {
        json wps = json::array();
        for (const auto& w : path.waypoints) {
            wps.push_back(vec_to_json(w));
        }
        doc["paths"].push_back(json{{"from", path.from}, {"to", path.to}, {"waypoints", wps}});
    }
    doc["control_period_ms"] = static_cast<double>(sc.control_period_ns) / 1e6;
    doc["tracker_period_ms"] = static_cast<double>(sc.tracker_period_ns) / 1e6;
    doc["ds_m"] = sc.ds;
    doc["safety_margin_indices"] = sc.safety_margin_indices;
    doc["reaction_allowance_ms"] = static_cast<double>(sc.reaction_allowance_ns) / 1e6;
    doc["defer_grants"] = sc.defer_grants;
    doc["progress_budget_s"] = static_cast<double>(sc.progress_budget_ns) / 1e9;
    if (sc.mission_seed) {
        doc["mission_seed"] = *sc.mission_seed;
    } else {
        doc["mission_seed"] = "run";
    }
    return doc;
}

std::optional<Scenario> preset_scenario(std::string_view name)
{
    if (name == "harbor") {
        return crossing_corridors(LayoutParams{"harbor", 100.0, 60.0, 1.0, 20.0, 10.0, &harbor_spec});
    }
    if (name == "warehouse") {
        return crossing_corridors(LayoutParams{"warehouse", 25.0, 15.0, 0.5, 5.0, 2.5, &warehouse_spec});
    }
    return std::nullopt;
}

} // namespace nhil
