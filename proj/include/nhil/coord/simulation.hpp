#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhil/coord/coordinator.hpp"
#include "nhil/coord/geometry.hpp"
#include "nhil/coord/scenario.hpp"
#include "nhil/netchan/profile.hpp"
#include "nhil/netchan/tap.hpp"
#include "nhil/netchan/transport.hpp"

namespace nhil {

struct CollisionEvent {
    Nanos t_ns = 0;
    RobotId robot_a = 0;
    RobotId robot_b = 0;
    /// -1 when no critical section covers the pair's current indices.
    std::int64_t cs_id = -1;
    bool operator==(const CollisionEvent&) const = default;
};

inline constexpr const char* kEventsHeader = "t_ns,pair,cs_id";
/// One events.csv row without the newline.
std::string format_collision_event(const CollisionEvent& event);

/// True footprint and progress of one robot at the current tick.
struct BodyState {
    RobotId robot_id = 0;
    Rect footprint;
    std::uint32_t mission_id = 0;
    std::int32_t path_index = 0;
};

/// Edge-triggered pairwise footprint overlap, counted at most once per
/// (pair, critical section).
class CollisionDetector {
public:
    explicit CollisionDetector(std::size_t fleet_size);

    /// Events that start this tick. `sections` may include resolved ones.
    std::vector<CollisionEvent> step(Nanos t_ns, std::span<const BodyState> bodies, std::span<const CsRecord> sections);

private:
    std::size_t n_;
    std::vector<char> touching_;
    std::set<std::tuple<RobotId, RobotId, std::int64_t>> counted_;
};

struct CoordConfig {
    std::uint64_t seed = 1;
    std::uint64_t min_cs = 1000;
    /// Writes poses.csv, commands.csv and events.csv here when set.
    std::optional<std::filesystem::path> trace_dir;
    /// Every n-th tick goes to poses.csv.
    std::uint32_t pose_decimation = 1;
    TapSink* tap = nullptr;
};

struct CoordStats {
    std::string scenario;
    std::string profile;
    std::string mode;
    std::uint64_t seed = 0;
    std::uint64_t min_cs = 0;
    std::uint64_t cs_total = 0;
    std::uint64_t collision_count = 0;
    std::uint64_t unattributed_collisions = 0;
    double p_collision = 0.0;
    std::uint64_t missions_completed = 0;
    Nanos virtual_time_ns = 0;
    std::uint64_t ticks = 0;
    double mean_delay_ms = 0.0;
    double mean_loss = 0.0;
    Nanos control_period_ns = 0;
    Nanos tracker_period_ns = 0;
    Nanos reaction_allowance_ns = 0;
    double ds = 0.0;
    int safety_margin_indices = 0;
    UpdateCounters decisions;
    TransportCounters messages;

    nlohmann::json to_json() const;
};

struct CoordResult {
    CoordStats stats;
    std::vector<CollisionEvent> events;
};

class CoordError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs the fleet until at least `min_cs` critical sections exist. Emulated
/// profiles use the virtual clock; real-passthrough profiles pace ticks on
/// the wall clock. Throws CoordError when no critical section is created for
/// the scenario's progress budget.
CoordResult run_coordination(const Scenario& scenario, const ChannelProfile& profile, const CoordConfig& config);

} // namespace nhil
