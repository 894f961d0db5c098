#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nhil/coord/envelope.hpp"
#include "nhil/coord/path.hpp"
#include "nhil/coord/robot.hpp"
#include "nhil/coord/scenario.hpp"
#include "nhil/netchan/random.hpp"
#include "nhil/netchan/wire.hpp"

namespace nhil {

/// A goal assignment. Ids start at 1; 0 means "no mission yet".
struct Mission {
    std::uint32_t id = 0;
    RobotId robot = 0;
    std::string from;
    std::string to;
    /// Index into the mission table's path cache.
    std::uint32_t path_key = 0;
    std::shared_ptr<const PathGeom> path;
    std::shared_ptr<const Envelope> envelope;
};

/// Missions shared by the fleet manager and the robots, with paths and
/// envelopes built once per (robot, from, to).
class MissionTable {
public:
    explicit MissionTable(const Scenario& scenario);

    const Mission& create(RobotId robot, const std::string& from, const std::string& to);
    const Mission* find(std::uint32_t id) const;
    std::size_t size() const { return missions_.size(); }

    /// Critical-section geometry between two cached paths, memoized.
    const std::vector<CsGeometry>& geometry(std::uint32_t key_a, std::uint32_t key_b);

private:
    struct CachedPath {
        std::shared_ptr<const PathGeom> path;
        std::shared_ptr<const Envelope> envelope;
    };
    const Scenario* scenario_;
    std::deque<Mission> missions_;
    std::map<std::string, std::uint32_t> key_of_;
    std::vector<CachedPath> paths_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<CsGeometry>> geometry_;
};

/// Latest robot state as seen by the coordinator. `s` is reconstructed from
/// the reported position since the status message does not carry it.
struct RobotReport {
    RobotId robot_id = 0;
    std::uint32_t mission_id = 0;
    std::int32_t path_index = 0;
    double s = 0.0;
    double v = 0.0;
};

struct CsRecord {
    CriticalSection cs;
    std::optional<RobotId> holder;
    bool resolved = false;
    RobotId creator = 0;
    Nanos created_ns = 0;
    Nanos decided_ns = -1;
};

struct CoordinationPolicy {
    int safety_margin_indices = 2;
    Nanos control_period_ns = 100 * kNanosPerMilli;
    /// Time budgeted for a restriction to take effect.
    Nanos reaction_allowance_ns = 100 * kNanosPerMilli;
    /// Defer each grant to the last period in which both robots can still
    /// stop, instead of granting when the section is created.
    bool defer_grants = false;
};

struct RobotView {
    const RobotSpec* spec = nullptr;
    const Envelope* envelope = nullptr;
    RobotReport report;
};

struct CriticalAssignment {
    RobotId robot_id = 0;
    std::int32_t critical_index = -1;
    bool operator==(const CriticalAssignment&) const = default;
};

struct UpdateCounters {
    std::uint64_t decisions = 0;
    std::uint64_t feasibility_swaps = 0;
    std::uint64_t cycle_swaps = 0;
    std::uint64_t unavoidable_cycles = 0;
};

/// One policy pass over the open `sections`: resolves finished ones, grants
/// precedence (earliest ETA first, lower id on ties, sticky once granted)
/// and returns every robot's critical index, the minimum stop index over the
/// sections it yields, or -1. `views` is indexed by robot id.
std::vector<CriticalAssignment> coordinator_update(std::span<const RobotView> views, std::span<CsRecord* const> sections,
                                                   const CoordinationPolicy& policy, Nanos now_ns,
                                                   UpdateCounters* counters = nullptr);

/// Stop index for the yielding side of a section.
std::int32_t stop_index(const IndexRange& range, int safety_margin_indices);

/// Fleet manager: latest reports, mission generator, critical sections.
class Coordinator {
public:
    Coordinator(const Scenario& scenario, MissionTable& missions, std::uint64_t mission_seed);

    /// Keeps the highest sequence number seen per robot.
    void ingest(RobotId robot, std::uint32_t seq, const RobotStatusPayload& status);

    struct Command {
        RobotId robot_id = 0;
        std::uint32_t mission_id = 0;
        std::int32_t critical_index = -1;
    };

    /// One control period.
    std::vector<Command> update(Nanos now_ns);

    std::uint64_t cs_total() const { return sections_.size(); }
    std::uint64_t missions_completed() const { return missions_completed_; }
    Nanos last_cs_created_ns() const { return last_cs_created_ns_; }
    const std::vector<CsRecord>& sections() const { return sections_; }
    const UpdateCounters& counters() const { return counters_; }

private:
    struct Tracked {
        bool heard = false;
        std::uint32_t last_seq = 0;
        RobotStatusPayload status;
        std::uint32_t assigned = 0;
        bool active = false;
        std::string location;
        std::vector<std::string> deck;
        std::size_t deck_pos = 0;
    };

    RobotReport view_of(RobotId robot) const;
    std::string next_goal(RobotId robot);
    void assign(RobotId robot, Nanos now_ns);

    const Scenario* scenario_;
    MissionTable* missions_;
    CoordinationPolicy policy_;
    Rng rng_;
    std::vector<Tracked> robots_;
    std::vector<CsRecord> sections_;
    std::vector<std::size_t> open_;
    std::uint64_t missions_completed_ = 0;
    Nanos last_cs_created_ns_ = 0;
    UpdateCounters counters_;
};

} // namespace nhil
