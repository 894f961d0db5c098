#include "nhil/coord/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "nhil/coord/kinematics.hpp"
#include "nhil/metrics/metrics.hpp"
#include "nhil/netchan/transport.hpp"

namespace nhil {

std::string format_collision_event(const CollisionEvent& event)
{
    return fmt::format("{},{}-{},{}", event.t_ns, event.robot_a, event.robot_b, event.cs_id);
}

CollisionDetector::CollisionDetector(std::size_t fleet_size) : n_(fleet_size), touching_(fleet_size * fleet_size, 0) {}

namespace {

bool covers(const IndexRange& range, std::int32_t index) { return index >= range.lo - 1 && index <= range.hi + 1; }

std::int64_t attribute(const BodyState& a, const BodyState& b, std::span<const CsRecord> sections)
{
    // Newest first: the engagement in progress is near the back.
    for (auto it = sections.rbegin(); it != sections.rend(); ++it) {
        const CriticalSection& cs = it->cs;
        if (!cs.involves(a.robot_id) || !cs.involves(b.robot_id)) {
            continue;
        }
        if (cs.mission_of(a.robot_id) != a.mission_id || cs.mission_of(b.robot_id) != b.mission_id) {
            continue;
        }
        if (covers(cs.range_of(a.robot_id), a.path_index) && covers(cs.range_of(b.robot_id), b.path_index)) {
            return cs.cs_id;
        }
    }
    return -1;
}

} // namespace

std::vector<CollisionEvent> CollisionDetector::step(Nanos t_ns, std::span<const BodyState> bodies,
                                                    std::span<const CsRecord> sections)
{
    std::vector<CollisionEvent> events;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        for (std::size_t j = i + 1; j < bodies.size(); ++j) {
            const BodyState& a = bodies[i];
            const BodyState& b = bodies[j];
            const bool now = obb_intersect(a.footprint, b.footprint);
            const std::size_t slot = std::min<std::size_t>(a.robot_id, b.robot_id) * n_ + std::max<std::size_t>(a.robot_id, b.robot_id);
            const bool before = touching_[slot] != 0;
            touching_[slot] = now ? 1 : 0;
            if (!now || before) {
                continue;
            }
            const RobotId lo = std::min(a.robot_id, b.robot_id);
            const RobotId hi = std::max(a.robot_id, b.robot_id);
            const std::int64_t cs_id = attribute(a, b, sections);
            if (cs_id >= 0 && !counted_.emplace(lo, hi, cs_id).second) {
                continue;
            }
            events.push_back(CollisionEvent{t_ns, lo, hi, cs_id});
        }
    }
    return events;
}

nlohmann::json CoordStats::to_json() const
{
    const auto link = [&](Direction d) {
        const std::size_t i = index_of(d);
        return nlohmann::json{
            {"sent", messages.sent[i]}, {"delivered", messages.delivered[i]}, {"dropped", messages.dropped[i]}};
    };
    return nlohmann::json{
        {"scenario", scenario},
        {"profile", profile},
        {"mode", mode},
        {"seed", seed},
        {"min_cs", min_cs},
        {"cs_total", cs_total},
        {"collision_count", collision_count},
        {"unattributed_collisions", unattributed_collisions},
        {"p_collision", p_collision},
        {"missions_completed", missions_completed},
        {"virtual_time_ns", virtual_time_ns},
        {"ticks", ticks},
        {"mean_delay_ms", mean_delay_ms},
        {"mean_loss", mean_loss},
        {"control_period_ns", control_period_ns},
        {"tracker_period_ns", tracker_period_ns},
        {"reaction_allowance_ns", reaction_allowance_ns},
        {"ds_m", ds},
        {"safety_margin_indices", safety_margin_indices},
        {"decisions",
         {{"granted", decisions.decisions},
          {"feasibility_swaps", decisions.feasibility_swaps},
          {"cycle_swaps", decisions.cycle_swaps},
          {"unavoidable_cycles", decisions.unavoidable_cycles}}},
        {"messages", {{"command", link(Direction::Command)}, {"status", link(Direction::Status)}}},
    };
}

namespace {

struct RobotSide {
    RobotState state;
    RobotSpec spec;
    const Mission* mission = nullptr;
    bool heard_cp = false;
    std::uint32_t last_cp_seq = 0;
    std::uint32_t status_seq = 0;
};

Rect footprint_of(const RobotSide& r)
{
    return Rect{r.state.pose.position, r.spec.length_m / 2, r.spec.width_m / 2, r.state.pose.theta};
}

class Traces {
public:
    Traces(const std::optional<std::filesystem::path>& dir, std::uint32_t decimation) : decimation_(std::max(1u, decimation))
    {
        if (!dir) {
            return;
        }
        std::filesystem::create_directories(*dir);
        poses_.open(*dir / "poses.csv");
        commands_.open(*dir / "commands.csv");
        events_.open(*dir / "events.csv");
        if (!poses_ || !commands_ || !events_) {
            throw CoordError(fmt::format("cannot write traces under {}", dir->string()));
        }
        poses_ << "t_ns,robot_id,x,y,theta,v,s\n";
        commands_ << "t_ns,robot_id,critical_index,seq\n";
        events_ << kEventsHeader << '\n';
        enabled_ = true;
    }

    void pose(std::uint64_t tick, Nanos t, const RobotState& s)
    {
        if (enabled_ && tick % decimation_ == 0) {
            poses_ << fmt::format("{},{},{},{},{},{},{}\n", t, s.robot_id, s.pose.position.x(), s.pose.position.y(),
                                  s.pose.theta, s.v, s.s);
        }
    }

    void command(Nanos t, RobotId robot, std::int32_t index, std::uint32_t seq)
    {
        if (enabled_) {
            commands_ << fmt::format("{},{},{},{}\n", t, robot, index, seq);
        }
    }

    void event(const CollisionEvent& e)
    {
        if (enabled_) {
            events_ << format_collision_event(e) << '\n';
        }
    }

private:
    std::uint32_t decimation_;
    bool enabled_ = false;
    std::ofstream poses_;
    std::ofstream commands_;
    std::ofstream events_;
};

void robot_receive(RobotSide& robot, const WireMessage& msg, const MissionTable& missions, Nanos t, Traces& traces)
{
    const auto* cp = std::get_if<CriticalPointPayload>(&msg.payload);
    if (!cp || (robot.heard_cp && msg.seq <= robot.last_cp_seq)) {
        return;
    }
    robot.heard_cp = true;
    robot.last_cp_seq = msg.seq;
    RobotState& st = robot.state;
    if (cp->mission_id == st.mission_id && robot.mission) {
        st.last_received_cp = cp->critical_index;
        traces.command(t, st.robot_id, cp->critical_index, msg.seq);
        return;
    }
    const bool idle = !robot.mission || (st.s >= robot.mission->path->length() && st.v == 0.0);
    if (cp->mission_id > st.mission_id && idle) {
        const Mission* next = missions.find(cp->mission_id);
        if (!next || next->robot != st.robot_id) {
            return;
        }
        robot.mission = next;
        st.mission_id = next->id;
        st.s = 0.0;
        st.v = 0.0;
        st.pose = next->path->pose_at(0.0);
        st.path_index = 0;
        st.last_received_cp = cp->critical_index;
        traces.command(t, st.robot_id, cp->critical_index, msg.seq);
    }
}

} // namespace

CoordResult run_coordination(const Scenario& scenario, const ChannelProfile& profile, const CoordConfig& config)
{
    validate_scenario(scenario);
    profile.validate();
    if (config.min_cs == 0) {
        throw CoordError("min_cs must be positive");
    }

    MissionTable missions(scenario);
    const std::uint64_t mission_seed = scenario.mission_seed.value_or(derive_seed(config.seed, 1));
    Coordinator coordinator(scenario, missions, mission_seed);
    auto transport = make_transport(profile, derive_seed(config.seed, 2), config.tap);
    const bool real = profile.mode == ChannelMode::RealPassthrough;

    std::vector<RobotSide> robots(scenario.robots.size());
    for (std::size_t r = 0; r < robots.size(); ++r) {
        const ScenarioRobot& sr = scenario.robots[r];
        robots[r].spec = sr.spec;
        robots[r].state.robot_id = static_cast<RobotId>(r);
        robots[r].state.pose.position = scenario.locations.at(sr.start);
        const auto& toward = sr.locations.front() == sr.start ? sr.locations.back() : sr.locations.front();
        const Eigen::Vector2d d = scenario.locations.at(toward) - robots[r].state.pose.position;
        robots[r].state.pose.theta = std::atan2(d.y(), d.x());
    }

    Traces traces(config.trace_dir, config.pose_decimation);
    CollisionDetector detector(robots.size());
    CoordResult result;
    std::vector<Delivery> inbox;
    std::vector<BodyState> bodies(robots.size());
    std::uint32_t cp_seq = 0;

    const Nanos dt_ns = scenario.tracker_period_ns;
    const double dt = nanos_to_seconds(dt_ns);
    const std::uint64_t ticks_per_control = static_cast<std::uint64_t>(scenario.control_period_ns / dt_ns);
    const auto wall_start = std::chrono::steady_clock::now();

    const auto deliver = [&](Nanos t) {
        inbox.clear();
        transport->collect(t, inbox);
        for (const Delivery& d : inbox) {
            if (d.direction == Direction::Status) {
                if (const auto* st = std::get_if<RobotStatusPayload>(&d.message.payload)) {
                    coordinator.ingest(d.message.robot_id, d.message.seq, *st);
                }
            } else if (d.message.robot_id < robots.size()) {
                robot_receive(robots[d.message.robot_id], d.message, missions, t, traces);
            }
        }
    };

    std::uint64_t tick = 0;
    Nanos t = 0;
    for (;; ++tick, t += dt_ns) {
        if (real) {
            std::this_thread::sleep_until(wall_start + std::chrono::nanoseconds(t));
        }
        deliver(t);

        for (RobotSide& robot : robots) {
            RobotState& st = robot.state;
            if (robot.mission && tick > 0) {
                st = tracker_step(st, dt, robot.spec, *robot.mission->path, *robot.mission->envelope);
            }
            traces.pose(tick, t, st);
            WireMessage msg;
            msg.robot_id = st.robot_id;
            msg.seq = ++robot.status_seq;
            st.last_status_seq = msg.seq;
            msg.send_time_ns = static_cast<std::uint64_t>(t);
            msg.payload = RobotStatusPayload{st.mission_id, st.path_index, st.pose.position.x(), st.pose.position.y(),
                                             st.pose.theta, st.v};
            transport->send(Direction::Status, msg, t);
        }
        deliver(t);

        if (tick % ticks_per_control == 0) {
            for (const auto& cmd : coordinator.update(t)) {
                WireMessage msg;
                msg.robot_id = cmd.robot_id;
                msg.seq = ++cp_seq;
                msg.send_time_ns = static_cast<std::uint64_t>(t);
                msg.payload = CriticalPointPayload{cmd.mission_id, cmd.critical_index};
                transport->send(Direction::Command, msg, t);
            }
        }

        for (std::size_t r = 0; r < robots.size(); ++r) {
            const RobotState& st = robots[r].state;
            bodies[r] = BodyState{st.robot_id, footprint_of(robots[r]), st.mission_id, st.path_index};
        }
        for (const CollisionEvent& e : detector.step(t, bodies, coordinator.sections())) {
            traces.event(e);
            result.events.push_back(e);
        }

        if (coordinator.cs_total() >= config.min_cs) {
            break;
        }
        if (t - coordinator.last_cs_created_ns() > scenario.progress_budget_ns) {
            throw CoordError(fmt::format(
                "no critical section created for {:.0f} s of virtual time (t = {:.1f} s, cs_total = {}, missions "
                "completed = {}); the fleet is likely deadlocked",
                nanos_to_seconds(scenario.progress_budget_ns), nanos_to_seconds(t), coordinator.cs_total(),
                coordinator.missions_completed()));
        }
    }

    CoordStats& s = result.stats;
    s.scenario = scenario.name;
    s.profile = profile.name;
    s.mode = real ? "real-passthrough" : "emulated";
    s.seed = config.seed;
    s.min_cs = config.min_cs;
    s.cs_total = coordinator.cs_total();
    s.collision_count = result.events.size();
    s.unattributed_collisions = static_cast<std::uint64_t>(
        std::count_if(result.events.begin(), result.events.end(), [](const CollisionEvent& e) { return e.cs_id < 0; }));
    s.p_collision = p_collision(s.collision_count, s.cs_total);
    s.missions_completed = coordinator.missions_completed();
    s.virtual_time_ns = t;
    s.ticks = tick + 1;
    s.mean_delay_ms = mean_delay_ns(profile.link) / 1e6;
    s.mean_loss = mean_loss_rate(profile.link.loss);
    s.control_period_ns = scenario.control_period_ns;
    s.tracker_period_ns = scenario.tracker_period_ns;
    s.reaction_allowance_ns = scenario.reaction_allowance_ns;
    s.ds = scenario.ds;
    s.safety_margin_indices = scenario.safety_margin_indices;
    s.decisions = coordinator.counters();
    s.messages = transport->counters();
    return result;
}

} // namespace nhil
