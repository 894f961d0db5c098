#include "nhil/coord/coordinator.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nhil/coord/kinematics.hpp"

namespace nhil {

MissionTable::MissionTable(const Scenario& scenario) : scenario_(&scenario) {}

const Mission& MissionTable::create(RobotId robot, const std::string& from, const std::string& to)
{
    const std::string key = fmt::format("{}:{}:{}", robot, from, to);
    auto it = key_of_.find(key);
    if (it == key_of_.end()) {
        const auto waypoints = scenario_->route(from, to);
        if (!waypoints) {
            throw ScenarioError(fmt::format("paths: no path from '{}' to '{}'", from, to));
        }
        auto path = std::make_shared<PathGeom>(arc_length_parameterize(*waypoints));
        auto env = std::make_shared<Envelope>(sweep_envelope(*path, scenario_->robots.at(robot).spec, scenario_->ds));
        paths_.push_back(CachedPath{std::move(path), std::move(env)});
        it = key_of_.emplace(key, static_cast<std::uint32_t>(paths_.size() - 1)).first;
    }
    const CachedPath& cached = paths_[it->second];
    missions_.push_back(Mission{static_cast<std::uint32_t>(missions_.size() + 1), robot, from, to, it->second,
                                cached.path, cached.envelope});
    return missions_.back();
}

const Mission* MissionTable::find(std::uint32_t id) const
{
    if (id == 0 || id > missions_.size()) {
        return nullptr;
    }
    return &missions_[id - 1];
}

const std::vector<CsGeometry>& MissionTable::geometry(std::uint32_t key_a, std::uint32_t key_b)
{
    const auto key = std::make_pair(key_a, key_b);
    auto it = geometry_.find(key);
    if (it == geometry_.end()) {
        it = geometry_.emplace(key, find_critical_sections(*paths_[key_a].envelope, *paths_[key_b].envelope)).first;
    }
    return it->second;
}

std::int32_t stop_index(const IndexRange& range, int safety_margin_indices)
{
    return std::max(0, range.lo - safety_margin_indices);
}

namespace {

constexpr std::int32_t kNoRestriction = std::numeric_limits<std::int32_t>::max();

double seconds(Nanos ns) { return nanos_to_seconds(ns); }

// Distance needed to come to rest after `horizon` more seconds of full
// acceleration from the reported speed.
double stopping_need(const RobotView& view, double horizon)
{
    const RobotSpec& spec = *view.spec;
    const double v = view.report.v;
    const double v_end = std::min(spec.v_max, v + spec.a_max * horizon);
    return 0.5 * (v + v_end) * horizon + braking_distance(v_end, spec.a_max);
}

double stop_gap(const RobotView& view, const CsRecord& rec, RobotId robot, int margin)
{
    const std::int32_t stop = stop_index(rec.cs.range_of(robot), margin);
    return view.envelope->arc_of(stop) - view.report.s;
}

bool reaches(const std::vector<std::vector<int>>& edges, RobotId from, RobotId to)
{
    std::vector<char> seen(edges.size(), 0);
    std::vector<RobotId> stack{from};
    while (!stack.empty()) {
        const RobotId r = stack.back();
        stack.pop_back();
        if (r == to) {
            return true;
        }
        if (seen[r]) {
            continue;
        }
        seen[r] = 1;
        for (std::size_t n = 0; n < edges.size(); ++n) {
            if (edges[r][n] > 0 && !seen[n]) {
                stack.push_back(static_cast<RobotId>(n));
            }
        }
    }
    return false;
}

} // namespace

std::vector<CriticalAssignment> coordinator_update(std::span<const RobotView> views, std::span<CsRecord* const> sections,
                                                   const CoordinationPolicy& policy, Nanos now_ns, UpdateCounters* counters)
{
    const std::size_t n = views.size();
    const int margin = policy.safety_margin_indices;

    for (CsRecord* rec : sections) {
        if (rec->resolved) {
            continue;
        }
        const CriticalSection& cs = rec->cs;
        const RobotReport& ra = views[cs.robot_a].report;
        const RobotReport& rb = views[cs.robot_b].report;
        if (ra.mission_id != cs.mission_a || rb.mission_id != cs.mission_b) {
            rec->resolved = true;
        } else if (ra.path_index > cs.range_a.hi || rb.path_index > cs.range_b.hi) {
            // Once the holder is through, or the yielder has overrun it, the
            // section no longer constrains anyone.
            rec->resolved = true;
        }
    }

    std::vector<std::int32_t> critical(n, kNoRestriction);
    std::vector<std::vector<int>> waits(n, std::vector<int>(n, 0));
    for (const CsRecord* rec : sections) {
        if (rec->resolved || !rec->holder) {
            continue;
        }
        const RobotId yielder = rec->cs.other(*rec->holder);
        critical[yielder] = std::min(critical[yielder], stop_index(rec->cs.range_of(yielder), margin));
        ++waits[yielder][*rec->holder];
    }

    const double allowance = seconds(policy.reaction_allowance_ns);
    const double horizon = seconds(policy.control_period_ns) + allowance;
    for (CsRecord* rec : sections) {
        if (rec->resolved || rec->holder) {
            continue;
        }
        const CriticalSection& cs = rec->cs;
        const RobotView& va = views[cs.robot_a];
        const RobotView& vb = views[cs.robot_b];
        const auto must_decide = [&](const RobotView& v, RobotId r) {
            return stop_gap(v, *rec, r, margin) < stopping_need(v, horizon);
        };
        if (policy.defer_grants && !must_decide(va, cs.robot_a) && !must_decide(vb, cs.robot_b)) {
            continue;
        }

        const auto eta = [&](const RobotView& v, RobotId r) {
            const IndexRange& range = cs.range_of(r);
            if (critical[r] <= range.hi) {
                return std::numeric_limits<double>::infinity(); // held short by another section
            }
            return time_to_cover(v.envelope->arc_of(range.lo) - v.report.s, v.report.v, v.spec->v_max, v.spec->a_max);
        };
        const auto can_stop = [&](RobotId r) {
            const RobotView& v = views[r];
            const double gap = stop_gap(v, *rec, r, margin);
            // A parked robot only starts once a command reaches it.
            return (v.report.v == 0.0 && gap >= 0.0) || gap >= stopping_need(v, allowance);
        };

        const double eta_a = eta(va, cs.robot_a);
        const double eta_b = eta(vb, cs.robot_b);
        RobotId holder = eta_a < eta_b ? cs.robot_a : eta_b < eta_a ? cs.robot_b : std::min(cs.robot_a, cs.robot_b);
        RobotId yielder = cs.other(holder);
        if (!can_stop(yielder) && can_stop(holder)) {
            std::swap(holder, yielder);
            if (counters) {
                ++counters->feasibility_swaps;
            }
        } else if (reaches(waits, holder, yielder)) {
            if (!reaches(waits, yielder, holder) && can_stop(holder)) {
                std::swap(holder, yielder);
                if (counters) {
                    ++counters->cycle_swaps;
                }
            } else if (counters) {
                ++counters->unavoidable_cycles;
            }
        }

        rec->holder = holder;
        rec->decided_ns = now_ns;
        critical[yielder] = std::min(critical[yielder], stop_index(cs.range_of(yielder), margin));
        ++waits[yielder][holder];
        if (counters) {
            ++counters->decisions;
        }
    }

    std::vector<CriticalAssignment> out;
    out.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        out.push_back(CriticalAssignment{static_cast<RobotId>(r), critical[r] == kNoRestriction ? -1 : critical[r]});
    }
    return out;
}

Coordinator::Coordinator(const Scenario& scenario, MissionTable& missions, std::uint64_t mission_seed)
    : scenario_(&scenario),
      missions_(&missions),
      policy_{scenario.safety_margin_indices, scenario.control_period_ns, scenario.reaction_allowance_ns, scenario.defer_grants},
      rng_(mission_seed),
      robots_(scenario.robots.size())
{
    for (std::size_t r = 0; r < robots_.size(); ++r) {
        robots_[r].location = scenario.robots[r].start;
        robots_[r].deck = scenario.robots[r].locations;
    }
}

void Coordinator::ingest(RobotId robot, std::uint32_t seq, const RobotStatusPayload& status)
{
    if (robot >= robots_.size()) {
        return;
    }
    Tracked& t = robots_[robot];
    if (t.heard && seq <= t.last_seq) {
        return;
    }
    t.heard = true;
    t.last_seq = seq;
    t.status = status;
}

RobotReport Coordinator::view_of(RobotId robot) const
{
    const Tracked& t = robots_[robot];
    RobotReport rep;
    rep.robot_id = robot;
    rep.mission_id = t.assigned;
    const Mission* mission = missions_->find(t.assigned);
    if (!mission || t.status.mission_id != t.assigned) {
        return rep; // not started yet: parked at the path start
    }
    const Envelope& env = *mission->envelope;
    const std::int32_t idx = std::clamp(t.status.path_index, 0, env.last_index());
    rep.path_index = idx;
    rep.v = t.status.v;
    rep.s = mission->path->project(Eigen::Vector2d(t.status.x, t.status.y), env.arc_of(idx) - env.ds,
                                   env.arc_of(idx + 1) + env.ds);
    return rep;
}

std::string Coordinator::next_goal(RobotId robot)
{
    Tracked& t = robots_[robot];
    for (;;) {
        if (t.deck_pos >= t.deck.size()) {
            rng_.shuffle(std::span<std::string>(t.deck));
            t.deck_pos = 0;
        }
        const std::string& goal = t.deck[t.deck_pos++];
        if (goal != t.location) {
            return goal;
        }
    }
}

void Coordinator::assign(RobotId robot, Nanos now_ns)
{
    Tracked& t = robots_[robot];
    const Mission& mission = missions_->create(robot, t.location, next_goal(robot));
    t.assigned = mission.id;
    t.active = true;
    for (std::size_t o = 0; o < robots_.size(); ++o) {
        const Tracked& other = robots_[o];
        if (o == robot || !other.active) {
            continue;
        }
        const Mission* om = missions_->find(other.assigned);
        const RobotReport orep = view_of(static_cast<RobotId>(o));
        for (const CsGeometry& g : missions_->geometry(mission.path_key, om->path_key)) {
            if (orep.path_index > g.b.hi) {
                continue;
            }
            CsRecord rec;
            rec.cs = CriticalSection{static_cast<std::uint32_t>(sections_.size()), robot, static_cast<RobotId>(o),
                                     mission.id, om->id, g.a, g.b};
            rec.creator = robot;
            rec.created_ns = now_ns;
            open_.push_back(sections_.size());
            sections_.push_back(rec);
            last_cs_created_ns_ = now_ns;
        }
    }
}

std::vector<Coordinator::Command> Coordinator::update(Nanos now_ns)
{
    for (std::size_t r = 0; r < robots_.size(); ++r) {
        Tracked& t = robots_[r];
        if (!t.active || t.status.mission_id != t.assigned) {
            continue;
        }
        const Mission* mission = missions_->find(t.assigned);
        const RobotReport rep = view_of(static_cast<RobotId>(r));
        if (rep.path_index == mission->envelope->last_index() && rep.v == 0.0 &&
            rep.s >= mission->path->length() - 1e-6) {
            t.active = false;
            t.location = mission->to;
            ++missions_completed_;
        }
    }
    for (std::size_t r = 0; r < robots_.size(); ++r) {
        if (robots_[r].heard && !robots_[r].active) {
            assign(static_cast<RobotId>(r), now_ns);
        }
    }

    std::vector<RobotView> views(robots_.size());
    for (std::size_t r = 0; r < robots_.size(); ++r) {
        views[r].spec = &scenario_->robots[r].spec;
        views[r].report = view_of(static_cast<RobotId>(r));
        if (const Mission* m = missions_->find(robots_[r].assigned)) {
            views[r].envelope = m->envelope.get();
        }
    }
    std::vector<CsRecord*> open;
    open.reserve(open_.size());
    for (std::size_t i : open_) {
        open.push_back(&sections_[i]);
    }
    const auto assignments = coordinator_update(views, open, policy_, now_ns, &counters_);
    std::erase_if(open_, [&](std::size_t i) { return sections_[i].resolved; });

    std::vector<Command> out;
    for (std::size_t r = 0; r < robots_.size(); ++r) {
        if (robots_[r].heard) {
            out.push_back(Command{static_cast<RobotId>(r), robots_[r].assigned, assignments[r].critical_index});
        }
    }
    return out;
}

} // namespace nhil
