#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>

#include "nhil/coord/coordinator.hpp"
#include "nhil/coord/envelope.hpp"
#include "nhil/coord/geometry.hpp"
#include "nhil/coord/kinematics.hpp"
#include "nhil/coord/path.hpp"
#include "nhil/coord/scenario.hpp"
#include "nhil/coord/simulation.hpp"
#include "nhil/netchan/random.hpp"
#include "oracles.hpp"

using namespace nhil;
using Eigen::Vector2d;

using namespace nhil::oracle;

TEST_CASE("obb_intersect agrees with point sampling away from touching")
{
    Rng rng(17);
    int compared = 0;
    int hits = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const Rect a = random_rect(rng);
        const Rect b = random_rect(rng);
        const double eps = 0.03;
        const bool inner = sampling_oracle(grown(a, -eps), grown(b, -eps));
        const bool outer = sampling_oracle(grown(a, eps), grown(b, eps));
        if (inner != outer) {
            continue; // within eps of touching
        }
        ++compared;
        hits += inner ? 1 : 0;
        CHECK(obb_intersect(a, b) == inner);
    }
    CHECK(compared > 9000);
    CHECK(hits > 1000);
}

TEST_CASE("obb_intersect simple cases")
{
    Rect a{Vector2d(0, 0), 1, 0.5, 0};
    Rect b{Vector2d(2.5, 0), 1, 0.5, 0};
    CHECK_FALSE(obb_intersect(a, b));
    b.center.x() = 2.0;
    CHECK(obb_intersect(a, b)); // touching counts
    b = Rect{Vector2d(1.6, 1.6), 1, 0.2, M_PI / 4};
    CHECK_FALSE(obb_intersect(a, b));
    CHECK(obb_intersect(a, Rect{Vector2d(0, 0), 0.1, 0.1, 1.0}));
}

TEST_CASE("find_critical_sections equals the brute-force grouping")
{
    Rng rng(23);
    int with_sections = 0;
    for (int trial = 0; trial < 100; ++trial) {
        RobotSpec spec_a{0, 0.4 + rng.uniform(), 0.2 + rng.uniform() * 0.5, 1, 1};
        RobotSpec spec_b{1, 0.4 + rng.uniform(), 0.2 + rng.uniform() * 0.5, 1, 1};
        const PathGeom pa = arc_length_parameterize(random_polyline(rng, 6));
        const PathGeom pb = arc_length_parameterize(random_polyline(rng, 6));
        const double ds_a = std::max(pa.length() / 29.0, 0.05);
        const double ds_b = std::max(pb.length() / 29.0, 0.05);
        const Envelope ea = sweep_envelope(pa, spec_a, ds_a);
        const Envelope eb = sweep_envelope(pb, spec_b, ds_b);
        REQUIRE(ea.size() <= 31);
        const auto got = find_critical_sections(ea, eb);
        CHECK(got == brute_force_sections(ea, eb));
        with_sections += got.empty() ? 0 : 1;
    }
    CHECK(with_sections > 30);
}

TEST_CASE("arc-length parameterization")
{
    const std::vector<Vector2d> pts{{0, 0}, {3, 0}, {3, 4}};
    const PathGeom p = arc_length_parameterize(pts);
    CHECK(p.length() == doctest::Approx(7.0));
    CHECK(p.s[1] == doctest::Approx(3.0));
    CHECK(p.theta[0] == doctest::Approx(0.0));
    CHECK(p.theta[1] == doctest::Approx(M_PI / 2));
    const Pose2 mid = p.pose_at(5.0);
    CHECK(mid.position.x() == doctest::Approx(3.0));
    CHECK(mid.position.y() == doctest::Approx(2.0));
    CHECK(p.pose_at(100).position.y() == doctest::Approx(4.0));
    CHECK(p.project(Vector2d(3.2, 1.0), 0, 7) == doctest::Approx(4.0));
    CHECK_THROWS_AS(arc_length_parameterize(std::vector<Vector2d>{}), PathError);
    CHECK_THROWS_AS(arc_length_parameterize(std::vector<Vector2d>{{1, 1}, {1, 1}}), PathError);
}

TEST_CASE("envelope samples every ds plus the path end")
{
    const PathGeom p = arc_length_parameterize(std::vector<Vector2d>{{0, 0}, {10.5, 0}});
    const Envelope e = sweep_envelope(p, RobotSpec{0, 2, 1, 1, 1}, 2.0);
    REQUIRE(e.size() == 7);
    CHECK(e.arc.back() == doctest::Approx(10.5));
    CHECK(e.arc[5] == doctest::Approx(10.0));
    CHECK(e.index_at(3.9) == 1);
    CHECK(e.index_at(10.4) == 5);
    CHECK(e.index_at(10.5) == 6);
    const Envelope exact = sweep_envelope(p, RobotSpec{0, 2, 1, 1, 1}, 0.5);
    CHECK(exact.size() == 22);
}

TEST_CASE("trapezoid and triangular profiles")
{
    const TrapezoidProfile t = trapezoid_profile(100, 6, 2);
    CHECK(t.v_peak == doctest::Approx(6));
    CHECK(t.t_accel == doctest::Approx(3));
    CHECK(t.duration == doctest::Approx(3 + 3 + (100 - 18) / 6.0));
    CHECK(t.position(t.duration) == doctest::Approx(100));
    CHECK(t.velocity(t.duration) == doctest::Approx(0).epsilon(1e-9));
    const TrapezoidProfile tri = trapezoid_profile(4, 6, 2);
    CHECK(tri.v_peak == doctest::Approx(std::sqrt(8.0)));
    CHECK(tri.t_cruise == doctest::Approx(0));
    CHECK(tri.position(tri.duration / 2) == doctest::Approx(2));
    CHECK(time_to_cover(18, 0, 6, 2) == doctest::Approx(4.5));
    CHECK(time_to_cover(4, 0, 6, 2) == doctest::Approx(2));
    CHECK(time_to_cover(12, 6, 6, 2) == doctest::Approx(2));
    CHECK(braking_distance(6, 2) == doctest::Approx(9));
}

TEST_CASE("tracker respects its limits and timely restrictions")
{
    Rng rng(31);
    const PathGeom path = arc_length_parameterize(std::vector<Vector2d>{{0, 0}, {60, 0}, {60, 30}});
    for (const RobotSpec spec : {harbor_spec(0), warehouse_spec(0)}) {
        const Envelope env = sweep_envelope(path, spec, 0.5);
        for (int trial = 0; trial < 200; ++trial) {
            RobotState st;
            st.pose = path.pose_at(0);
            const double dt = 0.01;
            const int apply_at = static_cast<int>(rng.below(4000));
            const auto cp = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(env.size())));
            bool timely = false;
            for (int k = 0; k < 8000; ++k) {
                if (k == apply_at) {
                    st.last_received_cp = cp;
                    timely = braking_distance(st.v, spec.a_max) <= env.arc_of(cp) - st.s;
                }
                const RobotState next = tracker_step(st, dt, spec, path, env);
                REQUIRE(next.v <= spec.v_max + 1e-12);
                REQUIRE(std::abs(next.v - st.v) <= spec.a_max * dt * (1 + 1e-9));
                REQUIRE(next.s >= st.s);
                st = next;
            }
            if (timely) {
                CHECK(st.s <= env.arc_of(cp) + 1e-6);
            }
            CHECK(st.v == 0.0);
        }
    }
}

TEST_CASE("presets follow the fleet table")
{
    const auto harbor = preset_scenario("harbor");
    REQUIRE(harbor);
    CHECK(harbor->robots.size() == 7);
    for (const auto& r : harbor->robots) {
        CHECK(r.spec.length_m == 14.8);
        CHECK(r.spec.width_m == 3.0);
        CHECK(r.spec.v_max == 6.0);
        CHECK(r.spec.a_max == 2.0);
    }
    const auto warehouse = preset_scenario("warehouse");
    REQUIRE(warehouse);
    CHECK(warehouse->robots.size() == 7);
    for (const auto& r : warehouse->robots) {
        CHECK(r.spec.length_m == 2.0);
        CHECK(r.spec.width_m == 0.5);
        CHECK(r.spec.v_max == 2.0);
        CHECK(r.spec.a_max == 1.0);
    }
    CHECK_FALSE(preset_scenario("moon").has_value());
    CHECK(warehouse->safety_margin_indices == default_safety_margin(warehouse->ds));
    CHECK(default_safety_margin(0.5) == 2);
    CHECK(default_safety_margin(2.0) == 1);
}

TEST_CASE("scenario json roundtrip and field-path errors")
{
    const Scenario w = *preset_scenario("warehouse");
    const auto doc = scenario_to_json(w);
    CHECK(scenario_to_json(scenario_from_json(doc)) == doc);

    auto bad = doc;
    auto extra = doc["paths"][0];
    extra["from"] = "nowhere";
    bad["paths"].push_back(extra);
    const std::string where = "paths[" + std::to_string(doc["paths"].size()) + "]";
    try {
        scenario_from_json(bad);
        FAIL("expected a validation error");
    } catch (const ScenarioError& e) {
        CHECK(std::string(e.what()).rfind(where, 0) == 0);
    }
    bad = doc;
    bad["robots"][0]["spec"]["v_max"] = -1;
    CHECK_THROWS_AS(scenario_from_json(bad), ScenarioError);
    bad = doc;
    bad["locations"][bad["robots"][1]["start"].get<std::string>()] = bad["locations"][bad["robots"][0]["start"].get<std::string>()];
    CHECK_THROWS_AS(scenario_from_json(bad), ScenarioError);
    bad = doc;
    bad["paths"][0]["waypoints"][1] = {1e6, 1e6};
    CHECK_THROWS_AS(scenario_from_json(bad), ScenarioError);
}

TEST_CASE("coordinator_update: earliest arrival holds, the other stops short")
{
    const RobotSpec spec{0, 2, 0.5, 2, 1};
    const PathGeom pa = arc_length_parameterize(std::vector<Vector2d>{{-20, 0}, {20, 0}});
    const PathGeom pb = arc_length_parameterize(std::vector<Vector2d>{{0, -30}, {0, 20}});
    const Envelope ea = sweep_envelope(pa, spec, 0.5);
    const Envelope eb = sweep_envelope(pb, spec, 0.5);
    const auto geom = find_critical_sections(ea, eb);
    REQUIRE(geom.size() == 1);

    CsRecord rec;
    rec.cs = CriticalSection{0, 0, 1, 1, 2, geom[0].a, geom[0].b};
    std::vector<RobotView> views{{&spec, &ea, RobotReport{0, 1, 0, 0.0, 0.0}}, {&spec, &eb, RobotReport{1, 2, 0, 0.0, 0.0}}};
    std::vector<CsRecord*> open{&rec};
    CoordinationPolicy policy;
    UpdateCounters counters;
    auto out = coordinator_update(views, open, policy, 0, &counters);
    REQUIRE(rec.holder);
    CHECK(*rec.holder == 0); // nearer to the crossing
    CHECK(out[0] == CriticalAssignment{0, -1});
    CHECK(out[1] == CriticalAssignment{1, stop_index(geom[0].b, policy.safety_margin_indices)});
    CHECK(counters.decisions == 1);

    // Sticky: a later pass keeps the holder even when the yielder is closer.
    views[1].report.s = eb.arc_of(out[1].critical_index);
    views[1].report.path_index = out[1].critical_index;
    out = coordinator_update(views, open, policy, 100, &counters);
    CHECK(*rec.holder == 0);
    CHECK(counters.decisions == 1);

    // Once the holder is past the section it is resolved and nobody waits.
    views[0].report.path_index = geom[0].a.hi + 1;
    views[0].report.s = ea.arc_of(geom[0].a.hi + 1);
    out = coordinator_update(views, open, policy, 200, &counters);
    CHECK(rec.resolved);
    CHECK(out[1].critical_index == -1);
}

TEST_CASE("coordinator_update swaps when the yielder can no longer stop")
{
    const RobotSpec spec{0, 2, 0.5, 2, 1};
    const PathGeom pa = arc_length_parameterize(std::vector<Vector2d>{{-20, 0}, {20, 0}});
    const PathGeom pb = arc_length_parameterize(std::vector<Vector2d>{{0, -1}, {0, 20}});
    const Envelope ea = sweep_envelope(pa, spec, 0.5);
    const Envelope eb = sweep_envelope(pb, spec, 0.5);
    const auto geom = find_critical_sections(ea, eb);
    REQUIRE(geom.size() == 1);
    CsRecord rec;
    rec.cs = CriticalSection{0, 0, 1, 1, 2, geom[0].a, geom[0].b};
    // Robot 1 is parked closer; robot 0 is at full speed 1 m before its stop point.
    const double stop_a = ea.arc_of(stop_index(geom[0].a, 2));
    std::vector<RobotView> views{{&spec, &ea, RobotReport{0, 1, ea.index_at(stop_a - 1), stop_a - 1, 2.0}},
                                 {&spec, &eb, RobotReport{1, 2, 0, 0.0, 0.0}}};
    std::vector<CsRecord*> open{&rec};
    UpdateCounters counters;
    const auto out = coordinator_update(views, open, CoordinationPolicy{}, 0, &counters);
    REQUIRE(rec.holder);
    CHECK(*rec.holder == 0);
    CHECK(counters.feasibility_swaps == 1);
    CHECK(out[1].critical_index >= 0);
}

TEST_CASE("collision detector counts once per pair and section")
{
    CollisionDetector det(2);
    std::vector<CsRecord> sections(1);
    sections[0].cs = CriticalSection{0, 0, 1, 1, 2, {0, 10}, {0, 10}};
    std::vector<BodyState> apart{{0, Rect{Vector2d(0, 0), 1, 0.5, 0}, 1, 3}, {1, Rect{Vector2d(5, 0), 1, 0.5, 0}, 2, 3}};
    std::vector<BodyState> touching{{0, Rect{Vector2d(0, 0), 1, 0.5, 0}, 1, 3}, {1, Rect{Vector2d(1, 0), 1, 0.5, 0}, 2, 3}};
    CHECK(det.step(0, apart, sections).empty());
    const auto first = det.step(1, touching, sections);
    REQUIRE(first.size() == 1);
    CHECK(first[0].cs_id == 0);
    CHECK(det.step(2, touching, sections).empty()); // still the same contact
    CHECK(det.step(3, apart, sections).empty());
    CHECK(det.step(4, touching, sections).empty()); // same section again
    std::vector<BodyState> elsewhere = touching;
    elsewhere[0].mission_id = 9;
    CHECK(det.step(5, apart, sections).empty());
    const auto stray = det.step(6, elsewhere, sections);
    REQUIRE(stray.size() == 1);
    CHECK(stray[0].cs_id == -1);
}

TEST_CASE("ideal channel: no collisions and deterministic output")
{
    const Scenario w = *preset_scenario("warehouse");
    const auto dir = std::filesystem::temp_directory_path() / "nhil_test_coord";
    std::filesystem::remove_all(dir);
    CoordConfig cfg;
    cfg.seed = 3;
    cfg.min_cs = 150;
    cfg.trace_dir = dir / "a";
    const CoordResult a = run_coordination(w, *named_profile("ideal"), cfg);
    cfg.trace_dir = dir / "b";
    const CoordResult b = run_coordination(w, *named_profile("ideal"), cfg);
    CHECK(a.stats.cs_total >= 150);
    CHECK(a.stats.collision_count == 0);
    CHECK(a.stats.to_json().dump() == b.stats.to_json().dump());
    for (const char* f : {"poses.csv", "commands.csv", "events.csv"}) {
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
        CHECK_FALSE(slurp(dir / "a" / f).empty());
    }
    CHECK(a.stats.p_collision == 0.0);
}

TEST_CASE("progress watchdog aborts a fleet that cannot create sections")
{
    Scenario w = *preset_scenario("warehouse");
    w.progress_budget_ns = 1 * kNanosPerSecond;
    ChannelProfile dead = static_profile(1.0, 0);
    CoordConfig cfg;
    cfg.min_cs = 100000;
    CHECK_THROWS_AS(run_coordination(w, dead, cfg), CoordError);
}
