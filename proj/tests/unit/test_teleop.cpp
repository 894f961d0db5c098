#include <doctest.h>

#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "nhil/netchan/profile.hpp"
#include "nhil/teleop/egm.hpp"
#include "nhil/teleop/motion.hpp"
#include "nhil/teleop/simulation.hpp"
#include "oracles.hpp"

using namespace nhil;
using namespace nhil::oracle;

namespace {

std::filesystem::path fresh_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("nhil_teleop_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

JointFrame frame(std::uint32_t seq)
{
    return JointFrame{seq, EgmJointsPayload{{0.1, 0.2}}};
}

constexpr Nanos ms = kNanosPerMilli;

} // namespace

TEST_CASE("fk of ik lands on the target on both elbow branches")
{
    std::mt19937_64 rng(42);
    const double l1 = 0.35;
    const double l2 = 0.25;
    std::uniform_real_distribution<double> radius(std::abs(l1 - l2) + 1e-6, l1 + l2 - 1e-6);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto target = std::polar(radius(rng), angle(rng));
        const Eigen::Vector2d t(target.real(), target.imag());
        for (auto branch : {ElbowBranch::Down, ElbowBranch::Up}) {
            const auto [q1, q2] = ik_2link<double>(t, l1, l2, branch);
            if (branch == ElbowBranch::Down) {
                CHECK(q2 >= 0.0);
            } else {
                CHECK(q2 <= 0.0);
            }
            worst = std::max(worst, std::abs(phasor_fk(q1, q2, l1, l2) - target));
            const Eigen::Vector2d fk = fk_2link<double>(q1, q2, l1, l2);
            worst = std::max(worst, (fk - t).norm());
        }
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("ik rejects targets outside the annulus")
{
    CHECK_THROWS_AS(ik_2link<double>(Eigen::Vector2d(0.71, 0.0), 0.35, 0.35, ElbowBranch::Down), ReachabilityError);
    CHECK_THROWS_AS(ik_2link<double>(Eigen::Vector2d(0.05, 0.0), 0.35, 0.25, ElbowBranch::Down), ReachabilityError);
    // Boundary points are reachable.
    CHECK_NOTHROW(ik_2link<double>(Eigen::Vector2d(0.70, 0.0), 0.35, 0.35, ElbowBranch::Down));
    try {
        ik_2link<double>(Eigen::Vector2d(0.0, 1.0), 0.35, 0.35, ElbowBranch::Down);
        FAIL("expected throw");
    } catch (const ReachabilityError& e) {
        CHECK(e.distance() == doctest::Approx(1.0));
        CHECK(e.max_reach() == doctest::Approx(0.7));
    }
}

TEST_CASE("joint step is limited by qdot_max")
{
    auto next = robot_joint_step({0.0, 1.0}, {1.0, 0.99}, 0.008, 3.0);
    CHECK(next[0] == doctest::Approx(0.024));
    CHECK(next[1] == doctest::Approx(0.99));
    next = robot_joint_step({0.0, 0.0}, {-1.0, 0.0}, 0.008, 3.0);
    CHECK(next[0] == doctest::Approx(-0.024));
    CHECK(next[1] == 0.0);
}

TEST_CASE("swing sample count and timing")
{
    MotionProfile p;
    CHECK(p.sample_count() == 448671);
    CHECK(p.frame_time_ns(125) == kNanosPerSecond);
    p.loops = 2;
    const auto s = generate_swing(p);
    CHECK(s.size() == 1008);
    CHECK(s[0].point.y() == doctest::Approx(0.0));
    p.rate_hz = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("egm state machine")
{
    EgmConfig cfg;
    EgmState s;

    SUBCASE("joints ignored while inactive")
    {
        auto st = egm_server_step(s, 0, frame(1), cfg);
        CHECK_FALSE(st.accepted);
        CHECK(st.state.activation == Activation::Inactive);
    }

    SUBCASE("activation, stale drop and deactivation")
    {
        auto st = egm_server_step(s, 0, EgmCtrlPayload{EgmCommand::Activate}, cfg);
        CHECK(st.event == EgmEvent::Activated);
        st = egm_server_step(st.state, 8 * ms, frame(5), cfg);
        REQUIRE(st.accepted);
        CHECK(st.accepted->seq == 5);
        st = egm_server_step(st.state, 16 * ms, frame(4), cfg);
        CHECK_FALSE(st.accepted);
        st = egm_server_step(st.state, 24 * ms, EgmCtrlPayload{EgmCommand::Deactivate}, cfg);
        CHECK(st.event == EgmEvent::Deactivated);
        CHECK(st.state.activation == Activation::Inactive);
        CHECK(st.state.dropouts == 0);
    }

    SUBCASE("one dropout per silent gap")
    {
        auto st = egm_server_step(s, 0, EgmCtrlPayload{EgmCommand::Activate}, cfg);
        // Exactly at the timeout is still alive.
        st = egm_server_step(st.state, 500 * ms, std::monostate{}, cfg);
        CHECK_FALSE(st.watchdog_tripped);
        st = egm_server_step(st.state, 501 * ms, std::monostate{}, cfg);
        CHECK(st.watchdog_tripped);
        CHECK(st.event == EgmEvent::WatchdogTrip);
        REQUIRE(st.state.pending_reactivation_at_ns);
        CHECK(*st.state.pending_reactivation_at_ns == 501 * ms + cfg.reconnect_delay_ns);
        for (Nanos t = 502 * ms; t < 3000 * ms; t += 8 * ms) {
            st = egm_server_step(st.state, t, frame(9), cfg);
            CHECK_FALSE(st.accepted);
        }
        CHECK(st.state.dropouts == 1);
        st = egm_server_step(st.state, 3000 * ms, EgmCtrlPayload{EgmCommand::Activate}, cfg);
        CHECK(st.state.activation == Activation::Active);
        CHECK_FALSE(st.state.pending_reactivation_at_ns);
        st = egm_server_step(st.state, 3008 * ms, frame(10), cfg);
        CHECK(st.accepted);
        st = egm_server_step(st.state, 4000 * ms, std::monostate{}, cfg);
        CHECK(st.state.dropouts == 2);
    }
}

TEST_CASE("ideal channel executes every loop")
{
    const auto r = run_teleop(MotionProfile{}, *named_profile("ideal"), TeleopConfig{}, 1);
    CHECK(r.stats.n_s == 890);
    CHECK(r.stats.n_a == 890);
    CHECK(r.stats.mlr == 0.0);
    CHECK(r.stats.dropouts == 0);
    CHECK(r.stats.frames_sent == MotionProfile{}.sample_count());
    CHECK(r.stats.frames_applied == r.stats.frames_sent);
    CHECK(r.stats.lost_samples == 0);
    // Servo lag stays within one frame of rate-limited motion.
    CHECK(r.stats.joint_error_max <= 3.0 / 125.0 + 1e-12);
    REQUIRE(r.measured_y.size() >= r.desired_y.size());
}

TEST_CASE("fk and ik reference points")
{
    const auto [a1, a2] = ik_2link<double>(Eigen::Vector2d(0.7, 0.0), 0.35, 0.35, ElbowBranch::Down);
    CHECK(a1 == doctest::Approx(0.0));
    CHECK(a2 == doctest::Approx(0.0));
    const auto [b1, b2] = ik_2link<double>(Eigen::Vector2d(0.0, 0.7), 0.35, 0.35, ElbowBranch::Down);
    CHECK(b1 == doctest::Approx(std::numbers::pi / 2));
    CHECK(b2 == doctest::Approx(0.0).epsilon(1e-6));
    const Eigen::Vector2d p = fk_2link<double>(std::numbers::pi / 2, -std::numbers::pi / 2, 0.35, 0.35);
    CHECK(p.x() == doctest::Approx(0.35));
    CHECK(p.y() == doctest::Approx(0.35));
    const Eigen::Vector2d m = map_motion<double>(Eigen::Vector2d(1.0, 0.5), Eigen::Vector2d(1.0, 0.0),
                                                 Eigen::Vector2d(0.0, 0.0), 0.8);
    CHECK(m.y() == doctest::Approx(0.4));
}

TEST_CASE("a dead channel executes nothing")
{
    MotionProfile m;
    m.loops = 20;
    const auto r = run_teleop(m, static_profile(1.0, 0.0), TeleopConfig{}, 1);
    CHECK(r.stats.n_s == 20);
    CHECK(r.stats.n_a == 0);
    CHECK(r.stats.mlr == 1.0);
    CHECK(r.stats.frames_received == 0);
}

TEST_CASE("series files are deterministic")
{
    MotionProfile m;
    m.loops = 30;
    // Bursts of about 100 frames, long enough to trip the watchdog.
    ChannelProfile ch = *named_profile("wifi6-long");
    ch.name = "bursty";
    ch.link.loss = GilbertElliottParams{0.002, 0.01, 0.0, 1.0};
    const auto a = fresh_dir("a");
    const auto b = fresh_dir("b");
    const auto ra = run_teleop(m, ch, TeleopConfig{}, 7, a);
    const auto rb = run_teleop(m, ch, TeleopConfig{}, 7, b);
    CHECK(ra.stats.to_json() == rb.stats.to_json());
    for (const char* f : {"desired.csv", "measured.csv", "egm_events.csv"}) {
        const auto sa = slurp(a / f);
        CHECK_FALSE(sa.empty());
        CHECK(sa == slurp(b / f));
    }
    CHECK(slurp(a / "desired.csv").rfind("t_ns,seq,q1_des,q2_des,y_des\n", 0) == 0);
    CHECK(slurp(a / "measured.csv").rfind("t_ns,seq_last_applied,q1,q2,y_tcp\n", 0) == 0);

    // Joint speed limit per robot tick, read back from the series.
    std::istringstream rows(slurp(a / "measured.csv"));
    std::string line;
    std::getline(rows, line);
    double prev_t = -1, prev_q1 = 0, prev_q2 = 0, worst = 0;
    while (std::getline(rows, line)) {
        double t_ns, seq, q1, q2, y;
        char c;
        std::istringstream f(line);
        f >> t_ns >> c >> seq >> c >> q1 >> c >> q2 >> c >> y;
        if (prev_t >= 0) {
            const double dt = (t_ns - prev_t) * 1e-9;
            worst = std::max(worst, std::max(std::abs(q1 - prev_q1), std::abs(q2 - prev_q2)) / dt);
        }
        prev_t = t_ns;
        prev_q1 = q1;
        prev_q2 = q2;
    }
    CHECK(worst <= 3.0 * (1 + 1e-9));

    // Each trip is followed by exactly one successful reactivation.
    std::istringstream events(slurp(a / "egm_events.csv"));
    std::getline(events, line);
    int trips = 0, activations = 0;
    bool inactive = true;
    while (std::getline(events, line)) {
        if (line.ends_with(",watchdog_trip")) {
            CHECK_FALSE(inactive);
            inactive = true;
            ++trips;
        } else if (line.ends_with(",activate")) {
            CHECK(inactive);
            inactive = false;
            ++activations;
        }
    }
    CHECK(trips == static_cast<int>(ra.stats.dropouts));
    CHECK(trips >= 1);
    CHECK(activations >= trips);
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}

TEST_CASE("unreachable mapping is reported")
{
    MotionProfile m;
    m.loops = 2;
    m.amplitude_m = 1.0;
    CHECK_THROWS_AS(run_teleop(m, *named_profile("ideal"), TeleopConfig{}, 1), TeleopError);
    TeleopConfig bad;
    bad.qdot_max = 0;
    CHECK_THROWS_AS(run_teleop(m, *named_profile("ideal"), bad, 1), std::invalid_argument);
}
