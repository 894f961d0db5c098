#include "nhil/harness/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <exception>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "nhil/coord/simulation.hpp"
#include "nhil/harness/experiments.hpp"
#include "nhil/metrics/metrics.hpp"
#include "nhil/netchan/agent.hpp"

namespace nhil {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct RunFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

RunManifest base_manifest(const std::string& command, int argc, const char* const* argv)
{
    RunManifest m;
    m.command = command;
    m.argv.assign(argv, argv + argc);
    m.tool_version = tool_version();
    m.start_time = utc_timestamp_now();
    return m;
}

// Runs `body` on a worker until a signal arrives or `duration_s` (if > 0) passes.
template <typename Body>
void serve(Body&& body, double duration_s)
{
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::exception_ptr failure;
    std::jthread worker([&](std::stop_token stop) {
        try {
            body(stop);
        } catch (...) {
            failure = std::current_exception();
        }
    });
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(duration_s);
    while (!g_interrupted && !failure) {
        if (duration_s > 0 && std::chrono::steady_clock::now() >= deadline) {
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    worker.request_stop();
    worker.join();
    if (failure) {
        std::rethrow_exception(failure);
    }
}

struct CoordArgs {
    std::string scenario;
    std::string profile = "ideal";
    std::uint64_t seed = 1;
    std::uint64_t min_cs = 1000;
    std::string out;
    bool traces = false;
    std::uint32_t pose_decimation = 10;
    std::string tap;
    double allowance_ms = -1;
    bool defer_grants = false;
};

struct TeleopArgs {
    std::string profile = "ideal";
    std::vector<std::string> profiles;
    std::uint32_t loops = 890;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds{1};
    std::string out;
    bool series = false;
    std::string tap;
    MotionProfile motion;
    TeleopConfig config;
    double watchdog_ms = 500;
    double reconnect_ms = 2000;
    std::string elbow = "down";
};

struct GridArgs {
    std::string scenario;
    std::string out;
    std::vector<std::uint64_t> seeds{1};
    std::uint64_t min_cs = 10000;
    std::vector<double> plrs{0.0, 0.1};
    std::vector<double> delays{0.0, 10.0, 50.0, 100.0};
    std::vector<std::string> profiles;
    bool no_static = false;
    bool traces = false;
};

struct AgentArgs {
    std::string listen;
    std::string forward;
    std::string tap;
    double delay_ms = 0;
    double plr = 0;
    double jitter_ms = 0;
    std::uint64_t seed = 1;
    double duration_s = 0;
};

struct DelayArgs {
    std::string send;
    std::string recv;
    std::string send_endpoint;
    std::string recv_endpoint;
    bool unsynchronized = false;
};

void add_teleop_overrides(CLI::App* cmd, TeleopArgs& a)
{
    cmd->add_option("--loops", a.loops, "Motion loops to stream")->capture_default_str();
    cmd->add_option("--rate-hz", a.motion.rate_hz, "Frame rate")->capture_default_str();
    cmd->add_option("--loop-period-s", a.motion.loop_period_s, "Duration of one swing loop")->capture_default_str();
    cmd->add_option("--amplitude-m", a.motion.amplitude_m, "Swing amplitude of the operator hand")->capture_default_str();
    cmd->add_option("--scale", a.config.mapping_scale, "Operator to robot mapping scale")->capture_default_str();
    cmd->add_option("--l1", a.config.l1, "First link length in m")->capture_default_str();
    cmd->add_option("--l2", a.config.l2, "Second link length in m")->capture_default_str();
    cmd->add_option("--qdot-max", a.config.qdot_max, "Joint speed limit in rad/s")->capture_default_str();
    cmd->add_option("--elbow", a.elbow, "IK branch")->check(CLI::IsMember({"down", "up"}))->capture_default_str();
    cmd->add_option("--watchdog-ms", a.watchdog_ms, "Stream watchdog timeout")->capture_default_str();
    cmd->add_option("--reconnect-ms", a.reconnect_ms, "Delay before a reactivation attempt")->capture_default_str();
    cmd->add_option("--peak-threshold", a.config.peak_threshold, "Relative peak threshold")->capture_default_str();
    cmd->add_option("--peak-separation-loops", a.config.peak_separation_loops, "Peak window in loop periods")
        ->capture_default_str();
}

void finish_teleop_args(TeleopArgs& a)
{
    a.motion.loops = a.loops;
    a.config.egm.watchdog_timeout_ns = millis_to_nanos(a.watchdog_ms);
    a.config.egm.reconnect_delay_ns = millis_to_nanos(a.reconnect_ms);
    a.config.branch = a.elbow == "up" ? ElbowBranch::Up : ElbowBranch::Down;
}

int cmd_coord(const CoordArgs& a, const RunManifest& base)
{
    Scenario scenario = load_scenario(a.scenario);
    if (a.allowance_ms >= 0) {
        scenario.reaction_allowance_ns = millis_to_nanos(a.allowance_ms);
    }
    scenario.defer_grants = scenario.defer_grants || a.defer_grants;
    validate_scenario(scenario);
    const ChannelProfile profile = load_profile(a.profile);

    std::optional<TapSink> tap;
    if (!a.tap.empty()) {
        tap.emplace(std::filesystem::path(a.tap));
    }
    CoordConfig cfg;
    cfg.seed = a.seed;
    cfg.min_cs = a.min_cs;
    cfg.pose_decimation = a.pose_decimation;
    cfg.tap = tap ? &*tap : nullptr;
    if (!a.out.empty()) {
        RunManifest m = base;
        const nlohmann::json sdoc = scenario_to_json(scenario);
        const nlohmann::json pdoc = profile_to_json(profile);
        m.scenario = scenario.name;
        m.scenario_hash = content_hash(sdoc);
        m.profiles = {profile.name};
        m.profile_hashes = {content_hash(pdoc)};
        m.seeds = {a.seed};
        m.inputs = {{"scenario", sdoc}, {"profiles", {pdoc}}};
        m.parameters = {{"min_cs", a.min_cs},
                        {"control_period_ns", scenario.control_period_ns},
                        {"tracker_period_ns", scenario.tracker_period_ns},
                        {"reaction_allowance_ns", scenario.reaction_allowance_ns},
                        {"ds", scenario.ds},
                        {"safety_margin_indices", scenario.safety_margin_indices},
                        {"defer_grants", scenario.defer_grants},
                        {"traces", a.traces},
                        {"pose_decimation", a.pose_decimation}};
        write_json_file(std::filesystem::path(a.out) / "manifest.json", m.to_json());
        if (a.traces) {
            cfg.trace_dir = a.out;
        }
    }
    const CoordResult result = run_coordination(scenario, profile, cfg);
    if (tap) {
        tap->flush();
    }
    if (!a.out.empty()) {
        const std::filesystem::path dir(a.out);
        write_json_file(dir / "stats.json", result.stats.to_json());
        if (!a.traces) {
            std::ofstream events(dir / "events.csv", std::ios::binary);
            events << kEventsHeader << '\n';
            for (const CollisionEvent& e : result.events) {
                events << format_collision_event(e) << '\n';
            }
        }
    }
    const CoordStats& s = result.stats;
    fmt::print("scenario={} profile={} seed={} cs_total={} collisions={} p_collision_e-3={}\n", s.scenario, s.profile,
               s.seed, s.cs_total, s.collision_count, format_p_collision_e3(s.collision_count, s.cs_total));
    return kExitOk;
}

int cmd_teleop(TeleopArgs a, const RunManifest& base)
{
    finish_teleop_args(a);
    const ChannelProfile profile = load_profile(a.profile);
    std::optional<TapSink> tap;
    if (!a.tap.empty()) {
        tap.emplace(std::filesystem::path(a.tap));
    }
    std::optional<std::filesystem::path> out;
    if (!a.out.empty()) {
        out = a.out;
        RunManifest m = base;
        const nlohmann::json pdoc = profile_to_json(profile);
        m.profiles = {profile.name};
        m.profile_hashes = {content_hash(pdoc)};
        m.seeds = {a.seed};
        m.inputs = {{"profiles", {pdoc}}};
        m.parameters = {{"teleop", teleop_config_to_json(a.motion, a.config)}};
        write_json_file(*out / "manifest.json", m.to_json());
    }
    const TeleopResult result = run_teleop(a.motion, profile, a.config, a.seed, out, tap ? &*tap : nullptr);
    if (tap) {
        tap->flush();
    }
    if (out) {
        write_json_file(*out / "stats.json", result.stats.to_json());
    }
    const TeleopStats& s = result.stats;
    fmt::print("profile={} seed={} loops={} n_s={} n_a={} mlr={:.6f} dropouts={}\n", s.profile, s.seed, s.loops, s.n_s,
               s.n_a, s.mlr, s.dropouts);
    return kExitOk;
}

int cmd_teleop_suite(TeleopArgs a, const RunManifest& base)
{
    finish_teleop_args(a);
    TeleopSuiteSpec suite;
    if (!a.profiles.empty()) {
        suite.profiles = a.profiles;
    }
    suite.seeds = a.seeds;
    suite.motion = a.motion;
    suite.config = a.config;
    suite.series = a.series;
    const ExperimentResult result = run_teleop_suite(suite, a.out, base);
    fmt::print("{}", result.report.text);
    for (const std::string& f : result.failures) {
        fmt::print(stderr, "failed: {}\n", f);
    }
    return result.failed() ? kExitRunFailure : kExitOk;
}

int cmd_grid(const GridArgs& a, const RunManifest& base)
{
    const Scenario scenario = load_scenario(a.scenario);
    GridSpec grid;
    if (!a.no_static) {
        for (const double plr : a.plrs) {
            for (const double delay : a.delays) {
                grid.cells.push_back(GridCell{plr, delay});
            }
        }
    }
    grid.seeds = a.seeds;
    grid.min_cs = a.min_cs;
    grid.profiles = a.profiles;
    grid.traces = a.traces;
    const ExperimentResult result = run_grid(scenario, grid, a.out, base);
    fmt::print("{}", result.report.text);
    for (const std::string& f : result.failures) {
        fmt::print(stderr, "failed: {}\n", f);
    }
    return result.failed() ? kExitRunFailure : kExitOk;
}

int cmd_agent(const AgentArgs& a)
{
    TapSink tap{std::filesystem::path(a.tap)};
    ForwardAgent agent(parse_endpoint(a.listen), parse_endpoint(a.forward), tap, a.listen);
    fmt::print("agent listening on {} forwarding to {}\n", agent.listen_endpoint().to_string(), a.forward);
    std::fflush(stdout);
    serve([&](std::stop_token stop) { agent.run(stop); }, a.duration_s);
    tap.flush();
    fmt::print("forwarded={}\n", agent.forwarded());
    return kExitOk;
}

int cmd_proxy(const AgentArgs& a)
{
    TapSink tap{std::filesystem::path(a.tap)};
    ProxyConfig cfg;
    cfg.listen = parse_endpoint(a.listen);
    cfg.forward = parse_endpoint(a.forward);
    cfg.delay_ms = a.delay_ms;
    cfg.plr = a.plr;
    cfg.jitter_ms = a.jitter_ms;
    cfg.seed = a.seed;
    ImpairmentProxy proxy(cfg, tap, a.listen);
    fmt::print("proxy listening on {} forwarding to {}\n", proxy.listen_endpoint().to_string(), a.forward);
    std::fflush(stdout);
    serve([&](std::stop_token stop) { proxy.run(stop); }, a.duration_s);
    tap.flush();
    fmt::print("forwarded={} dropped={}\n", proxy.forwarded(), proxy.dropped());
    return kExitOk;
}

int cmd_delay_stats(const DelayArgs& a)
{
    const auto pick = [](const std::vector<TapRecord>& all, TapDirection dir, const std::string& endpoint) {
        std::vector<TapRecord> out;
        for (const TapRecord& r : all) {
            if (r.direction == dir && (endpoint.empty() || r.endpoint == endpoint)) {
                out.push_back(r);
            }
        }
        return out;
    };
    const auto send = pick(load_tap(a.send), TapDirection::Send, a.send_endpoint);
    const auto recv = pick(load_tap(a.recv), TapDirection::Recv, a.recv_endpoint);
    const DelayStats s = one_way_delay_stats(send, recv, !a.unsynchronized);
    const auto ms = [](const std::optional<double>& ns) {
        return ns ? fmt::format("{:.3f}", *ns / 1e6) : std::string("n/a");
    };
    fmt::print("matched={} lost={} mean_ms={} p95_ms={} max_ms={}{}\n", s.matched, s.lost, ms(s.mean_ns),
               ms(s.p95_ns ? std::optional<double>(static_cast<double>(*s.p95_ns)) : std::nullopt),
               ms(s.max_ns ? std::optional<double>(static_cast<double>(*s.max_ns)) : std::nullopt),
               s.clock_synchronized ? "" : " (clocks not synchronized)");
    return kExitOk;
}

int cmd_presets(const std::string& scenario, const std::string& profile)
{
    if (!scenario.empty()) {
        fmt::print("{}\n", scenario_to_json(load_scenario(scenario)).dump(2));
        return kExitOk;
    }
    if (!profile.empty()) {
        fmt::print("{}\n", profile_to_json(load_profile(profile)).dump(2));
        return kExitOk;
    }
    fmt::print("scenarios: harbor warehouse\nprofiles:");
    for (const std::string& n : named_profile_names()) {
        fmt::print(" {}", n);
    }
    fmt::print("\n");
    return kExitOk;
}

} // namespace

int cli_main(int argc, const char* const* argv)
{
    CLI::App app{"Networked fleet coordination and teleoperation test bench"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);

    CoordArgs coord;
    auto* c = app.add_subcommand("coord", "Run one fleet coordination experiment");
    c->add_option("--scenario", coord.scenario, "Preset name or scenario file")->required();
    c->add_option("--profile", coord.profile, "Channel profile name or file")->capture_default_str();
    c->add_option("--seed", coord.seed, "Run seed")->capture_default_str();
    c->add_option("--min-cs", coord.min_cs, "Stop once this many critical sections exist")->capture_default_str();
    c->add_option("--out", coord.out, "Output directory for manifest, stats and events");
    c->add_flag("--traces", coord.traces, "Also write poses.csv and commands.csv");
    c->add_option("--pose-decimation", coord.pose_decimation, "Write every n-th tick to poses.csv")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--tap", coord.tap, "Tap file for every send and receive");
    c->add_option("--reaction-allowance-ms", coord.allowance_ms, "Override the scenario's reaction allowance")
        ->check(CLI::NonNegativeNumber);
    c->add_flag("--defer-grants", coord.defer_grants, "Decide precedence only when a robot must be told");

    TeleopArgs teleop;
    auto* t = app.add_subcommand("teleop", "Stream one teleoperation session");
    t->add_option("--profile", teleop.profile, "Channel profile name or file")->capture_default_str();
    t->add_option("--seed", teleop.seed, "Run seed")->capture_default_str();
    t->add_option("--out", teleop.out, "Output directory for manifest, stats and series");
    t->add_option("--tap", teleop.tap, "Tap file for every send and receive");
    add_teleop_overrides(t, teleop);

    TeleopArgs suite;
    auto* ts = app.add_subcommand("teleop-suite", "Teleoperation sessions over several profiles and seeds");
    ts->add_option("--profiles", suite.profiles, "Profiles, default ideal,ethernet-lab,wifi6-short,wifi6-long")
        ->delimiter(',');
    ts->add_option("--seeds", suite.seeds, "Seeds")->delimiter(',')->capture_default_str();
    ts->add_option("--out", suite.out, "Output directory")->required();
    ts->add_flag("--series", suite.series, "Write the per-run series files");
    add_teleop_overrides(ts, suite);

    GridArgs grid;
    auto* g = app.add_subcommand("grid", "Static loss/delay grid of coordination runs");
    g->add_option("--scenario", grid.scenario, "Preset name or scenario file")->required();
    g->add_option("--out", grid.out, "Output directory")->required();
    g->add_option("--seeds", grid.seeds, "Seeds")->delimiter(',')->capture_default_str();
    g->add_option("--min-cs", grid.min_cs, "Critical sections per run")->capture_default_str();
    g->add_option("--plr", grid.plrs, "Loss rates of the static cells")->delimiter(',')->capture_default_str();
    g->add_option("--delay-ms", grid.delays, "Delays of the static cells")->delimiter(',')->capture_default_str();
    g->add_option("--profiles", grid.profiles, "Extra named or file profiles")->delimiter(',');
    g->add_flag("--no-static", grid.no_static, "Skip the static cells");
    g->add_flag("--traces", grid.traces, "Write pose and command traces per run");

    AgentArgs agent;
    auto* ag = app.add_subcommand("agent", "Forward datagrams unchanged and tap them");
    ag->add_option("--listen", agent.listen, "ip:port to receive on")->required();
    ag->add_option("--forward", agent.forward, "ip:port to forward to")->required();
    ag->add_option("--tap", agent.tap, "Tap CSV file")->required();
    ag->add_option("--duration-s", agent.duration_s, "Exit after this long, 0 runs until interrupted")
        ->capture_default_str();

    AgentArgs proxy;
    auto* px = app.add_subcommand("proxy", "Forward datagrams through a seeded loss and delay model");
    px->add_option("--listen", proxy.listen, "ip:port to receive on")->required();
    px->add_option("--forward", proxy.forward, "ip:port to forward to")->required();
    px->add_option("--delay-ms", proxy.delay_ms, "Added delay")->check(CLI::NonNegativeNumber)->capture_default_str();
    px->add_option("--plr", proxy.plr, "Loss probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    px->add_option("--jitter-ms", proxy.jitter_ms, "Half-width of uniform jitter")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    px->add_option("--seed", proxy.seed, "Loss and jitter seed")->capture_default_str();
    px->add_option("--tap", proxy.tap, "Tap CSV file")->required();
    px->add_option("--duration-s", proxy.duration_s, "Exit after this long, 0 runs until interrupted")
        ->capture_default_str();

    std::string report_in;
    bool report_json = false;
    auto* r = app.add_subcommand("report", "Print the aggregated table of a finished grid or suite");
    r->add_option("--in", report_in, "Output directory of a grid or teleop-suite run")->required();
    r->add_flag("--json", report_json, "Print the JSON document instead");

    DelayArgs delay;
    auto* d = app.add_subcommand("delay-stats", "One-way delay and loss from a pair of tap files");
    d->add_option("--send", delay.send, "Tap file of the sending side")->required();
    d->add_option("--recv", delay.recv, "Tap file of the receiving side")->required();
    d->add_option("--send-endpoint", delay.send_endpoint, "Only send records with this endpoint label");
    d->add_option("--recv-endpoint", delay.recv_endpoint, "Only receive records with this endpoint label");
    d->add_flag("--unsynchronized", delay.unsynchronized, "The two taps come from different clocks");

    std::string dump_scenario;
    std::string dump_profile;
    auto* p = app.add_subcommand("presets", "List built-in scenarios and profiles, or print one as JSON");
    p->add_option("--scenario", dump_scenario, "Scenario to print");
    p->add_option("--profile", dump_profile, "Profile to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    const RunManifest base = base_manifest(command, argc, argv);
    try {
        if (*c) {
            return cmd_coord(coord, base);
        }
        if (*t) {
            return cmd_teleop(teleop, base);
        }
        if (*ts) {
            return cmd_teleop_suite(suite, base);
        }
        if (*g) {
            return cmd_grid(grid, base);
        }
        if (*ag) {
            return cmd_agent(agent);
        }
        if (*px) {
            return cmd_proxy(proxy);
        }
        if (*r) {
            const RenderedReport rep = load_report(report_in);
            fmt::print("{}", report_json ? rep.document.dump(2) + "\n" : rep.text);
            return kExitOk;
        }
        if (*d) {
            return cmd_delay_stats(delay);
        }
        if (*p) {
            return cmd_presets(dump_scenario, dump_profile);
        }
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitRunFailure;
    }
    return kExitUsage;
}

} // namespace nhil
