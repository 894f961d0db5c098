#include "nhil/harness/experiments.hpp"

#include <array>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "nhil/coord/simulation.hpp"

namespace nhil {

Scenario load_scenario(std::string_view name_or_path)
{
    if (auto preset = preset_scenario(name_or_path)) {
        return *preset;
    }
    const std::filesystem::path path{std::string(name_or_path)};
    std::ifstream in(path);
    if (!in) {
        throw ScenarioError(fmt::format("unknown scenario '{}' (not a preset or readable file)", name_or_path));
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return scenario_from_json(doc);
}

std::vector<GridCell> GridSpec::default_cells()
{
    std::vector<GridCell> cells;
    for (const double plr : {0.0, 0.1}) {
        for (const double delay : {0.0, 10.0, 50.0, 100.0}) {
            cells.push_back(GridCell{plr, delay});
        }
    }
    return cells;
}

void GridSpec::validate() const
{
    if (cells.empty() && profiles.empty()) {
        throw std::invalid_argument("grid: needs at least one cell or profile");
    }
    if (seeds.empty()) {
        throw std::invalid_argument("grid: seeds must be nonempty");
    }
    if (min_cs == 0) {
        throw std::invalid_argument("grid: min_cs must be positive");
    }
    for (const GridCell& c : cells) {
        if (!(c.plr >= 0 && c.plr <= 1)) {
            throw std::invalid_argument(fmt::format("grid: plr {} outside [0, 1]", c.plr));
        }
        if (!(c.delay_ms >= 0)) {
            throw std::invalid_argument(fmt::format("grid: delay {} ms is negative", c.delay_ms));
        }
    }
}

std::string cell_label(const GridCell& cell) { return fmt::format("plr{}_delay{}", cell.plr, cell.delay_ms); }

namespace {

void write_events(const std::filesystem::path& file, const std::vector<CollisionEvent>& events)
{
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write {}", file.string()));
    }
    out << kEventsHeader << '\n';
    for (const CollisionEvent& e : events) {
        out << format_collision_event(e) << '\n';
    }
}

void write_text(const std::filesystem::path& file, const std::string& text)
{
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write {}", file.string()));
    }
    out << text;
}

void finish_report(ExperimentResult& result, const std::filesystem::path& out_dir)
{
    result.report = render_report(result.rows);
    nlohmann::json doc = result.report.document;
    doc["failures"] = result.failures;
    write_json_file(out_dir / "report.json", doc);
    write_text(out_dir / "report.txt", result.report.text);
}

struct GridJob {
    std::string label;
    ChannelProfile profile;
    CoordRow row;
};

} // namespace

ExperimentResult run_grid(const Scenario& scenario, const GridSpec& grid, const std::filesystem::path& out_dir,
                          RunManifest manifest)
{
    grid.validate();
    validate_scenario(scenario);

    std::vector<GridJob> jobs;
    for (const GridCell& cell : grid.cells) {
        jobs.push_back(GridJob{cell_label(cell), static_profile(cell.plr, cell.delay_ms),
                               CoordRow{scenario.name, "static", cell.plr, cell.delay_ms, 0, 0, 0, false}});
    }
    for (const std::string& name : grid.profiles) {
        ChannelProfile p = load_profile(name);
        const double plr = mean_loss_rate(p.link.loss);
        const double delay = mean_delay_ns(p.link) / 1e6;
        jobs.push_back(GridJob{p.name, p, CoordRow{scenario.name, p.name, plr, delay, 0, 0, 0, false}});
    }

    const nlohmann::json scenario_doc = scenario_to_json(scenario);
    manifest.scenario = scenario.name;
    manifest.scenario_hash = content_hash(scenario_doc);
    manifest.inputs["scenario"] = scenario_doc;
    manifest.inputs["profiles"] = nlohmann::json::array();
    for (const GridJob& job : jobs) {
        const nlohmann::json doc = profile_to_json(job.profile);
        manifest.profiles.push_back(job.label);
        manifest.profile_hashes.push_back(content_hash(doc));
        manifest.inputs["profiles"].push_back(doc);
    }
    manifest.seeds = grid.seeds;
    manifest.parameters["min_cs"] = grid.min_cs;
    manifest.parameters["control_period_ns"] = scenario.control_period_ns;
    manifest.parameters["tracker_period_ns"] = scenario.tracker_period_ns;
    manifest.parameters["reaction_allowance_ns"] = scenario.reaction_allowance_ns;
    manifest.parameters["ds"] = scenario.ds;
    manifest.parameters["safety_margin_indices"] = scenario.safety_margin_indices;
    manifest.parameters["defer_grants"] = scenario.defer_grants;
    manifest.parameters["traces"] = grid.traces;
    std::filesystem::create_directories(out_dir);
    write_json_file(out_dir / "manifest.json", manifest.to_json());

    ExperimentResult result;
    for (GridJob& job : jobs) {
        for (const std::uint64_t seed : grid.seeds) {
            const std::filesystem::path run_dir = out_dir / "runs" / job.label / std::to_string(seed);
            std::filesystem::create_directories(run_dir);
            CoordConfig cfg;
            cfg.seed = seed;
            cfg.min_cs = grid.min_cs;
            if (grid.traces) {
                cfg.trace_dir = run_dir;
            }
            try {
                const CoordResult run = run_coordination(scenario, job.profile, cfg);
                write_json_file(run_dir / "stats.json", run.stats.to_json());
                if (!grid.traces) {
                    write_events(run_dir / "events.csv", run.events);
                }
                job.row.runs += 1;
                job.row.cs_total += run.stats.cs_total;
                job.row.collisions += run.stats.collision_count;
            } catch (const std::exception& e) {
                const std::string msg = fmt::format("{}/{}: {}", job.label, seed, e.what());
                write_json_file(run_dir / "error.json", nlohmann::json{{"error", e.what()}});
                result.failures.push_back(msg);
                job.row.failed = true;
            }
        }
        result.rows.coordination.push_back(job.row);
    }
    finish_report(result, out_dir);
    return result;
}

int teleop_profile_rank(std::string_view name)
{
    static constexpr std::array<std::string_view, 4> order{"ideal", "ethernet-lab", "wifi6-short", "wifi6-long"};
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i] == name) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(order.size());
}

ExperimentResult run_teleop_suite(const TeleopSuiteSpec& suite, const std::filesystem::path& out_dir,
                                  RunManifest manifest)
{
    if (suite.profiles.empty() || suite.seeds.empty()) {
        throw std::invalid_argument("teleop suite: profiles and seeds must be nonempty");
    }
    suite.motion.validate();
    suite.config.validate();

    std::vector<ChannelProfile> profiles;
    for (const std::string& name : suite.profiles) {
        profiles.push_back(load_profile(name));
    }
    manifest.inputs["profiles"] = nlohmann::json::array();
    for (const ChannelProfile& p : profiles) {
        const nlohmann::json doc = profile_to_json(p);
        manifest.profiles.push_back(p.name);
        manifest.profile_hashes.push_back(content_hash(doc));
        manifest.inputs["profiles"].push_back(doc);
    }
    manifest.seeds = suite.seeds;
    manifest.parameters["teleop"] = teleop_config_to_json(suite.motion, suite.config);
    manifest.parameters["series"] = suite.series;
    std::filesystem::create_directories(out_dir);
    write_json_file(out_dir / "manifest.json", manifest.to_json());

    ExperimentResult result;
    for (const ChannelProfile& p : profiles) {
        for (const std::uint64_t seed : suite.seeds) {
            const std::filesystem::path run_dir = out_dir / "runs" / p.name / std::to_string(seed);
            std::filesystem::create_directories(run_dir);
            TeleopRow row{"teleop", p.name, teleop_profile_rank(p.name), seed, suite.motion.loops, 0, 0, 0, false};
            try {
                const TeleopResult run = run_teleop(suite.motion, p, suite.config, seed,
                                                    suite.series ? std::optional(run_dir) : std::nullopt);
                write_json_file(run_dir / "stats.json", run.stats.to_json());
                row.n_s = run.stats.n_s;
                row.n_a = run.stats.n_a;
                row.dropouts = run.stats.dropouts;
            } catch (const std::exception& e) {
                write_json_file(run_dir / "error.json", nlohmann::json{{"error", e.what()}});
                result.failures.push_back(fmt::format("{}/{}: {}", p.name, seed, e.what()));
                row.failed = true;
            }
            result.rows.teleop.push_back(row);
        }
    }
    finish_report(result, out_dir);
    return result;
}

RenderedReport load_report(const std::filesystem::path& dir)
{
    return render_report(report_rows_from_json(read_json_file(dir / "report.json")));
}

} // namespace nhil
