#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nhil/coord/scenario.hpp"
#include "nhil/harness/experiments.hpp"
#include "nhil/harness/manifest.hpp"

using namespace nhil;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("nhil_harness_" + name);
    fs::remove_all(dir);
    return dir;
}

int run_cli(const std::string& args, const fs::path& log)
{
    const std::string cmd = std::string("\"") + NHIL_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST_CASE("fnv1a reference values")
{
    CHECK(hash_hex(fnv1a_64("")) == "cbf29ce484222325");
    CHECK(hash_hex(fnv1a_64("a")) == "af63dc4c8601ec8c");
    CHECK(hash_hex(fnv1a_64("foobar")) == "85944171f73967e8");
    CHECK(content_hash(nlohmann::json{{"b", 1}, {"a", 2}}) == hash_hex(fnv1a_64(R"({"a":2,"b":1})")));
}

TEST_CASE("scenario loading")
{
    const Scenario harbor = load_scenario("harbor");
    const Scenario warehouse = load_scenario("warehouse");
    REQUIRE(harbor.robots.size() == 7);
    REQUIRE(warehouse.robots.size() == 7);
    for (const auto& r : harbor.robots) {
        CHECK(r.spec.length_m == 14.8);
        CHECK(r.spec.width_m == 3.0);
        CHECK(r.spec.v_max == 6.0);
        CHECK(r.spec.a_max == 2.0);
    }
    for (const auto& r : warehouse.robots) {
        CHECK(r.spec.length_m == 2.0);
        CHECK(r.spec.width_m == 0.5);
        CHECK(r.spec.v_max == 2.0);
        CHECK(r.spec.a_max == 1.0);
    }
    CHECK_THROWS_AS(load_scenario("no-such-scenario"), ScenarioError);

    const auto dir = fresh_dir("scenario");
    fs::create_directories(dir);
    write_json_file(dir / "s.json", scenario_to_json(load_scenario("warehouse")));
    const Scenario s = load_scenario((dir / "s.json").string());
    CHECK(scenario_to_json(s) == scenario_to_json(load_scenario("warehouse")));
    {
        std::ofstream(dir / "bad.json") << "{ not json";
    }
    CHECK_THROWS_AS(load_scenario((dir / "bad.json").string()), ScenarioError);
    auto doc = scenario_to_json(warehouse);
    doc["paths"][0]["to"] = "nowhere";
    write_json_file(dir / "unknown.json", doc);
    CHECK_THROWS_AS(load_scenario((dir / "unknown.json").string()), ScenarioError);
    fs::remove_all(dir);
}

TEST_CASE("grid specification")
{
    const auto cells = GridSpec::default_cells();
    REQUIRE(cells.size() == 8);
    CHECK(cell_label(cells[0]) == "plr0_delay0");
    CHECK(cell_label(cells[7]) == "plr0.1_delay100");
    GridSpec g;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.cells = {{0.0, 0.0}};
    CHECK_NOTHROW(g.validate());
    g.seeds.clear();
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.seeds = {1};
    g.cells = {{1.5, 0.0}};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("grid bookkeeping and determinism")
{
    const Scenario sc = load_scenario("warehouse");
    GridSpec g;
    g.cells = {{0.0, 0.0}, {0.1, 100.0}};
    g.seeds = {1, 2};
    g.min_cs = 60;
    g.profiles = {"wifi6-short"};
    const auto a = fresh_dir("grid_a");
    const auto b = fresh_dir("grid_b");
    const auto ra = run_grid(sc, g, a, RunManifest{});
    const auto rb = run_grid(sc, g, b, RunManifest{});
    CHECK_FALSE(ra.failed());
    REQUIRE(ra.rows.coordination.size() == 3);

    for (const auto& row : ra.rows.coordination) {
        CHECK(row.runs == 2);
        const std::string label = row.method == "static" ? cell_label({row.plr, row.delay_ms}) : row.method;
        std::uint64_t cs = 0;
        std::uint64_t col = 0;
        for (const char* seed : {"1", "2"}) {
            const auto stats = read_json_file(a / "runs" / label / seed / "stats.json");
            CHECK(stats.at("cs_total").get<std::uint64_t>() >= g.min_cs);
            cs += stats.at("cs_total").get<std::uint64_t>();
            col += stats.at("collision_count").get<std::uint64_t>();
            CHECK(slurp(a / "runs" / label / seed / "events.csv") == slurp(b / "runs" / label / seed / "events.csv"));
        }
        CHECK(row.cs_total == cs);
        CHECK(row.collisions == col);
    }
    CHECK(ra.rows.coordination[0].collisions == 0);
    CHECK(ra.rows.coordination[2].method == "wifi6-short");

    CHECK(fs::exists(a / "manifest.json"));
    CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
    CHECK(slurp(a / "report.txt") == slurp(b / "report.txt"));
    CHECK(slurp(a / "report.txt") == ra.report.text);
    CHECK(load_report(a).text == ra.report.text);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("a failing grid run is recorded and the grid continues")
{
    GridSpec g;
    g.cells = {{1.0, 0.0}, {0.0, 0.0}};
    g.min_cs = 20;
    const auto dir = fresh_dir("grid_fail");
    const auto r = run_grid(load_scenario("warehouse"), g, dir, RunManifest{});
    REQUIRE(r.failures.size() == 1);
    CHECK(r.rows.coordination[0].failed);
    CHECK_FALSE(r.rows.coordination[1].failed);
    CHECK(fs::exists(dir / "runs" / "plr1_delay0" / "1" / "error.json"));
    CHECK(r.report.text.find("FAILED") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("teleop suite rows")
{
    TeleopSuiteSpec s;
    s.profiles = {"wifi6-long", "ideal"};
    s.seeds = {1, 2};
    s.motion.loops = 15;
    const auto dir = fresh_dir("suite");
    const auto r = run_teleop_suite(s, dir, RunManifest{});
    CHECK_FALSE(r.failed());
    REQUIRE(r.rows.teleop.size() == 4);
    CHECK(r.report.document.at("teleop")[0].at("method") == "ideal");
    CHECK(fs::exists(dir / "runs" / "wifi6-long" / "2" / "stats.json"));
    CHECK_FALSE(fs::exists(dir / "runs" / "ideal" / "1" / "measured.csv"));
    for (const auto& row : r.rows.teleop) {
        CHECK(row.n_s == 15);
        if (row.method == "ideal") {
            CHECK(row.n_a == 15);
        }
    }
    CHECK(r.rows.teleop[0].n_a == r.rows.teleop[1].n_a);
    CHECK(teleop_profile_rank("ideal") < teleop_profile_rank("wifi6-long"));
    CHECK(teleop_profile_rank("wifi6-long") < teleop_profile_rank("custom"));
    fs::remove_all(dir);
}

TEST_CASE("command line exit codes and outputs")
{
    const auto dir = fresh_dir("cli");
    fs::create_directories(dir);
    const auto log = dir / "log.txt";

    CHECK(run_cli("--help", log) == 0);
    CHECK(run_cli("--version", log) == 0);
    CHECK(slurp(log).find(tool_version()) != std::string::npos);
    CHECK(run_cli("frobnicate", log) == 2);
    CHECK(run_cli("coord --seed 1", log) == 2);
    CHECK(run_cli("coord --scenario nowhere --min-cs 10", log) == 1);
    CHECK(run_cli("teleop --profile nowhere", log) == 1);

    const std::string coord = "coord --scenario warehouse --profile wifi6-short --seed 4 --min-cs 50 --out ";
    REQUIRE(run_cli(coord + "\"" + (dir / "c1").string() + "\"", log) == 0);
    CHECK(slurp(log).find("scenario=warehouse") == 0);
    REQUIRE(run_cli(coord + "\"" + (dir / "c2").string() + "\"", log) == 0);
    for (const char* f : {"stats.json", "events.csv"}) {
        CHECK_FALSE(slurp(dir / "c1" / f).empty());
        CHECK(slurp(dir / "c1" / f) == slurp(dir / "c2" / f));
    }
    const auto manifest = read_json_file(dir / "c1" / "manifest.json");
    CHECK(manifest.at("command") == "coord");
    CHECK(manifest.at("seeds") == nlohmann::json::array({4}));

    REQUIRE(run_cli("grid --scenario warehouse --plr 0 --delay-ms 0 --min-cs 30 --out \"" + (dir / "g").string() + "\"",
                    log) == 0);
    const std::string grid_text = slurp(log);
    REQUIRE(run_cli("report --in \"" + (dir / "g").string() + "\"", log) == 0);
    CHECK(slurp(log) == grid_text);
    CHECK(slurp(log) == slurp(dir / "g" / "report.txt"));
    CHECK(run_cli("report --in \"" + (dir / "missing").string() + "\"", log) == 1);
    fs::remove_all(dir);
}
