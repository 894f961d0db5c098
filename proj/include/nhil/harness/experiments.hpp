#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nhil/coord/scenario.hpp"
#include "nhil/harness/manifest.hpp"
#include "nhil/metrics/report.hpp"
#include "nhil/teleop/simulation.hpp"

namespace nhil {

/// Preset name ("harbor", "warehouse") or path to a scenario file.
/// Throws ScenarioError with the offending field path.
Scenario load_scenario(std::string_view name_or_path);

struct GridCell {
    double plr = 0.0;
    double delay_ms = 0.0;
};

struct GridSpec {
    std::vector<GridCell> cells;
    std::vector<std::uint64_t> seeds{1};
    /// Applies to each run, not to the cell total.
    std::uint64_t min_cs = 10000;
    /// Named profiles run as extra rows next to the static cells.
    std::vector<std::string> profiles;
    bool traces = false;

    /// {0, 0.1} x {0, 10, 50, 100} ms.
    static std::vector<GridCell> default_cells();
    void validate() const;
};

/// "plr0.1_delay100" style directory name.
std::string cell_label(const GridCell& cell);

struct ExperimentResult {
    ReportRows rows;
    RenderedReport report;
    std::vector<std::string> failures;
    bool failed() const { return !failures.empty(); }
};

/// One run per (cell, seed). Writes manifest.json before the first run, then
/// runs/<cell>/<seed>/stats.json and events.csv, then report.json and
/// report.txt. A failing run is recorded and the grid carries on.
ExperimentResult run_grid(const Scenario& scenario, const GridSpec& grid, const std::filesystem::path& out_dir,
                          RunManifest manifest);

struct TeleopSuiteSpec {
    std::vector<std::string> profiles{"ideal", "ethernet-lab", "wifi6-short", "wifi6-long"};
    std::vector<std::uint64_t> seeds{1};
    MotionProfile motion;
    TeleopConfig config;
    bool series = false;
};

/// Ordering rank of a profile in the teleop table: ideal, ethernet-lab,
/// wifi6-short, wifi6-long, then everything else.
int teleop_profile_rank(std::string_view name);

ExperimentResult run_teleop_suite(const TeleopSuiteSpec& suite, const std::filesystem::path& out_dir,
                                  RunManifest manifest);

/// Builds a row list back from a finished output directory.
RenderedReport load_report(const std::filesystem::path& dir);

} // namespace nhil
