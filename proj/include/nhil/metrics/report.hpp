#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace nhil {

struct CoordRow {
    std::string case_label;
    /// "static" or a channel profile name.
    std::string method;
    double plr = 0.0;
    double delay_ms = 0.0;
    std::uint64_t runs = 1;
    std::uint64_t cs_total = 0;
    std::uint64_t collisions = 0;
    bool failed = false;
};

struct TeleopRow {
    std::string case_label;
    std::string method;
    /// Position in the fixed profile ordering; ties fall back to the name.
    int method_rank = 0;
    std::uint64_t seed = 0;
    std::uint64_t loops = 0;
    std::uint64_t n_s = 0;
    std::uint64_t n_a = 0;
    std::uint64_t dropouts = 0;
    bool failed = false;
};

struct ReportRows {
    std::vector<CoordRow> coordination;
    std::vector<TeleopRow> teleop;
};

struct RenderedReport {
    std::string text;
    nlohmann::json document;
};

/// Sorted by (case, method, plr, delay) and (case, rank, method, seed).
/// Probabilities print scaled by 1e3 with 6 decimals.
RenderedReport render_report(const ReportRows& rows);

/// Inverse of the document half of render_report.
ReportRows report_rows_from_json(const nlohmann::json& doc);

/// "0.499102" for (5, 10018).
std::string format_p_collision_e3(std::uint64_t collisions, std::uint64_t cs_total);

} // namespace nhil
