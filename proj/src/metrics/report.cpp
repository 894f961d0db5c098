#include "nhil/metrics/report.hpp"

#include <algorithm>
#include <tuple>

#include <fmt/format.h>

#include "nhil/metrics/metrics.hpp"

namespace nhil {

using nlohmann::json;

std::string format_p_collision_e3(std::uint64_t collisions, std::uint64_t cs_total)
{
    return fmt::format("{:.6f}", p_collision(collisions, cs_total) * 1e3);
}

namespace {

std::string pad_table(const std::vector<std::vector<std::string>>& cells)
{
    std::vector<std::size_t> width;
    for (const auto& row : cells) {
        width.resize(std::max(width.size(), row.size()), 0);
        for (std::size_t c = 0; c < row.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    std::string out;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        std::string line;
        for (std::size_t c = 0; c < cells[r].size(); ++c) {
            if (c > 0) {
                line += "  ";
            }
            // Left-align labels, right-align numbers.
            line += c < 2 ? fmt::format("{:<{}}", cells[r][c], width[c]) : fmt::format("{:>{}}", cells[r][c], width[c]);
        }
        while (!line.empty() && line.back() == ' ') {
            line.pop_back();
        }
        out += line + "\n";
        if (r == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < width.size(); ++c) {
                total += width[c] + (c > 0 ? 2 : 0);
            }
            out += std::string(total, '-') + "\n";
        }
    }
    return out;
}

} // namespace

RenderedReport render_report(const ReportRows& input)
{
    ReportRows rows = input;
    std::sort(rows.coordination.begin(), rows.coordination.end(), [](const CoordRow& a, const CoordRow& b) {
        return std::tie(a.case_label, a.method, a.plr, a.delay_ms) < std::tie(b.case_label, b.method, b.plr, b.delay_ms);
    });
    std::sort(rows.teleop.begin(), rows.teleop.end(), [](const TeleopRow& a, const TeleopRow& b) {
        return std::tie(a.case_label, a.method_rank, a.method, a.seed) <
               std::tie(b.case_label, b.method_rank, b.method, b.seed);
    });

    RenderedReport out;
    out.document = json{{"coordination", json::array()}, {"teleop", json::array()}};

    std::vector<std::vector<std::string>> coord{
        {"case", "method", "plr", "delay_ms", "runs", "total_cs", "collisions", "p_collision_e-3"}};
    for (const auto& r : rows.coordination) {
        const bool has_cs = r.cs_total > 0 && !r.failed;
        const std::string p = has_cs ? format_p_collision_e3(r.collisions, r.cs_total) : "FAILED";
        coord.push_back({r.case_label, r.method, fmt::format("{:.6g}", r.plr), fmt::format("{:.6g}", r.delay_ms),
                         fmt::format("{}", r.runs), fmt::format("{}", r.cs_total), fmt::format("{}", r.collisions), p});
        json row{{"case", r.case_label}, {"method", r.method},         {"plr", r.plr},
                 {"delay_ms", r.delay_ms}, {"runs", r.runs},           {"cs_total", r.cs_total},
                 {"collisions", r.collisions}, {"failed", r.failed}};
        row["p_collision"] = has_cs ? json(p_collision(r.collisions, r.cs_total)) : json(nullptr);
        out.document["coordination"].push_back(row);
    }

    std::vector<std::vector<std::string>> tele{{"case", "method", "seed", "loops", "n_s", "n_a", "dropouts", "mlr"}};
    for (const auto& r : rows.teleop) {
        const bool has_ns = r.n_s > 0 && !r.failed && r.n_a <= r.n_s;
        const std::string m = has_ns ? fmt::format("{:.6f}", mlr(r.n_s, r.n_a)) : "FAILED";
        tele.push_back({r.case_label, r.method, fmt::format("{}", r.seed), fmt::format("{}", r.loops),
                        fmt::format("{}", r.n_s), fmt::format("{}", r.n_a), fmt::format("{}", r.dropouts), m});
        json row{{"case", r.case_label}, {"method", r.method}, {"method_rank", r.method_rank}, {"seed", r.seed},
                 {"loops", r.loops},     {"n_s", r.n_s},       {"n_a", r.n_a},                 {"dropouts", r.dropouts},
                 {"failed", r.failed}};
        row["mlr"] = has_ns ? json(mlr(r.n_s, r.n_a)) : json(nullptr);
        out.document["teleop"].push_back(row);
    }

    out.text = "Coordination\n" + pad_table(coord);
    if (!rows.teleop.empty()) {
        out.text += "\nTeleoperation\n" + pad_table(tele);
    }
    return out;
}

ReportRows report_rows_from_json(const json& doc)
{
    ReportRows rows;
    for (const auto& r : doc.value("coordination", json::array())) {
        rows.coordination.push_back(CoordRow{r.at("case").get<std::string>(), r.at("method").get<std::string>(),
                                             r.at("plr").get<double>(), r.at("delay_ms").get<double>(),
                                             r.at("runs").get<std::uint64_t>(), r.at("cs_total").get<std::uint64_t>(),
                                             r.at("collisions").get<std::uint64_t>(), r.value("failed", false)});
    }
    for (const auto& r : doc.value("teleop", json::array())) {
        rows.teleop.push_back(TeleopRow{r.at("case").get<std::string>(), r.at("method").get<std::string>(),
                                        r.value("method_rank", 0), r.at("seed").get<std::uint64_t>(),
                                        r.at("loops").get<std::uint64_t>(), r.at("n_s").get<std::uint64_t>(),
                                        r.at("n_a").get<std::uint64_t>(), r.value("dropouts", std::uint64_t{0}),
                                        r.value("failed", false)});
    }
    return rows;
}

} // namespace nhil
