#include "nhil/harness/manifest.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#ifndef NHIL_VERSION
#define NHIL_VERSION "dev"
#endif

namespace nhil {

std::uint64_t fnv1a_64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t hash) { return fmt::format("{:016x}", hash); }

std::string content_hash(const nlohmann::json& doc) { return hash_hex(fnv1a_64(doc.dump())); }

nlohmann::json RunManifest::to_json() const
{
    return nlohmann::json{
        {"command", command},
        {"argv", argv},
        {"scenario", scenario},
        {"scenario_hash", scenario_hash},
        {"profiles", profiles},
        {"profile_hashes", profile_hashes},
        {"seeds", seeds},
        {"parameters", parameters},
        {"inputs", inputs},
        {"tool_version", tool_version},
        {"start_time", start_time},
    };
}

std::string utc_timestamp_now()
{
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                       tm.tm_min, tm.tm_sec);
}

std::string tool_version() { return NHIL_VERSION; }

void write_json_file(const std::filesystem::path& file, const nlohmann::json& doc)
{
    if (file.has_parent_path()) {
        std::filesystem::create_directories(file.parent_path());
    }
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write {}", file.string()));
    }
    out << doc.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot read {}", file.string()));
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(fmt::format("{}: {}", file.string(), e.what()));
    }
}

} // namespace nhil
