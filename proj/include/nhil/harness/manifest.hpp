#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace nhil {

/// 64-bit FNV-1a.
std::uint64_t fnv1a_64(std::string_view bytes);
std::string hash_hex(std::uint64_t hash);
/// Hash of the compact dump of a document.
std::string content_hash(const nlohmann::json& doc);

struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::string scenario;
    std::string scenario_hash;
    std::vector<std::string> profiles;
    std::vector<std::string> profile_hashes;
    std::vector<std::uint64_t> seeds;
    nlohmann::json parameters = nlohmann::json::object();
    /// Full scenario and profile documents, enough to replay in emulated mode.
    nlohmann::json inputs = nlohmann::json::object();
    std::string tool_version;
    std::string start_time;

    nlohmann::json to_json() const;
};

/// UTC, second resolution.
std::string utc_timestamp_now();

std::string tool_version();

void write_json_file(const std::filesystem::path& file, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& file);

} // namespace nhil
