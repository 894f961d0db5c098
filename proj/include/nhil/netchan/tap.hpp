#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nhil/netchan/random.hpp"
#include "nhil/netchan/wire.hpp"

namespace nhil {

enum class TapDirection { Send, Recv };

/// One passive timestamp at a channel endpoint. msg_type is empty for
/// datagrams that did not decode.
struct TapRecord {
    std::string endpoint;
    TapDirection direction = TapDirection::Send;
    std::optional<MsgType> msg_type;
    std::uint16_t robot_id = 0;
    std::uint32_t seq = 0;
    Nanos t_ns = 0;

    bool operator==(const TapRecord&) const = default;
};

inline constexpr const char* kTapHeader = "endpoint,direction,msg_type,robot_id,seq,t_ns";

class TapParseError : public std::runtime_error {
public:
    TapParseError(std::size_t line, const std::string& detail);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Append-only record sink. Writes CSV when opened on a file, keeps records
/// in memory when asked to, and always counts. Appends are serialized.
class TapSink {
public:
    /// Counting only.
    TapSink() = default;
    explicit TapSink(const std::filesystem::path& file, bool keep_in_memory = false);

    struct InMemory {};
    explicit TapSink(InMemory) : keep_(true) {}

    void append(const TapRecord& record);
    void flush();

    std::uint64_t sent() const;
    std::uint64_t received() const;
    std::vector<TapRecord> records() const;

private:
    mutable std::mutex mutex_;
    std::ofstream out_;
    bool keep_ = false;
    std::vector<TapRecord> records_;
    std::uint64_t sent_ = 0;
    std::uint64_t received_ = 0;
    std::string line_;
};

inline void tap_append(TapSink& sink, const TapRecord& record) { sink.append(record); }

std::vector<TapRecord> load_tap(const std::filesystem::path& file);

std::string format_tap_row(const TapRecord& record);
TapRecord parse_tap_row(std::string_view line, std::size_t line_number);

} // namespace nhil
