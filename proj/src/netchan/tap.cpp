#include "nhil/netchan/tap.hpp"

#include <charconv>
#include <string_view>

#include <fmt/format.h>

namespace nhil {
namespace {

template <typename T>
T parse_int(std::string_view text, std::size_t line, const char* field)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw TapParseError(line, fmt::format("bad {} '{}'", field, text));
    }
    return value;
}

} // namespace

TapParseError::TapParseError(std::size_t line, const std::string& detail)
    : std::runtime_error(fmt::format("tap line {}: {}", line, detail)), line_(line)
{
}

TapSink::TapSink(const std::filesystem::path& file, bool keep_in_memory) : out_(file), keep_(keep_in_memory)
{
    if (!out_) {
        throw std::runtime_error(fmt::format("cannot open tap file {}", file.string()));
    }
    out_ << kTapHeader << '\n';
}

void TapSink::append(const TapRecord& record)
{
    std::lock_guard lock(mutex_);
    if (record.direction == TapDirection::Send) {
        ++sent_;
    } else {
        ++received_;
    }
    if (out_.is_open()) {
        line_ = format_tap_row(record);
        line_.push_back('\n');
        out_.write(line_.data(), static_cast<std::streamsize>(line_.size()));
    }
    if (keep_) {
        records_.push_back(record);
    }
}

void TapSink::flush()
{
    std::lock_guard lock(mutex_);
    if (out_.is_open()) {
        out_.flush();
    }
}

std::uint64_t TapSink::sent() const
{
    std::lock_guard lock(mutex_);
    return sent_;
}

std::uint64_t TapSink::received() const
{
    std::lock_guard lock(mutex_);
    return received_;
}

std::vector<TapRecord> TapSink::records() const
{
    std::lock_guard lock(mutex_);
    return records_;
}

std::string format_tap_row(const TapRecord& r)
{
    return fmt::format("{},{},{},{},{},{}", r.endpoint, r.direction == TapDirection::Send ? "send" : "recv",
                       r.msg_type ? to_string(*r.msg_type) : std::string_view("unknown"), r.robot_id, r.seq, r.t_ns);
}

TapRecord parse_tap_row(std::string_view line, std::size_t line_number)
{
    std::string_view fields[6];
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (count == 6) {
            throw TapParseError(line_number, "too many fields");
        }
        fields[count++] = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    if (count != 6) {
        throw TapParseError(line_number, fmt::format("expected 6 fields, got {}", count));
    }
    TapRecord r;
    if (fields[0].empty()) {
        throw TapParseError(line_number, "empty endpoint");
    }
    r.endpoint = std::string(fields[0]);
    if (fields[1] == "send") {
        r.direction = TapDirection::Send;
    } else if (fields[1] == "recv") {
        r.direction = TapDirection::Recv;
    } else {
        throw TapParseError(line_number, fmt::format("bad direction '{}'", fields[1]));
    }
    if (fields[2] != "unknown") {
        r.msg_type = msg_type_from_string(fields[2]);
        if (!r.msg_type) {
            throw TapParseError(line_number, fmt::format("bad msg_type '{}'", fields[2]));
        }
    }
    r.robot_id = parse_int<std::uint16_t>(fields[3], line_number, "robot_id");
    r.seq = parse_int<std::uint32_t>(fields[4], line_number, "seq");
    r.t_ns = parse_int<Nanos>(fields[5], line_number, "t_ns");
    return r;
}

std::vector<TapRecord> load_tap(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot open tap file {}", file.string()));
    }
    std::vector<TapRecord> records;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line_number == 1) {
            if (line.empty()) {
                continue;
            }
            if (line != kTapHeader) {
                throw TapParseError(line_number, "missing header");
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        records.push_back(parse_tap_row(line, line_number));
    }
    return records;
}

} // namespace nhil
