#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace nhil {

enum class MsgType : std::uint8_t {
    CriticalPoint = 1,
    RobotStatus = 2,
    EgmJoints = 3,
    EgmCtrl = 4,
};

std::string_view to_string(MsgType type);
std::optional<MsgType> msg_type_from_string(std::string_view text);

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kHeaderSize = 20;
inline constexpr std::uint8_t kMagic[4] = {0x4E, 0x48, 0x4C, 0x31}; // "NHL1"

/// Stop-before index on the current mission's envelope; -1 is unrestricted.
struct CriticalPointPayload {
    std::uint32_t mission_id = 0;
    std::int32_t critical_index = -1;
    bool operator==(const CriticalPointPayload&) const = default;
};

struct RobotStatusPayload {
    std::uint32_t mission_id = 0;
    std::int32_t path_index = 0;
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
    double v = 0.0;
    bool operator==(const RobotStatusPayload&) const = default;
};

/// At most 255 joints, radians.
struct EgmJointsPayload {
    std::vector<double> joints;
    bool operator==(const EgmJointsPayload&) const = default;
};

enum class EgmCommand : std::uint8_t { Deactivate = 0, Activate = 1 };

struct EgmCtrlPayload {
    EgmCommand command = EgmCommand::Activate;
    bool operator==(const EgmCtrlPayload&) const = default;
};

using Payload = std::variant<CriticalPointPayload, RobotStatusPayload, EgmJointsPayload, EgmCtrlPayload>;

struct WireMessage {
    std::uint8_t version = kWireVersion;
    std::uint16_t robot_id = 0;
    std::uint32_t seq = 0;
    std::uint64_t send_time_ns = 0;
    Payload payload;

    MsgType type() const { return static_cast<MsgType>(payload.index() + 1); }
    bool operator==(const WireMessage&) const = default;
};

enum class DecodeErrorKind {
    BadMagic,
    UnknownVersion,
    UnknownMsgType,
    ShortBuffer,
    PayloadLengthMismatch,
    InvalidPayloadValue,
};

std::string_view to_string(DecodeErrorKind kind);

class DecodeError : public std::runtime_error {
public:
    DecodeError(DecodeErrorKind kind, const std::string& detail);
    DecodeErrorKind kind() const noexcept { return kind_; }

private:
    DecodeErrorKind kind_;
};

/// Little-endian layout: 20-byte header then the type-specific payload.
std::vector<std::uint8_t> encode_message(const WireMessage& msg);
WireMessage decode_message(std::span<const std::uint8_t> bytes);

} // namespace nhil
