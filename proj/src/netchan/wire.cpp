#include "nhil/netchan/wire.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include <fmt/format.h>

namespace nhil {
namespace {

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    template <typename T>
    void put(T value)
    {
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(raw, raw + sizeof(T));
        }
        out_.insert(out_.end(), raw, raw + sizeof(T));
    }

private:
    std::vector<std::uint8_t>& out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    template <typename T>
    T get()
    {
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, in_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(raw, raw + sizeof(T));
        }
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, raw, sizeof(T));
        return value;
    }

    std::size_t remaining() const { return in_.size() - pos_; }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void expect_payload(std::size_t actual, std::size_t expected, MsgType type)
{
    if (actual != expected) {
        throw DecodeError(DecodeErrorKind::PayloadLengthMismatch,
                          fmt::format("{} payload is {} bytes, expected {}", to_string(type), actual, expected));
    }
}

} // namespace

std::string_view to_string(MsgType type)
{
    switch (type) {
    case MsgType::CriticalPoint:
        return "CRITICAL_POINT";
    case MsgType::RobotStatus:
        return "ROBOT_STATUS";
    case MsgType::EgmJoints:
        return "EGM_JOINTS";
    case MsgType::EgmCtrl:
        return "EGM_CTRL";
    }
    return "unknown";
}

std::optional<MsgType> msg_type_from_string(std::string_view text)
{
    for (auto type : {MsgType::CriticalPoint, MsgType::RobotStatus, MsgType::EgmJoints, MsgType::EgmCtrl}) {
        if (to_string(type) == text) {
            return type;
        }
    }
    return std::nullopt;
}

std::string_view to_string(DecodeErrorKind kind)
{
    switch (kind) {
    case DecodeErrorKind::BadMagic:
        return "bad-magic";
    case DecodeErrorKind::UnknownVersion:
        return "unknown-version";
    case DecodeErrorKind::UnknownMsgType:
        return "unknown-msg-type";
    case DecodeErrorKind::ShortBuffer:
        return "short-buffer";
    case DecodeErrorKind::PayloadLengthMismatch:
        return "payload-length-mismatch";
    case DecodeErrorKind::InvalidPayloadValue:
        return "invalid-payload-value";
    }
    return "unknown";
}

DecodeError::DecodeError(DecodeErrorKind kind, const std::string& detail)
    : std::runtime_error(fmt::format("{}: {}", to_string(kind), detail)), kind_(kind)
{
}

std::vector<std::uint8_t> encode_message(const WireMessage& msg)
{
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + 40);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    Writer w(out);
    w.put<std::uint8_t>(msg.version);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(msg.type()));
    w.put<std::uint16_t>(msg.robot_id);
    w.put<std::uint32_t>(msg.seq);
    w.put<std::uint64_t>(msg.send_time_ns);

    if (const auto* cp = std::get_if<CriticalPointPayload>(&msg.payload)) {
        w.put<std::uint32_t>(cp->mission_id);
        w.put<std::int32_t>(cp->critical_index);
    } else if (const auto* st = std::get_if<RobotStatusPayload>(&msg.payload)) {
        w.put<std::uint32_t>(st->mission_id);
        w.put<std::int32_t>(st->path_index);
        w.put<double>(st->x);
        w.put<double>(st->y);
        w.put<double>(st->theta);
        w.put<double>(st->v);
    } else if (const auto* joints = std::get_if<EgmJointsPayload>(&msg.payload)) {
        if (joints->joints.size() > 255) {
            throw std::invalid_argument("EGM_JOINTS carries at most 255 joints");
        }
        w.put<std::uint8_t>(static_cast<std::uint8_t>(joints->joints.size()));
        for (double q : joints->joints) {
            w.put<double>(q);
        }
    } else {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(std::get<EgmCtrlPayload>(msg.payload).command));
    }
    return out;
}

WireMessage decode_message(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kHeaderSize) {
        throw DecodeError(DecodeErrorKind::ShortBuffer, fmt::format("{} bytes, header needs {}", bytes.size(), kHeaderSize));
    }
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw DecodeError(DecodeErrorKind::BadMagic, "expected 4E 48 4C 31");
    }
    Reader r(bytes.subspan(sizeof(kMagic)));
    WireMessage msg;
    msg.version = r.get<std::uint8_t>();
    if (msg.version != kWireVersion) {
        throw DecodeError(DecodeErrorKind::UnknownVersion, fmt::format("version {}", msg.version));
    }
    const auto raw_type = r.get<std::uint8_t>();
    if (raw_type < 1 || raw_type > 4) {
        throw DecodeError(DecodeErrorKind::UnknownMsgType, fmt::format("msg_type {}", raw_type));
    }
    const auto type = static_cast<MsgType>(raw_type);
    msg.robot_id = r.get<std::uint16_t>();
    msg.seq = r.get<std::uint32_t>();
    msg.send_time_ns = r.get<std::uint64_t>();

    const std::size_t body = r.remaining();
    switch (type) {
    case MsgType::CriticalPoint: {
        expect_payload(body, 8, type);
        CriticalPointPayload cp;
        cp.mission_id = r.get<std::uint32_t>();
        cp.critical_index = r.get<std::int32_t>();
        msg.payload = cp;
        break;
    }
    case MsgType::RobotStatus: {
        expect_payload(body, 40, type);
        RobotStatusPayload st;
        st.mission_id = r.get<std::uint32_t>();
        st.path_index = r.get<std::int32_t>();
        st.x = r.get<double>();
        st.y = r.get<double>();
        st.theta = r.get<double>();
        st.v = r.get<double>();
        msg.payload = st;
        break;
    }
    case MsgType::EgmJoints: {
        if (body < 1) {
            throw DecodeError(DecodeErrorKind::ShortBuffer, "EGM_JOINTS is missing joint_count");
        }
        const auto count = r.get<std::uint8_t>();
        expect_payload(body, 1 + 8 * static_cast<std::size_t>(count), type);
        EgmJointsPayload joints;
        joints.joints.reserve(count);
        for (unsigned i = 0; i < count; ++i) {
            joints.joints.push_back(r.get<double>());
        }
        msg.payload = std::move(joints);
        break;
    }
    case MsgType::EgmCtrl: {
        expect_payload(body, 1, type);
        const auto command = r.get<std::uint8_t>();
        if (command > 1) {
            throw DecodeError(DecodeErrorKind::InvalidPayloadValue, fmt::format("EGM_CTRL command {}", command));
        }
        msg.payload = EgmCtrlPayload{static_cast<EgmCommand>(command)};
        break;
    }
    }
    return msg;
}

} // namespace nhil
