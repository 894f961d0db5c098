#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "nhil/netchan/random.hpp"
#include "nhil/netchan/wire.hpp"

namespace nhil {

enum class Activation { Inactive, Active };

struct EgmConfig {
    Nanos watchdog_timeout_ns = 500 * kNanosPerMilli;
    Nanos reconnect_delay_ns = 2 * kNanosPerSecond;
};

/// Robot-side stream state.
struct EgmState {
    Activation activation = Activation::Inactive;
    Nanos last_packet_ns = 0;
    /// When the controller is asked to re-send CTRL(activate).
    std::optional<Nanos> pending_reactivation_at_ns;
    /// Highest joint frame sequence accepted; older frames are dropped.
    std::optional<std::uint32_t> last_seq;
    std::uint64_t dropouts = 0;

    bool operator==(const EgmState&) const = default;
};

struct JointFrame {
    std::uint32_t seq = 0;
    EgmJointsPayload joints;
};

using EgmInput = std::variant<std::monostate, EgmCtrlPayload, JointFrame>;

enum class EgmEvent { None, Activated, Deactivated, WatchdogTrip };

struct EgmStep {
    EgmState state;
    std::optional<JointFrame> accepted;
    /// The watchdog is evaluated before the input, so one call can trip and
    /// then handle a control message.
    bool watchdog_tripped = false;
    EgmEvent event = EgmEvent::None;
};

/// Watchdog first (only while Active), then the input: activate and
/// deactivate switch state; joints are accepted only while Active and newer
/// than the last accepted frame.
EgmStep egm_server_step(const EgmState& state, Nanos now_ns, const EgmInput& input, const EgmConfig& config);

} // namespace nhil
