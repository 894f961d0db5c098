#include "nhil/teleop/egm.hpp"

namespace nhil {

EgmStep egm_server_step(const EgmState& state, Nanos now_ns, const EgmInput& input, const EgmConfig& config)
{
    EgmStep out{state, std::nullopt, false, EgmEvent::None};
    EgmState& s = out.state;
    if (s.activation == Activation::Active && now_ns - s.last_packet_ns > config.watchdog_timeout_ns) {
        s.activation = Activation::Inactive;
        s.pending_reactivation_at_ns = now_ns + config.reconnect_delay_ns;
        ++s.dropouts;
        out.watchdog_tripped = true;
        out.event = EgmEvent::WatchdogTrip;
    }

    if (const auto* ctrl = std::get_if<EgmCtrlPayload>(&input)) {
        if (ctrl->command == EgmCommand::Activate) {
            if (s.activation == Activation::Inactive) {
                s.activation = Activation::Active;
                s.last_packet_ns = now_ns;
                s.pending_reactivation_at_ns.reset();
                out.event = EgmEvent::Activated;
            }
        } else if (s.activation == Activation::Active) {
            s.activation = Activation::Inactive;
            s.pending_reactivation_at_ns.reset();
            out.event = EgmEvent::Deactivated;
        }
    } else if (const auto* frame = std::get_if<JointFrame>(&input)) {
        if (s.activation == Activation::Active && (!s.last_seq || frame->seq > *s.last_seq)) {
            s.last_seq = frame->seq;
            s.last_packet_ns = now_ns;
            out.accepted = *frame;
        }
    }
    return out;
}

} // namespace nhil
