#include "nhil/netchan/scheduler.hpp"

namespace nhil {

void EventScheduler::schedule(Nanos due_ns, WireMessage message, EndpointId destination)
{
    queue_.push(EmuEvent{due_ns, next_tie_++, std::move(message), destination});
}

std::optional<EmuEvent> EventScheduler::advance()
{
    if (queue_.empty()) {
        return std::nullopt;
    }
    EmuEvent event = queue_.top();
    queue_.pop();
    if (event.due_ns > now_) {
        now_ = event.due_ns;
    }
    return event;
}

std::optional<EmuEvent> EventScheduler::advance_until(Nanos limit_ns)
{
    if (queue_.empty() || queue_.top().due_ns > limit_ns) {
        return std::nullopt;
    }
    return advance();
}

std::optional<Nanos> EventScheduler::next_due() const
{
    if (queue_.empty()) {
        return std::nullopt;
    }
    return queue_.top().due_ns;
}

bool emu_send(EventScheduler& scheduler, Nanos now_ns, const WireMessage& msg, EndpointId destination,
              const ChannelProfile& profile, Direction direction, ChannelState& state, const TapPoint& tap)
{
    if (tap.sink) {
        tap.sink->append(TapRecord{tap.endpoint, TapDirection::Send, msg.type(), msg.robot_id, msg.seq, now_ns});
    }
    const ChannelOutcome outcome = sample_channel(profile, direction, state);
    if (const auto* deliver = std::get_if<DeliverAfter>(&outcome)) {
        scheduler.schedule(now_ns + deliver->extra_ns, msg, destination);
        return true;
    }
    return false;
}

} // namespace nhil
