#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "nhil/netchan/profile.hpp"
#include "nhil/netchan/tap.hpp"
#include "nhil/netchan/wire.hpp"

namespace nhil {

using EndpointId = std::uint32_t;

struct EmuEvent {
    Nanos due_ns = 0;
    std::uint64_t tie_seq = 0;
    WireMessage message;
    EndpointId destination = 0;
};

/// Discrete-event queue on a virtual nanosecond clock. Events leave in
/// (due_ns, tie_seq) order; tie_seq is the insertion counter.
class EventScheduler {
public:
    void schedule(Nanos due_ns, WireMessage message, EndpointId destination);

    /// Pops the minimal event and moves the clock to its due time.
    std::optional<EmuEvent> advance();

    /// Pops the minimal event only if it is due at or before `limit_ns`.
    std::optional<EmuEvent> advance_until(Nanos limit_ns);

    std::optional<Nanos> next_due() const;
    Nanos now() const { return now_; }
    std::size_t size() const { return queue_.size(); }
    bool empty() const { return queue_.empty(); }

private:
    struct Later {
        bool operator()(const EmuEvent& a, const EmuEvent& b) const
        {
            return a.due_ns != b.due_ns ? a.due_ns > b.due_ns : a.tie_seq > b.tie_seq;
        }
    };

    std::priority_queue<EmuEvent, std::vector<EmuEvent>, Later> queue_;
    std::uint64_t next_tie_ = 0;
    Nanos now_ = 0;
};

inline std::optional<EmuEvent> advance_scheduler(EventScheduler& scheduler) { return scheduler.advance(); }

/// Tap labels for the two ends of a direction.
struct TapPoint {
    TapSink* sink = nullptr;
    std::string endpoint;
};

/// Samples the channel for `direction` and schedules delivery unless the
/// message is dropped. The send is tapped either way. Returns true when scheduled.
bool emu_send(EventScheduler& scheduler, Nanos now_ns, const WireMessage& msg, EndpointId destination,
              const ChannelProfile& profile, Direction direction, ChannelState& state, const TapPoint& tap = {});

} // namespace nhil
