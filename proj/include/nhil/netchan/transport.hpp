#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "nhil/netchan/profile.hpp"
#include "nhil/netchan/scheduler.hpp"
#include "nhil/netchan/tap.hpp"
#include "nhil/netchan/udp.hpp"
#include "nhil/netchan/wire.hpp"

namespace nhil {

struct Delivery {
    Direction direction;
    WireMessage message;
    Nanos t_ns;
};

struct TransportCounters {
    std::array<std::uint64_t, 2> sent{};
    std::array<std::uint64_t, 2> delivered{};
    std::array<std::uint64_t, 2> dropped{};
};

inline std::size_t index_of(Direction d) { return d == Direction::Command ? 0 : 1; }

/// Message path between the controller side and the robot side of a simulation.
class Transport {
public:
    virtual ~Transport() = default;

    virtual void send(Direction direction, const WireMessage& msg, Nanos now_ns) = 0;

    /// Appends every message that has arrived by `now_ns`, in arrival order.
    virtual void collect(Nanos now_ns, std::vector<Delivery>& out) = 0;

    const TransportCounters& counters() const { return counters_; }

protected:
    TransportCounters counters_;
};

/// In-process channel on the virtual clock. Each direction has its own
/// generator and burst state, both derived from `seed`.
class EmulatedTransport final : public Transport {
public:
    EmulatedTransport(ChannelProfile profile, std::uint64_t seed, TapSink* tap = nullptr);

    void send(Direction direction, const WireMessage& msg, Nanos now_ns) override;
    void collect(Nanos now_ns, std::vector<Delivery>& out) override;

    std::size_t in_flight() const { return scheduler_.size(); }

private:
    ChannelProfile profile_;
    EventScheduler scheduler_;
    std::array<ChannelState, 2> states_;
    TapSink* tap_;
};

/// Real-passthrough: each direction is sent to an external endpoint (an
/// agent or proxy) and received back on a locally bound socket.
class UdpTransport final : public Transport {
public:
    UdpTransport(const ChannelProfile& profile, TapSink* tap = nullptr);

    void send(Direction direction, const WireMessage& msg, Nanos now_ns) override;
    void collect(Nanos now_ns, std::vector<Delivery>& out) override;

    std::uint64_t undecodable() const { return undecodable_; }

private:
    std::array<UdpRoute, 2> routes_;
    std::array<UdpSocket, 2> senders_;
    std::array<UdpSocket, 2> receivers_;
    TapSink* tap_;
    std::vector<std::uint8_t> buffer_;
    std::uint64_t undecodable_ = 0;
};

/// Tap endpoint labels used by the simulations.
inline constexpr const char* kControllerEndpoint = "controller";
inline constexpr const char* kRobotEndpoint = "robot";

std::unique_ptr<Transport> make_transport(const ChannelProfile& profile, std::uint64_t seed, TapSink* tap);

} // namespace nhil
