#include "nhil/netchan/transport.hpp"

#include <chrono>

namespace nhil {
namespace {

const char* sender_of(Direction d) { return d == Direction::Command ? kControllerEndpoint : kRobotEndpoint; }
const char* receiver_of(Direction d) { return d == Direction::Command ? kRobotEndpoint : kControllerEndpoint; }

const Endpoint kAnyPort{"0.0.0.0", 0};

} // namespace

EmulatedTransport::EmulatedTransport(ChannelProfile profile, std::uint64_t seed, TapSink* tap)
    : profile_(std::move(profile)),
      states_{ChannelState(derive_seed(seed, 101)), ChannelState(derive_seed(seed, 102))},
      tap_(tap)
{
    profile_.validate();
}

void EmulatedTransport::send(Direction direction, const WireMessage& msg, Nanos now_ns)
{
    const auto i = index_of(direction);
    ++counters_.sent[i];
    const bool scheduled = emu_send(scheduler_, now_ns, msg, static_cast<EndpointId>(i), profile_, direction,
                                    states_[i], TapPoint{tap_, sender_of(direction)});
    if (!scheduled) {
        ++counters_.dropped[i];
    }
}

void EmulatedTransport::collect(Nanos now_ns, std::vector<Delivery>& out)
{
    while (auto event = scheduler_.advance_until(now_ns)) {
        const Direction direction = event->destination == 0 ? Direction::Command : Direction::Status;
        ++counters_.delivered[event->destination];
        if (tap_) {
            tap_->append(TapRecord{receiver_of(direction), TapDirection::Recv, event->message.type(),
                                   event->message.robot_id, event->message.seq, event->due_ns});
        }
        out.push_back(Delivery{direction, std::move(event->message), event->due_ns});
    }
}

UdpTransport::UdpTransport(const ChannelProfile& profile, TapSink* tap)
    : routes_{profile.command_route.value(), profile.status_route.value()},
      senders_{UdpSocket(kAnyPort), UdpSocket(kAnyPort)},
      receivers_{UdpSocket(profile.command_route->bind), UdpSocket(profile.status_route->bind)},
      tap_(tap),
      buffer_(65536)
{
}

void UdpTransport::send(Direction direction, const WireMessage& msg, Nanos)
{
    const auto i = index_of(direction);
    const auto bytes = encode_message(msg);
    if (tap_) {
        tap_->append(TapRecord{sender_of(direction), TapDirection::Send, msg.type(), msg.robot_id, msg.seq,
                               wall_clock_ns()});
    }
    senders_[i].send_to(routes_[i].send_to, bytes);
    ++counters_.sent[i];
}

void UdpTransport::collect(Nanos now_ns, std::vector<Delivery>& out)
{
    for (std::size_t i = 0; i < 2; ++i) {
        const Direction direction = i == 0 ? Direction::Command : Direction::Status;
        while (auto got = receivers_[i].receive(buffer_, std::chrono::nanoseconds(0))) {
            const std::span<const std::uint8_t> datagram(buffer_.data(), *got);
            try {
                WireMessage msg = decode_message(datagram);
                if (tap_) {
                    tap_->append(TapRecord{receiver_of(direction), TapDirection::Recv, msg.type(), msg.robot_id, msg.seq,
                                           wall_clock_ns()});
                }
                ++counters_.delivered[i];
                out.push_back(Delivery{direction, std::move(msg), now_ns});
            } catch (const DecodeError&) {
                ++undecodable_;
            }
        }
    }
}

std::unique_ptr<Transport> make_transport(const ChannelProfile& profile, std::uint64_t seed, TapSink* tap)
{
    if (profile.mode == ChannelMode::RealPassthrough) {
        return std::make_unique<UdpTransport>(profile, tap);
    }
    return std::make_unique<EmulatedTransport>(profile, seed, tap);
}

} // namespace nhil
