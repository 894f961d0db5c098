#include "nhil/netchan/agent.hpp"

#include <array>
#include <chrono>
#include <queue>
#include <vector>

namespace nhil {
namespace {

using SteadyClock = std::chrono::steady_clock;

constexpr auto kStopPoll = std::chrono::milliseconds(20);
constexpr std::size_t kMaxDatagram = 65536;

const Endpoint kAnyPort{"0.0.0.0", 0};

} // namespace

TapRecord tap_record_for(std::span<const std::uint8_t> datagram, const std::string& endpoint, TapDirection direction,
                         Nanos t_ns)
{
    TapRecord record{endpoint, direction, std::nullopt, 0, 0, t_ns};
    try {
        const WireMessage msg = decode_message(datagram);
        record.msg_type = msg.type();
        record.robot_id = msg.robot_id;
        record.seq = msg.seq;
    } catch (const DecodeError&) {
        // Forwarded regardless; logged as unknown.
    }
    return record;
}

ForwardAgent::ForwardAgent(const Endpoint& listen, const Endpoint& forward, TapSink& tap, std::string label)
    : in_(listen), out_(kAnyPort), forward_(forward), tap_(tap), label_(std::move(label))
{
    if (label_.empty()) {
        label_ = "agent@" + in_.local_endpoint().to_string();
    }
}

void ForwardAgent::run(std::stop_token stop)
{
    std::vector<std::uint8_t> buffer(kMaxDatagram);
    while (!stop.stop_requested()) {
        const auto got = in_.receive(buffer, kStopPoll);
        if (!got) {
            continue;
        }
        const std::span<const std::uint8_t> datagram(buffer.data(), *got);
        TapRecord record = tap_record_for(datagram, label_, TapDirection::Recv, wall_clock_ns());
        tap_.append(record);
        out_.send_to(forward_, datagram);
        record.direction = TapDirection::Send;
        record.t_ns = wall_clock_ns();
        tap_.append(record);
        ++forwarded_;
    }
    tap_.flush();
}

ImpairmentProxy::ImpairmentProxy(const ProxyConfig& config, TapSink& tap, std::string label)
    : config_(config),
      profile_(static_profile(config.plr, config.delay_ms)),
      channel_(config.seed),
      in_(config.listen),
      out_(kAnyPort),
      tap_(tap),
      label_(std::move(label))
{
    profile_.name = "proxy";
    if (config.jitter_ms > 0.0) {
        profile_.link.jitter = UniformJitter{millis_to_nanos(config.jitter_ms)};
    }
    profile_.validate();
    if (label_.empty()) {
        label_ = "proxy@" + in_.local_endpoint().to_string();
    }
}

void ImpairmentProxy::run(std::stop_token stop)
{
    struct Pending {
        SteadyClock::time_point due;
        std::uint64_t tie;
        std::vector<std::uint8_t> bytes;
        TapRecord record;
    };
    struct Later {
        bool operator()(const Pending& a, const Pending& b) const
        {
            return a.due != b.due ? a.due > b.due : a.tie > b.tie;
        }
    };
    std::priority_queue<Pending, std::vector<Pending>, Later> pending;
    std::uint64_t tie = 0;
    std::vector<std::uint8_t> buffer(kMaxDatagram);

    while (!stop.stop_requested()) {
        auto now = SteadyClock::now();
        while (!pending.empty() && pending.top().due <= now) {
            Pending next = pending.top();
            pending.pop();
            out_.send_to(config_.forward, next.bytes);
            next.record.t_ns = wall_clock_ns();
            tap_.append(next.record);
            ++forwarded_;
        }
        std::chrono::nanoseconds wait = kStopPoll;
        if (!pending.empty()) {
            wait = std::min<std::chrono::nanoseconds>(wait, pending.top().due - now);
        }
        const auto got = in_.receive(buffer, wait);
        if (!got) {
            continue;
        }
        const auto arrival = SteadyClock::now();
        const std::span<const std::uint8_t> datagram(buffer.data(), *got);
        TapRecord record = tap_record_for(datagram, label_, TapDirection::Recv, wall_clock_ns());
        tap_.append(record);
        const ChannelOutcome outcome = sample_channel(profile_, Direction::Command, channel_);
        if (const auto* deliver = std::get_if<DeliverAfter>(&outcome)) {
            record.direction = TapDirection::Send;
            pending.push(Pending{arrival + std::chrono::nanoseconds(deliver->extra_ns), tie++,
                                 std::vector<std::uint8_t>(datagram.begin(), datagram.end()), record});
        } else {
            ++dropped_;
        }
    }
    tap_.flush();
}

void run_forward_agent(const Endpoint& listen, const Endpoint& forward, TapSink& tap, std::stop_token stop)
{
    ForwardAgent agent(listen, forward, tap);
    agent.run(stop);
}

void run_impairment_proxy(const ProxyConfig& config, TapSink& tap, std::stop_token stop)
{
    ImpairmentProxy proxy(config, tap);
    proxy.run(stop);
}

} // namespace nhil
