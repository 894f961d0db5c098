#pragma once

#include <cstdint>
#include <stop_token>
#include <string>

#include "nhil/netchan/profile.hpp"
#include "nhil/netchan/tap.hpp"
#include "nhil/netchan/udp.hpp"

namespace nhil {

/// Forwards every datagram received on `listen` to `forward`, byte for byte,
/// tapping a recv and a send record for each. One instance serves one
/// direction; run two for the command and status paths.
class ForwardAgent {
public:
    ForwardAgent(const Endpoint& listen, const Endpoint& forward, TapSink& tap, std::string label = {});

    Endpoint listen_endpoint() const { return in_.local_endpoint(); }
    std::uint64_t forwarded() const { return forwarded_; }

    /// Returns when `stop` is requested. Socket failures throw std::system_error.
    void run(std::stop_token stop);

private:
    UdpSocket in_;
    UdpSocket out_;
    Endpoint forward_;
    TapSink& tap_;
    std::string label_;
    std::uint64_t forwarded_ = 0;
};

struct ProxyConfig {
    Endpoint listen;
    Endpoint forward;
    double delay_ms = 0.0;
    double plr = 0.0;
    /// Half-width of uniform jitter around the delay.
    double jitter_ms = 0.0;
    std::uint64_t seed = 1;
};

/// Like ForwardAgent, but each datagram passes the channel sampler first and
/// is re-sent after its drawn delay on the wall clock. Dropped datagrams get
/// only a recv record.
class ImpairmentProxy {
public:
    ImpairmentProxy(const ProxyConfig& config, TapSink& tap, std::string label = {});

    Endpoint listen_endpoint() const { return in_.local_endpoint(); }
    std::uint64_t forwarded() const { return forwarded_; }
    std::uint64_t dropped() const { return dropped_; }

    void run(std::stop_token stop);

private:
    ProxyConfig config_;
    ChannelProfile profile_;
    ChannelState channel_;
    UdpSocket in_;
    UdpSocket out_;
    TapSink& tap_;
    std::string label_;
    std::uint64_t forwarded_ = 0;
    std::uint64_t dropped_ = 0;
};

void run_forward_agent(const Endpoint& listen, const Endpoint& forward, TapSink& tap, std::stop_token stop);
void run_impairment_proxy(const ProxyConfig& config, TapSink& tap, std::stop_token stop);

/// Decodes just enough of a datagram to label a tap record.
TapRecord tap_record_for(std::span<const std::uint8_t> datagram, const std::string& endpoint, TapDirection direction,
                         Nanos t_ns);

} // namespace nhil
