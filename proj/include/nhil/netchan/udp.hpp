#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "nhil/netchan/random.hpp"

namespace nhil {

/// IPv4 UDP address:port pair.
struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    std::string to_string() const;
    bool operator==(const Endpoint&) const = default;
};

/// Parses "a.b.c.d:port". Throws std::invalid_argument on malformed input.
Endpoint parse_endpoint(std::string_view text);

/// Realtime clock in nanoseconds since the epoch; the timestamp source for
/// every tap outside the virtual clock.
Nanos wall_clock_ns();

/// Owning datagram socket bound to a local endpoint.
class UdpSocket {
public:
    explicit UdpSocket(const Endpoint& bind_to);
    ~UdpSocket();

    UdpSocket(UdpSocket&& other) noexcept;
    UdpSocket& operator=(UdpSocket&& other) noexcept;
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;

    void send_to(const Endpoint& destination, std::span<const std::uint8_t> bytes);

    /// Waits up to `timeout` for a datagram. Returns its size, or nullopt on timeout.
    std::optional<std::size_t> receive(std::span<std::uint8_t> buffer, std::chrono::nanoseconds timeout);

    Endpoint local_endpoint() const;

private:
    int fd_ = -1;
};

} // namespace nhil
