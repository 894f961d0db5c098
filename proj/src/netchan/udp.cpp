#include "nhil/netchan/udp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <ctime>
#include <charconv>
#include <stdexcept>
#include <system_error>

#include <fmt/format.h>

namespace nhil {
namespace {

sockaddr_in to_sockaddr(const Endpoint& endpoint)
{
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(endpoint.port);
    if (inet_pton(AF_INET, endpoint.host.c_str(), &addr.sin_addr) != 1) {
        throw std::invalid_argument(fmt::format("not an IPv4 address: '{}'", endpoint.host));
    }
    return addr;
}

[[noreturn]] void throw_errno(const char* what)
{
    throw std::system_error(errno, std::generic_category(), what);
}

} // namespace

std::string Endpoint::to_string() const { return fmt::format("{}:{}", host, port); }

Endpoint parse_endpoint(std::string_view text)
{
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
        throw std::invalid_argument(fmt::format("expected <ip:port>, got '{}'", text));
    }
    Endpoint endpoint;
    endpoint.host = std::string(text.substr(0, colon));
    const auto port_text = text.substr(colon + 1);
    unsigned port = 0;
    const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port > 65535) {
        throw std::invalid_argument(fmt::format("bad port in '{}'", text));
    }
    endpoint.port = static_cast<std::uint16_t>(port);
    in_addr probe{};
    if (inet_pton(AF_INET, endpoint.host.c_str(), &probe) != 1) {
        throw std::invalid_argument(fmt::format("not an IPv4 address: '{}'", endpoint.host));
    }
    return endpoint;
}

Nanos wall_clock_ns()
{
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

UdpSocket::UdpSocket(const Endpoint& bind_to)
{
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) {
        throw_errno("socket");
    }
    int size = 4 << 20;
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &size, sizeof(size));
    const sockaddr_in addr = to_sockaddr(bind_to);
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        const int saved = errno;
        ::close(fd_);
        fd_ = -1;
        throw std::system_error(saved, std::generic_category(), fmt::format("bind {}", bind_to.to_string()));
    }
}

UdpSocket::~UdpSocket()
{
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept
{
    if (this != &other) {
        if (fd_ >= 0) {
            ::close(fd_);
        }
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

void UdpSocket::send_to(const Endpoint& destination, std::span<const std::uint8_t> bytes)
{
    const sockaddr_in addr = to_sockaddr(destination);
    const auto sent = ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr));
    if (sent < 0) {
        // Nobody listening on loopback is not fatal for datagrams.
        if (errno == ECONNREFUSED) {
            return;
        }
        throw_errno("sendto");
    }
}

std::optional<std::size_t> UdpSocket::receive(std::span<std::uint8_t> buffer, std::chrono::nanoseconds timeout)
{
    pollfd pfd{fd_, POLLIN, 0};
    const auto ns = std::max<std::int64_t>(0, timeout.count());
    timespec ts{static_cast<time_t>(ns / 1'000'000'000), static_cast<long>(ns % 1'000'000'000)};
    const int ready = ::ppoll(&pfd, 1, &ts, nullptr);
    if (ready < 0) {
        if (errno == EINTR) {
            return std::nullopt;
        }
        throw_errno("poll");
    }
    if (ready == 0) {
        return std::nullopt;
    }
    const auto got = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (got < 0) {
        if (errno == ECONNREFUSED || errno == EAGAIN || errno == EINTR) {
            return std::nullopt;
        }
        throw_errno("recv");
    }
    return static_cast<std::size_t>(got);
}

Endpoint UdpSocket::local_endpoint() const
{
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        throw_errno("getsockname");
    }
    char host[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &addr.sin_addr, host, sizeof(host));
    return Endpoint{host, ntohs(addr.sin_port)};
}

} // namespace nhil
