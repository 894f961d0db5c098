#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nhil/netchan/random.hpp"
#include "nhil/netchan/udp.hpp"

namespace nhil {

/// Controller -> robot is the command direction; robot -> controller is status.
enum class Direction { Command, Status };

std::string_view to_string(Direction direction);

enum class ChannelMode { Emulated, RealPassthrough };

struct NoJitter {
    bool operator==(const NoJitter&) const = default;
};

/// Symmetric jitter: extra delay drawn from U(-half_width, +half_width), clamped so the total is nonnegative.
struct UniformJitter {
    Nanos half_width_ns = 0;
    bool operator==(const UniformJitter&) const = default;
};

/// One-sided jitter: extra delay drawn from Exp(mean).
struct ExponentialJitter {
    double mean_ns = 0.0;
    bool operator==(const ExponentialJitter&) const = default;
};

using Jitter = std::variant<NoJitter, UniformJitter, ExponentialJitter>;

struct BernoulliLoss {
    double p = 0.0;
    bool operator==(const BernoulliLoss&) const = default;
};

struct GilbertElliottParams {
    double p_good_to_bad = 0.0;
    double p_bad_to_good = 1.0;
    double loss_in_good = 0.0;
    double loss_in_bad = 1.0;
    bool operator==(const GilbertElliottParams&) const = default;
};

using LossModel = std::variant<BernoulliLoss, GilbertElliottParams>;

/// Impairment applied to one direction of the channel.
struct LinkModel {
    Nanos delay_ns = 0;
    Jitter jitter = NoJitter{};
    LossModel loss = BernoulliLoss{};
    bool operator==(const LinkModel&) const = default;
};

/// Where a real-passthrough direction sends to and receives on.
struct UdpRoute {
    Endpoint send_to;
    Endpoint bind;
    bool operator==(const UdpRoute&) const = default;
};

struct ChannelProfile {
    std::string name = "ideal";
    ChannelMode mode = ChannelMode::Emulated;
    LinkModel link;
    std::optional<LinkModel> command_override;
    std::optional<LinkModel> status_override;
    std::optional<UdpRoute> command_route;
    std::optional<UdpRoute> status_route;

    const LinkModel& link_for(Direction direction) const;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    bool operator==(const ChannelProfile&) const = default;
};

enum class GeState { Good, Bad };

/// Per-direction mutable channel state: the generator and the burst chain.
struct ChannelState {
    Rng rng;
    GeState ge = GeState::Good;

    explicit ChannelState(std::uint64_t seed = 0) : rng(seed) {}
};

struct Drop {
    bool operator==(const Drop&) const = default;
};

struct DeliverAfter {
    Nanos extra_ns = 0;
    bool operator==(const DeliverAfter&) const = default;
};

using ChannelOutcome = std::variant<Drop, DeliverAfter>;

/// Draws the fate of one message. Requires an emulated profile.
ChannelOutcome sample_channel(const ChannelProfile& profile, Direction direction, ChannelState& state);
ChannelOutcome sample_link(const LinkModel& link, ChannelState& state);

struct GeStep {
    GeState state;
    bool lose;
};

/// Transition first, then sample loss at the new state's rate.
GeStep gilbert_elliott_step(GeState state, const GilbertElliottParams& params, Rng& rng);

/// Closed-form long-run loss rate of the two-state chain.
double stationary_loss_rate(const GilbertElliottParams& params);
double mean_loss_rate(const LossModel& loss);
double mean_delay_ns(const LinkModel& link);

/// Built-in profiles: ideal, ethernet-lab, wifi6-short, wifi6-long and the
/// i.i.d. counterparts wifi6-short-iid, wifi6-long-iid.
std::vector<std::string> named_profile_names();
std::optional<ChannelProfile> named_profile(std::string_view name);

/// Bernoulli loss with fixed delay in both directions, labelled "static".
ChannelProfile static_profile(double plr, double delay_ms);

/// Same delay and jitter, loss replaced by i.i.d. Bernoulli at the stationary mean rate.
ChannelProfile iid_equivalent(const ChannelProfile& profile);

ChannelProfile profile_from_json(const nlohmann::json& doc);
nlohmann::json profile_to_json(const ChannelProfile& profile);

/// Resolves a built-in name, else reads a profile file.
ChannelProfile load_profile(std::string_view name_or_path);

} // namespace nhil
