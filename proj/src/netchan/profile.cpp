#include "nhil/netchan/profile.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace nhil {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_probability(double p, const std::string& field)
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(fmt::format("{}: probability {} outside [0,1]", field, p));
    }
}

void validate_link(const LinkModel& link, const std::string& where)
{
    if (link.delay_ns < 0) {
        throw std::invalid_argument(fmt::format("{}.delay_ns: must be >= 0", where));
    }
    std::visit(Overloaded{
                   [](const NoJitter&) {},
                   [&](const UniformJitter& j) {
                       if (j.half_width_ns < 0) {
                           throw std::invalid_argument(fmt::format("{}.jitter.half_width_ns: must be >= 0", where));
                       }
                   },
                   [&](const ExponentialJitter& j) {
                       if (!(j.mean_ns >= 0.0)) {
                           throw std::invalid_argument(fmt::format("{}.jitter.mean_ns: must be >= 0", where));
                       }
                   },
               },
               link.jitter);
    std::visit(Overloaded{
                   [&](const BernoulliLoss& l) { check_probability(l.p, where + ".loss.p"); },
                   [&](const GilbertElliottParams& g) {
                       check_probability(g.p_good_to_bad, where + ".loss.p_good_to_bad");
                       check_probability(g.p_bad_to_good, where + ".loss.p_bad_to_good");
                       check_probability(g.loss_in_good, where + ".loss.loss_in_good");
                       check_probability(g.loss_in_bad, where + ".loss.loss_in_bad");
                   },
               },
               link.loss);
}

bool is_unimpaired(const LinkModel& link) { return link == LinkModel{}; }

json link_to_json(const LinkModel& link)
{
    json out;
    out["delay_ns"] = link.delay_ns;
    out["jitter"] = std::visit(Overloaded{
                                   [](const NoJitter&) { return json{{"kind", "none"}}; },
                                   [](const UniformJitter& j) {
                                       return json{{"kind", "uniform"}, {"half_width_ns", j.half_width_ns}};
                                   },
                                   [](const ExponentialJitter& j) {
                                       return json{{"kind", "exponential"}, {"mean_ns", j.mean_ns}};
                                   },
                               },
                               link.jitter);
    out["loss"] = std::visit(Overloaded{
                                 [](const BernoulliLoss& l) { return json{{"kind", "bernoulli"}, {"p", l.p}}; },
                                 [](const GilbertElliottParams& g) {
                                     return json{{"kind", "gilbert_elliott"},
                                                 {"p_good_to_bad", g.p_good_to_bad},
                                                 {"p_bad_to_good", g.p_bad_to_good},
                                                 {"loss_in_good", g.loss_in_good},
                                                 {"loss_in_bad", g.loss_in_bad}};
                                 },
                             },
                             link.loss);
    return out;
}

template <typename T>
T field(const json& doc, const char* key, const std::string& where)
{
    if (!doc.contains(key)) {
        throw std::invalid_argument(fmt::format("{}.{}: missing", where, key));
    }
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(fmt::format("{}.{}: wrong type", where, key));
    }
}

LinkModel link_from_json(const json& doc, const std::string& where)
{
    LinkModel link;
    if (doc.contains("delay_ns")) {
        link.delay_ns = field<Nanos>(doc, "delay_ns", where);
    } else if (doc.contains("delay_ms")) {
        link.delay_ns = millis_to_nanos(field<double>(doc, "delay_ms", where));
    }
    if (doc.contains("jitter")) {
        const json& j = doc.at("jitter");
        const auto kind = field<std::string>(j, "kind", where + ".jitter");
        if (kind == "none") {
            link.jitter = NoJitter{};
        } else if (kind == "uniform") {
            link.jitter = UniformJitter{field<Nanos>(j, "half_width_ns", where + ".jitter")};
        } else if (kind == "exponential") {
            link.jitter = ExponentialJitter{field<double>(j, "mean_ns", where + ".jitter")};
        } else {
            throw std::invalid_argument(fmt::format("{}.jitter.kind: unknown '{}'", where, kind));
        }
    }
    if (doc.contains("loss")) {
        const json& l = doc.at("loss");
        const auto kind = field<std::string>(l, "kind", where + ".loss");
        if (kind == "bernoulli") {
            link.loss = BernoulliLoss{field<double>(l, "p", where + ".loss")};
        } else if (kind == "gilbert_elliott") {
            const std::string at = where + ".loss";
            link.loss = GilbertElliottParams{field<double>(l, "p_good_to_bad", at), field<double>(l, "p_bad_to_good", at),
                                             field<double>(l, "loss_in_good", at), field<double>(l, "loss_in_bad", at)};
        } else {
            throw std::invalid_argument(fmt::format("{}.loss.kind: unknown '{}'", where, kind));
        }
    }
    return link;
}

ChannelProfile make_profile(std::string name, LinkModel link)
{
    ChannelProfile profile;
    profile.name = std::move(name);
    profile.link = std::move(link);
    return profile;
}

} // namespace

std::string_view to_string(Direction direction)
{
    return direction == Direction::Command ? "command" : "status";
}

const LinkModel& ChannelProfile::link_for(Direction direction) const
{
    if (direction == Direction::Command && command_override) {
        return *command_override;
    }
    if (direction == Direction::Status && status_override) {
        return *status_override;
    }
    return link;
}

void ChannelProfile::validate() const
{
    validate_link(link, "profile");
    if (command_override) {
        validate_link(*command_override, "profile.command");
    }
    if (status_override) {
        validate_link(*status_override, "profile.status");
    }
    if (mode == ChannelMode::RealPassthrough) {
        if (!is_unimpaired(link) || command_override || status_override) {
            throw std::invalid_argument("profile: a real-passthrough profile carries no impairment parameters");
        }
        if (!command_route || !status_route) {
            throw std::invalid_argument("profile.routes: real-passthrough needs both command and status routes");
        }
    }
}

GeStep gilbert_elliott_step(GeState state, const GilbertElliottParams& params, Rng& rng)
{
    if (state == GeState::Good) {
        if (rng.bernoulli(params.p_good_to_bad)) {
            state = GeState::Bad;
        }
    } else if (rng.bernoulli(params.p_bad_to_good)) {
        state = GeState::Good;
    }
    const double loss = state == GeState::Good ? params.loss_in_good : params.loss_in_bad;
    return GeStep{state, rng.bernoulli(loss)};
}

double stationary_loss_rate(const GilbertElliottParams& params)
{
    const double rate_sum = params.p_good_to_bad + params.p_bad_to_good;
    // A chain that never leaves Good stays at its initial state.
    const double pi_bad = rate_sum > 0.0 ? params.p_good_to_bad / rate_sum : 0.0;
    return pi_bad * params.loss_in_bad + (1.0 - pi_bad) * params.loss_in_good;
}

double mean_loss_rate(const LossModel& loss)
{
    return std::visit(Overloaded{
                          [](const BernoulliLoss& l) { return l.p; },
                          [](const GilbertElliottParams& g) { return stationary_loss_rate(g); },
                      },
                      loss);
}

double mean_delay_ns(const LinkModel& link)
{
    const double base = static_cast<double>(link.delay_ns);
    return std::visit(Overloaded{
                          [&](const NoJitter&) { return base; },
                          // Ignores the clamp at zero, which only matters when half_width > delay.
                          [&](const UniformJitter&) { return base; },
                          [&](const ExponentialJitter& j) { return base + j.mean_ns; },
                      },
                      link.jitter);
}

ChannelOutcome sample_link(const LinkModel& link, ChannelState& state)
{
    const bool lose = std::visit(Overloaded{
                                     [&](const BernoulliLoss& l) { return state.rng.bernoulli(l.p); },
                                     [&](const GilbertElliottParams& g) {
                                         const GeStep step = gilbert_elliott_step(state.ge, g, state.rng);
                                         state.ge = step.state;
                                         return step.lose;
                                     },
                                 },
                                 link.loss);
    if (lose) {
        return Drop{};
    }
    const Nanos jitter = std::visit(Overloaded{
                                        [](const NoJitter&) -> Nanos { return 0; },
                                        [&](const UniformJitter& j) -> Nanos {
                                            const double u = state.rng.uniform() * 2.0 - 1.0;
                                            return std::llround(u * static_cast<double>(j.half_width_ns));
                                        },
                                        [&](const ExponentialJitter& j) -> Nanos {
                                            return std::llround(state.rng.exponential(j.mean_ns));
                                        },
                                    },
                                    link.jitter);
    return DeliverAfter{std::max<Nanos>(0, link.delay_ns + jitter)};
}

ChannelOutcome sample_channel(const ChannelProfile& profile, Direction direction, ChannelState& state)
{
    return sample_link(profile.link_for(direction), state);
}

std::vector<std::string> named_profile_names()
{
    return {"ideal", "ethernet-lab", "wifi6-short", "wifi6-long", "wifi6-short-iid", "wifi6-long-iid"};
}

std::optional<ChannelProfile> named_profile(std::string_view name)
{
    if (name == "ideal") {
        return make_profile("ideal", LinkModel{});
    }
    if (name == "ethernet-lab") {
        return make_profile("ethernet-lab", LinkModel{200'000, NoJitter{}, BernoulliLoss{0.0}});
    }
    if (name == "wifi6-short") {
        // Mean delay 3 ms, mean loss ~0.2 %, bursts of ~10 messages.
        return make_profile("wifi6-short", LinkModel{1'000'000, ExponentialJitter{2.0e6},
                                                     GilbertElliottParams{1.0e-4, 0.1, 0.001, 1.0}});
    }
    if (name == "wifi6-long") {
        // Mean delay 8 ms, mean loss ~1 %, bursts of ~50 messages.
        return make_profile("wifi6-long", LinkModel{2'000'000, ExponentialJitter{6.0e6},
                                                    GilbertElliottParams{1.6e-4, 0.02, 0.002, 1.0}});
    }
    if (name == "wifi6-short-iid" || name == "wifi6-long-iid") {
        const auto base = named_profile(name.substr(0, name.size() - 4));
        return iid_equivalent(*base);
    }
    return std::nullopt;
}

ChannelProfile static_profile(double plr, double delay_ms)
{
    return make_profile("static", LinkModel{millis_to_nanos(delay_ms), NoJitter{}, BernoulliLoss{plr}});
}

ChannelProfile iid_equivalent(const ChannelProfile& profile)
{
    ChannelProfile out = profile;
    out.name = profile.name + "-iid";
    const auto flatten = [](LinkModel& link) { link.loss = BernoulliLoss{mean_loss_rate(link.loss)}; };
    flatten(out.link);
    if (out.command_override) {
        flatten(*out.command_override);
    }
    if (out.status_override) {
        flatten(*out.status_override);
    }
    return out;
}

ChannelProfile profile_from_json(const json& doc)
{
    if (!doc.is_object()) {
        throw std::invalid_argument("profile: expected an object");
    }
    ChannelProfile profile;
    profile.name = field<std::string>(doc, "name", "profile");
    const auto mode = doc.value("mode", std::string("emulated"));
    if (mode == "emulated") {
        profile.mode = ChannelMode::Emulated;
    } else if (mode == "real-passthrough") {
        profile.mode = ChannelMode::RealPassthrough;
    } else {
        throw std::invalid_argument(fmt::format("profile.mode: unknown '{}'", mode));
    }
    profile.link = link_from_json(doc, "profile");
    if (doc.contains("command")) {
        profile.command_override = link_from_json(doc.at("command"), "profile.command");
    }
    if (doc.contains("status")) {
        profile.status_override = link_from_json(doc.at("status"), "profile.status");
    }
    if (doc.contains("routes")) {
        const json& routes = doc.at("routes");
        const auto route = [&](const char* key) -> std::optional<UdpRoute> {
            if (!routes.contains(key)) {
                return std::nullopt;
            }
            const std::string where = fmt::format("profile.routes.{}", key);
            const json& r = routes.at(key);
            try {
                return UdpRoute{parse_endpoint(field<std::string>(r, "send_to", where)),
                                parse_endpoint(field<std::string>(r, "bind", where))};
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(fmt::format("{}: {}", where, e.what()));
            }
        };
        profile.command_route = route("command");
        profile.status_route = route("status");
    }
    profile.validate();
    return profile;
}

json profile_to_json(const ChannelProfile& profile)
{
    json out = link_to_json(profile.link);
    out["name"] = profile.name;
    out["mode"] = profile.mode == ChannelMode::Emulated ? "emulated" : "real-passthrough";
    if (profile.command_override) {
        out["command"] = link_to_json(*profile.command_override);
    }
    if (profile.status_override) {
        out["status"] = link_to_json(*profile.status_override);
    }
    if (profile.command_route || profile.status_route) {
        json routes = json::object();
        if (profile.command_route) {
            routes["command"] = {{"send_to", profile.command_route->send_to.to_string()},
                                 {"bind", profile.command_route->bind.to_string()}};
        }
        if (profile.status_route) {
            routes["status"] = {{"send_to", profile.status_route->send_to.to_string()},
                                {"bind", profile.status_route->bind.to_string()}};
        }
        out["routes"] = routes;
    }
    return out;
}

ChannelProfile load_profile(std::string_view name_or_path)
{
    if (auto named = named_profile(name_or_path)) {
        return *named;
    }
    const std::filesystem::path path{std::string(name_or_path)};
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument(fmt::format("unknown profile '{}' (not a built-in name or readable file)", name_or_path));
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(fmt::format("{}: {}", path.string(), e.what()));
    }
    return profile_from_json(doc);
}

} // namespace nhil
