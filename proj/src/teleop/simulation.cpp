#include "nhil/teleop/simulation.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "nhil/metrics/metrics.hpp"

namespace nhil {

void TeleopConfig::validate() const
{
    if (!(mapping_scale > 0)) {
        throw std::invalid_argument("mapping_scale: must be positive");
    }
    if (!(l1 > 0) || !(l2 > 0)) {
        throw std::invalid_argument("l1/l2: link lengths must be positive");
    }
    if (!(qdot_max > 0)) {
        throw std::invalid_argument("qdot_max: must be positive");
    }
    if (egm.watchdog_timeout_ns <= 0 || egm.reconnect_delay_ns <= 0) {
        throw std::invalid_argument("watchdog_timeout/reconnect_delay: must be positive");
    }
    if (!(peak_threshold >= 0 && peak_threshold < 1)) {
        throw std::invalid_argument("peak_threshold: must be in [0, 1)");
    }
    if (!(peak_separation_loops > 0)) {
        throw std::invalid_argument("peak_separation_loops: must be positive");
    }
    if (drain_ns < 0) {
        throw std::invalid_argument("drain: must be >= 0");
    }
}

nlohmann::json TeleopStats::to_json() const
{
    const auto link = [&](Direction d) {
        const std::size_t i = index_of(d);
        return nlohmann::json{
            {"sent", messages.sent[i]}, {"delivered", messages.delivered[i]}, {"dropped", messages.dropped[i]}};
    };
    return nlohmann::json{
        {"profile", profile},
        {"mode", mode},
        {"seed", seed},
        {"loops", loops},
        {"frames_sent", frames_sent},
        {"frames_received", frames_received},
        {"frames_applied", frames_applied},
        {"stale_frames", stale_frames},
        {"n_s", n_s},
        {"n_a", n_a},
        {"mlr", mlr},
        {"dropouts", dropouts},
        {"activations", activations},
        {"lost_samples", lost_samples},
        {"joint_error_mean_rad", joint_error_mean},
        {"joint_error_max_rad", joint_error_max},
        {"virtual_time_ns", virtual_time_ns},
        {"messages", {{"command", link(Direction::Command)}, {"status", link(Direction::Status)}}},
        {"series", series},
    };
}

nlohmann::json teleop_config_to_json(const MotionProfile& profile, const TeleopConfig& config)
{
    return nlohmann::json{
        {"rate_hz", profile.rate_hz},
        {"loop_period_s", profile.loop_period_s},
        {"loops", profile.loops},
        {"amplitude_m", profile.amplitude_m},
        {"human_center", {profile.center.x(), profile.center.y()}},
        {"mapping_scale", config.mapping_scale},
        {"l1", config.l1},
        {"l2", config.l2},
        {"qdot_max", config.qdot_max},
        {"elbow", config.branch == ElbowBranch::Down ? "down" : "up"},
        {"watchdog_timeout_ns", config.egm.watchdog_timeout_ns},
        {"reconnect_delay_ns", config.egm.reconnect_delay_ns},
        {"robot_center", {config.robot_center.x(), config.robot_center.y()}},
        {"peak_threshold", config.peak_threshold},
        {"peak_separation_loops", config.peak_separation_loops},
        {"drain_ns", config.drain_ns},
    };
}

namespace {

std::string_view event_name(EgmEvent e)
{
    switch (e) {
    case EgmEvent::Activated:
        return "activate";
    case EgmEvent::Deactivated:
        return "deactivate";
    case EgmEvent::WatchdogTrip:
        return "watchdog_trip";
    case EgmEvent::None:
        break;
    }
    return "none";
}

class SeriesFiles {
public:
    explicit SeriesFiles(const std::optional<std::filesystem::path>& dir)
    {
        if (!dir) {
            return;
        }
        std::filesystem::create_directories(*dir);
        desired_.open(*dir / "desired.csv");
        measured_.open(*dir / "measured.csv");
        events_.open(*dir / "egm_events.csv");
        if (!desired_ || !measured_ || !events_) {
            throw TeleopError(fmt::format("cannot write series under {}", dir->string()));
        }
        desired_ << "t_ns,seq,q1_des,q2_des,y_des\n";
        measured_ << "t_ns,seq_last_applied,q1,q2,y_tcp\n";
        events_ << "t_ns,event\n";
        enabled_ = true;
    }

    bool enabled() const { return enabled_; }
    std::ofstream& desired() { return desired_; }
    std::ofstream& measured() { return measured_; }

    void event(Nanos t, EgmEvent e)
    {
        if (enabled_ && e != EgmEvent::None) {
            events_ << fmt::format("{},{}\n", t, event_name(e));
        }
    }

private:
    bool enabled_ = false;
    std::ofstream desired_;
    std::ofstream measured_;
    std::ofstream events_;
};

WireMessage ctrl_message(EgmCommand command, std::uint32_t seq, Nanos t)
{
    WireMessage msg;
    msg.seq = seq;
    msg.send_time_ns = static_cast<std::uint64_t>(t);
    msg.payload = EgmCtrlPayload{command};
    return msg;
}

} // namespace

TeleopResult run_teleop(const MotionProfile& profile, const ChannelProfile& channel, const TeleopConfig& config,
                        std::uint64_t seed, const std::optional<std::filesystem::path>& out_dir, TapSink* tap)
{
    profile.validate();
    config.validate();
    channel.validate();

    const auto swing = generate_swing(profile);
    const std::size_t frames = swing.size();
    std::vector<JointSample> desired(frames);
    TeleopResult result;
    result.desired_y.resize(frames);
    for (std::size_t k = 0; k < frames; ++k) {
        const Eigen::Vector2d target = map_motion<double>(swing[k].point, profile.center, config.robot_center, config.mapping_scale);
        std::pair<double, double> q;
        try {
            q = ik_2link<double>(target, config.l1, config.l2, config.branch);
        } catch (const ReachabilityError& e) {
            throw TeleopError(fmt::format(
                "frame {}: {} (amplitude {} m, mapping scale {}, links {}/{} m, robot center ({}, {}))", k, e.what(),
                profile.amplitude_m, config.mapping_scale, config.l1, config.l2, config.robot_center.x(),
                config.robot_center.y()));
        }
        desired[k] = JointSample{static_cast<std::uint32_t>(k + 1), {q.first, q.second}};
        result.desired_y[k] = target.y();
    }

    SeriesFiles files(out_dir);
    if (files.enabled()) {
        for (std::size_t k = 0; k < frames; ++k) {
            files.desired() << fmt::format("{},{},{},{},{}\n", swing[k].t_ns, desired[k].seq, desired[k].q[0],
                                           desired[k].q[1], result.desired_y[k]);
        }
    }

    auto transport = make_transport(channel, derive_seed(seed, 3), tap);
    const bool real = channel.mode == ChannelMode::RealPassthrough;
    const double dt = 1.0 / profile.rate_hz;
    const auto drain_ticks = static_cast<std::size_t>(std::ceil(nanos_to_seconds(config.drain_ns) * profile.rate_hz));
    const std::size_t ticks = frames + 1 + drain_ticks;

    TeleopStats& st = result.stats;
    EgmState egm;
    egm.pending_reactivation_at_ns = config.egm.reconnect_delay_ns; // in case the first activate is lost
    std::vector<double> q = desired.front().q;
    std::vector<double> target = q;
    std::uint32_t applied_seq = 0;
    std::uint32_t ctrl_seq = 0;
    std::vector<JointSample> measured_first;
    measured_first.reserve(frames);
    result.measured_y.reserve(ticks);
    std::vector<Delivery> inbox;
    const auto wall_start = std::chrono::steady_clock::now();

    Nanos t = 0;
    for (std::size_t k = 0; k < ticks; ++k) {
        t = profile.frame_time_ns(k);
        if (real) {
            std::this_thread::sleep_until(wall_start + std::chrono::nanoseconds(t));
        }
        if (k == 0) {
            transport->send(Direction::Command, ctrl_message(EgmCommand::Activate, ++ctrl_seq, t), t);
        } else if (k < frames && egm.activation == Activation::Inactive && egm.pending_reactivation_at_ns &&
                   t >= *egm.pending_reactivation_at_ns) {
            // The server's reconnect request reaches the controller out of band.
            transport->send(Direction::Command, ctrl_message(EgmCommand::Activate, ++ctrl_seq, t), t);
            egm.pending_reactivation_at_ns = t + config.egm.reconnect_delay_ns;
        }
        if (k < frames) {
            WireMessage msg;
            msg.seq = desired[k].seq;
            msg.send_time_ns = static_cast<std::uint64_t>(t);
            msg.payload = EgmJointsPayload{desired[k].q};
            transport->send(Direction::Command, msg, t);
            ++st.frames_sent;
        } else if (k == frames) {
            transport->send(Direction::Command, ctrl_message(EgmCommand::Deactivate, ++ctrl_seq, t), t);
        }

        inbox.clear();
        transport->collect(t, inbox);
        const auto apply = [&](const EgmInput& input) {
            EgmStep step = egm_server_step(egm, t, input, config.egm);
            if (step.watchdog_tripped) {
                files.event(t, EgmEvent::WatchdogTrip);
            }
            if (step.event != EgmEvent::WatchdogTrip) {
                files.event(t, step.event);
            }
            if (step.event == EgmEvent::Activated) {
                ++st.activations;
            }
            if (step.accepted) {
                target = step.accepted->joints.joints;
                applied_seq = step.accepted->seq;
                ++st.frames_applied;
            }
            egm = std::move(step.state);
        };
        for (const Delivery& d : inbox) {
            if (const auto* ctrl = std::get_if<EgmCtrlPayload>(&d.message.payload)) {
                apply(*ctrl);
            } else if (const auto* joints = std::get_if<EgmJointsPayload>(&d.message.payload)) {
                ++st.frames_received;
                const bool stale = egm.last_seq && d.message.seq <= *egm.last_seq;
                if (stale && egm.activation == Activation::Active) {
                    ++st.stale_frames;
                }
                apply(JointFrame{d.message.seq, *joints});
            }
        }
        if (inbox.empty()) {
            apply(std::monostate{});
        }

        const std::uint32_t before = measured_first.empty() ? 0 : measured_first.back().seq;
        q = robot_joint_step(q, target, dt, config.qdot_max);
        const double y = fk_2link(q[0], q[1], config.l1, config.l2).y();
        result.measured_y.push_back(y);
        if (applied_seq != 0 && applied_seq != before) {
            measured_first.push_back(JointSample{applied_seq, q});
        }
        if (files.enabled()) {
            files.measured() << fmt::format("{},{},{},{},{}\n", t, applied_seq, q[0], q[1], y);
        }
    }

    const auto window = static_cast<std::size_t>(std::llround(config.peak_separation_loops * profile.loop_period_s * profile.rate_hz));
    st.profile = channel.name;
    st.mode = real ? "real-passthrough" : "emulated";
    st.seed = seed;
    st.loops = profile.loops;
    st.n_s = count_motion_loops(result.desired_y, config.peak_threshold, window);
    st.n_a = count_motion_loops(result.measured_y, config.peak_threshold, window);
    st.mlr = mlr(st.n_s, st.n_a);
    st.dropouts = egm.dropouts;
    const JointErrors errors = joint_error_series(desired, measured_first);
    st.lost_samples = errors.lost.size();
    st.joint_error_mean = errors.mean_abs;
    st.joint_error_max = errors.max_abs;
    st.virtual_time_ns = t;
    st.messages = transport->counters();
    if (files.enabled()) {
        st.series = {"desired.csv", "measured.csv", "egm_events.csv"};
    }
    return result;
}

} // namespace nhil
