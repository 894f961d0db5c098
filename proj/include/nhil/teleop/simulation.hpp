#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhil/netchan/profile.hpp"
#include "nhil/netchan/tap.hpp"
#include "nhil/netchan/transport.hpp"
#include "nhil/teleop/egm.hpp"
#include "nhil/teleop/motion.hpp"

namespace nhil {

struct TeleopConfig {
    double mapping_scale = 0.8;
    double l1 = 0.35;
    double l2 = 0.35;
    double qdot_max = 3.0;
    ElbowBranch branch = ElbowBranch::Down;
    EgmConfig egm;
    /// Robot-frame point the operator's swing center maps to.
    Eigen::Vector2d robot_center{0.45, 0.0};
    double peak_threshold = 0.5;
    /// Peak window in loop periods.
    double peak_separation_loops = 0.5;
    /// Robot ticks kept after the final frame.
    Nanos drain_ns = 500 * kNanosPerMilli;

    void validate() const;
};

struct TeleopStats {
    std::string profile;
    std::string mode;
    std::uint64_t seed = 0;
    std::uint32_t loops = 0;
    std::uint64_t frames_sent = 0;
    std::uint64_t frames_received = 0;
    std::uint64_t frames_applied = 0;
    std::uint64_t stale_frames = 0;
    std::uint64_t n_s = 0;
    std::uint64_t n_a = 0;
    double mlr = 0.0;
    std::uint64_t dropouts = 0;
    std::uint64_t activations = 0;
    std::uint64_t lost_samples = 0;
    double joint_error_mean = 0.0;
    double joint_error_max = 0.0;
    Nanos virtual_time_ns = 0;
    TransportCounters messages;
    std::vector<std::string> series;

    nlohmann::json to_json() const;
};

struct TeleopResult {
    TeleopStats stats;
    std::vector<double> desired_y;
    std::vector<double> measured_y;
};

class TeleopError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Streams one joint frame per swing sample through the channel into the
/// EGM server and the rate-limited arm. Writes desired.csv, measured.csv and
/// egm_events.csv under `out_dir` when set. Throws TeleopError when a mapped
/// target is unreachable.
TeleopResult run_teleop(const MotionProfile& profile, const ChannelProfile& channel, const TeleopConfig& config,
                        std::uint64_t seed, const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                        TapSink* tap = nullptr);

nlohmann::json teleop_config_to_json(const MotionProfile& profile, const TeleopConfig& config);

} // namespace nhil
