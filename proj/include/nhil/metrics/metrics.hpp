#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nhil/netchan/random.hpp"
#include "nhil/netchan/tap.hpp"

namespace nhil {

/// collisions / cs_total. Throws std::invalid_argument when cs_total is 0 or
/// collisions exceeds it.
double p_collision(std::uint64_t collisions, std::uint64_t cs_total);

/// Motion loss rate (n_s - n_a) / n_s. Throws std::invalid_argument when
/// n_s is 0 or n_a > n_s; the latter points to a peak-counting defect.
double mlr(std::uint64_t n_s, std::uint64_t n_a);

inline constexpr double kDefaultPeakThreshold = 0.5;

/// Counts samples above min + threshold_fraction * (max - min) that are
/// strictly greater than every earlier sample and no smaller than every
/// later sample within `window` samples on either side. Plateaus count once,
/// at their first sample.
std::size_t count_motion_loops(std::span<const double> series, double threshold_fraction, std::size_t window);

/// Window from a separation in seconds and the sample period.
std::size_t count_motion_loops(std::span<const double> series, double threshold_fraction, double min_separation_s,
                               double sample_period_s);

struct JointSample {
    std::uint32_t seq = 0;
    std::vector<double> q;
};

struct JointErrors {
    std::vector<std::uint32_t> seqs;
    /// measured - desired, per matched seq and joint.
    std::vector<std::vector<double>> errors;
    std::vector<std::uint32_t> lost;
    double mean_abs = 0.0;
    double max_abs = 0.0;
};

JointErrors joint_error_series(std::span<const JointSample> desired, std::span<const JointSample> measured);

struct DelayStats {
    std::uint64_t matched = 0;
    std::uint64_t lost = 0;
    std::optional<double> mean_ns;
    std::optional<Nanos> p95_ns;
    std::optional<Nanos> max_ns;
    bool clock_synchronized = true;
};

/// Matches sends to receives by (msg_type, robot_id, seq). Throws
/// std::invalid_argument on a duplicate key on either side.
DelayStats one_way_delay_stats(std::span<const TapRecord> send, std::span<const TapRecord> recv,
                               bool clock_synchronized);

/// Nearest-rank percentile of an unsorted sample, 0 < pct <= 100.
Nanos nearest_rank(std::vector<Nanos> values, double pct);

} // namespace nhil
