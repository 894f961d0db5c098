#include "nhil/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace nhil {

double p_collision(std::uint64_t collisions, std::uint64_t cs_total)
{
    if (cs_total == 0) {
        throw std::invalid_argument("p_collision: cs_total must be positive");
    }
    if (collisions > cs_total) {
        throw std::invalid_argument(fmt::format("p_collision: collisions {} exceed cs_total {}", collisions, cs_total));
    }
    return static_cast<double>(collisions) / static_cast<double>(cs_total);
}

double mlr(std::uint64_t n_s, std::uint64_t n_a)
{
    if (n_s == 0) {
        throw std::invalid_argument("mlr: n_s must be positive");
    }
    if (n_a > n_s) {
        throw std::invalid_argument(fmt::format("mlr: n_a {} exceeds n_s {} (peak counting defect)", n_a, n_s));
    }
    return static_cast<double>(n_s - n_a) / static_cast<double>(n_s);
}

std::size_t count_motion_loops(std::span<const double> series, double threshold_fraction, std::size_t window)
{
    if (series.empty()) {
        return 0;
    }
    const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
    const double threshold = *lo_it + threshold_fraction * (*hi_it - *lo_it);
    const std::size_t n = series.size();
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = series[i];
        if (!(v > threshold)) {
            continue;
        }
        // Cheap neighbour test before the full window scan.
        if ((i > 0 && !(v > series[i - 1])) || (i + 1 < n && v < series[i + 1])) {
            continue;
        }
        const std::size_t first = i >= window ? i - window : 0;
        const std::size_t last = std::min(n - 1, i + window);
        bool peak = true;
        for (std::size_t j = first; j < i && peak; ++j) {
            peak = v > series[j];
        }
        for (std::size_t j = i + 1; j <= last && peak; ++j) {
            peak = v >= series[j];
        }
        if (peak) {
            ++count;
        }
    }
    return count;
}

std::size_t count_motion_loops(std::span<const double> series, double threshold_fraction, double min_separation_s,
                               double sample_period_s)
{
    const auto window = static_cast<std::size_t>(std::llround(min_separation_s / sample_period_s));
    return count_motion_loops(series, threshold_fraction, window);
}

JointErrors joint_error_series(std::span<const JointSample> desired, std::span<const JointSample> measured)
{
    std::map<std::uint32_t, const JointSample*> by_seq;
    for (const auto& m : measured) {
        by_seq.emplace(m.seq, &m);
    }
    JointErrors out;
    double sum = 0.0;
    std::size_t terms = 0;
    for (const auto& d : desired) {
        const auto it = by_seq.find(d.seq);
        if (it == by_seq.end()) {
            out.lost.push_back(d.seq);
            continue;
        }
        const auto& q = it->second->q;
        std::vector<double> err(d.q.size(), 0.0);
        for (std::size_t j = 0; j < d.q.size() && j < q.size(); ++j) {
            err[j] = q[j] - d.q[j];
            sum += std::abs(err[j]);
            out.max_abs = std::max(out.max_abs, std::abs(err[j]));
            ++terms;
        }
        out.seqs.push_back(d.seq);
        out.errors.push_back(std::move(err));
    }
    out.mean_abs = terms > 0 ? sum / static_cast<double>(terms) : 0.0;
    return out;
}

Nanos nearest_rank(std::vector<Nanos> values, double pct)
{
    if (values.empty()) {
        throw std::invalid_argument("nearest_rank: empty sample");
    }
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(values.size())));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

namespace {

using TapKey = std::tuple<int, std::uint16_t, std::uint32_t>;

TapKey key_of(const TapRecord& r)
{
    return {r.msg_type ? static_cast<int>(*r.msg_type) : 0, r.robot_id, r.seq};
}

} // namespace

DelayStats one_way_delay_stats(std::span<const TapRecord> send, std::span<const TapRecord> recv,
                               bool clock_synchronized)
{
    std::map<TapKey, Nanos> received;
    for (const auto& r : recv) {
        if (!received.emplace(key_of(r), r.t_ns).second) {
            throw std::invalid_argument(
                fmt::format("one_way_delay_stats: duplicate receive key (robot {}, seq {})", r.robot_id, r.seq));
        }
    }
    std::map<TapKey, Nanos> sent;
    for (const auto& s : send) {
        if (!sent.emplace(key_of(s), s.t_ns).second) {
            throw std::invalid_argument(
                fmt::format("one_way_delay_stats: duplicate send key (robot {}, seq {})", s.robot_id, s.seq));
        }
    }
    DelayStats stats;
    stats.clock_synchronized = clock_synchronized;
    std::vector<Nanos> latencies;
    for (const auto& [key, t_send] : sent) {
        const auto it = received.find(key);
        if (it == received.end()) {
            ++stats.lost;
            continue;
        }
        latencies.push_back(it->second - t_send);
    }
    stats.matched = latencies.size();
    if (!latencies.empty()) {
        long double sum = 0;
        for (Nanos l : latencies) {
            sum += l;
        }
        stats.mean_ns = static_cast<double>(sum / static_cast<long double>(latencies.size()));
        stats.max_ns = *std::max_element(latencies.begin(), latencies.end());
        stats.p95_ns = nearest_rank(latencies, 95.0);
    }
    return stats;
}

} // namespace nhil
