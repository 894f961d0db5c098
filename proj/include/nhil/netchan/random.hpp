#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace nhil {

/// Virtual and wall-clock time, in nanoseconds.
using Nanos = std::int64_t;

inline constexpr Nanos kNanosPerMilli = 1'000'000;
inline constexpr Nanos kNanosPerSecond = 1'000'000'000;

constexpr Nanos millis_to_nanos(double ms) { return static_cast<Nanos>(ms * 1e6 + (ms >= 0 ? 0.5 : -0.5)); }
constexpr double nanos_to_seconds(Nanos ns) { return static_cast<double>(ns) * 1e-9; }

/// Seeded generator with platform-independent derived draws.
///
/// The standard distributions are implementation-defined, so every draw is
/// built directly on the 64-bit engine output. Identical seeds give identical
/// sequences on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// True with probability p; p <= 0 never, p >= 1 always.
    bool bernoulli(double p) { return uniform() < p; }

    double exponential(double mean);

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::span<T> items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Independent stream seed derived from a run seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace nhil
