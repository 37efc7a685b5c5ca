#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace ndd::numcore {

/// Seeded pseudo-random source. Two sources built from the same seed (and
/// stream) produce bit-identical draw sequences.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed);
    RandomSource(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    double normal(double mean, double stddev);
    double gamma(double shape, double scale);
    double beta(double a, double b);
    bool bernoulli(double p);
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    /// Independent child source; used to give each worker its own stream.
    RandomSource split(std::uint64_t stream) const;

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer, used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace ndd::numcore
