#include "ndd/numcore/random.hpp"

#include <cmath>

#include "ndd/error.hpp"

namespace ndd::numcore {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

RandomSource::RandomSource(std::uint64_t seed) : RandomSource(seed, 0) {}

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(mix_seed(seed, stream)) {}

double RandomSource::uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RandomSource::uniform(double lo, double hi) {
    if (!(lo < hi)) throw DomainError("uniform: require lo < hi");
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RandomSource::normal() {
    return std::normal_distribution<double>(0.0, 1.0)(engine_);
}

double RandomSource::normal(double mean, double stddev) {
    if (stddev == 0.0) return mean;
    return mean + stddev * normal();
}

double RandomSource::gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) throw DomainError("gamma: shape and scale must be positive");
    return std::gamma_distribution<double>(shape, scale)(engine_);
}

double RandomSource::beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    const double s = x + y;
    // Both draws can underflow for very small shapes; fall back to the
    // Bernoulli limit of the beta law.
    if (s == 0.0) return bernoulli(a / (a + b)) ? 1.0 : 0.0;
    return x / s;
}

bool RandomSource::bernoulli(double p) { return uniform() < p; }

std::size_t RandomSource::index(std::size_t n) {
    if (n == 0) throw DomainError("index: empty range");
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

RandomSource RandomSource::split(std::uint64_t stream) const {
    return RandomSource(mix_seed(seed_, stream_), stream);
}

}  // namespace ndd::numcore
