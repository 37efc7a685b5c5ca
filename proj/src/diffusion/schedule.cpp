#include <cmath>

#include "ndd/diffusion/diffusion.hpp"
#include "ndd/error.hpp"

namespace ndd::diffusion {

DiffusionSchedule build_schedule(std::size_t K) {
    if (K < 1) throw DomainError("build_schedule: K must be >= 1");
    DiffusionSchedule s;
    s.K = K;
    double bar = 1.0;
    for (std::size_t i = 0; i < K; ++i) {
        const double h = K == 1 ? 0.0 : -6.0 + 12.0 * static_cast<double>(i) / static_cast<double>(K - 1);
        const double w = 0.499e-2 * numcore::sigmoid(h) + 1e-5;
        s.omega.push_back(w);
        s.upsilon.push_back(1.0 - w);
        bar *= 1.0 - w;
        s.upsilon_bar.push_back(bar);
    }
    return s;
}

double forward_diffuse(double r, std::size_t k, const DiffusionSchedule& sched, numcore::RandomSource& rng) {
    if (k > sched.K) throw DomainError("forward_diffuse: k exceeds K");
    if (k == 0) return r;
    const double ub = sched.upsilon_bar_at(k);
    return std::sqrt(ub) * r + std::sqrt(1.0 - ub) * rng.normal();
}

double gamma1(const DiffusionSchedule& sched, std::size_t k) {
    const double u = sched.upsilon_at(k);
    if (k == 1) return 1.0 / std::sqrt(u);
    const double ub = sched.upsilon_bar_at(k);
    return (u - ub) / ((1.0 - ub) * std::sqrt(u));
}

TheoremConstants theorem_constants(const DiffusionSchedule& sched) {
    TheoremConstants c;
    const std::size_t K = sched.K;
    double prod = 1.0;  // prod_{j<i} Gamma_1(j)
    for (std::size_t i = 1; i <= K; ++i) {
        if (i >= 2) {
            c.sum_prod_gamma1 += prod;
            const double u = sched.upsilon_at(i), ub = sched.upsilon_bar_at(i);
            c.approx_coeff += (1.0 - u) / ((1.0 - ub) * std::sqrt(u)) * std::sqrt(ub) * prod;
        }
        prod *= gamma1(sched, i);
    }
    c.prod_gamma1 = prod;
    const double S = c.sum_prod_gamma1;
    const double ubK = sched.upsilon_bar_at(K);
    c.variance_coeff = 1.0 + S * S;
    c.mean_slack = std::sqrt(1.0 - ubK);
    c.offset = prod * prod + S * S * sched.omega_at(K) * (1.0 - sched.upsilon_bar_at(K - 1)) / (1.0 - ubK);
    return c;
}

double generation_error_bound(const TheoremConstants& c, double mean, double variance, double xi_rel) {
    const double m = c.sum_prod_gamma1 * (1.0 + c.mean_slack * std::abs(xi_rel)) - 1.0;
    return m * m * mean * mean + c.variance_coeff * variance + c.offset;
}

std::size_t generated_count(std::size_t real_count, double zeta) {
    if (!(zeta > 0.0 && zeta <= 1.0)) throw DomainError("augment: zeta must lie in (0, 1]");
    return static_cast<std::size_t>(std::llround(static_cast<double>(real_count) * (1.0 - zeta) / zeta));
}

std::vector<double> augment(std::span<const double> real, std::span<const double> generated, double zeta) {
    const std::size_t m = generated_count(real.size(), zeta);
    if (zeta < 1.0 && (real.empty() || generated.empty()))
        throw DomainError("augment: real and generated samples must be nonempty when zeta < 1");
    if (generated.size() < m)
        throw DomainError("augment: need " + std::to_string(m) + " generated samples, have " +
                          std::to_string(generated.size()));
    std::vector<double> out(real.begin(), real.end());
    out.insert(out.end(), generated.begin(), generated.begin() + static_cast<std::ptrdiff_t>(m));
    return out;
}

}  // namespace ndd::diffusion
