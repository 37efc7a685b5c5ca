#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ndd/numcore/adam.hpp"
#include "ndd/numcore/dense_net.hpp"
#include "ndd/numcore/random.hpp"

namespace ndd::diffusion {

/// Arrays are indexed by k - 1 for steps k = 1..K.
struct DiffusionSchedule {
    std::size_t K = 0;
    std::vector<double> omega;
    std::vector<double> upsilon;
    std::vector<double> upsilon_bar;

    double omega_at(std::size_t k) const { return omega[k - 1]; }
    double upsilon_at(std::size_t k) const { return upsilon[k - 1]; }
    /// upsilon_bar_at(0) == 1.
    double upsilon_bar_at(std::size_t k) const { return k == 0 ? 1.0 : upsilon_bar[k - 1]; }
};

/// omega_k = 0.499e-2 * sigmoid(h_k) + 1e-5, h evenly spaced on [-6, 6].
DiffusionSchedule build_schedule(std::size_t K = 25);

/// r^<k> = sqrt(ubar_k) r + sqrt(1 - ubar_k) eps; k = 0 returns r.
double forward_diffuse(double r, std::size_t k, const DiffusionSchedule& sched, numcore::RandomSource& rng);

/// Data are shifted and scaled to unit variance before diffusion; the
/// denoiser for step k sees (x / s_k, k / K) where s_k is the marginal
/// standard deviation of x^<k>.
struct Normalization {
    double shift = 0.0;
    double scale = 1.0;
    double data_variance = 1.0;  // 0 for a constant data set
};

class DenoiserStack {
public:
    DenoiserStack(const DiffusionSchedule& sched, numcore::RandomSource& rng, std::size_t hidden = 32,
                  std::size_t depth = 2);
    /// All-zero networks: eps_theta == 0 everywhere.
    static DenoiserStack zeros(const DiffusionSchedule& sched, std::size_t hidden = 32, std::size_t depth = 2);

    std::size_t steps() const noexcept { return nets_.size(); }
    numcore::DenseNet& net(std::size_t k) { return nets_.at(k - 1); }
    const numcore::DenseNet& net(std::size_t k) const { return nets_.at(k - 1); }

    const Normalization& normalization() const noexcept { return norm_; }
    void set_normalization(const Normalization& n) { norm_ = n; }
    void fit_normalization(std::span<const double> samples);

    /// Input scale s_k for step k.
    double input_scale(std::size_t k, const DiffusionSchedule& sched) const;
    /// eps_theta(x, k) for x in normalized units.
    double predict(double x, std::size_t k, const DiffusionSchedule& sched) const;
    Eigen::MatrixXd encode(std::span<const double> x, std::size_t k, const DiffusionSchedule& sched) const;

private:
    DenoiserStack() = default;
    std::vector<numcore::DenseNet> nets_;
    Normalization norm_;
};

struct TrainConfig {
    std::size_t iterations = 5000;
    std::size_t batch = 64;
    numcore::AdamConfig adam{};
};

/// Fixed (r, k, iota) triples so losses at different iterations compare.
struct ValidationSet {
    std::vector<double> r;
    std::vector<std::size_t> k;
    std::vector<double> iota;
};

ValidationSet make_validation_set(std::span<const double> samples, const DiffusionSchedule& sched, std::size_t n,
                                  numcore::RandomSource& rng);
/// Mean of (iota - eps_theta(sqrt(ubar_k) r + sqrt(1 - ubar_k) iota, k))^2,
/// with r normalized by the stack.
double validation_loss(const DenoiserStack& stack, const DiffusionSchedule& sched, const ValidationSet& v);

struct TrainTrace {
    std::vector<double> batch_loss;  // one entry per iteration
};

/// Fits the normalization to `samples`, then each iteration draws k
/// uniformly and takes one Adam step on step k's network. Throws DataError
/// for fewer than 32 samples. `on_iteration(i)` (optional) runs after each step.
TrainTrace train(DenoiserStack& stack, std::span<const double> samples, const DiffusionSchedule& sched,
                 const TrainConfig& config, numcore::RandomSource& rng,
                 const std::function<void(std::size_t)>& on_iteration = {});

/// Reverse chain from x^<K> ~ N(0, 1) down to k = 0, mapped back to data
/// units. Sample i uses its own stream, so the result is independent of
/// the thread count.
std::vector<double> generate(const DenoiserStack& stack, const DiffusionSchedule& sched, std::size_t n,
                             numcore::RandomSource& rng);

namespace serial {
std::vector<double> generate(const DenoiserStack& stack, const DiffusionSchedule& sched, std::size_t n,
                             numcore::RandomSource& rng);
}

struct TheoremConstants {
    double sum_prod_gamma1 = 0;  // sum_{i=2..K} prod_{j<i} Gamma_1(j)
    double prod_gamma1 = 0;      // prod_{i=1..K} Gamma_1(i)
    double approx_coeff = 0;     // coefficient on E(xi) in the approximation-error bound
    double variance_coeff = 0;   // 1 + sum_prod^2, multiplies D(r)
    double mean_slack = 0;       // sqrt(1 - ubar_K), multiplies max |xi_rel|
    double offset = 0;           // prod^2 + sum_prod^2 * omega_K (1 - ubar_{K-1}) / (1 - ubar_K)
};

/// Gamma_1(1) = 1 / sqrt(u_1), Gamma_1(k) = (u_k - ubar_k) / ((1 - ubar_k) sqrt(u_k)).
double gamma1(const DiffusionSchedule& sched, std::size_t k);
TheoremConstants theorem_constants(const DiffusionSchedule& sched);

/// Upper bound on E[(r^<0> - r)^2] for data of the given mean and variance:
/// [S (1 + a xi) - 1]^2 E^2 + (1 + S^2) D + offset.
double generation_error_bound(const TheoremConstants& c, double mean, double variance, double xi_rel = 0.0);

/// real followed by round(|real| (1 - zeta) / zeta) generated values.
std::vector<double> augment(std::span<const double> real, std::span<const double> generated, double zeta);
std::size_t generated_count(std::size_t real_count, double zeta);

}  // namespace ndd::diffusion
