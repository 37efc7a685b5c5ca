#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ndd/dist/empirical.hpp"
#include "ndd/dist/gaussian.hpp"
#include "ndd/numcore/adam.hpp"
#include "ndd/numcore/dense_net.hpp"
#include "ndd/numcore/random.hpp"

namespace ndd::decomposition {

inline constexpr double kSigmaFloor = 1e-3;

/// Net outputs are in standardized reward units; mu = shift + scale * raw_mu,
/// sigma = scale * softplus(raw_sigma) + kSigmaFloor.
struct OutputScale {
    double shift = 0.0;
    double scale = 1.0;
};

/// Component means and sigmas for a batch of contexts, N x B.
struct Components {
    Eigen::MatrixXd mean;
    Eigen::MatrixXd sigma;
};

class DecompositionModel {
public:
    DecompositionModel(std::size_t agents, std::size_t input_size, numcore::RandomSource& rng,
                       std::size_t hidden = 64, std::size_t depth = 2);

    std::size_t agents() const noexcept { return nets_.size(); }
    std::size_t input_size() const noexcept { return input_size_; }

    numcore::DenseNet& net(std::size_t i) { return nets_.at(i); }
    const numcore::DenseNet& net(std::size_t i) const { return nets_.at(i); }
    Eigen::VectorXd& weight_logits() noexcept { return logits_; }
    const Eigen::VectorXd& weight_logits() const noexcept { return logits_; }
    /// softmax(weight_logits)
    std::vector<double> weights() const;

    const OutputScale& output_scale() const noexcept { return scale_; }
    void set_output_scale(OutputScale s) { scale_ = s; }

    /// True once fit() has run at least one round.
    bool fitted() const noexcept { return fitted_; }
    void mark_fitted() noexcept { fitted_ = true; }

    /// encodings[i] is agent i's input, input_size x B. Throws ShapeError.
    Components evaluate(const std::vector<Eigen::MatrixXd>& encodings) const;

private:
    std::size_t input_size_;
    std::vector<numcore::DenseNet> nets_;
    Eigen::VectorXd logits_;
    OutputScale scale_;
    bool fitted_ = false;
};

/// Rewards with the per-agent contexts that produced them. A batch with a
/// single context column is unconditional: every reward shares it, and the
/// target is the KDE of all rewards. Otherwise there is one column per
/// reward and each transition is matched to a kernel centred on its reward.
///
/// With `match_kernel` the model density is compared after convolving it
/// with the same Gaussian kernel (variance h^2) that produced the target, so
/// the fitted variances are not inflated by the KDE bandwidth.
class DecompositionBatch {
public:
    DecompositionBatch(std::vector<Eigen::MatrixXd> encodings, std::vector<double> rewards,
                       std::size_t grid_points = 256, bool match_kernel = true);

    /// Variance added to every component before comparison (h^2 or 0).
    double smoothing_variance() const noexcept { return smoothing_; }

    bool conditional() const noexcept { return contexts() > 1; }
    std::size_t contexts() const noexcept { return static_cast<std::size_t>(encodings_.front().cols()); }
    std::size_t agents() const noexcept { return encodings_.size(); }
    const std::vector<Eigen::MatrixXd>& encodings() const noexcept { return encodings_; }
    const std::vector<double>& rewards() const noexcept { return rewards_; }
    const dist::EmpiricalDistribution& target() const noexcept { return target_; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    /// G x 1 (unconditional, the KDE grid) or G x B (kernel per reward).
    const Eigen::MatrixXd& target_matrix() const noexcept { return target_matrix_; }

private:
    std::vector<Eigen::MatrixXd> encodings_;
    std::vector<double> rewards_;
    dist::EmpiricalDistribution target_;
    std::vector<double> nodes_;
    Eigen::MatrixXd target_matrix_;
    double smoothing_ = 0.0;
};

/// Constant one-valued context shared by all rewards.
DecompositionBatch unconditional_batch(std::size_t agents, std::vector<double> rewards,
                                       std::size_t grid_points = 256, bool match_kernel = true);

/// Mixture for a single context (one column per agent encoding).
dist::GMM decompose(const DecompositionModel& model, const std::vector<Eigen::VectorXd>& encodings);

/// int (P - P_hat)^2 over the target's support, midpoint rule on its grid.
double loss_pdf(const dist::GMM& model_output, const dist::EmpiricalDistribution& target);
/// sum_i (mu_i - mean(mu))^2
double loss_mean(std::span<const double> means);
/// || w - 1/N ||_2
double loss_weight(std::span<const double> weights);

struct LossValue {
    double total = 0;
    double pdf = 0;     // training form of the density term
    double mean = 0;    // averaged over contexts
    double weight = 0;
};

struct LossGradients {
    std::vector<numcore::Gradients> nets;
    Eigen::VectorXd logits;
};

/// L = L_pdf + lambda L_mean + alpha L_weight. In the conditional form the
/// density term is the average over transitions of int (K_h(u - r_b) - P_b(u))^2,
/// which differs from the marginal loss by a constant when contexts coincide.
/// `columns` restricts a conditional batch to a minibatch (empty = all).
/// Throws NumericError on a non-finite value.
LossValue total_loss(const DecompositionModel& model, const DecompositionBatch& batch, double lambda, double alpha,
                     LossGradients* gradients = nullptr, std::span<const Eigen::Index> columns = {});

/// int (P_KDE - mean_b P_b)^2: the stopping criterion e, with P_b smoothed
/// as the batch dictates. Without smoothing this equals
/// loss_pdf(decompose(...), target) for an unconditional batch.
double marginal_loss_pdf(const DecompositionModel& model, const DecompositionBatch& batch);

struct FitOptions {
    double e_min = 1e-3;
    std::size_t max_rounds = 2000;
    /// Keep optimizing past e <= e_min until this many rounds have run.
    std::size_t min_rounds = 0;
    double lambda = 1.0;
    double alpha = 1.0;
    numcore::AdamConfig adam{};
    /// Learning rate decays geometrically to adam.learning_rate * lr_final_ratio
    /// at max_rounds; 1 keeps it constant.
    double lr_final_ratio = 1.0;
    /// Conditional batches only: contexts per round (0 = all) and how often e is recomputed.
    std::size_t minibatch = 64;
    std::size_t check_every = 25;
};

struct FitResult {
    double e = 0;
    std::size_t rounds = 0;
    bool converged = false;
    std::vector<double> curve;  // e per evaluation
};

/// Adam state persists across calls so repeated fits continue smoothly.
class Fitter {
public:
    explicit Fitter(FitOptions options = {}) : options_(options) {}
    FitResult fit(DecompositionModel& model, const DecompositionBatch& batch, numcore::RandomSource& rng);
    const FitOptions& options() const noexcept { return options_; }
    FitOptions& options() noexcept { return options_; }

private:
    FitOptions options_;
    std::vector<numcore::Adam> net_opt_;
    std::optional<numcore::Adam> logit_opt_;
};

FitResult fit(DecompositionModel& model, const DecompositionBatch& batch, const FitOptions& options,
              numcore::RandomSource& rng);

/// Sets the model's output scale from the batch's reward mean and sd.
void calibrate_output_scale(DecompositionModel& model, std::span<const double> rewards);

}  // namespace ndd::decomposition
