#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ndd/decomposition/decomposition.hpp"
#include "ndd/marl/learner.hpp"

namespace ndd::marl {

enum class RewardMode {
    sampled,  // draw from agent i's decomposed component
    mean,     // use its mean
    global    // naive: every agent learns from the raw noisy global reward
};

std::string to_string(RewardMode m);
RewardMode parse_reward_mode(std::string_view s);

/// Decomposition input for agent i: observation followed by one-hot action.
Eigen::VectorXd agent_encoding(const Eigen::VectorXd& obs, std::size_t action, std::size_t actions);

/// Local reward for agent i of a transition. Throws StateError when the
/// model has not been fitted.
double local_reward_sample(const decomposition::DecompositionModel& model, const Transition& t, std::size_t agent,
                           std::size_t actions, numcore::RandomSource& rng, RewardMode mode = RewardMode::sampled);

struct MarlConfig {
    std::size_t agents = 3;
    std::string noise = "mpe_noise0";
    std::size_t iterations = 300;
    std::uint64_t seed = 7;
    RewardMode mode = RewardMode::sampled;
    distortion::DistortionFn distortion{};

    std::size_t buffer = 1024;
    std::size_t batch = 32;
    /// td_updates per agent per iteration; 0 means one pass over the buffer.
    std::size_t updates = 0;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    /// Fraction of iterations over which epsilon anneals linearly.
    double epsilon_fraction = 0.5;
    LearnerConfig learner{};

    double lambda = 1.0;
    double alpha = 1.0;
    double e_min = 1e-3;
    /// Inner rounds per iteration; the fitter keeps its state between iterations.
    std::size_t fit_rounds = 50;
    std::size_t decomposition_hidden = 64;

    bool dm = false;
    /// Fraction of each buffer that is real interaction data.
    double zeta = 1.0;
    std::size_t dm_steps = 25;
    std::size_t dm_train_iters = 200;

    std::size_t eval_episodes = 20;
    /// Evaluate every this many iterations and on the last one.
    std::size_t eval_every = 1;
};

struct IterationMetrics {
    std::size_t iteration = 0;
    double eval_return = 0.0;  // NaN when not evaluated this iteration
    double wasserstein = 0.0;  // NaN in global mode
    double l_pdf = 0.0;        // NaN in global mode
    std::size_t fit_rounds = 0;
    double td_loss = 0.0;
    double epsilon = 0.0;
};

struct TrainResult {
    std::vector<QuantileLearner> learners;
    std::optional<decomposition::DecompositionModel> model;
    std::vector<IterationMetrics> log;
};

/// Mean noise-free return of greedy (epsilon = 0) episodes. Episodes run in
/// parallel, each on its own env clone and random stream.
double evaluate(const DecPomdpEnv& env, const std::vector<QuantileLearner>& learners,
                const distortion::DistortionFn& f, std::size_t episodes, std::uint64_t seed);

/// Same, with uniformly random actions.
double random_return(const DecPomdpEnv& env, std::size_t episodes, std::uint64_t seed);

/// Outer loop: rollout, optional diffusion augmentation, decomposition fit,
/// local td_updates, clear buffer. Throws ConfigError when config.agents
/// disagrees with the env.
TrainResult train(const DecPomdpEnv& env, const MarlConfig& config,
                  const std::function<void(const IterationMetrics&)>& on_iteration = {});

/// Dense payoff over joint actions, row-major with agent 0 slowest.
struct PayoffTensor {
    std::size_t agents = 0;
    std::size_t actions = 0;
    std::vector<double> values;

    double at(const JointAction& a) const;
};

/// Brute force: does the joint argmax of `payoff` achieve the same value as
/// the tuple of per-agent argmaxes of `local[i]` (actions values each)?
bool matrix_game_consistency(const PayoffTensor& payoff, const std::vector<std::vector<double>>& local);

/// Mixture form: agent i's component for action a has quantile grid
/// local[i][a]; the joint value is sum_i w_i E_rho[Z_i(a_i)].
PayoffTensor mixture_payoff(const std::vector<std::vector<dist::QuantileGrid>>& local, std::span<const double> w,
                            const distortion::DistortionFn& f = {});
bool matrix_game_consistency(const std::vector<std::vector<dist::QuantileGrid>>& local, std::span<const double> w,
                             const distortion::DistortionFn& f = {});

}  // namespace ndd::marl
