#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ndd/dist/quantile.hpp"
#include "ndd/distortion/distortion.hpp"
#include "ndd/marl/env.hpp"
#include "ndd/noise/noise_model.hpp"
#include "ndd/numcore/adam.hpp"
#include "ndd/numcore/dense_net.hpp"

namespace ndd::marl {

struct Transition {
    Observations obs;
    JointAction actions;
    double reward = 0.0;        // after noise injection
    double clean_reward = 0.0;  // before
    Observations next_obs;
    bool terminal = false;
};

class TrajectoryBuffer {
public:
    explicit TrajectoryBuffer(std::size_t capacity = 1024);

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool full() const noexcept { return data_.size() >= capacity_; }
    bool empty() const noexcept { return data_.empty(); }
    /// Throws StateError when full.
    void push(Transition t);
    void clear() noexcept { data_.clear(); }
    const std::vector<Transition>& transitions() const noexcept { return data_; }
    const Transition& operator[](std::size_t i) const { return data_.at(i); }

private:
    std::size_t capacity_;
    std::vector<Transition> data_;
};

/// Per-agent policy: (agent, observation, rng) -> action.
using Policy = std::function<std::size_t(std::size_t, const Eigen::VectorXd&, numcore::RandomSource&)>;

/// Runs episodes until the buffer is full; the last one may be cut short
/// (its final transition is then non-terminal). Rewards go through
/// noise::inject. Env exceptions are rethrown with the step index.
void rollout(DecPomdpEnv& env, const Policy& policy, const noise::NoiseModel& noise, TrajectoryBuffer& buffer,
             numcore::RandomSource& rng);

struct LocalTransition {
    Eigen::VectorXd obs;
    std::size_t action = 0;
    double reward = 0.0;
    Eigen::VectorXd next_obs;
    bool terminal = false;
};

struct LearnerConfig {
    std::size_t quantiles = 32;
    double gamma = 0.99;
    /// Huber threshold; 0 gives the plain pinball loss.
    double kappa = 1.0;
    std::size_t target_period = 100;
    std::size_t hidden = 64;
    std::size_t depth = 2;
    numcore::AdamConfig adam{1e-3};
};

/// Independent quantile-regression value learner for one agent. The net
/// maps an observation to actions x M values (row a*M + j).
class QuantileLearner {
public:
    QuantileLearner(std::size_t observation_size, std::size_t actions, LearnerConfig config,
                    numcore::RandomSource& rng);

    std::size_t actions() const noexcept { return actions_; }
    std::size_t quantile_count() const noexcept { return config_.quantiles; }
    const LearnerConfig& config() const noexcept { return config_; }
    const std::vector<double>& levels() const noexcept { return levels_; }
    std::size_t updates() const noexcept { return updates_; }

    /// actions x M, each row sorted.
    Eigen::MatrixXd quantiles(const Eigen::VectorXd& obs) const;
    dist::QuantileGrid grid(const Eigen::VectorXd& obs, std::size_t action) const;
    /// Distorted expectation of every action.
    Eigen::VectorXd action_values(const Eigen::VectorXd& obs, const distortion::DistortionFn& f) const;

    /// One Adam step on the quantile Huber loss against r + gamma z'(o', a*),
    /// with z' from the target net and a* its distorted argmax. Returns the
    /// loss before the step.
    double td_update(std::span<const LocalTransition> batch, const distortion::DistortionFn& f = {});
    void sync_target() { target_ = online_; }

    numcore::DenseNet& net() noexcept { return online_; }
    const numcore::DenseNet& net() const noexcept { return online_; }
    const numcore::DenseNet& target() const noexcept { return target_; }

private:
    std::size_t actions_;
    LearnerConfig config_;
    std::vector<double> levels_;
    numcore::DenseNet online_;
    numcore::DenseNet target_;
    numcore::Adam opt_;
    std::size_t updates_ = 0;
};

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(const Eigen::VectorXd& values);

/// Epsilon-greedy on distorted expectations.
std::size_t select_action(const QuantileLearner& learner, const Eigen::VectorXd& obs,
                          const distortion::DistortionFn& f, double epsilon, numcore::RandomSource& rng);

}  // namespace ndd::marl
