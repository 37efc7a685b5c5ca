#include "ndd/marl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ndd/error.hpp"

namespace ndd::marl {

TrajectoryBuffer::TrajectoryBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("buffer capacity must be positive");
    data_.reserve(capacity);
}

void TrajectoryBuffer::push(Transition t) {
    if (full()) throw StateError("trajectory buffer is full");
    data_.push_back(std::move(t));
}

void rollout(DecPomdpEnv& env, const Policy& policy, const noise::NoiseModel& noise, TrajectoryBuffer& buffer,
             numcore::RandomSource& rng) {
    std::size_t step = 0;
    while (!buffer.full()) {
        Observations obs = env.reset(rng);
        bool done = false;
        while (!done && !buffer.full()) {
            JointAction a(env.agents());
            for (std::size_t i = 0; i < a.size(); ++i) a[i] = policy(i, obs[i], rng);
            StepResult r;
            try {
                r = env.step(a);
            } catch (const std::exception& e) {
                throw StateError("rollout: env step " + std::to_string(step) + " failed: " + e.what());
            }
            if (!std::isfinite(r.reward))
                throw NumericError("rollout: non-finite reward at env step " + std::to_string(step));
            Transition t{obs, a, noise::inject(r.reward, noise, rng), r.reward, r.observations, r.done};
            obs = std::move(r.observations);
            done = r.done;
            buffer.push(std::move(t));
            ++step;
        }
    }
}

namespace {

const LearnerConfig& validated(const LearnerConfig& config, std::size_t actions) {
    if (actions == 0 || config.quantiles == 0) throw ConfigError("learner needs at least one action and one quantile");
    if (!(config.gamma >= 0.0 && config.gamma < 1.0)) throw ConfigError("discount must lie in [0, 1)");
    if (!(config.kappa >= 0.0)) throw ConfigError("Huber threshold must be nonnegative");
    if (config.target_period == 0) throw ConfigError("target period must be positive");
    return config;
}

}  // namespace

QuantileLearner::QuantileLearner(std::size_t observation_size, std::size_t actions, LearnerConfig config,
                                 numcore::RandomSource& rng)
    : actions_(actions),
      config_(validated(config, actions)),
      online_(numcore::DenseNet::mlp(observation_size, actions * config.quantiles, rng, config.hidden, config.depth)),
      target_(online_),
      opt_(config.adam) {
    const auto m = static_cast<double>(config.quantiles);
    for (std::size_t j = 0; j < config.quantiles; ++j) levels_.push_back((static_cast<double>(j) + 0.5) / m);
}

namespace {

Eigen::MatrixXd sorted_table(const Eigen::VectorXd& raw, std::size_t actions, std::size_t m) {
    Eigen::MatrixXd q(static_cast<Eigen::Index>(actions), static_cast<Eigen::Index>(m));
    for (std::size_t a = 0; a < actions; ++a) {
        auto row = raw.segment(static_cast<Eigen::Index>(a * m), static_cast<Eigen::Index>(m));
        std::vector<double> v(row.begin(), row.end());
        std::sort(v.begin(), v.end());
        for (std::size_t j = 0; j < m; ++j) q(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = v[j];
    }
    return q;
}

Eigen::VectorXd weights_for(const std::vector<double>& levels, const distortion::DistortionFn& f) {
    auto w = distortion::cell_weights(levels, f);
    return Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
}

}  // namespace

Eigen::MatrixXd QuantileLearner::quantiles(const Eigen::VectorXd& obs) const {
    return sorted_table(online_.predict(obs), actions_, config_.quantiles);
}

dist::QuantileGrid QuantileLearner::grid(const Eigen::VectorXd& obs, std::size_t action) const {
    if (action >= actions_) throw DomainError("action out of range");
    Eigen::VectorXd row = quantiles(obs).row(static_cast<Eigen::Index>(action));
    return dist::make_quantile_grid(levels_, std::vector<double>(row.begin(), row.end()));
}

Eigen::VectorXd QuantileLearner::action_values(const Eigen::VectorXd& obs, const distortion::DistortionFn& f) const {
    return quantiles(obs) * weights_for(levels_, f);
}

double QuantileLearner::td_update(std::span<const LocalTransition> batch, const distortion::DistortionFn& f) {
    if (batch.empty()) throw DataError("td_update: empty minibatch");
    const auto b = static_cast<Eigen::Index>(batch.size());
    const auto m = static_cast<Eigen::Index>(config_.quantiles);
    const auto in = static_cast<Eigen::Index>(online_.input_size());
    Eigen::MatrixXd obs(in, b), next(in, b);
    for (Eigen::Index c = 0; c < b; ++c) {
        const auto& t = batch[static_cast<std::size_t>(c)];
        if (t.obs.size() != in || t.next_obs.size() != in) throw ShapeError("td_update: observation size mismatch");
        if (t.action >= actions_) throw DomainError("td_update: action out of range");
        obs.col(c) = t.obs;
        next.col(c) = t.next_obs;
    }

    const Eigen::VectorXd w = weights_for(levels_, f);
    const Eigen::MatrixXd next_raw = target_.predict_batch(next);
    const Eigen::MatrixXd pred = online_.forward_batch(obs);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(pred.rows(), b);

    const double kappa = config_.kappa;
    const double scale = 1.0 / (static_cast<double>(b) * static_cast<double>(m));
    double loss = 0.0;
    for (Eigen::Index c = 0; c < b; ++c) {
        const auto& t = batch[static_cast<std::size_t>(c)];
        Eigen::VectorXd target = Eigen::VectorXd::Constant(m, t.reward);
        if (!t.terminal) {
            const Eigen::MatrixXd q = sorted_table(next_raw.col(c), actions_, config_.quantiles);
            const auto star = static_cast<Eigen::Index>(argmax(q * w));
            target += config_.gamma * q.row(star).transpose();
        }
        const Eigen::Index off = static_cast<Eigen::Index>(t.action) * m;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double theta = pred(off + j, c);
            const double tau = levels_[static_cast<std::size_t>(j)];
            double g = 0.0;
            for (Eigen::Index k = 0; k < m; ++k) {
                const double u = target(k) - theta;
                const double wt = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
                if (kappa == 0.0) {
                    loss += wt * std::abs(u);
                    g -= wt * (u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0));
                } else if (std::abs(u) <= kappa) {
                    loss += wt * 0.5 * u * u / kappa;
                    g -= wt * u / kappa;
                } else {
                    loss += wt * (std::abs(u) - 0.5 * kappa);
                    g -= wt * (u > 0.0 ? 1.0 : -1.0);
                }
            }
            grad(off + j, c) = g * scale;
        }
    }
    loss *= scale;
    if (!std::isfinite(loss)) throw NumericError("td_update: non-finite loss");
    opt_.step(online_, online_.backward(grad));
    online_.clear_tape();
    if (++updates_ % config_.target_period == 0) sync_target();
    return loss;
}

std::size_t argmax(const Eigen::VectorXd& values) {
    std::size_t best = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i)
        if (values(i) > values(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
    return best;
}

std::size_t select_action(const QuantileLearner& learner, const Eigen::VectorXd& obs,
                          const distortion::DistortionFn& f, double epsilon, numcore::RandomSource& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in [0, 1]");
    if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.index(learner.actions());
    return argmax(learner.action_values(obs, f));
}

}  // namespace ndd::marl
