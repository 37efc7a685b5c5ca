#include "ndd/marl/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ndd/diffusion/diffusion.hpp"
#include "ndd/dist/empirical.hpp"
#include "ndd/error.hpp"

namespace ndd::marl {

std::string to_string(RewardMode m) {
    switch (m) {
        case RewardMode::sampled: return "sampled";
        case RewardMode::mean: return "mean";
        case RewardMode::global: return "global";
    }
    return "?";
}

RewardMode parse_reward_mode(std::string_view s) {
    if (s == "sampled") return RewardMode::sampled;
    if (s == "mean") return RewardMode::mean;
    if (s == "global" || s == "naive") return RewardMode::global;
    throw ConfigError("unknown reward mode '" + std::string(s) + "'");
}

Eigen::VectorXd agent_encoding(const Eigen::VectorXd& obs, std::size_t action, std::size_t actions) {
    if (action >= actions) throw DomainError("action out of range");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(obs.size() + static_cast<Eigen::Index>(actions));
    e.head(obs.size()) = obs;
    e(obs.size() + static_cast<Eigen::Index>(action)) = 1.0;
    return e;
}

double local_reward_sample(const decomposition::DecompositionModel& model, const Transition& t, std::size_t agent,
                           std::size_t actions, numcore::RandomSource& rng, RewardMode mode) {
    if (!model.fitted()) throw StateError("local_reward_sample: decomposition model has not been fitted");
    if (agent >= model.agents() || t.obs.size() != model.agents()) throw ShapeError("local_reward_sample: bad agent");
    if (mode == RewardMode::global) return t.reward;
    std::vector<Eigen::MatrixXd> enc;
    for (std::size_t i = 0; i < model.agents(); ++i) enc.emplace_back(agent_encoding(t.obs[i], t.actions[i], actions));
    const auto c = model.evaluate(enc);
    const double mu = c.mean(static_cast<Eigen::Index>(agent), 0);
    if (mode == RewardMode::mean) return mu;
    return rng.normal(mu, c.sigma(static_cast<Eigen::Index>(agent), 0));
}

namespace {

double greedy_episode(DecPomdpEnv& env, const std::vector<QuantileLearner>* learners,
                      const distortion::DistortionFn& f, numcore::RandomSource& rng) {
    Observations obs = env.reset(rng);
    double total = 0.0;
    for (bool done = false; !done;) {
        JointAction a(env.agents());
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] = learners ? argmax((*learners)[i].action_values(obs[i], f)) : rng.index(env.actions());
        auto r = env.step(a);
        total += r.reward;
        obs = std::move(r.observations);
        done = r.done;
    }
    return total;
}

double run_episodes(const DecPomdpEnv& env, const std::vector<QuantileLearner>* learners,
                    const distortion::DistortionFn& f, std::size_t episodes, std::uint64_t seed) {
    if (episodes == 0) throw ConfigError("need at least one evaluation episode");
    std::vector<double> returns(episodes);
    const auto n = static_cast<long>(episodes);
#pragma omp parallel for schedule(static)
    for (long e = 0; e < n; ++e) {
        auto local = env.clone();
        numcore::RandomSource rng(seed, static_cast<std::uint64_t>(e));
        returns[static_cast<std::size_t>(e)] = greedy_episode(*local, learners, f, rng);
    }
    double s = 0.0;
    for (double r : returns) s += r;  // fixed order keeps the result thread-count independent
    return s / static_cast<double>(episodes);
}

// One sample per context from its mixture, against the rewards: p = 2.
double sampled_wasserstein(const decomposition::Components& c, const std::vector<double>& w,
                           const std::vector<double>& rewards, numcore::RandomSource& rng) {
    std::vector<double> model(rewards.size());
    for (std::size_t b = 0; b < rewards.size(); ++b) {
        double u = rng.uniform(), acc = 0.0;
        std::size_t i = 0;
        for (; i + 1 < w.size(); ++i) {
            acc += w[i];
            if (u < acc) break;
        }
        const auto ib = static_cast<Eigen::Index>(i), cb = static_cast<Eigen::Index>(b);
        model[b] = rng.normal(c.mean(ib, cb), c.sigma(ib, cb));
    }
    std::vector<double> real = rewards;
    std::sort(model.begin(), model.end());
    std::sort(real.begin(), real.end());
    double s = 0.0;
    for (std::size_t k = 0; k < real.size(); ++k) s += (model[k] - real[k]) * (model[k] - real[k]);
    return std::sqrt(s / static_cast<double>(real.size()));
}

}  // namespace

double evaluate(const DecPomdpEnv& env, const std::vector<QuantileLearner>& learners,
                const distortion::DistortionFn& f, std::size_t episodes, std::uint64_t seed) {
    if (learners.size() != env.agents()) throw ConfigError("evaluate: one learner per agent required");
    return run_episodes(env, &learners, f, episodes, seed);
}

double random_return(const DecPomdpEnv& env, std::size_t episodes, std::uint64_t seed) {
    return run_episodes(env, nullptr, {}, episodes, seed);
}

TrainResult train(const DecPomdpEnv& env, const MarlConfig& config,
                  const std::function<void(const IterationMetrics&)>& on_iteration) {
    if (config.agents != env.agents())
        throw ConfigError("train: config has " + std::to_string(config.agents) + " agents, env has " +
                          std::to_string(env.agents()));
    if (!(config.zeta > 0.0 && config.zeta <= 1.0)) throw ConfigError("train: zeta must lie in (0, 1]");
    if (config.iterations == 0 || config.batch == 0) throw ConfigError("train: iterations and batch must be positive");
    if (config.eval_every == 0) throw ConfigError("train: eval_every must be positive");

    const noise::NoiseModel noise = noise::resolve(config.noise);
    const std::size_t n = env.agents(), na = env.actions(), obs_size = env.observation_size();
    auto work = env.clone();
    numcore::RandomSource rng(config.seed);
    numcore::RandomSource rollout_rng = rng.split(1), fit_rng = rng.split(2), td_rng = rng.split(3),
                          dm_rng = rng.split(4);

    TrainResult result;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = rng.split(100 + i);
        result.learners.emplace_back(obs_size, na, config.learner, r);
    }
    const bool decompose = config.mode != RewardMode::global;
    std::optional<decomposition::Fitter> fitter;
    if (decompose) {
        auto r = rng.split(50);
        result.model.emplace(n, obs_size + na, r, config.decomposition_hidden);
        decomposition::FitOptions fo;
        fo.e_min = config.e_min;
        fo.max_rounds = config.fit_rounds;
        // The marginal stopping value is met by a context-free fit almost at
        // once; the conditional structure needs the whole budget.
        fo.min_rounds = config.fit_rounds;
        fo.lambda = config.lambda;
        fo.alpha = config.alpha;
        fitter.emplace(fo);
    }

    const std::size_t real_capacity =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(config.zeta * static_cast<double>(config.buffer))));
    TrajectoryBuffer buffer(real_capacity);
    const bool use_dm = config.dm && config.zeta < 1.0;
    std::optional<diffusion::DiffusionSchedule> sched;
    std::optional<diffusion::DenoiserStack> stack;
    if (use_dm) {
        sched = diffusion::build_schedule(config.dm_steps);
        auto r = rng.split(60);
        stack.emplace(*sched, r);
    }

    for (std::size_t it = 0; it < config.iterations; ++it) {
        IterationMetrics m;
        m.iteration = it;
        const double span = std::max(1.0, config.epsilon_fraction * static_cast<double>(config.iterations));
        const double frac = std::min(1.0, static_cast<double>(it) / span);
        m.epsilon = config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac;

        buffer.clear();
        Policy policy = [&](std::size_t i, const Eigen::VectorXd& o, numcore::RandomSource& r) {
            return select_action(result.learners[i], o, config.distortion, m.epsilon, r);
        };
        rollout(*work, policy, noise, buffer, rollout_rng);
        const auto& data = buffer.transitions();

        // Entries: (transition row, reward). Generated rewards borrow the
        // context of a uniformly drawn real row.
        std::vector<std::size_t> rows(data.size());
        std::vector<double> rewards(data.size());
        for (std::size_t k = 0; k < data.size(); ++k) {
            rows[k] = k;
            rewards[k] = data[k].reward;
        }
        if (use_dm) {
            diffusion::TrainConfig tc;
            tc.iterations = config.dm_train_iters;
            diffusion::train(*stack, rewards, *sched, tc, dm_rng);
            const auto gen = diffusion::generate(*stack, *sched, diffusion::generated_count(rewards.size(), config.zeta),
                                                 dm_rng);
            for (double g : gen) {
                rows.push_back(dm_rng.index(data.size()));
                rewards.push_back(g);
            }
        }
        const auto entries = rows.size();

        std::vector<Eigen::MatrixXd> enc(n, Eigen::MatrixXd(static_cast<Eigen::Index>(obs_size + na),
                                                            static_cast<Eigen::Index>(entries)));
        for (std::size_t k = 0; k < entries; ++k)
            for (std::size_t i = 0; i < n; ++i)
                enc[i].col(static_cast<Eigen::Index>(k)) =
                    agent_encoding(data[rows[k]].obs[i], data[rows[k]].actions[i], na);

        Eigen::MatrixXd local(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(entries));
        if (decompose) {
            decomposition::DecompositionBatch batch(enc, rewards);
            const auto fr = fitter->fit(*result.model, batch, fit_rng);
            m.fit_rounds = fr.rounds;
            m.l_pdf = fr.e;
            const auto comps = result.model->evaluate(enc);
            m.wasserstein = sampled_wasserstein(comps, result.model->weights(), rewards, fit_rng);
            local = comps.mean;
            if (config.mode == RewardMode::sampled)
                for (Eigen::Index i = 0; i < local.rows(); ++i)
                    for (Eigen::Index k = 0; k < local.cols(); ++k) local(i, k) = fit_rng.normal(local(i, k), comps.sigma(i, k));
        } else {
            m.l_pdf = m.wasserstein = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t k = 0; k < entries; ++k) local.col(static_cast<Eigen::Index>(k)).setConstant(rewards[k]);
        }

        const std::size_t updates = config.updates ? config.updates : std::max<std::size_t>(1, entries / config.batch);
        std::vector<LocalTransition> mb(config.batch);
        double td = 0.0;
        for (std::size_t u = 0; u < updates; ++u) {
            std::vector<std::size_t> pick(config.batch);
            for (auto& p : pick) p = td_rng.index(entries);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t b = 0; b < config.batch; ++b) {
                    const auto& t = data[rows[pick[b]]];
                    mb[b] = {t.obs[i], t.actions[i], local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(pick[b])),
                             t.next_obs[i], t.terminal};
                }
                td += result.learners[i].td_update(mb, config.distortion);
            }
        }
        m.td_loss = td / static_cast<double>(updates * n);

        const bool last = it + 1 == config.iterations;
        m.eval_return = (last || it % config.eval_every == 0)
                            ? evaluate(env, result.learners, config.distortion, config.eval_episodes,
                                       numcore::mix_seed(config.seed, 0xe7a1 + it))
                            : std::numeric_limits<double>::quiet_NaN();
        result.log.push_back(m);
        if (on_iteration) on_iteration(m);
    }
    buffer.clear();
    return result;
}

double PayoffTensor::at(const JointAction& a) const {
    if (a.size() != agents) throw ShapeError("payoff: wrong joint action size");
    std::size_t idx = 0;
    for (auto x : a) {
        if (x >= actions) throw DomainError("payoff: action out of range");
        idx = idx * actions + x;
    }
    return values.at(idx);
}

bool matrix_game_consistency(const PayoffTensor& payoff, const std::vector<std::vector<double>>& local) {
    if (local.size() != payoff.agents) throw ShapeError("consistency: one local table per agent required");
    JointAction greedy;
    for (const auto& q : local) {
        if (q.size() != payoff.actions) throw ShapeError("consistency: local table size mismatch");
        greedy.push_back(static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin()));
    }
    double best = -std::numeric_limits<double>::infinity();
    for (double v : payoff.values) best = std::max(best, v);
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    return payoff.at(greedy) >= best - tol;
}

PayoffTensor mixture_payoff(const std::vector<std::vector<dist::QuantileGrid>>& local, std::span<const double> w,
                            const distortion::DistortionFn& f) {
    if (local.empty() || local.size() != w.size()) throw ShapeError("mixture_payoff: one weight per agent required");
    const std::size_t na = local.front().size();
    std::vector<std::vector<double>> q;
    for (std::size_t i = 0; i < local.size(); ++i) {
        if (w[i] < 0.0) throw DomainError("mixture_payoff: weights must be nonnegative");
        if (local[i].size() != na) throw ShapeError("mixture_payoff: ragged action sets");
        q.emplace_back();
        for (const auto& g : local[i]) q.back().push_back(distortion::distorted_expectation(g, f));
    }
    PayoffTensor p{local.size(), na, {}};
    std::size_t total = 1;
    for (std::size_t i = 0; i < local.size(); ++i) total *= na;
    p.values.resize(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        double v = 0.0;
        for (std::size_t i = local.size(); i-- > 0;) {
            v += w[i] * q[i][rest % na];
            rest /= na;
        }
        p.values[idx] = v;
    }
    return p;
}

bool matrix_game_consistency(const std::vector<std::vector<dist::QuantileGrid>>& local, std::span<const double> w,
                             const distortion::DistortionFn& f) {
    const PayoffTensor p = mixture_payoff(local, w, f);
    std::vector<std::vector<double>> q;
    for (const auto& agent : local) {
        q.emplace_back();
        for (const auto& g : agent) q.back().push_back(distortion::distorted_expectation(g, f));
    }
    return matrix_game_consistency(p, q);
}

}  // namespace ndd::marl
