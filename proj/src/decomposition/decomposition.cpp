#include "ndd/decomposition/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ndd/error.hpp"
#include "ndd/kernels/density.hpp"
#include "ndd/kernels/mixture_loss.hpp"

namespace ndd::decomposition {

using numcore::DenseNet;

namespace {

std::vector<double> softmax(const Eigen::VectorXd& z) {
    const double m = z.maxCoeff();
    std::vector<double> w(static_cast<std::size_t>(z.size()));
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) s += (w[static_cast<std::size_t>(i)] = std::exp(z(i) - m));
    for (auto& x : w) x /= s;
    return w;
}

void check_encodings(const std::vector<Eigen::MatrixXd>& enc, std::size_t agents, std::size_t input) {
    if (enc.size() != agents)
        throw ShapeError("decomposition: expected " + std::to_string(agents) + " agent encodings, got " +
                         std::to_string(enc.size()));
    for (const auto& e : enc) {
        if (static_cast<std::size_t>(e.rows()) != input)
            throw ShapeError("decomposition: encoding has " + std::to_string(e.rows()) + " rows, net expects " +
                             std::to_string(input));
        if (e.cols() != enc.front().cols() || e.cols() == 0)
            throw ShapeError("decomposition: agents disagree on the number of contexts");
    }
}

Components to_components(const std::vector<Eigen::MatrixXd>& raw, const OutputScale& sc) {
    const auto N = static_cast<Eigen::Index>(raw.size());
    const Eigen::Index B = raw.front().cols();
    Components c{Eigen::MatrixXd(N, B), Eigen::MatrixXd(N, B)};
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index b = 0; b < B; ++b) {
            c.mean(i, b) = sc.shift + sc.scale * raw[static_cast<std::size_t>(i)](0, b);
            c.sigma(i, b) = sc.scale * numcore::softplus(raw[static_cast<std::size_t>(i)](1, b)) + kSigmaFloor;
        }
    return c;
}

Eigen::VectorXd as_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd smoothed(const Eigen::MatrixXd& sigma, double extra_variance) {
    return (sigma.array().square() + extra_variance).sqrt().matrix();
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string("decomposition: non-finite ") + what);
}

}  // namespace

DecompositionModel::DecompositionModel(std::size_t agents, std::size_t input_size, numcore::RandomSource& rng,
                                       std::size_t hidden, std::size_t depth)
    : input_size_(input_size) {
    if (agents == 0) throw ConfigError("decomposition: need at least one agent");
    if (input_size == 0) throw ConfigError("decomposition: input size must be positive");
    for (std::size_t i = 0; i < agents; ++i) {
        auto child = rng.split(1000 + i);
        nets_.push_back(DenseNet::mlp(input_size, 2, child, hidden, depth));
    }
    logits_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(agents));
}

std::vector<double> DecompositionModel::weights() const { return softmax(logits_); }

Components DecompositionModel::evaluate(const std::vector<Eigen::MatrixXd>& encodings) const {
    check_encodings(encodings, agents(), input_size_);
    std::vector<Eigen::MatrixXd> raw;
    for (std::size_t i = 0; i < nets_.size(); ++i) raw.push_back(nets_[i].predict_batch(encodings[i]));
    return to_components(raw, scale_);
}

DecompositionBatch::DecompositionBatch(std::vector<Eigen::MatrixXd> encodings, std::vector<double> rewards,
                                       std::size_t grid_points, bool match_kernel)
    : encodings_(std::move(encodings)),
      rewards_(std::move(rewards)),
      target_(dist::fit_empirical(rewards_, grid_points)) {
    if (match_kernel) smoothing_ = target_.bandwidth() * target_.bandwidth();
    if (encodings_.empty()) throw ShapeError("decomposition batch: no agents");
    const Eigen::Index B = encodings_.front().cols();
    for (const auto& e : encodings_)
        if (e.cols() != B) throw ShapeError("decomposition batch: agents disagree on the number of contexts");
    if (B != 1 && static_cast<std::size_t>(B) != rewards_.size())
        throw ShapeError("decomposition batch: need one context per reward or a single shared context");
    nodes_ = target_.grid().nodes();
    const auto G = static_cast<Eigen::Index>(nodes_.size());
    if (B == 1) {
        target_matrix_ = as_vector(target_.density_grid());
    } else {
        const double h = target_.bandwidth();
        target_matrix_.resize(G, B);
        for (Eigen::Index b = 0; b < B; ++b)
            for (Eigen::Index g = 0; g < G; ++g)
                target_matrix_(g, b) = dist::gaussian_pdf({rewards_[static_cast<std::size_t>(b)], h * h},
                                                          nodes_[static_cast<std::size_t>(g)]);
    }
}

DecompositionBatch unconditional_batch(std::size_t agents, std::vector<double> rewards, std::size_t grid_points,
                                       bool match_kernel) {
    std::vector<Eigen::MatrixXd> enc(agents, Eigen::MatrixXd::Ones(1, 1));
    return DecompositionBatch(std::move(enc), std::move(rewards), grid_points, match_kernel);
}

dist::GMM decompose(const DecompositionModel& model, const std::vector<Eigen::VectorXd>& encodings) {
    std::vector<Eigen::MatrixXd> enc(encodings.begin(), encodings.end());
    const auto c = model.evaluate(enc);
    std::vector<dist::Gaussian> comps;
    for (Eigen::Index i = 0; i < c.mean.rows(); ++i) comps.push_back({c.mean(i, 0), c.sigma(i, 0) * c.sigma(i, 0)});
    return dist::GMM(comps, model.weights());
}

double loss_pdf(const dist::GMM& model_output, const dist::EmpiricalDistribution& target) {
    const auto& grid = target.grid();
    if (!(grid.hi > grid.lo)) throw DataError("loss_pdf: degenerate support");
    const auto nodes = grid.nodes();
    const auto p = kernels::gmm_grid(model_output, grid);
    const auto& t = target.density_grid();
    double s = 0.0;
    for (std::size_t g = 0; g < nodes.size(); ++g) s += (t[g] - p[g]) * (t[g] - p[g]);
    return s * grid.step();
}

double loss_mean(std::span<const double> means) {
    if (means.empty()) return 0.0;
    const double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double s = 0.0;
    for (double m : means) s += (m - mu) * (m - mu);
    return s;
}

double loss_weight(std::span<const double> weights) {
    const double u = 1.0 / static_cast<double>(weights.size());
    double s = 0.0;
    for (double w : weights) s += (w - u) * (w - u);
    return std::sqrt(s);
}

LossValue total_loss(const DecompositionModel& model, const DecompositionBatch& batch, double lambda, double alpha,
                     LossGradients* gradients, std::span<const Eigen::Index> columns) {
    if (lambda < 0.0 || alpha < 0.0) throw DomainError("total_loss: lambda and alpha must be >= 0");
    const std::size_t N = model.agents();
    check_encodings(batch.encodings(), N, model.input_size());

    // gather the minibatch so the nets only see the selected contexts
    std::vector<Eigen::MatrixXd> enc;
    Eigen::MatrixXd target_sub;
    const Eigen::MatrixXd* target = &batch.target_matrix();
    if (!columns.empty() && batch.conditional()) {
        for (const auto& e : batch.encodings()) {
            Eigen::MatrixXd m(e.rows(), static_cast<Eigen::Index>(columns.size()));
            for (std::size_t c = 0; c < columns.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = e.col(columns[c]);
            enc.push_back(std::move(m));
        }
        target_sub.resize(batch.target_matrix().rows(), static_cast<Eigen::Index>(columns.size()));
        for (std::size_t c = 0; c < columns.size(); ++c)
            target_sub.col(static_cast<Eigen::Index>(c)) = batch.target_matrix().col(columns[c]);
        target = &target_sub;
    } else {
        enc = batch.encodings();
    }

    std::vector<DenseNet> tape_nets;
    std::vector<Eigen::MatrixXd> raw;
    for (std::size_t i = 0; i < N; ++i) {
        if (gradients) {
            tape_nets.push_back(model.net(i));
            raw.push_back(tape_nets.back().forward_batch(enc[i]));
        } else {
            raw.push_back(model.net(i).predict_batch(enc[i]));
        }
    }
    const auto& sc = model.output_scale();
    const auto comps = to_components(raw, sc);
    const auto w = model.weights();
    const Eigen::VectorXd wv = as_vector(w);
    const Eigen::Index B = comps.mean.cols();

    const Eigen::MatrixXd eff = smoothed(comps.sigma, batch.smoothing_variance());
    const kernels::MixtureLossInput in{comps.mean, eff, wv, *target, batch.nodes(), batch.target().grid().step()};
    auto k = kernels::mixture_l2_loss(in);
    k.d_sigma = k.d_sigma.cwiseProduct(comps.sigma.cwiseQuotient(eff));

    LossValue v;
    v.pdf = k.loss;
    Eigen::MatrixXd d_mean = k.d_mean;
    for (Eigen::Index b = 0; b < B; ++b) {
        const double mu = comps.mean.col(b).mean();
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(N); ++i) {
            const double d = comps.mean(i, b) - mu;
            v.mean += d * d / static_cast<double>(B);
            d_mean(i, b) += lambda * 2.0 * d / static_cast<double>(B);
        }
    }
    v.weight = loss_weight(w);
    v.total = v.pdf + lambda * v.mean + alpha * v.weight;
    require_finite(v.total, "loss");

    if (gradients) {
        Eigen::VectorXd dw = k.d_weights;
        if (alpha > 0.0 && v.weight > 0.0)
            for (std::size_t i = 0; i < N; ++i)
                dw(static_cast<Eigen::Index>(i)) += alpha * (w[i] - 1.0 / static_cast<double>(N)) / v.weight;
        const double avg = wv.dot(dw);
        gradients->logits = wv.cwiseProduct(dw.array().matrix() - Eigen::VectorXd::Constant(wv.size(), avg));
        gradients->nets.clear();
        for (std::size_t i = 0; i < N; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            Eigen::MatrixXd g(2, B);
            for (Eigen::Index b = 0; b < B; ++b) {
                g(0, b) = d_mean(ii, b) * sc.scale;
                g(1, b) = k.d_sigma(ii, b) * sc.scale * numcore::sigmoid(raw[i](1, b));
            }
            if (!g.allFinite()) throw NumericError("decomposition: non-finite gradient", static_cast<int>(i));
            gradients->nets.push_back(tape_nets[i].backward(g));
        }
    }
    return v;
}

double marginal_loss_pdf(const DecompositionModel& model, const DecompositionBatch& batch) {
    const auto comps = model.evaluate(batch.encodings());
    const Eigen::VectorXd wv = as_vector(model.weights());
    const Eigen::MatrixXd eff = smoothed(comps.sigma, batch.smoothing_variance());
    const kernels::MixtureLossInput in{comps.mean, eff, wv, batch.target_matrix(), batch.nodes(),
                                       batch.target().grid().step()};
    const auto m = kernels::mixture_marginal(in);
    const auto& t = batch.target().density_grid();
    double s = 0.0;
    for (std::size_t g = 0; g < m.size(); ++g) s += (t[g] - m[g]) * (t[g] - m[g]);
    s *= batch.target().grid().step();
    require_finite(s, "L_PDF");
    return s;
}

void calibrate_output_scale(DecompositionModel& model, std::span<const double> rewards) {
    if (rewards.empty()) throw DataError("calibrate_output_scale: no rewards");
    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / n);
    model.set_output_scale({mean, sd > 1e-9 ? sd : 1.0});
}

FitResult Fitter::fit(DecompositionModel& model, const DecompositionBatch& batch, numcore::RandomSource& rng) {
    if (batch.agents() != model.agents())
        throw ConfigError("fit: batch has " + std::to_string(batch.agents()) + " agents, model has " +
                          std::to_string(model.agents()));
    if (!model.fitted()) calibrate_output_scale(model, batch.rewards());
    if (net_opt_.size() != model.agents()) {
        net_opt_.assign(model.agents(), numcore::Adam(options_.adam));
        logit_opt_.emplace(options_.adam);
    }
    const auto& o = options_;
    const bool cond = batch.conditional();
    const std::size_t B = batch.contexts();
    const bool sub = cond && o.minibatch > 0 && o.minibatch < B;
    std::vector<Eigen::Index> cols, pool(B);
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});

    FitResult res;
    double e = cond ? marginal_loss_pdf(model, batch) : 0.0;
    for (std::size_t round = 0; round < o.max_rounds; ++round) {
        if (sub) {
            // partial Fisher-Yates: a fresh minibatch without replacement
            for (std::size_t j = 0; j < o.minibatch; ++j) std::swap(pool[j], pool[j + rng.index(B - j)]);
            cols.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(o.minibatch));
        }
        LossGradients g;
        const auto v = total_loss(model, batch, o.lambda, o.alpha, &g, cols);
        if (!cond) {
            e = v.pdf;
            res.curve.push_back(e);
        } else if (round % std::max<std::size_t>(o.check_every, 1) == 0) {
            if (round > 0) e = marginal_loss_pdf(model, batch);
            res.curve.push_back(e);
        }
        if (e <= o.e_min && res.rounds >= o.min_rounds) break;
        if (o.lr_final_ratio != 1.0) {
            const double lr = o.adam.learning_rate *
                              std::pow(o.lr_final_ratio, static_cast<double>(round) / static_cast<double>(o.max_rounds));
            for (auto& a : net_opt_) a.set_learning_rate(lr);
            logit_opt_->set_learning_rate(lr);
        }
        for (std::size_t i = 0; i < model.agents(); ++i) net_opt_[i].step(model.net(i), g.nets[i]);
        Eigen::VectorXd& z = model.weight_logits();
        logit_opt_->step(std::span<double>(z.data(), static_cast<std::size_t>(z.size())),
                         std::span<const double>(g.logits.data(), static_cast<std::size_t>(g.logits.size())));
        model.mark_fitted();
        ++res.rounds;
    }
    res.e = marginal_loss_pdf(model, batch);
    res.converged = res.e <= o.e_min;
    return res;
}

FitResult fit(DecompositionModel& model, const DecompositionBatch& batch, const FitOptions& options,
              numcore::RandomSource& rng) {
    Fitter f(options);
    return f.fit(model, batch, rng);
}

}  // namespace ndd::decomposition
