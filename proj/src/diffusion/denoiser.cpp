#include <cmath>
#include <numeric>

#include "ndd/diffusion/diffusion.hpp"
#include "ndd/error.hpp"

namespace ndd::diffusion {

using numcore::Activation;
using numcore::DenseNet;

namespace {

std::vector<std::size_t> sizes(std::size_t hidden, std::size_t depth) {
    std::vector<std::size_t> s{2};
    for (std::size_t i = 0; i < depth; ++i) s.push_back(hidden);
    s.push_back(1);
    return s;
}

std::vector<Activation> acts(std::size_t depth) {
    std::vector<Activation> a(depth, Activation::tanh);
    a.push_back(Activation::identity);
    return a;
}

}  // namespace

DenoiserStack::DenoiserStack(const DiffusionSchedule& sched, numcore::RandomSource& rng, std::size_t hidden,
                             std::size_t depth) {
    for (std::size_t k = 1; k <= sched.K; ++k) {
        auto child = rng.split(k);
        nets_.emplace_back(sizes(hidden, depth), acts(depth), child);
    }
}

DenoiserStack DenoiserStack::zeros(const DiffusionSchedule& sched, std::size_t hidden, std::size_t depth) {
    DenoiserStack s;
    for (std::size_t k = 1; k <= sched.K; ++k) s.nets_.push_back(DenseNet::zeros(sizes(hidden, depth), acts(depth)));
    return s;
}

void DenoiserStack::fit_normalization(std::span<const double> samples) {
    if (samples.empty()) throw DataError("diffusion: empty sample set");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= n;
    const double sd = std::sqrt(var);
    if (sd <= 1e-12 * (1.0 + std::abs(mean)))
        norm_ = {mean, 1.0, 0.0};
    else
        norm_ = {mean, sd, 1.0};
}

double DenoiserStack::input_scale(std::size_t k, const DiffusionSchedule& sched) const {
    const double ub = sched.upsilon_bar_at(k);
    return std::sqrt(ub * norm_.data_variance + 1.0 - ub);
}

Eigen::MatrixXd DenoiserStack::encode(std::span<const double> x, std::size_t k, const DiffusionSchedule& sched) const {
    const double s = input_scale(k, sched);
    const double t = static_cast<double>(k) / static_cast<double>(sched.K);
    Eigen::MatrixXd in(2, static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        in(0, static_cast<Eigen::Index>(i)) = x[i] / s;
        in(1, static_cast<Eigen::Index>(i)) = t;
    }
    return in;
}

double DenoiserStack::predict(double x, std::size_t k, const DiffusionSchedule& sched) const {
    Eigen::VectorXd in(2);
    in << x / input_scale(k, sched), static_cast<double>(k) / static_cast<double>(sched.K);
    return net(k).predict(in)(0);
}

ValidationSet make_validation_set(std::span<const double> samples, const DiffusionSchedule& sched, std::size_t n,
                                  numcore::RandomSource& rng) {
    if (samples.empty()) throw DataError("diffusion: empty sample set");
    ValidationSet v;
    for (std::size_t i = 0; i < n; ++i) {
        v.r.push_back(samples[rng.index(samples.size())]);
        v.k.push_back(1 + rng.index(sched.K));
        v.iota.push_back(rng.normal());
    }
    return v;
}

double validation_loss(const DenoiserStack& stack, const DiffusionSchedule& sched, const ValidationSet& v) {
    const auto& nm = stack.normalization();
    double s = 0.0;
    for (std::size_t i = 0; i < v.r.size(); ++i) {
        const double ub = sched.upsilon_bar_at(v.k[i]);
        const double x = std::sqrt(ub) * (v.r[i] - nm.shift) / nm.scale + std::sqrt(1.0 - ub) * v.iota[i];
        const double e = v.iota[i] - stack.predict(x, v.k[i], sched);
        s += e * e;
    }
    return s / static_cast<double>(v.r.size());
}

TrainTrace train(DenoiserStack& stack, std::span<const double> samples, const DiffusionSchedule& sched,
                 const TrainConfig& config, numcore::RandomSource& rng,
                 const std::function<void(std::size_t)>& on_iteration) {
    if (samples.size() < 32) throw DataError("diffusion: training needs at least 32 samples");
    if (stack.steps() != sched.K) throw ShapeError("diffusion: stack and schedule disagree on K");
    stack.fit_normalization(samples);
    const auto& nm = stack.normalization();
    std::vector<numcore::Adam> opt(sched.K, numcore::Adam(config.adam));
    TrainTrace trace;
    trace.batch_loss.reserve(config.iterations);
    const std::size_t B = config.batch;
    std::vector<double> x(B), iota(B);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        const std::size_t k = 1 + rng.index(sched.K);
        const double ub = sched.upsilon_bar_at(k);
        for (std::size_t b = 0; b < B; ++b) {
            const double r = (samples[rng.index(samples.size())] - nm.shift) / nm.scale;
            iota[b] = rng.normal();
            x[b] = std::sqrt(ub) * r + std::sqrt(1.0 - ub) * iota[b];
        }
        auto& net = stack.net(k);
        const Eigen::MatrixXd out = net.forward_batch(stack.encode(x, k, sched));
        Eigen::MatrixXd grad(1, static_cast<Eigen::Index>(B));
        double loss = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double e = out(0, static_cast<Eigen::Index>(b)) - iota[b];
            loss += e * e;
            grad(0, static_cast<Eigen::Index>(b)) = 2.0 * e / static_cast<double>(B);
        }
        opt[k - 1].step(net, net.backward(grad));
        trace.batch_loss.push_back(loss / static_cast<double>(B));
        if (on_iteration) on_iteration(it);
    }
    return trace;
}

namespace {

double reverse_chain(const DenoiserStack& stack, const DiffusionSchedule& sched, numcore::RandomSource& rng) {
    double x = rng.normal();
    for (std::size_t k = sched.K; k >= 1; --k) {
        const double u = sched.upsilon_at(k), ub = sched.upsilon_bar_at(k), w = sched.omega_at(k);
        const double eps = stack.predict(x, k, sched);
        x = (x - w / std::sqrt(1.0 - ub) * eps) / std::sqrt(u);
        if (k > 1) x += std::sqrt((1.0 - sched.upsilon_bar_at(k - 1)) / (1.0 - ub) * w) * rng.normal();
    }
    const auto& nm = stack.normalization();
    return nm.shift + nm.scale * x;
}

}  // namespace

namespace serial {

std::vector<double> generate(const DenoiserStack& stack, const DiffusionSchedule& sched, std::size_t n,
                             numcore::RandomSource& rng) {
    const std::uint64_t base = rng.engine()();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        numcore::RandomSource local(base, i);
        out[i] = reverse_chain(stack, sched, local);
    }
    return out;
}

}  // namespace serial

std::vector<double> generate(const DenoiserStack& stack, const DiffusionSchedule& sched, std::size_t n,
                             numcore::RandomSource& rng) {
    const std::uint64_t base = rng.engine()();
    std::vector<double> out(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        numcore::RandomSource local(base, static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] = reverse_chain(stack, sched, local);
    }
    return out;
}

}  // namespace ndd::diffusion
