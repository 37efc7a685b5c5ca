#include "ndd/numcore/adam.hpp"

#include <cmath>
#include <string>

#include "ndd/error.hpp"

namespace ndd::numcore {

Adam::Adam(AdamConfig config) : config_(config) {
    if (!(config_.learning_rate > 0.0)) throw ConfigError("Adam: learning rate must be positive");
}

void Adam::set_learning_rate(double lr) {
    if (!(lr > 0.0)) throw ConfigError("Adam: learning rate must be positive");
    config_.learning_rate = lr;
}

void Adam::ensure_size(std::size_t n) {
    if (first_.empty()) {
        first_.assign(n, 0.0);
        second_.assign(n, 0.0);
    } else if (first_.size() != n) {
        throw ShapeError("Adam: parameter count changed between steps (" + std::to_string(first_.size()) +
                         " -> " + std::to_string(n) + ")");
    }
}

double Adam::update(double& param, double grad, std::size_t slot, double c1, double c2) {
    double& m = first_[slot];
    double& v = second_[slot];
    m = config_.beta1 * m + (1.0 - config_.beta1) * grad;
    v = config_.beta2 * v + (1.0 - config_.beta2) * grad * grad;
    const double delta = config_.learning_rate * (m / c1) / (std::sqrt(v / c2) + config_.epsilon);
    param -= delta;
    return delta;
}

void Adam::step(DenseNet& net, const Gradients& gradients) {
    auto layers = net.layers();
    if (gradients.size() != layers.size()) throw ShapeError("Adam: gradient layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (gradients[l].weights.rows() != layers[l].weights.rows() ||
            gradients[l].weights.cols() != layers[l].weights.cols() ||
            gradients[l].bias.size() != layers[l].bias.size())
            throw ShapeError("Adam: gradient shape mismatch at layer " + std::to_string(l));
        if (!gradients[l].weights.allFinite() || !gradients[l].bias.allFinite())
            throw NumericError("Adam: non-finite gradient at layer " + std::to_string(l),
                               static_cast<int>(l));
    }
    ensure_size(net.parameter_count());
    ++steps_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    std::size_t slot = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& w = layers[l].weights;
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                update(w(r, c), gradients[l].weights(r, c), slot++, c1, c2);
        auto& b = layers[l].bias;
        for (Eigen::Index r = 0; r < b.size(); ++r) update(b(r), gradients[l].bias(r), slot++, c1, c2);
    }
    net.clear_tape();
}

void Adam::step(std::span<double> parameters, std::span<const double> gradients) {
    if (parameters.size() != gradients.size()) throw ShapeError("Adam: gradient size mismatch");
    for (double g : gradients)
        if (!std::isfinite(g)) throw NumericError("Adam: non-finite gradient in parameter vector");
    ensure_size(parameters.size());
    ++steps_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < parameters.size(); ++i) update(parameters[i], gradients[i], i, c1, c2);
}

}  // namespace ndd::numcore
