#include "ndd/numcore/dense_net.hpp"

#include <cmath>
#include <string>

#include "ndd/error.hpp"

namespace ndd::numcore {

namespace {

Eigen::MatrixXd apply(Activation a, const Eigen::MatrixXd& z) {
    switch (a) {
        case Activation::identity: return z;
        case Activation::relu: return z.cwiseMax(0.0);
        case Activation::tanh: return z.array().tanh().matrix();
        case Activation::sigmoid: return z.unaryExpr([](double v) { return sigmoid(v); });
        case Activation::softplus: return z.unaryExpr([](double v) { return softplus(v); });
    }
    return z;
}

// d act / d pre, expressed through whichever of (pre, post) is cheaper.
Eigen::MatrixXd derivative(Activation a, const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post) {
    switch (a) {
        case Activation::identity: return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
        case Activation::relu: return (pre.array() > 0.0).cast<double>().matrix();
        case Activation::tanh: return (1.0 - post.array().square()).matrix();
        case Activation::sigmoid: return (post.array() * (1.0 - post.array())).matrix();
        case Activation::softplus: return pre.unaryExpr([](double v) { return sigmoid(v); });
    }
    return pre;
}

}  // namespace

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::softplus: return "softplus";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    for (auto a : {Activation::identity, Activation::relu, Activation::tanh, Activation::sigmoid,
                   Activation::softplus}) {
        if (to_string(a) == name) return a;
    }
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

DenseNet::DenseNet(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations,
                   RandomSource& rng)
    : sizes_(std::move(layer_sizes)), seed_(rng.seed()) {
    if (sizes_.size() < 2 || activations.size() != sizes_.size() - 1)
        throw ShapeError("DenseNet: need at least two layer sizes and one activation per layer");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const auto in = sizes_[l], out = sizes_[l + 1];
        if (in == 0 || out == 0) throw ShapeError("DenseNet: layer sizes must be positive");
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        Layer layer;
        layer.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                layer.weights(r, c) = rng.uniform(-limit, limit);
        layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
        layer.activation = activations[l];
        layers_.push_back(std::move(layer));
    }
}

DenseNet DenseNet::zeros(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations) {
    if (layer_sizes.size() < 2 || activations.size() != layer_sizes.size() - 1)
        throw ShapeError("DenseNet: need at least two layer sizes and one activation per layer");
    DenseNet net;
    net.sizes_ = std::move(layer_sizes);
    for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
        if (net.sizes_[l] == 0 || net.sizes_[l + 1] == 0)
            throw ShapeError("DenseNet: layer sizes must be positive");
        Layer layer;
        layer.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.sizes_[l + 1]),
                                              static_cast<Eigen::Index>(net.sizes_[l]));
        layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.sizes_[l + 1]));
        layer.activation = activations[l];
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

DenseNet DenseNet::mlp(std::size_t in, std::size_t out, RandomSource& rng, std::size_t hidden,
                       std::size_t depth) {
    std::vector<std::size_t> sizes{in};
    std::vector<Activation> acts;
    for (std::size_t d = 0; d < depth; ++d) {
        sizes.push_back(hidden);
        acts.push_back(Activation::relu);
    }
    sizes.push_back(out);
    acts.push_back(Activation::identity);
    return DenseNet(std::move(sizes), std::move(acts), rng);
}

std::size_t DenseNet::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

Eigen::MatrixXd DenseNet::run(const Eigen::MatrixXd& inputs, bool record) {
    if (static_cast<std::size_t>(inputs.rows()) != input_size())
        throw ShapeError("DenseNet: input has " + std::to_string(inputs.rows()) + " rows, expected " +
                         std::to_string(input_size()));
    Tape tape;
    Eigen::MatrixXd x = inputs;
    for (const auto& layer : layers_) {
        Eigen::MatrixXd z = layer.weights * x;
        z.colwise() += layer.bias;
        Eigen::MatrixXd a = apply(layer.activation, z);
        if (record) {
            tape.inputs.push_back(std::move(x));
            tape.pre.push_back(std::move(z));
            tape.activations.push_back(a);
        }
        x = std::move(a);
    }
    if (record) tape_ = std::move(tape);
    return x;
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& input) {
    return run(Eigen::MatrixXd(input), true).col(0);
}

Eigen::MatrixXd DenseNet::forward_batch(const Eigen::MatrixXd& inputs) { return run(inputs, true); }

Eigen::VectorXd DenseNet::predict(const Eigen::VectorXd& input) const {
    return predict_batch(Eigen::MatrixXd(input)).col(0);
}

Eigen::MatrixXd DenseNet::predict_batch(const Eigen::MatrixXd& inputs) const {
    if (static_cast<std::size_t>(inputs.rows()) != input_size())
        throw ShapeError("DenseNet: input has " + std::to_string(inputs.rows()) + " rows, expected " +
                         std::to_string(input_size()));
    Eigen::MatrixXd x = inputs;
    for (const auto& layer : layers_) {
        Eigen::MatrixXd z = layer.weights * x;
        z.colwise() += layer.bias;
        x = apply(layer.activation, z);
    }
    return x;
}

Gradients DenseNet::backward(const Eigen::MatrixXd& output_gradient) const {
    if (!tape_) throw StateError("DenseNet::backward called without a recorded forward pass");
    const auto& tape = *tape_;
    if (output_gradient.rows() != tape.activations.back().rows() ||
        output_gradient.cols() != tape.activations.back().cols())
        throw ShapeError("DenseNet::backward: output gradient shape does not match recorded output");

    Gradients grads(layers_.size());
    Eigen::MatrixXd upstream = output_gradient;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const Layer& layer = layers_[l];
        Eigen::MatrixXd delta =
            upstream.cwiseProduct(derivative(layer.activation, tape.pre[l], tape.activations[l]));
        grads[l].weights = delta * tape.inputs[l].transpose();
        grads[l].bias = delta.rowwise().sum();
        if (l > 0) upstream = layer.weights.transpose() * delta;
    }
    return grads;
}

std::vector<double> DenseNet::flat_parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out.push_back(l.weights(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
    }
    return out;
}

void DenseNet::set_flat_parameters(std::span<const double> values) {
    if (values.size() != parameter_count())
        throw ShapeError("DenseNet: flat parameter count mismatch");
    std::size_t k = 0;
    for (auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = values[k++];
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = values[k++];
    }
    tape_.reset();
}

Gradients zero_gradients_like(const DenseNet& net) {
    Gradients g;
    for (const auto& l : net.layers())
        g.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                     Eigen::VectorXd::Zero(l.bias.size())});
    return g;
}

void accumulate(Gradients& into, const Gradients& g, double scale) {
    if (into.size() != g.size()) throw ShapeError("accumulate: layer count mismatch");
    for (std::size_t l = 0; l < g.size(); ++l) {
        into[l].weights += scale * g[l].weights;
        into[l].bias += scale * g[l].bias;
    }
}

double max_abs(const Gradients& g) {
    double m = 0.0;
    for (const auto& l : g) {
        if (l.weights.size()) m = std::max(m, l.weights.cwiseAbs().maxCoeff());
        if (l.bias.size()) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
    }
    return m;
}

}  // namespace ndd::numcore
