#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ndd/numcore/random.hpp"

namespace ndd::numcore {

enum class Activation : std::uint8_t { identity = 0, relu = 1, tanh = 2, sigmoid = 3, softplus = 4 };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct Layer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
    Activation activation = Activation::identity;
};

struct LayerGradient {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

using Gradients = std::vector<LayerGradient>;

/// Fully connected feed-forward network with a recorded tape for one
/// reverse pass. Batches are stored column-wise: one sample per column.
///
/// forward()/forward_batch() record activations and are single-writer;
/// predict()/predict_batch() never touch the tape and may be called
/// concurrently from several threads.
class DenseNet {
public:
    /// Glorot-uniform weights, zero biases. `activations` has one entry per
    /// layer (layer_sizes.size() - 1 entries).
    DenseNet(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations,
             RandomSource& rng);

    /// All parameters zero; the network outputs act(0) everywhere.
    static DenseNet zeros(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations);

    /// Hidden stack used for every task network: in -> 64 -> 64 -> out, relu
    /// hidden layers and an identity head.
    static DenseNet mlp(std::size_t in, std::size_t out, RandomSource& rng,
                        std::size_t hidden = 64, std::size_t depth = 2);

    std::size_t input_size() const noexcept { return sizes_.front(); }
    std::size_t output_size() const noexcept { return sizes_.back(); }
    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    std::span<const Layer> layers() const noexcept { return layers_; }
    std::span<Layer> layers() noexcept { return layers_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t parameter_count() const noexcept;

    Eigen::VectorXd forward(const Eigen::VectorXd& input);
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs);
    Eigen::VectorXd predict(const Eigen::VectorXd& input) const;
    Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) const;

    /// Parameter gradients of sum_columns <output_gradient, output>, for the
    /// batch recorded by the last forward call.
    Gradients backward(const Eigen::MatrixXd& output_gradient) const;

    bool has_tape() const noexcept { return tape_.has_value(); }
    void clear_tape() noexcept { tape_.reset(); }

    std::vector<double> flat_parameters() const;
    void set_flat_parameters(std::span<const double> values);

private:
    DenseNet() = default;
    Eigen::MatrixXd run(const Eigen::MatrixXd& inputs, bool record);

    std::vector<std::size_t> sizes_;
    std::vector<Layer> layers_;
    std::uint64_t seed_ = 0;

    struct Tape {
        std::vector<Eigen::MatrixXd> inputs;       // input to each layer
        std::vector<Eigen::MatrixXd> activations;  // output of each layer
        std::vector<Eigen::MatrixXd> pre;          // affine output of each layer
    };
    std::optional<Tape> tape_;
};

Gradients zero_gradients_like(const DenseNet& net);
void accumulate(Gradients& into, const Gradients& g, double scale = 1.0);
double max_abs(const Gradients& g);

double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

}  // namespace ndd::numcore
