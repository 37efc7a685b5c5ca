#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ndd/numcore/dense_net.hpp"

namespace ndd::numcore {

struct AdamConfig {
    double learning_rate = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive-moment optimizer. Moment accumulators are sized on the first
/// step and bound to that parameter shape afterwards.
class Adam {
public:
    explicit Adam(AdamConfig config = {});

    /// Throws NumericError (with the layer index) on a non-finite gradient;
    /// the network is left untouched in that case.
    void step(DenseNet& net, const Gradients& gradients);
    void step(std::span<double> parameters, std::span<const double> gradients);

    std::uint64_t steps() const noexcept { return steps_; }
    const AdamConfig& config() const noexcept { return config_; }
    void set_learning_rate(double lr);

private:
    void ensure_size(std::size_t n);
    double update(double& param, double grad, std::size_t slot, double c1, double c2);

    AdamConfig config_;
    std::vector<double> first_;
    std::vector<double> second_;
    std::uint64_t steps_ = 0;
};

}  // namespace ndd::numcore
