#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace ndd::kernels {

/// Column b holds one context: component means/sigmas (N x B) and the
/// target density on the grid (G x B, or G x 1 shared by every column).
struct MixtureLossInput {
    const Eigen::MatrixXd& mean;
    const Eigen::MatrixXd& sigma;
    const Eigen::VectorXd& weights;
    const Eigen::MatrixXd& target;
    std::span<const double> nodes;
    double step;
};

struct MixtureLossOutput {
    double loss = 0.0;
    Eigen::MatrixXd d_mean;   // N x B, zero outside the selected columns
    Eigen::MatrixXd d_sigma;  // N x B
    Eigen::VectorXd d_weights;
};

/// (1/|cols|) sum_{b in cols} sum_g step * (T(g,b) - sum_i w_i phi(u_g; mu_ib, sigma_ib))^2
/// and its gradient. Empty `cols` means every column.
MixtureLossOutput mixture_l2_loss(const MixtureLossInput& in, std::span<const Eigen::Index> cols = {});

/// Grid density of the context-averaged mixture, (1/|cols|) sum_b P_b(u_g).
std::vector<double> mixture_marginal(const MixtureLossInput& in);

namespace serial {
MixtureLossOutput mixture_l2_loss(const MixtureLossInput& in, std::span<const Eigen::Index> cols = {});
std::vector<double> mixture_marginal(const MixtureLossInput& in);
}  // namespace serial

}  // namespace ndd::kernels
