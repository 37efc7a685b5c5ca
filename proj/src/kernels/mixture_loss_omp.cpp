#include <cmath>
#include <numbers>

#include "ndd/kernels/mixture_loss.hpp"

namespace ndd::kernels {

namespace {
constexpr double kInvSqrt2Pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
}

// Columns are independent except for the loss and weight gradient; those
// are kept per column and summed in column order afterwards so the result
// does not depend on the thread count.
MixtureLossOutput mixture_l2_loss(const MixtureLossInput& in, std::span<const Eigen::Index> cols) {
    const Eigen::Index N = in.mean.rows(), B = in.mean.cols();
    const auto G = static_cast<Eigen::Index>(in.nodes.size());
    MixtureLossOutput out;
    out.d_mean = Eigen::MatrixXd::Zero(N, B);
    out.d_sigma = Eigen::MatrixXd::Zero(N, B);
    out.d_weights = Eigen::VectorXd::Zero(N);
    const Eigen::Index count = cols.empty() ? B : static_cast<Eigen::Index>(cols.size());
    const double scale = in.step / static_cast<double>(count);
    Eigen::VectorXd loss_col = Eigen::VectorXd::Zero(count);
    Eigen::MatrixXd dw = Eigen::MatrixXd::Zero(N, count);
#pragma omp parallel
    {
        std::vector<double> phi(static_cast<std::size_t>(N));
#pragma omp for schedule(static)
        for (Eigen::Index c = 0; c < count; ++c) {
            const Eigen::Index b = cols.empty() ? c : cols[static_cast<std::size_t>(c)];
            const Eigen::Index tb = in.target.cols() == 1 ? 0 : b;
            for (Eigen::Index g = 0; g < G; ++g) {
                const double u = in.nodes[static_cast<std::size_t>(g)];
                double p = 0.0;
                for (Eigen::Index i = 0; i < N; ++i) {
                    const double s = in.sigma(i, b), z = (u - in.mean(i, b)) / s;
                    phi[static_cast<std::size_t>(i)] = kInvSqrt2Pi / s * std::exp(-0.5 * z * z);
                    p += in.weights(i) * phi[static_cast<std::size_t>(i)];
                }
                const double r = in.target(g, tb) - p;
                loss_col(c) += scale * r * r;
                const double dp = -2.0 * scale * r;
                for (Eigen::Index i = 0; i < N; ++i) {
                    const double s = in.sigma(i, b), d = u - in.mean(i, b);
                    const double f = phi[static_cast<std::size_t>(i)];
                    dw(i, c) += dp * f;
                    out.d_mean(i, b) += dp * in.weights(i) * f * d / (s * s);
                    out.d_sigma(i, b) += dp * in.weights(i) * f * (d * d / (s * s * s) - 1.0 / s);
                }
            }
        }
    }
    double loss = 0.0;
    for (Eigen::Index c = 0; c < count; ++c) {
        loss += loss_col(c);
        out.d_weights += dw.col(c);
    }
    out.loss = loss;
    return out;
}

std::vector<double> mixture_marginal(const MixtureLossInput& in) {
    const Eigen::Index N = in.mean.rows(), B = in.mean.cols();
    std::vector<double> out(in.nodes.size(), 0.0);
    const auto G = static_cast<std::ptrdiff_t>(in.nodes.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t g = 0; g < G; ++g) {
        const double u = in.nodes[static_cast<std::size_t>(g)];
        double acc = 0.0;
        for (Eigen::Index b = 0; b < B; ++b)
            for (Eigen::Index i = 0; i < N; ++i) {
                const double s = in.sigma(i, b), z = (u - in.mean(i, b)) / s;
                acc += in.weights(i) * kInvSqrt2Pi / s * std::exp(-0.5 * z * z);
            }
        out[static_cast<std::size_t>(g)] = acc / static_cast<double>(B);
    }
    return out;
}

}  // namespace ndd::kernels
