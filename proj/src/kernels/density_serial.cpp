#include <algorithm>
#include <cmath>
#include <numbers>

#include "ndd/kernels/density.hpp"

namespace ndd::kernels::serial {

double kde_at(std::span<const double> sorted, double h, double x) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), x - kKernelCutoff * h);
    const auto last = std::upper_bound(first, sorted.end(), x + kKernelCutoff * h);
    double s = 0.0;
    for (auto it = first; it != last; ++it) {
        const double z = (x - *it) / h;
        s += std::exp(-0.5 * z * z);
    }
    return s / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
}

std::vector<double> kde_grid(std::span<const double> sorted, double h, const dist::UniformGrid& grid) {
    std::vector<double> out(grid.points);
    for (std::size_t i = 0; i < grid.points; ++i) out[i] = kde_at(sorted, h, grid.at(i));
    return out;
}

std::vector<double> gmm_grid(const dist::GMM& m, const dist::UniformGrid& grid) {
    std::vector<double> out(grid.points);
    for (std::size_t i = 0; i < grid.points; ++i) out[i] = dist::gmm_pdf(m, grid.at(i));
    return out;
}

std::vector<double> evaluate(const std::function<double(double)>& f, std::span<const double> xs) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
    return out;
}

}  // namespace ndd::kernels::serial
