#include <cstdint>

#include "ndd/kernels/density.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ndd::kernels {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::vector<double> kde_grid(std::span<const double> sorted, double h, const dist::UniformGrid& grid) {
    std::vector<double> out(grid.points);
    const auto n = static_cast<std::int64_t>(grid.points);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = serial::kde_at(sorted, h, grid.at(static_cast<std::size_t>(i)));
    return out;
}

std::vector<double> gmm_grid(const dist::GMM& m, const dist::UniformGrid& grid) {
    std::vector<double> out(grid.points);
    const auto n = static_cast<std::int64_t>(grid.points);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = dist::gmm_pdf(m, grid.at(static_cast<std::size_t>(i)));
    return out;
}

std::vector<double> evaluate(const std::function<double(double)>& f, std::span<const double> xs) {
    std::vector<double> out(xs.size());
    const auto n = static_cast<std::int64_t>(xs.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = f(xs[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace ndd::kernels
