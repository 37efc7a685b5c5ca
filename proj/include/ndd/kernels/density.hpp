#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference in
// `kernels::serial` (kept for testing and benchmarking) and an OpenMP
// version at namespace scope. Both produce the same values up to
// floating-point summation order.

#include <functional>
#include <span>
#include <vector>

#include "ndd/dist/gaussian.hpp"
#include "ndd/dist/grid.hpp"

namespace ndd::kernels {

/// Samples further than this many bandwidths from x are skipped by the
/// kernel density loops (their contribution is below 1e-14 relative).
inline constexpr double kKernelCutoff = 8.0;

namespace serial {

double kde_at(std::span<const double> sorted_samples, double bandwidth, double x);
std::vector<double> kde_grid(std::span<const double> sorted_samples, double bandwidth,
                             const dist::UniformGrid& grid);
std::vector<double> gmm_grid(const dist::GMM& m, const dist::UniformGrid& grid);
std::vector<double> evaluate(const std::function<double(double)>& f, std::span<const double> xs);

}  // namespace serial

std::vector<double> kde_grid(std::span<const double> sorted_samples, double bandwidth,
                             const dist::UniformGrid& grid);
std::vector<double> gmm_grid(const dist::GMM& m, const dist::UniformGrid& grid);
/// `f` must be safe to call concurrently.
std::vector<double> evaluate(const std::function<double(double)>& f, std::span<const double> xs);

int max_threads();

}  // namespace ndd::kernels
