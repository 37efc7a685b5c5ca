#include <benchmark/benchmark.h>

#include <algorithm>

#include "ndd/diffusion/diffusion.hpp"
#include "ndd/kernels/density.hpp"
#include "ndd/kernels/mixture_loss.hpp"
#include "ndd/numcore/random.hpp"

namespace {

using ndd::numcore::RandomSource;

std::vector<double> sorted_normals(std::size_t n) {
    RandomSource rng(1);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    std::sort(x.begin(), x.end());
    return x;
}

template <bool Parallel>
void BM_kde_grid(benchmark::State& state) {
    const auto x = sorted_normals(static_cast<std::size_t>(state.range(0)));
    const ndd::dist::UniformGrid grid{-5, 5, 256};
    for (auto _ : state) {
        auto d = Parallel ? ndd::kernels::kde_grid(x, 0.1, grid) : ndd::kernels::serial::kde_grid(x, 0.1, grid);
        benchmark::DoNotOptimize(d.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

ndd::dist::GMM wide_mixture(std::size_t n) {
    RandomSource rng(2);
    std::vector<ndd::dist::Gaussian> c;
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) c.push_back({rng.normal(0, 3), 0.5 + rng.uniform()});
    return {c, w};
}

template <bool Parallel>
void BM_gmm_grid(benchmark::State& state) {
    const auto m = wide_mixture(static_cast<std::size_t>(state.range(0)));
    const ndd::dist::UniformGrid grid{-10, 10, 4096};
    for (auto _ : state) {
        auto d = Parallel ? ndd::kernels::gmm_grid(m, grid) : ndd::kernels::serial::gmm_grid(m, grid);
        benchmark::DoNotOptimize(d.data());
    }
}

template <bool Parallel>
void BM_mixture_l2_loss(benchmark::State& state) {
    const auto B = static_cast<Eigen::Index>(state.range(0));
    const Eigen::Index N = 3, G = 256;
    RandomSource rng(3);
    const Eigen::MatrixXd mean = Eigen::MatrixXd::NullaryExpr(N, B, [&] { return rng.normal(); });
    const Eigen::MatrixXd sigma = Eigen::MatrixXd::NullaryExpr(N, B, [&] { return 0.5 + rng.uniform(); });
    const Eigen::VectorXd weights = Eigen::VectorXd::Constant(N, 1.0 / 3);
    const Eigen::MatrixXd target = Eigen::MatrixXd::NullaryExpr(G, B, [&] { return rng.uniform(); });
    std::vector<double> nodes(static_cast<std::size_t>(G));
    for (Eigen::Index g = 0; g < G; ++g) nodes[static_cast<std::size_t>(g)] = -5.0 + 10.0 * (g + 0.5) / G;
    const ndd::kernels::MixtureLossInput in{mean, sigma, weights, target, nodes, 10.0 / G};
    for (auto _ : state) {
        auto out = Parallel ? ndd::kernels::mixture_l2_loss(in) : ndd::kernels::serial::mixture_l2_loss(in);
        benchmark::DoNotOptimize(out.loss);
    }
}

template <bool Parallel>
void BM_generate(benchmark::State& state) {
    const auto sched = ndd::diffusion::build_schedule(25);
    RandomSource init(4);
    ndd::diffusion::DenoiserStack stack(sched, init);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        RandomSource rng(5);
        auto g = Parallel ? ndd::diffusion::generate(stack, sched, n, rng)
                          : ndd::diffusion::serial::generate(stack, sched, n, rng);
        benchmark::DoNotOptimize(g.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_kde_grid<false>)->Name("kde_grid/serial")->Arg(10000)->Arg(100000);
BENCHMARK(BM_kde_grid<true>)->Name("kde_grid/omp")->Arg(10000)->Arg(100000);
BENCHMARK(BM_gmm_grid<false>)->Name("gmm_grid/serial")->Arg(3)->Arg(192);
BENCHMARK(BM_gmm_grid<true>)->Name("gmm_grid/omp")->Arg(3)->Arg(192);
BENCHMARK(BM_mixture_l2_loss<false>)->Name("mixture_l2_loss/serial")->Arg(64)->Arg(1024);
BENCHMARK(BM_mixture_l2_loss<true>)->Name("mixture_l2_loss/omp")->Arg(64)->Arg(1024);
BENCHMARK(BM_generate<false>)->Name("generate/serial")->Arg(1000)->Arg(10000);
BENCHMARK(BM_generate<true>)->Name("generate/omp")->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
