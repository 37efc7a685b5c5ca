#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ndd/diffusion/diffusion.hpp"
#include "ndd/dist/empirical.hpp"
#include "ndd/dist/quantile.hpp"
#include "ndd/error.hpp"

using namespace ndd::diffusion;
using ndd::numcore::RandomSource;

namespace {

double mean_of(const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v;
    return s / x.size();
}

double var_of(const std::vector<double>& x) {
    const double m = mean_of(x);
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return s / (x.size() - 1);
}

std::vector<double> normal_samples(std::size_t n, double mean, double sd, std::uint64_t seed) {
    RandomSource rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal(mean, sd);
    return x;
}

}  // namespace

TEST_CASE("schedule values") {
    const auto s = build_schedule(25);
    REQUIRE(s.K == 25);
    CHECK(std::abs(s.omega_at(1) - 2.2339e-5) < 1e-9);
    // the formula at h = 6: 0.499e-2 / (1 + e^-6) + 1e-5
    CHECK(s.omega_at(25) == doctest::Approx(0.499e-2 / (1 + std::exp(-6.0)) + 1e-5).epsilon(1e-12));
    CHECK(std::abs(s.omega_at(25) - 4.9877e-3) < 1e-6);
    CHECK(std::abs(std::sqrt(s.upsilon_bar_at(25)) - 0.969) < 1e-3);
    CHECK_THROWS_AS(build_schedule(0), ndd::DomainError);
}

TEST_CASE("property: schedule invariants") {
    for (std::size_t K : {1u, 2u, 5u, 25u, 100u}) {
        const auto s = build_schedule(K);
        for (std::size_t k = 1; k <= K; ++k) {
            CHECK(s.omega_at(k) > 0.0);
            CHECK(s.omega_at(k) < 1.0);
            CHECK(s.upsilon_bar_at(k) > 0.0);
            CHECK(s.upsilon_bar_at(k) < 1.0);
            if (k > 1) {
                CHECK(s.omega_at(k) > s.omega_at(k - 1));
                CHECK(s.upsilon_bar_at(k) < s.upsilon_bar_at(k - 1));
            }
        }
    }
}

TEST_CASE("theorem constants") {
    const auto c = theorem_constants(build_schedule(25));
    CHECK(std::abs(c.sum_prod_gamma1 - 2.0337) < 5e-4);
    CHECK(std::abs(c.prod_gamma1 - 3.5590e-4) < 1e-6);
    CHECK(std::abs(c.approx_coeff - 0.9997) < 5e-4);
    CHECK(std::abs(c.variance_coeff - 5.1359) < 2e-3);
    CHECK(std::abs(c.mean_slack - 0.2466) < 5e-4);
    CHECK(std::abs(c.offset - 0.01904) < 2e-4);
    const auto s = build_schedule(25);
    for (std::size_t k = 1; k <= 25; ++k) CHECK(gamma1(s, k) >= 0.0);
}

TEST_CASE("forward diffusion moments") {
    const auto s = build_schedule(25);
    RandomSource rng(4);
    CHECK(forward_diffuse(3.5, 0, s, rng) == 3.5);
    CHECK_THROWS_AS(forward_diffuse(1.0, 26, s, rng), ndd::DomainError);
    const double r = 2.0;
    for (std::size_t k : {1u, 5u, 13u, 25u}) {
        CAPTURE(k);
        std::vector<double> x(100000);
        for (auto& v : x) v = forward_diffuse(r, k, s, rng);
        const double ub = s.upsilon_bar_at(k);
        CHECK(std::abs(mean_of(x) - std::sqrt(ub) * r) < 3.0 * std::sqrt((1 - ub) / x.size()));
        CHECK(var_of(x) == doctest::Approx(1 - ub).epsilon(0.05));
    }
}

TEST_CASE("augment") {
    std::vector<double> real(100, 1.0), gen(500, 2.0);
    CHECK(augment(real, gen, 1.0).size() == 100);
    CHECK(augment(real, {}, 1.0).size() == 100);
    auto half = augment(real, gen, 0.5);
    CHECK(half.size() == 200);
    CHECK(std::count(half.begin(), half.end(), 2.0) == 100);
    CHECK(augment(std::vector<double>(80, 0.0), gen, 0.8).size() == 100);
    CHECK_THROWS_AS(augment(real, gen, 0.0), ndd::DomainError);
    CHECK_THROWS_AS(augment(real, gen, 1.5), ndd::DomainError);
    CHECK_THROWS_AS(augment(real, {}, 0.5), ndd::DomainError);
    CHECK_THROWS_AS(augment({}, gen, 0.5), ndd::DomainError);
}

TEST_CASE("zero stack follows the linear recursion") {
    const auto s = build_schedule(25);
    auto stack = DenoiserStack::zeros(s);
    stack.set_normalization({2.0, 3.0, 1.0});
    // x_{k-1} = x_k / sqrt(u_k) + sigma_k z: mean stays 0, variance recurses
    double v = 1.0;
    for (std::size_t k = 25; k >= 1; --k) {
        v /= s.upsilon_at(k);
        if (k > 1) v += (1 - s.upsilon_bar_at(k - 1)) / (1 - s.upsilon_bar_at(k)) * s.omega_at(k);
    }
    RandomSource rng(8);
    const auto x = generate(stack, s, 20000, rng);
    const double sd = 3.0 * std::sqrt(v);
    CHECK(std::abs(mean_of(x) - 2.0) < 3.0 * sd / std::sqrt(20000.0));
    CHECK(var_of(x) == doctest::Approx(9.0 * v).epsilon(0.05));
}

TEST_CASE("parallel and serial generation agree") {
    const auto s = build_schedule(10);
    RandomSource init(2);
    DenoiserStack stack(s, init);
    RandomSource a(5), b(5);
    CHECK(generate(stack, s, 257, a) == serial::generate(stack, s, 257, b));
}

TEST_CASE("training errors and determinism") {
    const auto s = build_schedule(25);
    RandomSource init(1);
    DenoiserStack stack(s, init);
    RandomSource rng(1);
    CHECK_THROWS_AS(train(stack, std::vector<double>(10, 1.0), s, {}, rng), ndd::DataError);
    CHECK_THROWS_AS(train(stack, std::vector<double>{}, s, {}, rng), ndd::DataError);

    const auto data = normal_samples(256, 0, 1, 3);
    TrainConfig cfg;
    cfg.iterations = 300;
    auto run = [&] {
        RandomSource i2(9), r2(10);
        DenoiserStack st(s, i2);
        return train(st, data, s, cfg, r2).batch_loss.back();
    };
    CHECK(run() == run());
}

TEST_CASE("validation loss decreases on N(0,1) data") {
    const auto s = build_schedule(25);
    const auto data = normal_samples(4096, 0, 1, 21);
    int decreased = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RandomSource init(100 + seed), rng(200 + seed), vr(300 + seed);
        DenoiserStack stack(s, init);
        stack.fit_normalization(data);
        const auto v = make_validation_set(data, s, 2000, vr);
        const double before = validation_loss(stack, s, v);
        TrainConfig cfg;
        cfg.iterations = 2000;
        train(stack, data, s, cfg, rng);
        if (validation_loss(stack, s, v) < before) ++decreased;
    }
    CHECK(decreased >= 3);
}

TEST_CASE("constant data: noise is recoverable") {
    const auto s = build_schedule(25);
    const std::vector<double> data(64, 4.2);
    RandomSource init(6), rng(7), vr(8);
    DenoiserStack stack(s, init);
    TrainConfig cfg;
    cfg.iterations = 5000;
    train(stack, data, s, cfg, rng);
    CHECK(stack.normalization().data_variance == 0.0);
    const auto v = make_validation_set(data, s, 2000, vr);
    // iota is a deterministic function of the input, so the floor is 0
    CHECK(validation_loss(stack, s, v) < 0.02);
}

TEST_CASE("generation matches N(0,1)") {
    const auto s = build_schedule(25);
    const auto data = normal_samples(10000, 0, 1, 31);
    RandomSource init(32), rng(33);
    DenoiserStack stack(s, init);
    train(stack, data, s, {}, rng);
    const auto gen = generate(stack, s, 10000, rng);
    const double w1 = ndd::dist::wasserstein(ndd::dist::quantile_of(ndd::dist::fit_empirical(gen)),
                                             [](double t) { return ndd::dist::quantile_function(ndd::dist::Gaussian{0, 1}, t); }, 1.0);
    MESSAGE("W1 = " << w1);
    CHECK(w1 <= 0.1);
    // bound form on paired error for a well trained stack
    const auto c = theorem_constants(s);
    double err = 0;
    for (std::size_t i = 0; i < gen.size(); ++i) err += (gen[i] - data[i]) * (gen[i] - data[i]);
    err /= gen.size();
    CHECK(err <= generation_error_bound(c, 0.0, 1.0) + 0.1);
}

TEST_CASE("generation of a bimodal target") {
    const auto s = build_schedule(25);
    RandomSource d(41);
    std::vector<double> data(10000);
    for (auto& v : data) v = d.normal(d.bernoulli(0.5) ? 2.0 : -2.0, std::sqrt(0.5));
    RandomSource init(42), rng(43);
    DenoiserStack stack(s, init);
    train(stack, data, s, {}, rng);
    const auto gen = generate(stack, s, 10000, rng);
    const auto e = ndd::dist::fit_empirical(gen);
    const auto dens = e.density_grid();
    int modes = 0;
    for (std::size_t i = 1; i + 1 < dens.size(); ++i)
        if (dens[i] > dens[i - 1] && dens[i] > dens[i + 1]) ++modes;
    MESSAGE("modes = " << modes);
    CHECK(modes == 2);
}
