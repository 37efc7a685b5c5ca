#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "doctest.h"
#include "ndd/distortion/distortion.hpp"
#include "ndd/error.hpp"
#include "ndd/numcore/random.hpp"

using namespace ndd::distortion;
using ndd::dist::QuantileGrid;

namespace {

const char* kTable[] = {"cpw:0.71", "wang:0.75", "wang:-0.75", "pow:-2", "cvar:0.25", "cvar:0.1"};

std::vector<double> levels(std::size_t m) {
    std::vector<double> t(m);
    for (std::size_t j = 0; j < m; ++j) t[j] = (j + 0.5) / m;
    return t;
}

QuantileGrid grid_from(const std::vector<double>& z) {
    return ndd::dist::make_quantile_grid(levels(z.size()), z);
}

}  // namespace

TEST_CASE("closed forms") {
    CHECK(distort(parse_distortion("cvar:0.25"), 0.5) == doctest::Approx(0.125));
    CHECK(distort(parse_distortion("cpw:0.71"), 0.5) == doctest::Approx(0.4606).epsilon(1e-3 / 0.4606));
    // direct (non-log) evaluation of the same form
    const double a = std::pow(0.3, 0.71), b = std::pow(0.7, 0.71);
    CHECK(distort(parse_distortion("cpw:0.71"), 0.3) == doctest::Approx(a / std::pow(a + b, 1 / 0.71)));
    const double phi = 0.5 * std::erfc(-0.75 / std::sqrt(2.0));
    CHECK(distort(parse_distortion("wang:0.75"), 0.5) == doctest::Approx(phi).epsilon(1e-9));
    CHECK(std::abs(phi - 0.7734) < 1e-3);
    CHECK(distort(parse_distortion("pow:-2"), 0.5) == doctest::Approx(1 - std::pow(0.5, 1.0 / 3)).epsilon(1e-9));
    CHECK(std::abs(distort(parse_distortion("pow:-2"), 0.5) - 0.2063) < 1e-4);
    CHECK(distort(parse_distortion("pow:2"), 0.125) == doctest::Approx(0.5));
    CHECK(distort(DistortionFn{}, 0.37) == 0.37);
}

TEST_CASE("endpoints") {
    for (const char* s : kTable) {
        CAPTURE(s);
        const auto f = parse_distortion(s);
        CHECK(distort(f, 0.0) == 0.0);
        if (f.kind == Kind::cvar) CHECK(distort(f, 1.0) == doctest::Approx(f.eta));
        else CHECK(distort(f, 1.0) == doctest::Approx(1.0));
    }
    CHECK(distort(DistortionFn{}, 1.0) == 1.0);
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(distort(DistortionFn{}, 1.5), ndd::DomainError);
    CHECK_THROWS_AS(distort(DistortionFn{}, -0.1), ndd::DomainError);
    CHECK_THROWS_AS(make_distortion(Kind::cvar, 0.0), ndd::DomainError);
    CHECK_THROWS_AS(make_distortion(Kind::cvar, 1.5), ndd::DomainError);
    CHECK_THROWS_AS(make_distortion(Kind::wang, NAN), ndd::DomainError);
    CHECK_THROWS_AS(parse_distortion("cvar:2"), ndd::ConfigError);
    CHECK_THROWS_AS(parse_distortion("foo:1"), ndd::ConfigError);
    CHECK_THROWS_AS(parse_distortion("cpw"), ndd::ConfigError);
    CHECK_THROWS_AS(parse_distortion("cpw:0.7x"), ndd::ConfigError);
    CHECK_THROWS_AS(check_strictly_increasing(DistortionFn{}, 1), ndd::DomainError);
}

TEST_CASE("spec string round trip") {
    for (const char* s : kTable) CHECK(to_string(parse_distortion(s)) == s);
    CHECK(to_string(parse_distortion("expectation")) == "expectation");
}

TEST_CASE("inverse") {
    for (const char* s : kTable) {
        CAPTURE(s);
        const auto f = parse_distortion(s);
        for (double t : {0.0, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0})
            CHECK(inverse_distort(f, distort(f, t)) == doctest::Approx(t).epsilon(1e-9));
    }
    CHECK(inverse_distort(parse_distortion("cvar:0.25"), 0.5) == 1.0);
}

TEST_CASE("strictly increasing") {
    for (const char* s : kTable) CHECK(check_strictly_increasing(parse_distortion(s), 1001));
    CHECK(check_strictly_increasing(DistortionFn{}, 2));
    CHECK_FALSE(check_strictly_increasing([](double) { return 0.5; }, 10));
    CHECK_FALSE(check_strictly_increasing([](double t) { return std::min(t, 0.5); }, 10));
}

TEST_CASE("distorted expectation oracles") {
    ndd::numcore::RandomSource rng(5);
    std::vector<double> z(64);
    double acc = 0;
    for (auto& v : z) v = (acc += rng.uniform());
    const auto q = grid_from(z);
    CHECK(distorted_expectation(q, DistortionFn{}) == doctest::Approx(q.mean()));
    CHECK(distorted_expectation(q, make_distortion(Kind::cvar, 1.0)) ==
          doctest::Approx(distorted_expectation(q, DistortionFn{})));

    const auto t = levels(128);
    const auto u = ndd::dist::make_quantile_grid(t, t);
    CHECK(std::abs(distorted_expectation(u, parse_distortion("cvar:0.5")) - 0.25) < 0.01);

    for (const char* s : kTable) {
        const auto f = parse_distortion(s);
        double total = 0;
        for (double w : cell_weights(t, f)) {
            CHECK(w >= 0.0);
            total += w;
        }
        CHECK(total == doctest::Approx(1.0));
    }
}

TEST_CASE("risk direction on N(0,1) quantiles") {
    boost::math::normal_distribution<> n01;
    const auto t = levels(128);
    std::vector<double> z;
    for (double x : t) z.push_back(boost::math::quantile(n01, x));
    const auto q = ndd::dist::make_quantile_grid(t, z);
    // E[Z] under the remapped levels, by direct quadrature of F^-1(rho(tau))
    for (const char* s : {"wang:0.75", "wang:-0.75", "pow:-2", "cpw:0.71"}) {
        CAPTURE(s);
        const auto f = parse_distortion(s);
        double direct = 0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) direct += boost::math::quantile(n01, distort(f, (i + 0.5) / n));
        direct /= n;
        CHECK(distorted_expectation(q, f) == doctest::Approx(direct).epsilon(0.02));
    }
    CHECK(distorted_expectation(q, parse_distortion("wang:-0.75")) < -0.5);
    CHECK(distorted_expectation(q, parse_distortion("wang:0.75")) > 0.5);
    // lower-tail mean of N(0,1) below the 25% quantile
    const double c = boost::math::quantile(n01, 0.25);
    CHECK(distorted_expectation(q, parse_distortion("cvar:0.25")) ==
          doctest::Approx(-boost::math::pdf(n01, c) / 0.25).epsilon(0.02));
}

TEST_CASE("property: pointwise dominance is preserved") {
    ndd::numcore::RandomSource rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> b(32), a(32);
        double acc = rng.normal();
        for (std::size_t j = 0; j < b.size(); ++j) {
            acc += rng.uniform();
            b[j] = acc;
        }
        double gap = 0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            gap = std::max(gap, rng.uniform(0.0, 1.0) * (trial % 3));
            a[j] = b[j] + gap;
        }
        for (const char* s : kTable) {
            const auto f = parse_distortion(s);
            CHECK(distorted_expectation(grid_from(a), f) >= distorted_expectation(grid_from(b), f) - 1e-12);
        }
    }
}

TEST_CASE("property: common shift keeps the argmax") {
    ndd::numcore::RandomSource rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<double>> acts(4, std::vector<double>(32));
        for (auto& z : acts) {
            double acc = rng.normal(0, 3);
            for (auto& v : z) v = (acc += rng.uniform(0, 0.5));
        }
        const double c = rng.normal(0, 10);
        for (const char* s : kTable) {
            const auto f = parse_distortion(s);
            auto best = [&](double shift) {
                std::size_t arg = 0;
                double top = -1e300;
                for (std::size_t k = 0; k < acts.size(); ++k) {
                    auto z = acts[k];
                    for (auto& v : z) v += shift;
                    const double e = distorted_expectation(grid_from(z), f);
                    if (e > top) top = e, arg = k;
                }
                return arg;
            };
            CHECK(best(0.0) == best(c));
        }
    }
}
