#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "ndd/dist/quantile.hpp"

namespace ndd::distortion {

enum class Kind { identity, cpw, wang, pow, cvar };

struct DistortionFn {
    Kind kind = Kind::identity;
    double eta = 0.0;
};

/// Throws DomainError for cvar outside (0, 1] or a non-finite eta.
DistortionFn make_distortion(Kind kind, double eta = 0.0);

/// "expectation" (alias "identity"), "cpw:0.71", "wang:-0.75", "pow:-2", "cvar:0.25".
DistortionFn parse_distortion(std::string_view spec);
std::string to_string(const DistortionFn& f);

/// rho_eta(tau); tau outside [0, 1] is a DomainError.
double distort(const DistortionFn& f, double tau);

/// True iff values are strictly increasing on a uniform grid over [0, 1].
bool check_strictly_increasing(const DistortionFn& f, std::size_t grid_size);
bool check_strictly_increasing(const std::function<double(double)>& rho, std::size_t grid_size);

/// Inverse of rho on [0, rho(1)], extended by 1 above rho(1) (only cvar has
/// rho(1) < 1).
double inverse_distort(const DistortionFn& f, double u);

/// Mean of F^-1(rho(tau)) for tau ~ U(0, 1), i.e. the quantile levels are
/// remapped by rho. Written as a Stieltjes sum over quantile cells:
/// sum_j [w(b_j) - w(b_{j-1})] * z_j with w = rho^-1, b_0 = 0, b_M = 1 and
/// interior b_j halfway between consecutive levels. cvar gives the mean of
/// the lower eta tail.
double distorted_expectation(const dist::QuantileGrid& q, const DistortionFn& f);

/// Raw weights w(b_j) - w(b_{j-1}) for a grid of levels; they sum to w(1).
std::vector<double> cell_weights(const std::vector<double>& levels, const DistortionFn& f);

inline constexpr std::size_t kDefaultQuantiles = 128;

}  // namespace ndd::distortion
