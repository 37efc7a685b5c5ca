#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ndd/dist/gaussian.hpp"
#include "ndd/numcore/random.hpp"

namespace ndd::noise {

enum class Family { gaussian, uniform, beta, gamma, chi_square };

std::string_view to_string(Family f);
Family parse_family(std::string_view name);

/// Parameter conventions:
///   gaussian   (mean, variance)        variance may be zero (degenerate)
///   uniform    (low, high)             low < high
///   beta       (a, b)                  on [0, 1]
///   gamma      (shape k, scale theta)  mean k * theta
///   chi_square (dof)                   sampled as gamma(dof / 2, 2)
struct NoiseComponent {
    double weight = 1.0;
    Family family = Family::gaussian;
    std::vector<double> params;

    double mean() const;
    double variance() const;
    double cdf(double x) const;
    double sample(numcore::RandomSource& rng) const;
};

/// Additive reward noise: a finite mixture of parametric families. A draw
/// first picks a component by weight, then samples that family.
class NoiseModel {
public:
    NoiseModel(std::string name, std::vector<NoiseComponent> components);

    const std::string& name() const noexcept { return name_; }
    const std::vector<NoiseComponent>& components() const noexcept { return components_; }

    double mean() const;
    double variance() const;
    double cdf(double x) const;
    /// Inverse of cdf() by bisection (tolerance 1e-10).
    double quantile(double tau) const;
    bool is_degenerate() const;

    /// Set when every component is a nondegenerate Gaussian.
    std::optional<dist::GMM> as_gmm() const;

private:
    std::string name_;
    std::vector<NoiseComponent> components_;
};

/// Index of the mixture component chosen for one draw.
std::size_t pick_component(const NoiseModel& model, numcore::RandomSource& rng);
double sample_noise(const NoiseModel& model, numcore::RandomSource& rng);
std::vector<double> sample_noise(const NoiseModel& model, numcore::RandomSource& rng, std::size_t n);
/// n draws with component counts fixed at round(n * w_k) (largest remainders),
/// returned in shuffled order. Removes the multinomial noise in the
/// component proportions; used for validation data sets.
std::vector<double> sample_noise_stratified(const NoiseModel& model, numcore::RandomSource& rng, std::size_t n);
double inject(double reward, const NoiseModel& model, numcore::RandomSource& rng);

/// Plain-text record format, one directive per line, '#' starts a comment:
///   name <identifier>
///   component <weight> <family> <param>...
NoiseModel parse_noise_model(std::string_view text);
std::string format_noise_model(const NoiseModel& model);
NoiseModel load_noise_model(const std::filesystem::path& path);

/// Gaussian-only records use the same format; throws ConfigError for any
/// non-Gaussian component.
dist::GMM parse_gmm(std::string_view text);
std::string format_gmm(const dist::GMM& m, std::string_view name);

/// Built-in presets: none, mpe_noise0..4, smac_noise0..4 and the
/// decomposition validation targets decomp_row1..7.
NoiseModel preset(std::string_view name);
std::vector<std::string> preset_names();
/// Resolves a preset name, or a path to a config file when no preset matches.
NoiseModel resolve(std::string_view name_or_path);

}  // namespace ndd::noise
