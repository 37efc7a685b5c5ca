#include "ndd/noise/noise_model.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "ndd/dist/quantile.hpp"
#include "ndd/error.hpp"

namespace ndd::noise {

namespace {

std::size_t arity(Family f) {
    switch (f) {
        case Family::chi_square: return 1;
        default: return 2;
    }
}

void validate(const NoiseComponent& c) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) throw ConfigError("noise: weights must be nonnegative");
    if (c.params.size() != arity(c.family))
        throw ConfigError("noise: " + std::string(to_string(c.family)) + " takes " +
                          std::to_string(arity(c.family)) + " parameter(s)");
    for (double p : c.params)
        if (!std::isfinite(p)) throw ConfigError("noise: non-finite parameter");
    const auto& p = c.params;
    switch (c.family) {
        case Family::gaussian:
            if (p[1] < 0.0) throw ConfigError("noise: gaussian variance must be >= 0");
            break;
        case Family::uniform:
            if (!(p[0] < p[1])) throw ConfigError("noise: uniform requires low < high");
            break;
        case Family::beta:
        case Family::gamma:
            if (!(p[0] > 0.0 && p[1] > 0.0))
                throw ConfigError("noise: " + std::string(to_string(c.family)) + " parameters must be positive");
            break;
        case Family::chi_square:
            if (!(p[0] > 0.0)) throw ConfigError("noise: chi_square dof must be positive");
            break;
    }
}

}  // namespace

std::string_view to_string(Family f) {
    switch (f) {
        case Family::gaussian: return "gaussian";
        case Family::uniform: return "uniform";
        case Family::beta: return "beta";
        case Family::gamma: return "gamma";
        case Family::chi_square: return "chi_square";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    for (auto f : {Family::gaussian, Family::uniform, Family::beta, Family::gamma, Family::chi_square})
        if (to_string(f) == name) return f;
    throw ConfigError("noise: unknown family '" + std::string(name) + "'");
}

double NoiseComponent::mean() const {
    const auto& p = params;
    switch (family) {
        case Family::gaussian: return p[0];
        case Family::uniform: return 0.5 * (p[0] + p[1]);
        case Family::beta: return p[0] / (p[0] + p[1]);
        case Family::gamma: return p[0] * p[1];
        case Family::chi_square: return p[0];
    }
    return 0.0;
}

double NoiseComponent::variance() const {
    const auto& p = params;
    switch (family) {
        case Family::gaussian: return p[1];
        case Family::uniform: return (p[1] - p[0]) * (p[1] - p[0]) / 12.0;
        case Family::beta: {
            const double s = p[0] + p[1];
            return p[0] * p[1] / (s * s * (s + 1.0));
        }
        case Family::gamma: return p[0] * p[1] * p[1];
        case Family::chi_square: return 2.0 * p[0];
    }
    return 0.0;
}

double NoiseComponent::cdf(double x) const {
    const auto& p = params;
    switch (family) {
        case Family::gaussian:
            if (p[1] == 0.0) return x >= p[0] ? 1.0 : 0.0;
            return dist::gaussian_cdf({p[0], p[1]}, x);
        case Family::uniform:
            if (x <= p[0]) return 0.0;
            if (x >= p[1]) return 1.0;
            return (x - p[0]) / (p[1] - p[0]);
        case Family::beta:
            if (x <= 0.0) return 0.0;
            if (x >= 1.0) return 1.0;
            return boost::math::cdf(boost::math::beta_distribution<>(p[0], p[1]), x);
        case Family::gamma:
            if (x <= 0.0) return 0.0;
            return boost::math::cdf(boost::math::gamma_distribution<>(p[0], p[1]), x);
        case Family::chi_square:
            if (x <= 0.0) return 0.0;
            return boost::math::cdf(boost::math::gamma_distribution<>(0.5 * p[0], 2.0), x);
    }
    return 0.0;
}

double NoiseComponent::sample(numcore::RandomSource& rng) const {
    const auto& p = params;
    switch (family) {
        case Family::gaussian: return rng.normal(p[0], std::sqrt(p[1]));
        case Family::uniform: return rng.uniform(p[0], p[1]);
        case Family::beta: return rng.beta(p[0], p[1]);
        case Family::gamma: return rng.gamma(p[0], p[1]);
        case Family::chi_square: return rng.gamma(0.5 * p[0], 2.0);
    }
    return 0.0;
}

NoiseModel::NoiseModel(std::string name, std::vector<NoiseComponent> components)
    : name_(std::move(name)), components_(std::move(components)) {
    if (components_.empty()) throw ConfigError("noise: at least one component required");
    double total = 0.0;
    for (const auto& c : components_) {
        validate(c);
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("noise: weights of '" + name_ + "' sum to " + std::to_string(total));
}

double NoiseModel::mean() const {
    double s = 0.0;
    for (const auto& c : components_) s += c.weight * c.mean();
    return s;
}

double NoiseModel::variance() const {
    const double m = mean();
    double s = 0.0;
    for (const auto& c : components_) s += c.weight * (c.variance() + (c.mean() - m) * (c.mean() - m));
    return s;
}

double NoiseModel::cdf(double x) const {
    double s = 0.0;
    for (const auto& c : components_) s += c.weight * c.cdf(x);
    return s;
}

double NoiseModel::quantile(double tau) const {
    const double sd = std::sqrt(std::max(variance(), 1e-12));
    return dist::invert_cdf([this](double x) { return cdf(x); }, tau, mean() - 10.0 * sd, mean() + 10.0 * sd,
                            1e-10, 300);
}

bool NoiseModel::is_degenerate() const { return variance() == 0.0; }

std::optional<dist::GMM> NoiseModel::as_gmm() const {
    std::vector<dist::Gaussian> comps;
    std::vector<double> weights;
    for (const auto& c : components_) {
        if (c.family != Family::gaussian || c.params[1] == 0.0) return std::nullopt;
        comps.push_back({c.params[0], c.params[1]});
        weights.push_back(c.weight);
    }
    return dist::GMM(comps, weights);
}

std::size_t pick_component(const NoiseModel& model, numcore::RandomSource& rng) {
    const auto& comps = model.components();
    if (comps.size() == 1) return 0;
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t k = 0;
    for (; k + 1 < comps.size(); ++k) {
        acc += comps[k].weight;
        if (u < acc) break;
    }
    return k;
}

double sample_noise(const NoiseModel& model, numcore::RandomSource& rng) {
    return model.components()[pick_component(model, rng)].sample(rng);
}

std::vector<double> sample_noise(const NoiseModel& model, numcore::RandomSource& rng, std::size_t n) {
    std::vector<double> out(n);
    for (auto& x : out) x = sample_noise(model, rng);
    return out;
}

std::vector<double> sample_noise_stratified(const NoiseModel& model, numcore::RandomSource& rng, std::size_t n) {
    const auto& comps = model.components();
    std::vector<std::size_t> counts(comps.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t used = 0;
    for (std::size_t k = 0; k < comps.size(); ++k) {
        const double exact = comps[k].weight * static_cast<double>(n);
        counts[k] = static_cast<std::size_t>(std::floor(exact));
        used += counts[k];
        rem.emplace_back(exact - std::floor(exact), k);
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; used < n; ++j, ++used) ++counts[rem[j % rem.size()].second];
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t k = 0; k < comps.size(); ++k)
        for (std::size_t i = 0; i < counts[k]; ++i) out.push_back(comps[k].sample(rng));
    std::shuffle(out.begin(), out.end(), rng.engine());
    return out;
}

double inject(double reward, const NoiseModel& model, numcore::RandomSource& rng) {
    return reward + sample_noise(model, rng);
}

NoiseModel parse_noise_model(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line, name = "unnamed";
    std::vector<NoiseComponent> comps;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "name") {
            if (!(ls >> name)) throw ConfigError("noise config line " + std::to_string(lineno) + ": missing name");
        } else if (key == "component") {
            NoiseComponent c;
            std::string family;
            if (!(ls >> c.weight >> family))
                throw ConfigError("noise config line " + std::to_string(lineno) + ": expected weight and family");
            c.family = parse_family(family);
            double v;
            while (ls >> v) c.params.push_back(v);
            if (!ls.eof()) throw ConfigError("noise config line " + std::to_string(lineno) + ": bad parameter");
            comps.push_back(std::move(c));
        } else {
            throw ConfigError("noise config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    return NoiseModel(name, std::move(comps));
}

std::string format_noise_model(const NoiseModel& model) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "name " << model.name() << '\n';
    for (const auto& c : model.components()) {
        out << "component " << c.weight << ' ' << to_string(c.family);
        for (double p : c.params) out << ' ' << p;
        out << '\n';
    }
    return out.str();
}

NoiseModel load_noise_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("noise: cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_noise_model(buf.str());
}

dist::GMM parse_gmm(std::string_view text) {
    const auto model = parse_noise_model(text);
    auto m = model.as_gmm();
    if (!m) throw ConfigError("gmm record '" + model.name() + "' has non-Gaussian or degenerate components");
    return *m;
}

std::string format_gmm(const dist::GMM& m, std::string_view name) {
    std::vector<NoiseComponent> comps;
    for (std::size_t i = 0; i < m.size(); ++i)
        comps.push_back({m.weights()[i], Family::gaussian, {m.components()[i].mean, m.components()[i].variance}});
    return format_noise_model(NoiseModel(std::string(name), comps));
}

}  // namespace ndd::noise
