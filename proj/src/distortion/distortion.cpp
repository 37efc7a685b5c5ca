#include "ndd/distortion/distortion.hpp"

#include <cmath>
#include <sstream>

#include "ndd/dist/gaussian.hpp"
#include "ndd/error.hpp"

#include <boost/math/distributions/normal.hpp>

namespace ndd::distortion {

namespace {

double cpw(double eta, double tau) {
    if (tau == 0.0) return 0.0;
    if (tau == 1.0) return 1.0;
    // tau^eta / (tau^eta + (1-tau)^eta)^(1/eta), in logs
    const double a = eta * std::log(tau);
    const double b = eta * std::log1p(-tau);
    const double m = std::max(a, b);
    const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
    return std::exp(a - lse / eta);
}

double wang(double eta, double tau) {
    if (tau == 0.0) return 0.0;
    if (tau == 1.0) return 1.0;
    static const boost::math::normal_distribution<> n01;
    return dist::standard_normal_cdf(boost::math::quantile(n01, tau) + eta);
}

double pow_(double eta, double tau) {
    const double e = 1.0 / (1.0 + std::abs(eta));
    if (eta >= 0.0) return std::pow(tau, e);
    return 1.0 - std::pow(1.0 - tau, e);
}


}  // namespace

DistortionFn make_distortion(Kind kind, double eta) {
    if (!std::isfinite(eta)) throw DomainError("distortion: eta must be finite");
    if (kind == Kind::cvar && !(eta > 0.0 && eta <= 1.0)) throw DomainError("distortion: cvar needs eta in (0, 1]");
    return {kind, kind == Kind::identity ? 0.0 : eta};
}

DistortionFn parse_distortion(std::string_view spec) {
    if (spec == "expectation" || spec == "identity") return {};
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos)
        throw ConfigError("distortion '" + std::string(spec) + "': expected kind:eta");
    const auto kind = spec.substr(0, colon);
    const std::string num(spec.substr(colon + 1));
    std::size_t used = 0;
    double eta = 0.0;
    try {
        eta = std::stod(num, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != num.size()) throw ConfigError("distortion '" + std::string(spec) + "': bad parameter");
    Kind k;
    if (kind == "cpw") k = Kind::cpw;
    else if (kind == "wang") k = Kind::wang;
    else if (kind == "pow") k = Kind::pow;
    else if (kind == "cvar") k = Kind::cvar;
    else throw ConfigError("distortion: unknown kind '" + std::string(kind) + "'");
    try {
        return make_distortion(k, eta);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

std::string to_string(const DistortionFn& f) {
    std::ostringstream out;
    switch (f.kind) {
        case Kind::identity: return "expectation";
        case Kind::cpw: out << "cpw:"; break;
        case Kind::wang: out << "wang:"; break;
        case Kind::pow: out << "pow:"; break;
        case Kind::cvar: out << "cvar:"; break;
    }
    out << f.eta;
    return out.str();
}

double distort(const DistortionFn& f, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("distort: tau must lie in [0, 1]");
    switch (f.kind) {
        case Kind::identity: return tau;
        case Kind::cpw: return cpw(f.eta, tau);
        case Kind::wang: return wang(f.eta, tau);
        case Kind::pow: return pow_(f.eta, tau);
        case Kind::cvar: return f.eta * tau;
    }
    return tau;
}

double inverse_distort(const DistortionFn& f, double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("inverse_distort: u must lie in [0, 1]");
    if (u == 0.0) return 0.0;
    switch (f.kind) {
        case Kind::identity: return u;
        case Kind::cvar: return std::min(u / f.eta, 1.0);
        case Kind::wang: return u == 1.0 ? 1.0 : wang(-f.eta, u);
        case Kind::pow: {
            const double e = 1.0 + std::abs(f.eta);
            if (f.eta >= 0.0) return std::pow(u, e);
            return 1.0 - std::pow(1.0 - u, e);
        }
        case Kind::cpw: {
            if (u == 1.0) return 1.0;
            double lo = 0.0, hi = 1.0;
            for (int i = 0; i < 100 && hi - lo > 1e-15; ++i) {
                const double mid = 0.5 * (lo + hi);
                (cpw(f.eta, mid) < u ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
    return u;
}

bool check_strictly_increasing(const std::function<double(double)>& rho, std::size_t grid_size) {
    if (grid_size < 2) throw DomainError("check_strictly_increasing: grid_size must be >= 2");
    double prev = rho(0.0);
    for (std::size_t i = 1; i < grid_size; ++i) {
        const double v = rho(static_cast<double>(i) / static_cast<double>(grid_size - 1));
        if (!(v > prev)) return false;
        prev = v;
    }
    return true;
}

bool check_strictly_increasing(const DistortionFn& f, std::size_t grid_size) {
    return check_strictly_increasing([&f](double t) { return distort(f, t); }, grid_size);
}

std::vector<double> cell_weights(const std::vector<double>& levels, const DistortionFn& f) {
    const std::size_t m = levels.size();
    std::vector<double> w(m);
    double prev = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double b = j + 1 < m ? 0.5 * (levels[j] + levels[j + 1]) : 1.0;
        const double cur = inverse_distort(f, b);
        w[j] = cur - prev;
        prev = cur;
    }
    return w;
}

double distorted_expectation(const dist::QuantileGrid& q, const DistortionFn& f) {
    const auto w = cell_weights(q.levels, f);
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * q.values[j];
    return s;
}

}  // namespace ndd::distortion
