#include <filesystem>
#include <map>

#include "ndd/error.hpp"
#include "ndd/noise/noise_model.hpp"

namespace ndd::noise {

namespace {

NoiseComponent g(double w, double mean, double var) { return {w, Family::gaussian, {mean, var}}; }
NoiseComponent u(double w, double lo, double hi) { return {w, Family::uniform, {lo, hi}}; }
NoiseComponent b(double w, double a, double bb) { return {w, Family::beta, {a, bb}}; }
NoiseComponent ga(double w, double k, double theta) { return {w, Family::gamma, {k, theta}}; }
NoiseComponent chi(double w, double dof) { return {w, Family::chi_square, {dof}}; }

const std::map<std::string, std::vector<NoiseComponent>, std::less<>>& table() {
    static const std::map<std::string, std::vector<NoiseComponent>, std::less<>> t = {
        {"none", {g(1.0, 0.0, 0.0)}},
        {"mpe_noise0", {g(1.0, 0.0, 5.0)}},
        {"mpe_noise1", {g(0.5, -1.0, 5.0), g(0.5, 1.0, 5.0)}},
        {"mpe_noise2", {g(0.3, -1.0, 5.0), g(0.2, -2.0, 5.0), g(0.5, 1.4, 5.0)}},
        {"mpe_noise3", {b(0.75, 2.0, 2.0), g(0.25, -1.5, 5.0)}},
        {"mpe_noise4", {ga(0.3, 1.0, 2.0), u(0.3, -12.0, 0.0), chi(0.4, 3.0)}},
        {"smac_noise0", {g(1.0, 0.0, 0.1)}},
        {"smac_noise1", {g(0.5, -0.1, 0.1), g(0.5, 0.1, 0.1)}},
        {"smac_noise2", {g(0.3, -0.1, 0.1), g(0.2, -0.2, 0.1), g(0.5, 0.14, 0.1)}},
        {"smac_noise3", {b(0.75, 0.1, 1.9), g(0.25, -0.15, 0.1)}},
        {"smac_noise4", {g(0.3, -0.05, 0.1), u(0.3, -0.4, 0.1), chi(0.4, 0.15)}},
        // decomposition validation targets
        {"decomp_row1", {g(1.0, 0.0, 5.0)}},
        {"decomp_row2", {g(1.0, 0.0, 3.0)}},
        {"decomp_row3", {g(0.5, 1.0, 5.0), g(0.5, -1.0, 5.0)}},
        {"decomp_row4", {g(0.4, 5.0, 1.0), g(0.6, -5.0, 3.0)}},
        {"decomp_row5", {b(0.25, 1.0, 2.0), g(0.75, -5.0, 3.0)}},
        {"decomp_row6", {g(0.3, -1.0, 5.0), g(0.2, -2.0, 5.0), g(0.5, 1.4, 5.0)}},
        {"decomp_row7", {g(0.35, -6.0, 1.0), b(0.3, 1.0, 2.0), chi(0.35, 9.0)}},
    };
    return t;
}

}  // namespace

NoiseModel preset(std::string_view name) {
    const auto& t = table();
    auto it = t.find(name);
    if (it == t.end()) throw ConfigError("unknown noise preset '" + std::string(name) + "'");
    return NoiseModel(it->first, it->second);
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : table()) out.push_back(k);
    return out;
}

NoiseModel resolve(std::string_view name_or_path) {
    if (table().find(name_or_path) != table().end()) return preset(name_or_path);
    std::filesystem::path p{std::string(name_or_path)};
    if (std::filesystem::exists(p)) return load_noise_model(p);
    throw ConfigError("'" + std::string(name_or_path) + "' is neither a noise preset nor a readable file");
}

}  // namespace ndd::noise
