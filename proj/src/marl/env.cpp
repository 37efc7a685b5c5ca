#include "ndd/marl/env.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include "ndd/error.hpp"

namespace ndd::marl {

CoopSpread::CoopSpread(std::size_t agents, std::size_t grid, std::uint64_t layout_seed, std::size_t horizon,
                       bool toroidal)
    : n_(agents), grid_(grid), horizon_(horizon), toroidal_(toroidal) {
    if (agents == 0 || grid < 2) throw ConfigError("coop_spread: need at least one agent and a grid of size >= 2");
    if (agents > grid * grid) throw ConfigError("coop_spread: more agents than grid cells");
    if (horizon == 0) throw ConfigError("coop_spread: horizon must be positive");
    numcore::RandomSource rng(layout_seed, 0x1a7d);
    std::vector<int> cells(grid * grid);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
    for (std::size_t i = 0; i < agents; ++i) {
        std::swap(cells[i], cells[i + rng.index(cells.size() - i)]);
        landmarks_.push_back({cells[i] / static_cast<int>(grid), cells[i] % static_cast<int>(grid)});
    }
    agents_ = landmarks_;
}

Observations CoopSpread::reset(numcore::RandomSource& rng) {
    std::vector<int> cells(grid_ * grid_);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
    agents_.clear();
    for (std::size_t i = 0; i < n_; ++i) {
        std::swap(cells[i], cells[i + rng.index(cells.size() - i)]);
        agents_.push_back({cells[i] / static_cast<int>(grid_), cells[i] % static_cast<int>(grid_)});
    }
    t_ = 0;
    return observe();
}

void CoopSpread::set_state(std::vector<Cell> agent_cells, std::vector<Cell> landmark_cells) {
    if (agent_cells.size() != n_ || landmark_cells.size() != n_) throw ShapeError("coop_spread: wrong cell count");
    const int g = static_cast<int>(grid_);
    for (const auto& v : {agent_cells, landmark_cells})
        for (const auto& c : v)
            if (c[0] < 0 || c[1] < 0 || c[0] >= g || c[1] >= g) throw DomainError("coop_spread: cell off the grid");
    agents_ = std::move(agent_cells);
    landmarks_ = std::move(landmark_cells);
    t_ = 0;
}

Cell CoopSpread::move(Cell c, std::size_t action) const {
    static constexpr int dr[5] = {0, -1, 1, 0, 0};
    static constexpr int dc[5] = {0, 0, 0, -1, 1};
    if (action >= 5) throw DomainError("coop_spread: action out of range");
    const int g = static_cast<int>(grid_);
    Cell n{c[0] + dr[action], c[1] + dc[action]};
    for (auto& v : n) v = toroidal_ ? (v + g) % g : std::clamp(v, 0, g - 1);
    return n;
}

int CoopSpread::distance(Cell a, Cell b) const {
    int d = 0;
    const int g = static_cast<int>(grid_);
    for (int k = 0; k < 2; ++k) {
        int x = std::abs(a[k] - b[k]);
        if (toroidal_) x = std::min(x, g - x);
        d += x;
    }
    return d;
}

double CoopSpread::reward() const {
    double r = 0.0;
    for (const auto& l : landmarks_) {
        int best = std::numeric_limits<int>::max();
        for (const auto& a : agents_) best = std::min(best, distance(a, l));
        r -= best;
    }
    return r;
}

Observations CoopSpread::observe() const {
    const double s = static_cast<double>(grid_ - 1);
    const int g = static_cast<int>(grid_);
    Observations obs;
    for (const auto& a : agents_) {
        Eigen::VectorXd o(static_cast<Eigen::Index>(observation_size()));
        o(0) = a[0] / s;
        o(1) = a[1] / s;
        for (std::size_t j = 0; j < n_; ++j)
            for (int k = 0; k < 2; ++k) {
                int d = landmarks_[j][k] - a[k];
                if (toroidal_) {
                    d = ((d % g) + g) % g;
                    if (d > g / 2) d -= g;
                }
                o(static_cast<Eigen::Index>(2 + 2 * j + k)) = d / s;
            }
        obs.push_back(std::move(o));
    }
    return obs;
}

StepResult CoopSpread::step(const JointAction& actions) {
    if (actions.size() != n_) throw ShapeError("coop_spread: expected one action per agent");
    if (t_ >= horizon_) throw StateError("coop_spread: episode already finished");
    for (std::size_t i = 0; i < n_; ++i) agents_[i] = move(agents_[i], actions[i]);
    ++t_;
    return {observe(), reward(), t_ >= horizon_};
}

MatrixGame::MatrixGame(std::size_t agents, std::size_t actions, std::vector<double> payoff)
    : n_(agents), a_(actions), payoff_(std::move(payoff)) {
    std::size_t size = 1;
    for (std::size_t i = 0; i < agents; ++i) size *= actions;
    if (agents == 0 || actions == 0 || payoff_.size() != size)
        throw ConfigError("matrix_game: payoff must have actions^agents entries");
}

Observations MatrixGame::reset(numcore::RandomSource&) { return Observations(n_, Eigen::VectorXd::Ones(1)); }

double MatrixGame::payoff(const JointAction& a) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n_; ++i) {
        if (a[i] >= a_) throw DomainError("matrix_game: action out of range");
        idx = idx * a_ + a[i];
    }
    return payoff_[idx];
}

StepResult MatrixGame::step(const JointAction& actions) {
    if (actions.size() != n_) throw ShapeError("matrix_game: expected one action per agent");
    return {Observations(n_, Eigen::VectorXd::Ones(1)), payoff(actions), true};
}

std::unique_ptr<DecPomdpEnv> coop_spread_env(std::size_t agents, std::size_t grid, std::uint64_t layout_seed,
                                             std::size_t horizon, bool toroidal) {
    return std::make_unique<CoopSpread>(agents, grid, layout_seed, horizon, toroidal);
}

}  // namespace ndd::marl
