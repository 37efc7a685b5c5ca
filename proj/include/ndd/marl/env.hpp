#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "ndd/numcore/random.hpp"

namespace ndd::marl {

using Observations = std::vector<Eigen::VectorXd>;
using JointAction = std::vector<std::size_t>;

struct StepResult {
    Observations observations;
    double reward = 0.0;  // noise-free global reward
    bool done = false;
};

/// Dec-POMDP with a shared global reward. Every agent picks from the same
/// discrete action set and sees a fixed-size observation vector.
class DecPomdpEnv {
public:
    virtual ~DecPomdpEnv() = default;
    virtual std::string name() const = 0;
    virtual std::size_t agents() const = 0;
    virtual std::size_t actions() const = 0;
    virtual std::size_t observation_size() const = 0;
    virtual std::size_t horizon() const = 0;
    virtual Observations reset(numcore::RandomSource& rng) = 0;
    virtual StepResult step(const JointAction& actions) = 0;
    virtual std::unique_ptr<DecPomdpEnv> clone() const = 0;
};

using Cell = std::array<int, 2>;

/// N agents cover N landmarks on a grid. Actions: stay, up, down, left,
/// right (moves off the edge are clamped, or wrap in toroidal mode).
/// Landmarks are fixed per instance; agents start on distinct random cells.
/// Reward: minus the sum over landmarks of the Manhattan distance to the
/// nearest agent. Observation: own cell and the offset to each landmark,
/// divided by (grid - 1).
class CoopSpread final : public DecPomdpEnv {
public:
    CoopSpread(std::size_t agents, std::size_t grid, std::uint64_t layout_seed = 0, std::size_t horizon = 25,
               bool toroidal = false);

    std::string name() const override { return "coop_spread"; }
    std::size_t agents() const override { return n_; }
    std::size_t actions() const override { return 5; }
    std::size_t observation_size() const override { return 2 + 2 * n_; }
    std::size_t horizon() const override { return horizon_; }
    Observations reset(numcore::RandomSource& rng) override;
    StepResult step(const JointAction& actions) override;
    std::unique_ptr<DecPomdpEnv> clone() const override { return std::make_unique<CoopSpread>(*this); }

    std::size_t grid() const noexcept { return grid_; }
    bool toroidal() const noexcept { return toroidal_; }
    const std::vector<Cell>& agent_cells() const noexcept { return agents_; }
    const std::vector<Cell>& landmark_cells() const noexcept { return landmarks_; }
    /// Places agents and landmarks directly; resets the step counter.
    void set_state(std::vector<Cell> agent_cells, std::vector<Cell> landmark_cells);
    double reward() const;
    Observations observe() const;
    Cell move(Cell c, std::size_t action) const;
    int distance(Cell a, Cell b) const;

private:
    std::size_t n_, grid_, horizon_;
    bool toroidal_;
    std::vector<Cell> agents_, landmarks_;
    std::size_t t_ = 0;
};

/// One-step cooperative game: reward = payoff(joint action), observation is
/// the constant 1.
class MatrixGame final : public DecPomdpEnv {
public:
    MatrixGame(std::size_t agents, std::size_t actions, std::vector<double> payoff);

    std::string name() const override { return "matrix_game"; }
    std::size_t agents() const override { return n_; }
    std::size_t actions() const override { return a_; }
    std::size_t observation_size() const override { return 1; }
    std::size_t horizon() const override { return 1; }
    Observations reset(numcore::RandomSource& rng) override;
    StepResult step(const JointAction& actions) override;
    std::unique_ptr<DecPomdpEnv> clone() const override { return std::make_unique<MatrixGame>(*this); }

    /// Row-major over agents: index = sum_i a_i * actions^(N-1-i).
    double payoff(const JointAction& a) const;

private:
    std::size_t n_, a_;
    std::vector<double> payoff_;
};

std::unique_ptr<DecPomdpEnv> coop_spread_env(std::size_t agents, std::size_t grid, std::uint64_t layout_seed = 0,
                                             std::size_t horizon = 25, bool toroidal = false);

}  // namespace ndd::marl
