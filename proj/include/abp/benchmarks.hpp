#pragma once

#include "abp/features.hpp"
#include "abp/mdp.hpp"

#include <array>
#include <vector>

namespace abp {

/// 1-D chain with Gaussian-noise moves. Action 0 goes right, action 1 left.
struct ChainSpec {
    int n_states = 200;
    double noise_sigma = 3.0;
    double gamma = 0.95;
    int init_state = 130; // 1-indexed

    void validate() const;
};

/// Grid-discretized underpowered-car climb. Actions: reverse, coast, forward.
struct MountainCarSpec {
    int grid_pos = 60;
    int grid_vel = 60;
    double gamma = 0.99;
    double goal_reward = 1.0;
    int n_sample_states = 200;

    void validate() const;
};

/// 3-CNF formula: each clause holds exactly three signed variable indices
/// (1-based; negative means negated). No clause repeats a variable.
struct CnfFormula {
    int n_vars = 0;
    std::vector<std::array<int, 3>> clauses;

    void validate() const;
    /// Exhaustive satisfiability check (ground truth for small formulas).
    bool satisfiable() const;
};

/// Builds the chain model: moves of +-1 with renormalized Gaussian noise,
/// rewards sin(i/20) for right and cos(i/20) for left, point-mass start.
TabularMdp make_chain(const ChainSpec& spec);

/// Mountain-car grid model plus helpers for its feature bases and samples.
struct MountainCarModel {
    TabularMdp mdp;
    std::vector<std::array<double, 2>> grid_points; // (position, velocity) per grid state
    int absorbing_state = 0;                        // index of the terminal state
};
MountainCarModel make_mountain_car(const MountainCarSpec& spec);

/// Hat-function basis on a feature_grid x feature_grid lattice over the car's
/// state space; the absorbing state gets an all-zero row (its value is
/// pinned to zero, matching the optimal value there).
FeatureBasis mountain_car_basis(const MountainCarModel& model, int feature_grid);

/// SAT-to-MDP reduction: one state per clause, one per literal occurrence,
/// plus an anchor state whose feasibility constraint pins the shared clause
/// feature from below. Clause states expose 3 actions; everywhere else all
/// action slots repeat the single real action.
struct SatReduction {
    TabularMdp mdp;
    FeatureBasis basis;
    std::vector<int> clause_states;   // state index per clause
    std::vector<int> literal_states;  // 3 per clause, clause-major
    int anchor_state = 0;
};
SatReduction sat_to_mdp(const CnfFormula& formula, double gamma, bool with_constant);

/// Seeded dense-ish random MDP: row-stochastic transitions, rewards in [0,1],
/// uniform initial distribution. sparsity in [0,1) prunes successor states.
TabularMdp random_mdp(int n_states, int n_actions, unsigned long seed, double sparsity = 0.0);

/// The frozen 2-state/2-action fixture used across the test-suites.
TabularMdp fixture_m2();

} // namespace abp
