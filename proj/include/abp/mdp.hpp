#pragma once

#include "abp/linalg.hpp"

#include <string>
#include <vector>

namespace abp {

/// A value function is a plain vector indexed by state.
using ValueFunction = Vector;

/// Stochastic stationary policy: one probability row per state.
struct Policy {
    Matrix probs; // n_states x n_actions, rows sum to 1

    Policy() = default;
    explicit Policy(Matrix p) : probs(std::move(p)) {}

    /// Builds the deterministic policy taking actions[s] in state s.
    static Policy deterministic(const std::vector<int>& actions, int n_actions);

    /// Uniformly random policy over all actions.
    static Policy uniform(int n_states, int n_actions);

    int n_states() const { return static_cast<int>(probs.rows()); }
    int n_actions() const { return static_cast<int>(probs.cols()); }

    /// True when every row is a unit basis vector.
    bool is_deterministic(double tol = 1e-12) const;

    /// Per-state argmax action; meaningful for deterministic policies.
    std::vector<int> actions() const;

    /// Row-major (state-major) flattening of the probability table.
    Vector flatten() const;

    /// Throws invalid_argument when rows do not form distributions.
    void validate() const;
};

/// Finite discounted MDP with per-action transition matrices.
///
/// Transition matrices are stored sparse so that grid-discretized benchmark
/// models with thousands of states stay cheap; small fixtures can be built
/// from dense matrices via make().
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<SpMat> transition; // one n x n row-stochastic matrix per action
    Matrix reward;                 // n_states x n_actions
    double discount = 0.0;         // in (0,1)
    Vector initial_dist;           // nonnegative, sums to 1

    static TabularMdp make(const std::vector<Matrix>& transition_dense, const Matrix& reward,
                           double discount, const Vector& initial_dist);
    static TabularMdp make_sparse(std::vector<SpMat> transition, Matrix reward, double discount,
                                  Vector initial_dist);

    /// Checks all structural invariants; throws invalid_argument with one
    /// line per violation.
    void validate() const;

    /// Transition matrix of a fixed policy, P_pi(s,s') = sum_a pi(s,a) P(s,a,s').
    SpMat policy_transition(const Policy& pol) const;

    /// Reward vector of a fixed policy, r_pi(s) = sum_a pi(s,a) r(s,a).
    Vector policy_reward(const Policy& pol) const;

    /// Flattened (state-major) index of the pair (s,a).
    int pair_index(int s, int a) const { return s * n_actions + a; }
};

/// Discounted state-visitation frequencies of a policy.
struct VisitFrequencies {
    Vector per_state;         // u_pi, solves (I - gamma P_pi^T) u = alpha
    Matrix per_state_action;  // u(s,a) = u_pi(s) * pi(s,a)
};

/// One-step lookahead: (Lv)(s) = max_a [ r(s,a) + gamma sum_s' P(s,a,s') v(s') ].
ValueFunction bellman_backup(const TabularMdp& mdp, const ValueFunction& v);

/// Fixed-policy lookahead (L_pi v)(s) = sum_a pi(s,a) [ r(s,a) + gamma (P_a v)(s) ].
ValueFunction bellman_backup_policy(const TabularMdp& mdp, const Policy& pol,
                                    const ValueFunction& v);

/// Deterministic policy choosing the maximizing action of the one-step
/// backup; ties go to the lowest action index.
Policy greedy_policy(const TabularMdp& mdp, const ValueFunction& v);

/// Exact policy value: solves (I - gamma P_pi) v = r_pi and verifies the
/// fixed-point residual is below 1e-9.
ValueFunction evaluate_policy(const TabularMdp& mdp, const Policy& pol);

/// Discounted visitation frequencies; total per-state mass is 1/(1-gamma).
VisitFrequencies visitation_frequencies(const TabularMdp& mdp, const Policy& pol);

/// Optimal value function to the requested precision (value iteration
/// followed by a policy-iteration polish, so the result is exact up to the
/// linear-solve accuracy).
ValueFunction optimal_value(const TabularMdp& mdp, double tol = 1e-12);

/// alpha^T v* - alpha^T v_pi, always >= -1e-9.
double expected_policy_loss(const TabularMdp& mdp, const Policy& pol);

/// max_s |v*(s) - v_pi(s)|.
double robust_policy_loss(const TabularMdp& mdp, const Policy& pol);

/// Per-pair residual r(s,a) -> v(s) - gamma (P_a v)(s) - r(s,a), state-major.
/// Equals A v - b for the constraint matrix below.
Vector bellman_residual(const TabularMdp& mdp, const ValueFunction& v);

/// Constraint matrix A ((n_states*n_actions) x n_states, state-major rows)
/// with row (s,a) = e_s^T - gamma P(s,a,.)^T, and right-hand side b = rewards.
std::pair<Matrix, Vector> constraint_matrix(const TabularMdp& mdp);

/// 0/1 aggregation matrix B (n_states x n_states*n_actions):
/// B pi_flat = 1 exactly when each policy row sums to one.
Matrix constraint_matrix_B(const TabularMdp& mdp);

/// v >= Lv - eps*1 componentwise (with the shared roundoff slack).
bool is_transitive_feasible(const TabularMdp& mdp, const ValueFunction& v, double eps = 0.0);

} // namespace abp
