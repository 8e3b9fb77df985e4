#pragma once

#include "abp/bilinear.hpp"
#include "abp/features.hpp"
#include "abp/mdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace abp {

/// Per-state upper bound on discounted state visitation frequencies.
struct UBound {
    Vector per_state; // nonnegative

    /// Strictly diagonal matrix over (s,a) pairs with U((s,a),(s,a)) = bound(s).
    Matrix matrix_form(int n_actions) const;

    /// Constant bound 1/(n(1-gamma)) per state, splitting the total
    /// visitation mass 1/(1-gamma) uniformly.
    static UBound constant_default(int n_states, double discount);
};

enum class AbpKind { robust_linf, expected_l1, weighted_u, hybrid };

/// Which Bellman-residual norm the bilinear program minimizes.
struct AbpVariant {
    AbpKind kind = AbpKind::robust_linf;
    std::optional<UBound> ubound; // required for weighted_u and hybrid
    std::optional<double> k;      // required for hybrid

    static AbpVariant robust();
    static AbpVariant expected();
    static AbpVariant weighted(UBound ub);
    static AbpVariant hybrid(UBound ub, double k);

    void validate(int n_states, int n_actions) const;
    std::string name() const;
};

/// One residual constraint: phi_row . x >= rhs encodes
/// v(s) - gamma E[v(s') | s,a] >= r(s,a) over representable v = Phi x.
struct ResidualRow {
    int state;
    int action;
    Vector phi_row;
    double rhs;
};

/// The residual constraint system a solver actually works on. Built either
/// from the full model (one row per state-action pair, state-major) or from
/// a sample set (rows only for sampled pairs).
struct ResidualSystem {
    int n_model_states = 0;
    int n_actions = 0;
    int n_features = 0;
    double discount = 0.0;
    std::vector<ResidualRow> rows;
    std::vector<int> covered_states;               // states with at least one row
    std::vector<std::vector<int>> rows_of_state;   // row ids per covered state
    Vector alpha_phi;                              // Phi^T alpha (empty if not supplied)
    std::vector<int> dropped_states;               // requested states with no rows

    static ResidualSystem from_model(const TabularMdp& mdp, const FeatureBasis& basis);

    int n_rows() const { return static_cast<int>(rows.size()); }
    /// Residuals phi_row . x - rhs for every row.
    Vector residuals(const Vector& coeffs) const;
    /// max over covered states of |min_a residual(s,a)|, the sup-norm Bellman
    /// residual of v = Phi x restricted to the covered part of the model.
    double bellman_residual_linf(const Vector& coeffs) const;
    /// Deterministic action choice per covered state minimizing the residual
    /// (equivalently, the greedy action); ties to the lowest action index.
    std::vector<int> greedy_actions(const Vector& coeffs) const;
};

/// Result of the policy-fixed right-block LP.
struct PolicyLpResult {
    ValueFunction value;
    Vector coeffs;
    Vector lambda; // one entry per system row
    double lambda_prime = 0.0;
    double objective = 0.0;
};

/// Full solution of an approximate bilinear program.
struct AbpSolution {
    ValueFunction value;
    Vector coeffs;
    Policy policy;
    Vector lambda; // over (s,a) pairs, state-major
    double lambda_prime = 0.0;
    double objective = 0.0;
    double residual_linf = 0.0;
    BilinearTrace trace;
};

/// Assembles the bilinear program for the requested variant.
///
/// Left block: policy variables pi (state-major) with B pi = 1, pi >= 0.
/// Right block layout: y = lambda (one per pair); z = [coeffs (free) |
/// lambda' (absent for weighted_u) | surplus of A Phi x - b >= 0 | surplus of
/// lambda + lambda' d - (A Phi x - b) >= 0].
SeparableBilinearProgram build_abp(const TabularMdp& mdp, const FeatureBasis& basis,
                                   const AbpVariant& variant);

/// Same construction over an explicit residual system (used for sampled
/// programs). Only the robust variant is supported without alpha weights.
SeparableBilinearProgram build_abp_from_system(const ResidualSystem& sys,
                                               const AbpVariant& variant);

/// Right-block LP with the policy fixed: minimizes the variant's weighted
/// residual bound over representable transitive-feasible value functions.
PolicyLpResult f2_policy_lp(const TabularMdp& mdp, const FeatureBasis& basis, const Policy& pol,
                            const AbpVariant& variant);

enum class PolicyStepMode { argmin_lambda, greedy_value };

/// Exact left-block optimum: either the per-state argmin of lambda or the
/// greedy policy of the current value function. Both are deterministic with
/// ties broken toward the lowest action index.
Policy policy_step(const Vector& lambda, double lambda_prime, PolicyStepMode mode,
                   const TabularMdp& mdp, const ValueFunction& value);

/// Alternating minimization of the variant's bilinear program from n_starts
/// random deterministic policies, keeping the best run.
AbpSolution solve_abp(const TabularMdp& mdp, const FeatureBasis& basis, const AbpVariant& variant,
                      int n_starts, unsigned long seed);

/// Same solver over an explicit residual system; actions align with
/// sys.covered_states.
struct SystemAbpSolution {
    Vector coeffs;
    std::vector<int> actions;
    Vector lambda;
    double lambda_prime = 0.0;
    double objective = 0.0;
    double residual_linf = 0.0;
    BilinearTrace trace;
};
SystemAbpSolution solve_abp_on_system(const ResidualSystem& sys, const AbpVariant& variant,
                                      int n_starts, unsigned long seed,
                                      const MultistartCombine* combine = nullptr);

/// Exact optimum by enumerating deterministic policies (duplicate actions
/// collapse to one representative). Guarded: the number of distinct
/// deterministic policies must not exceed 4096.
AbpSolution abp_exact_oracle(const TabularMdp& mdp, const FeatureBasis& basis,
                             const AbpVariant& variant);

/// Enumeration optimum over the deterministic policies of a residual system;
/// actions are aligned with sys.covered_states. Same guard as above.
struct SystemOracleResult {
    PolicyLpResult lp;
    std::vector<int> actions;
};
SystemOracleResult abp_oracle_on_system(const ResidualSystem& sys, const AbpVariant& variant);

/// c-weighted sum of the k largest |x(i)|; fractional k interpolates the
/// next-largest component.
double hybrid_norm(const Vector& x, const Vector& c, double k);

/// Approximate linear program: min c . v over representable v with A v >= b.
ValueFunction solve_alp(const TabularMdp& mdp, const FeatureBasis& basis, const Vector& c_obj);

struct AlpResult {
    LpStatus status = LpStatus::infeasible;
    ValueFunction value; // on the model states (optimal only)
    Vector coeffs;
};

/// Sampled-constraint variant exposing the LP status: with incomplete rows
/// the program may legitimately be unbounded.
AlpResult solve_alp_system(const ResidualSystem& sys, const FeatureBasis& basis,
                           const Vector& c_over_states);

enum class ApiInner { l2, linf, oapi };

struct ApiResult {
    ValueFunction value;
    Policy policy;
    std::vector<double> residual_trace; // sup-norm Bellman residual per iteration
    bool converged = false;
    int iterations = 0;
    std::vector<std::string> warnings;
};

/// Approximate policy iteration with a pluggable inner approximation:
///  - l2:   least-squares residual fit for the fixed policy
///  - linf: sup-norm residual fit (two-sided bound)
///  - oapi: optimistic variant keeping all residuals nonnegative; its
///          residual trace is nonincreasing and it always terminates.
ApiResult api(const TabularMdp& mdp, const FeatureBasis& basis, ApiInner inner, int max_iters,
              unsigned long seed);

/// System-level API used for sampled problems; returns coefficients and the
/// deterministic action per covered state.
struct SystemApiResult {
    Vector coeffs;
    std::vector<int> actions; // aligned with sys.covered_states
    std::vector<double> residual_trace;
    bool converged = false;
    int iterations = 0;
    std::vector<std::string> warnings;
};
SystemApiResult api_on_system(const ResidualSystem& sys, ApiInner inner, int max_iters,
                              unsigned long seed);

/// Shifts a transitive-feasible value function down by half its relaxed
/// residual range: the new function halves the sup-norm Bellman residual and
/// keeps the same greedy policy.
ValueFunction shift_halve(const TabularMdp& mdp, const ValueFunction& v);

} // namespace abp
