#include "abp/formulations.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

namespace abp {

namespace {

struct ResolvedVariant {
    AbpKind kind = AbpKind::robust_linf;
    Vector ubar; // per model state, weighted/hybrid only
    double k = 0.0;

    bool needs_ubar() const { return kind == AbpKind::weighted_u || kind == AbpKind::hybrid; }
    bool has_lambda_prime() const { return kind != AbpKind::weighted_u; }
    bool needs_alpha() const {
        return kind == AbpKind::expected_l1 || kind == AbpKind::weighted_u;
    }

    double row_weight_scale(int state) const { return needs_ubar() ? ubar(state) : 1.0; }
    double lambda_prime_cost() const { return kind == AbpKind::hybrid ? k : 1.0; }
    // Coefficient of lambda' inside the residual cover constraint.
    double cover_coef(int state) const {
        return kind == AbpKind::hybrid ? 1.0 / ubar(state) : 1.0;
    }
};

ResolvedVariant resolve_variant(const AbpVariant& variant, int n_states, int n_actions) {
    variant.validate(n_states, n_actions);
    ResolvedVariant rv;
    rv.kind = variant.kind;
    if (variant.ubound) rv.ubar = variant.ubound->per_state;
    if (variant.k) rv.k = *variant.k;
    return rv;
}

// Right-block LP with fixed per-row policy weights. Only rows with positive
// weight need an explicit residual-excess variable; the remaining lambdas
// are reconstructed afterwards from the cover constraint.
PolicyLpResult f2_on_system(const ResidualSystem& sys, const Vector& row_weights,
                            const ResolvedVariant& rv) {
    const int n_rows = sys.n_rows();
    const int m = sys.n_features;
    if (row_weights.size() != n_rows)
        throw std::invalid_argument("row weight vector does not match the system");
    if (rv.needs_alpha() && sys.alpha_phi.size() != m)
        throw std::invalid_argument("this variant needs initial-distribution weights");

    std::vector<int> mu_rows;
    for (int i = 0; i < n_rows; ++i)
        if (row_weights(i) > 0.0) mu_rows.push_back(i);
    const int j_count = static_cast<int>(mu_rows.size());
    const bool has_lp = rv.has_lambda_prime();
    const int n_vars = m + j_count + (has_lp ? 1 : 0);
    const int lp_col = m + j_count;

    LinearProgramSpec lp = LinearProgramSpec::with_vars(n_vars);
    for (int j = 0; j < m; ++j) lp.set_free(j);

    lp.ineq_matrix = Matrix::Zero(n_rows + j_count, n_vars);
    lp.ineq_rhs = Vector::Zero(n_rows + j_count);
    for (int i = 0; i < n_rows; ++i) {
        lp.ineq_matrix.row(i).head(m) = sys.rows[i].phi_row.transpose();
        lp.ineq_rhs(i) = sys.rows[i].rhs;
    }
    for (int j = 0; j < j_count; ++j) {
        const ResidualRow& row = sys.rows[mu_rows[j]];
        int r = n_rows + j;
        lp.ineq_matrix.row(r).head(m) = -row.phi_row.transpose();
        lp.ineq_matrix(r, m + j) = 1.0;
        if (has_lp) lp.ineq_matrix(r, lp_col) = rv.cover_coef(row.state);
        lp.ineq_rhs(r) = -row.rhs;
    }

    for (int j = 0; j < j_count; ++j) {
        const ResidualRow& row = sys.rows[mu_rows[j]];
        lp.objective(m + j) = row_weights(mu_rows[j]) * rv.row_weight_scale(row.state);
    }
    if (has_lp) lp.objective(lp_col) = rv.lambda_prime_cost();
    if (rv.kind == AbpKind::expected_l1)
        lp.objective.head(m) = -(1.0 - sys.discount) * sys.alpha_phi;
    else if (rv.kind == AbpKind::weighted_u)
        lp.objective.head(m) = -sys.alpha_phi;

    LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::infeasible)
        throw std::runtime_error("policy-fixed residual program is infeasible");
    if (sol.status == LpStatus::unbounded)
        throw std::runtime_error("policy-fixed residual program is unbounded");

    PolicyLpResult out;
    out.coeffs = sol.x.head(m);
    out.lambda_prime = has_lp ? std::max(sol.x(lp_col), 0.0) : 0.0;
    out.objective = sol.objective_value;
    Vector resid = sys.residuals(out.coeffs);
    out.lambda = Vector::Zero(n_rows);
    for (int i = 0; i < n_rows; ++i) {
        double cover = has_lp ? out.lambda_prime * rv.cover_coef(sys.rows[i].state) : 0.0;
        out.lambda(i) = std::max(resid(i) - cover, 0.0);
    }
    return out;
}

Vector weights_from_policy(const ResidualSystem& sys, const Policy& pol) {
    Vector w(sys.n_rows());
    for (int i = 0; i < sys.n_rows(); ++i)
        w(i) = pol.probs(sys.rows[i].state, sys.rows[i].action);
    return w;
}

} // namespace

Matrix UBound::matrix_form(int n_actions) const {
    const int n = static_cast<int>(per_state.size());
    Matrix u = Matrix::Zero(n * n_actions, n * n_actions);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < n_actions; ++a) u(s * n_actions + a, s * n_actions + a) = per_state(s);
    return u;
}

UBound UBound::constant_default(int n_states, double discount) {
    UBound ub;
    ub.per_state = Vector::Constant(n_states, 1.0 / (n_states * (1.0 - discount)));
    return ub;
}

AbpVariant AbpVariant::robust() { return AbpVariant{AbpKind::robust_linf, std::nullopt, std::nullopt}; }
AbpVariant AbpVariant::expected() {
    return AbpVariant{AbpKind::expected_l1, std::nullopt, std::nullopt};
}
AbpVariant AbpVariant::weighted(UBound ub) {
    return AbpVariant{AbpKind::weighted_u, std::move(ub), std::nullopt};
}
AbpVariant AbpVariant::hybrid(UBound ub, double k) {
    return AbpVariant{AbpKind::hybrid, std::move(ub), k};
}

void AbpVariant::validate(int n_states, int n_actions) const {
    const bool needs_u = kind == AbpKind::weighted_u || kind == AbpKind::hybrid;
    if (needs_u) {
        if (!ubound) throw std::invalid_argument(name() + " variant needs a visitation bound");
        if (ubound->per_state.size() != n_states)
            throw std::invalid_argument("visitation bound length does not match the model");
        if (ubound->per_state.minCoeff() < 0.0)
            throw std::invalid_argument("visitation bound must be nonnegative");
    }
    if (kind == AbpKind::hybrid) {
        if (!k) throw std::invalid_argument("hybrid variant needs the parameter k");
        if (*k < 0.0 || *k > double(n_states) * n_actions)
            throw std::invalid_argument("hybrid k must lie in [0, n_states*n_actions]");
        if (ubound->per_state.minCoeff() <= 0.0)
            throw std::invalid_argument("hybrid variant needs strictly positive bounds");
    }
}

std::string AbpVariant::name() const {
    switch (kind) {
    case AbpKind::robust_linf: return "robust_linf";
    case AbpKind::expected_l1: return "expected_l1";
    case AbpKind::weighted_u: return "weighted_u";
    case AbpKind::hybrid: return "hybrid";
    }
    return "?";
}

ResidualSystem ResidualSystem::from_model(const TabularMdp& mdp, const FeatureBasis& basis) {
    if (basis.n_states() != mdp.n_states)
        throw std::invalid_argument("feature basis does not match the model");
    ResidualSystem sys;
    sys.n_model_states = mdp.n_states;
    sys.n_actions = mdp.n_actions;
    sys.n_features = basis.n_features();
    sys.discount = mdp.discount;
    sys.rows.reserve(static_cast<size_t>(mdp.n_states) * mdp.n_actions);
    std::vector<Matrix> p_phi(mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a) p_phi[a] = mdp.transition[a] * basis.matrix;
    sys.rows_of_state.resize(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
        sys.covered_states.push_back(s);
        for (int a = 0; a < mdp.n_actions; ++a) {
            ResidualRow row;
            row.state = s;
            row.action = a;
            row.phi_row = basis.matrix.row(s).transpose() - mdp.discount * p_phi[a].row(s).transpose();
            row.rhs = mdp.reward(s, a);
            sys.rows_of_state[s].push_back(static_cast<int>(sys.rows.size()));
            sys.rows.push_back(std::move(row));
        }
    }
    sys.alpha_phi = basis.matrix.transpose() * mdp.initial_dist;
    return sys;
}

Vector ResidualSystem::residuals(const Vector& coeffs) const {
    Vector out(n_rows());
    for (int i = 0; i < n_rows(); ++i) out(i) = rows[i].phi_row.dot(coeffs) - rows[i].rhs;
    return out;
}

double ResidualSystem::bellman_residual_linf(const Vector& coeffs) const {
    Vector resid = residuals(coeffs);
    double worst = 0.0;
    for (int s : covered_states) {
        double best = std::numeric_limits<double>::infinity();
        for (int i : rows_of_state[s]) best = std::min(best, resid(i));
        worst = std::max(worst, std::abs(best));
    }
    return worst;
}

std::vector<int> ResidualSystem::greedy_actions(const Vector& coeffs) const {
    Vector resid = residuals(coeffs);
    std::vector<int> actions;
    actions.reserve(covered_states.size());
    for (int s : covered_states) {
        int best_row = rows_of_state[s].front();
        for (int i : rows_of_state[s])
            if (resid(i) < resid(best_row)) best_row = i; // strict keeps the lowest action
        actions.push_back(rows[best_row].action);
    }
    return actions;
}

SeparableBilinearProgram build_abp_from_system(const ResidualSystem& sys,
                                               const AbpVariant& variant) {
    ResolvedVariant rv = resolve_variant(variant, sys.n_model_states, sys.n_actions);
    if (rv.needs_alpha() && sys.alpha_phi.size() != sys.n_features)
        throw std::invalid_argument("this variant needs initial-distribution weights");

    const int n = sys.n_rows();
    const int m = sys.n_features;
    const bool has_lp = rv.has_lambda_prime();
    const int nz = m + (has_lp ? 1 : 0) + 2 * n; // coeffs, lambda', two surplus groups
    const int lp_col = m;
    const int s1_col = m + (has_lp ? 1 : 0);
    const int s2_col = s1_col + n;

    SeparableBilinearProgram bp;
    // Left block: policy over the covered rows, one simplex per covered state.
    bp.s1 = Vector::Zero(0);
    bp.r1 = Vector::Zero(n);
    bp.b1_mat = Matrix::Zero(static_cast<int>(sys.covered_states.size()), 0);
    bp.a1 = Matrix::Zero(static_cast<int>(sys.covered_states.size()), n);
    for (size_t g = 0; g < sys.covered_states.size(); ++g)
        for (int i : sys.rows_of_state[sys.covered_states[g]]) bp.a1(static_cast<int>(g), i) = 1.0;
    bp.b1 = Vector::Ones(static_cast<int>(sys.covered_states.size()));
    bp.w_free = {};
    bp.x_free.assign(n, false);

    // Right block.
    bp.r2 = Vector::Zero(n);
    bp.s2 = Vector::Zero(nz);
    if (has_lp) bp.s2(lp_col) = rv.lambda_prime_cost();
    if (rv.kind == AbpKind::expected_l1)
        bp.s2.head(m) = -(1.0 - sys.discount) * sys.alpha_phi;
    else if (rv.kind == AbpKind::weighted_u)
        bp.s2.head(m) = -sys.alpha_phi;

    bp.a2 = Matrix::Zero(2 * n, n);
    bp.b2_mat = Matrix::Zero(2 * n, nz);
    bp.b2 = Vector::Zero(2 * n);
    for (int i = 0; i < n; ++i) {
        // phi_row . x - s1_i = rhs_i
        bp.b2_mat.row(i).segment(0, m) = sys.rows[i].phi_row.transpose();
        bp.b2_mat(i, s1_col + i) = -1.0;
        bp.b2(i) = sys.rows[i].rhs;
        // lambda_i + d_i lambda' - (phi_row . x - rhs_i) - s2_i = 0
        int r = n + i;
        bp.a2(r, i) = 1.0;
        bp.b2_mat.row(r).segment(0, m) = -sys.rows[i].phi_row.transpose();
        if (has_lp) bp.b2_mat(r, lp_col) = rv.cover_coef(sys.rows[i].state);
        bp.b2_mat(r, s2_col + i) = -1.0;
        bp.b2(r) = -sys.rows[i].rhs;
    }
    bp.y_free.assign(n, false);
    bp.z_free.assign(nz, false);
    for (int j = 0; j < m; ++j) bp.z_free[j] = true;

    bp.coupling = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) bp.coupling(i, i) = rv.row_weight_scale(sys.rows[i].state);
    bp.validate();
    return bp;
}

SeparableBilinearProgram build_abp(const TabularMdp& mdp, const FeatureBasis& basis,
                                   const AbpVariant& variant) {
    if (!check_assumption_one(basis))
        throw std::invalid_argument("constant functions must be representable");
    return build_abp_from_system(ResidualSystem::from_model(mdp, basis), variant);
}

PolicyLpResult f2_policy_lp(const TabularMdp& mdp, const FeatureBasis& basis, const Policy& pol,
                            const AbpVariant& variant) {
    pol.validate();
    ResidualSystem sys = ResidualSystem::from_model(mdp, basis);
    ResolvedVariant rv = resolve_variant(variant, mdp.n_states, mdp.n_actions);
    PolicyLpResult out = f2_on_system(sys, weights_from_policy(sys, pol), rv);
    out.value = represent(basis, out.coeffs);
    return out;
}

Policy policy_step(const Vector& lambda, double lambda_prime, PolicyStepMode mode,
                   const TabularMdp& mdp, const ValueFunction& value) {
    (void)lambda_prime; // the cover level does not change either argmin
    if (mode == PolicyStepMode::greedy_value) return greedy_policy(mdp, value);
    if (lambda.size() != mdp.n_states * mdp.n_actions)
        throw std::invalid_argument("lambda has the wrong length");
    std::vector<int> best(mdp.n_states, 0);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 1; a < mdp.n_actions; ++a)
            if (lambda(mdp.pair_index(s, a)) < lambda(mdp.pair_index(s, best[s]))) best[s] = a;
    return Policy::deterministic(best, mdp.n_actions);
}

namespace {

// Assembles the right-block point [lambda | coeffs | lambda' | surpluses]
// for the layout documented on build_abp_from_system.
Vector assemble_right_point(const ResidualSystem& sys, const ResolvedVariant& rv,
                            const PolicyLpResult& r) {
    const int n = sys.n_rows();
    const int m = sys.n_features;
    const bool has_lp = rv.has_lambda_prime();
    Vector right(n + m + (has_lp ? 1 : 0) + 2 * n);
    right.head(n) = r.lambda;
    right.segment(n, m) = r.coeffs;
    if (has_lp) right(n + m) = r.lambda_prime;
    Vector resid = sys.residuals(r.coeffs);
    const int s1_off = n + m + (has_lp ? 1 : 0);
    for (int i = 0; i < n; ++i) {
        double cover = has_lp ? r.lambda_prime * rv.cover_coef(sys.rows[i].state) : 0.0;
        right(s1_off + i) = std::max(resid(i), 0.0);
        right(s1_off + n + i) = std::max(r.lambda(i) + cover - resid(i), 0.0);
    }
    return right;
}

} // namespace

SystemAbpSolution solve_abp_on_system(const ResidualSystem& sys, const AbpVariant& variant,
                                      int n_starts, unsigned long seed,
                                      const MultistartCombine* combine) {
    ResolvedVariant rv = resolve_variant(variant, sys.n_model_states, sys.n_actions);
    SeparableBilinearProgram bp = build_abp_from_system(sys, variant);

    const int n = sys.n_rows();
    const int m = sys.n_features;

    // Structure-aware block optima: the right block is the policy-fixed
    // residual LP; the left block optimum is the greedy policy of the
    // current value function (it attains the per-state lambda minimum).
    BlockSteps steps;
    steps.right = [&](const SeparableBilinearProgram&, const Vector& left) {
        PolicyLpResult r = f2_on_system(sys, left, rv);
        return assemble_right_point(sys, rv, r);
    };
    steps.left = [&](const SeparableBilinearProgram&, const Vector& right) {
        Vector coeffs = right.segment(n, m);
        std::vector<int> actions = sys.greedy_actions(coeffs);
        Vector left = Vector::Zero(n);
        for (size_t g = 0; g < actions.size(); ++g) {
            int s = sys.covered_states[g];
            for (int i : sys.rows_of_state[s])
                if (sys.rows[i].action == actions[g]) left(i) = 1.0;
        }
        return left;
    };

    MultistartResult ms = solve_multistart(bp, n_starts, seed, combine, 500, &steps);

    SystemAbpSolution sol;
    const Vector& right = ms.best.final_right();
    sol.coeffs = right.segment(n, m);
    sol.lambda = right.head(n);
    sol.lambda_prime = rv.has_lambda_prime() ? right(n + m) : 0.0;
    sol.objective = ms.best.final_objective();
    sol.residual_linf = sys.bellman_residual_linf(sol.coeffs);
    const Vector& left = ms.best.final_left();
    sol.actions.reserve(sys.covered_states.size());
    for (int s : sys.covered_states) {
        int chosen = sys.rows[sys.rows_of_state[s].front()].action;
        for (int i : sys.rows_of_state[s])
            if (left(i) > 0.5) chosen = sys.rows[i].action;
        sol.actions.push_back(chosen);
    }
    sol.trace = std::move(ms.best);
    return sol;
}

AbpSolution solve_abp(const TabularMdp& mdp, const FeatureBasis& basis, const AbpVariant& variant,
                      int n_starts, unsigned long seed) {
    if (!check_assumption_one(basis))
        throw std::invalid_argument("constant functions must be representable");
    ResidualSystem sys = ResidualSystem::from_model(mdp, basis);

    MultistartCombine combine;
    const int n = sys.n_rows();
    const int m = sys.n_features;
    combine.extract = [&](const Vector& right) {
        return ValueFunction(basis.matrix * right.segment(n, m));
    };
    combine.feasible = [&](const Vector& v) {
        return bellman_residual(mdp, v).minCoeff() >= -kFeasSlack;
    };

    SystemAbpSolution s = solve_abp_on_system(sys, variant, n_starts, seed, &combine);

    AbpSolution sol;
    sol.coeffs = std::move(s.coeffs);
    sol.value = represent(basis, sol.coeffs);
    sol.lambda = std::move(s.lambda);
    sol.lambda_prime = s.lambda_prime;
    sol.objective = s.objective;
    sol.residual_linf = s.residual_linf;
    sol.policy = Policy::deterministic(s.actions, mdp.n_actions);
    sol.trace = std::move(s.trace);
    return sol;
}

SystemOracleResult abp_oracle_on_system(const ResidualSystem& sys, const AbpVariant& variant) {
    ResolvedVariant rv = resolve_variant(variant, sys.n_model_states, sys.n_actions);
    const int n_groups = static_cast<int>(sys.covered_states.size());

    // Collapse duplicate actions (identical constraint row) so padded models
    // do not blow up the enumeration.
    std::vector<std::vector<int>> choices(n_groups);
    double count = 1.0;
    for (int g = 0; g < n_groups; ++g) {
        std::vector<int> reps;
        for (int i : sys.rows_of_state[sys.covered_states[g]]) {
            bool dup = false;
            for (int r : reps)
                if (sys.rows[r].rhs == sys.rows[i].rhs &&
                    (sys.rows[r].phi_row.array() == sys.rows[i].phi_row.array()).all()) {
                    dup = true;
                    break;
                }
            if (!dup) reps.push_back(i);
        }
        choices[g] = reps;
        count *= static_cast<double>(reps.size());
        if (count > 4096.0)
            throw std::invalid_argument("too many deterministic policies to enumerate");
    }

    std::vector<size_t> pick(n_groups, 0);
    std::optional<PolicyLpResult> best;
    std::vector<int> best_actions;
    while (true) {
        Vector weights = Vector::Zero(sys.n_rows());
        std::vector<int> actions(n_groups);
        for (int g = 0; g < n_groups; ++g) {
            int row = choices[g][pick[g]];
            weights(row) = 1.0;
            actions[g] = sys.rows[row].action;
        }
        PolicyLpResult r = f2_on_system(sys, weights, rv);
        if (!best || r.objective < best->objective - 1e-12) {
            best = std::move(r);
            best_actions = actions;
        }
        int g = n_groups - 1;
        while (g >= 0 && ++pick[g] == choices[g].size()) pick[g--] = 0;
        if (g < 0) break;
    }
    return {std::move(*best), std::move(best_actions)};
}

AbpSolution abp_exact_oracle(const TabularMdp& mdp, const FeatureBasis& basis,
                             const AbpVariant& variant) {
    ResidualSystem sys = ResidualSystem::from_model(mdp, basis);
    ResolvedVariant rv = resolve_variant(variant, mdp.n_states, mdp.n_actions);
    SystemOracleResult best = abp_oracle_on_system(sys, variant);

    AbpSolution sol;
    sol.coeffs = best.lp.coeffs;
    sol.value = represent(basis, sol.coeffs);
    sol.lambda = best.lp.lambda;
    sol.lambda_prime = best.lp.lambda_prime;
    sol.objective = best.lp.objective;
    sol.residual_linf = sys.bellman_residual_linf(sol.coeffs);
    sol.policy = Policy::deterministic(best.actions, mdp.n_actions);
    Vector left = sol.policy.flatten();
    sol.trace.iterates.push_back({sol.objective, left, assemble_right_point(sys, rv, best.lp)});
    sol.trace.converged = true;
    sol.trace.iterations = 1;
    return sol;
}

double hybrid_norm(const Vector& x, const Vector& c, double k) {
    if (c.size() != x.size()) throw std::invalid_argument("weight vector length mismatch");
    if (c.minCoeff() < 0.0) throw std::invalid_argument("weights must be nonnegative");
    if (k < 0.0 || k > static_cast<double>(x.size()))
        throw std::invalid_argument("k must lie in [0, length]");
    std::vector<double> weighted(x.size());
    for (int i = 0; i < x.size(); ++i) weighted[i] = c(i) * std::abs(x(i));
    std::sort(weighted.begin(), weighted.end(), std::greater<>());
    int whole = static_cast<int>(std::floor(k));
    double out = 0.0;
    for (int i = 0; i < whole; ++i) out += weighted[i];
    double frac = k - whole;
    if (frac > 0.0) out += frac * weighted[whole];
    return out;
}

ValueFunction solve_alp(const TabularMdp& mdp, const FeatureBasis& basis, const Vector& c_obj) {
    if (!check_assumption_one(basis))
        throw std::invalid_argument("constant functions must be representable");
    if (c_obj.size() != mdp.n_states || c_obj.minCoeff() < 0.0 ||
        std::abs(c_obj.sum() - 1.0) > 1e-8)
        throw std::invalid_argument("objective weights must be a distribution over states");
    ResidualSystem sys = ResidualSystem::from_model(mdp, basis);
    AlpResult r = solve_alp_system(sys, basis, c_obj);
    // With every constraint present the program has a bounded optimum.
    if (r.status != LpStatus::optimal)
        throw std::runtime_error("full-constraint approximate linear program did not solve");
    return r.value;
}

AlpResult solve_alp_system(const ResidualSystem& sys, const FeatureBasis& basis,
                           const Vector& c_over_states) {
    if (c_over_states.size() != sys.n_model_states)
        throw std::invalid_argument("objective weights must cover every model state");
    const int m = sys.n_features;
    LinearProgramSpec lp = LinearProgramSpec::with_vars(m);
    lp.set_all_free();
    lp.objective = basis.matrix.transpose() * c_over_states;
    lp.ineq_matrix = Matrix::Zero(sys.n_rows(), m);
    lp.ineq_rhs = Vector::Zero(sys.n_rows());
    for (int i = 0; i < sys.n_rows(); ++i) {
        lp.ineq_matrix.row(i) = sys.rows[i].phi_row.transpose();
        lp.ineq_rhs(i) = sys.rows[i].rhs;
    }
    LpSolution sol = solve_lp(lp);
    AlpResult out;
    out.status = sol.status;
    if (sol.status == LpStatus::optimal) {
        out.coeffs = sol.x;
        out.value = basis.matrix * sol.x;
    }
    return out;
}

namespace {

Vector inner_l2(const ResidualSystem& sys, const std::vector<int>& actions,
                std::vector<std::string>& warnings) {
    const int g = static_cast<int>(sys.covered_states.size());
    Matrix rows(g, sys.n_features);
    Vector rhs(g);
    for (int i = 0; i < g; ++i) {
        int s = sys.covered_states[i];
        for (int r : sys.rows_of_state[s])
            if (sys.rows[r].action == actions[i]) {
                rows.row(i) = sys.rows[r].phi_row.transpose();
                rhs(i) = sys.rows[r].rhs;
            }
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(rows);
    if (cod.rank() < sys.n_features)
        warnings.push_back("least-squares system is rank deficient; using the minimum-norm fit");
    return cod.solve(rhs);
}

Vector inner_lp(const ResidualSystem& sys, const std::vector<int>& actions, bool optimistic) {
    const int m = sys.n_features;
    const int g = static_cast<int>(sys.covered_states.size());
    std::vector<int> pol_rows(g, -1);
    for (int i = 0; i < g; ++i)
        for (int r : sys.rows_of_state[sys.covered_states[i]])
            if (sys.rows[r].action == actions[i]) pol_rows[i] = r;

    const int lower_rows = optimistic ? sys.n_rows() : g;
    LinearProgramSpec lp = LinearProgramSpec::with_vars(m + 1);
    for (int j = 0; j < m; ++j) lp.set_free(j);
    lp.objective(m) = 1.0;
    lp.ineq_matrix = Matrix::Zero(lower_rows + g, m + 1);
    lp.ineq_rhs = Vector::Zero(lower_rows + g);
    if (optimistic) {
        // residuals of every covered pair stay nonnegative
        for (int i = 0; i < sys.n_rows(); ++i) {
            lp.ineq_matrix.row(i).head(m) = sys.rows[i].phi_row.transpose();
            lp.ineq_rhs(i) = sys.rows[i].rhs;
        }
    } else {
        // two-sided bound needs the lower side only on the policy rows
        for (int i = 0; i < g; ++i) {
            const ResidualRow& row = sys.rows[pol_rows[i]];
            lp.ineq_matrix.row(i).head(m) = row.phi_row.transpose();
            lp.ineq_matrix(i, m) = 1.0;
            lp.ineq_rhs(i) = row.rhs;
        }
    }
    for (int i = 0; i < g; ++i) {
        const ResidualRow& row = sys.rows[pol_rows[i]];
        int r = lower_rows + i;
        lp.ineq_matrix.row(r).head(m) = -row.phi_row.transpose();
        lp.ineq_matrix(r, m) = 1.0;
        lp.ineq_rhs(r) = -row.rhs;
    }
    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error("policy evaluation program did not reach an optimum");
    return sol.x.head(m);
}

} // namespace

SystemApiResult api_on_system(const ResidualSystem& sys, ApiInner inner, int max_iters,
                              unsigned long seed) {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
    const int g = static_cast<int>(sys.covered_states.size());
    std::mt19937_64 rng(seed);
    std::vector<int> actions(g);
    for (int i = 0; i < g; ++i) {
        const auto& rows = sys.rows_of_state[sys.covered_states[i]];
        std::uniform_int_distribution<size_t> pick(0, rows.size() - 1);
        actions[i] = sys.rows[rows[pick(rng)]].action;
    }

    SystemApiResult out;
    std::map<std::vector<int>, int> visited;
    visited[actions] = 0;
    for (int it = 1; it <= max_iters; ++it) {
        out.iterations = it;
        switch (inner) {
        case ApiInner::l2: out.coeffs = inner_l2(sys, actions, out.warnings); break;
        case ApiInner::linf: out.coeffs = inner_lp(sys, actions, false); break;
        case ApiInner::oapi: out.coeffs = inner_lp(sys, actions, true); break;
        }
        out.residual_trace.push_back(sys.bellman_residual_linf(out.coeffs));
        std::vector<int> next = sys.greedy_actions(out.coeffs);
        if (next == actions) {
            out.converged = true;
            out.actions = actions;
            return out;
        }
        auto seen = visited.find(next);
        if (seen != visited.end()) {
            // Revisit without progress: a cycle over equally good policies.
            // The optimistic variant cannot improve further, so treat its
            // fixed cycle as termination.
            out.converged = inner == ApiInner::oapi;
            out.actions = next;
            return out;
        }
        visited[next] = it;
        actions = std::move(next);
    }
    out.actions = actions;
    out.converged = false;
    return out;
}

ApiResult api(const TabularMdp& mdp, const FeatureBasis& basis, ApiInner inner, int max_iters,
              unsigned long seed) {
    ResidualSystem sys = ResidualSystem::from_model(mdp, basis);
    SystemApiResult r = api_on_system(sys, inner, max_iters, seed);
    ApiResult out;
    out.value = represent(basis, r.coeffs);
    out.policy = Policy::deterministic(r.actions, mdp.n_actions);
    out.residual_trace = std::move(r.residual_trace);
    out.converged = r.converged;
    out.iterations = r.iterations;
    out.warnings = std::move(r.warnings);
    return out;
}

ValueFunction shift_halve(const TabularMdp& mdp, const ValueFunction& v) {
    if (!is_transitive_feasible(mdp, v, 0.0))
        throw std::invalid_argument("input value function is not transitive-feasible");
    double t = (v - bellman_backup(mdp, v)).cwiseAbs().maxCoeff();
    return v - Vector::Constant(mdp.n_states, 0.5 * t / (1.0 - mdp.discount));
}

} // namespace abp
