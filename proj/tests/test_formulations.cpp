#include "abp/formulations.hpp"

#include "abp/benchmarks.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace abp;

namespace {

FeatureBasis identity_basis(int n) {
    return FeatureBasis(Matrix::Identity(n, n), false);
}

// Per-state residual of v at the policy's actions.
Vector policy_residuals(const TabularMdp& mdp, const Policy& pol, const Vector& v) {
    Vector all = bellman_residual(mdp, v);
    Vector out(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
        double acc = 0.0;
        for (int a = 0; a < mdp.n_actions; ++a)
            acc += pol.probs(s, a) * all(mdp.pair_index(s, a));
        out(s) = acc;
    }
    return out;
}

} // namespace

TEST_CASE("enumeration oracle is self-consistent and dominated by no alternation") {
    TabularMdp m2 = fixture_m2();
    for (unsigned long seed : {1ul, 2ul, 3ul}) {
        FeatureBasis basis = oracles::random_basis(2, 1, seed);
        AbpSolution oracle = abp_exact_oracle(m2, basis, AbpVariant::robust());
        // re-solving the fixed policy reproduces the objective
        PolicyLpResult again = f2_policy_lp(m2, basis, oracle.policy, AbpVariant::robust());
        CHECK(again.objective == doctest::Approx(oracle.objective).epsilon(1e-9));
        // the alternating solver can never do better
        AbpSolution solved = solve_abp(m2, basis, AbpVariant::robust(), 16, seed);
        CHECK(solved.objective >= oracle.objective - 1e-8);
        CHECK(solved.objective == doctest::Approx(oracle.objective).epsilon(1e-7));
    }
}

TEST_CASE("oracle objective equals the residual norm of its own solution") {
    for (int trial = 0; trial < 20; ++trial) {
        TabularMdp mdp = random_mdp(3, 2, 900 + trial);
        FeatureBasis basis = oracles::random_basis(3, 1, trial);
        AbpSolution oracle = abp_exact_oracle(mdp, basis, AbpVariant::robust());
        double resid = (oracle.value - bellman_backup(mdp, oracle.value)).cwiseAbs().maxCoeff();
        CHECK(oracle.objective == doctest::Approx(resid).epsilon(1e-7));
        // the solution is transitive-feasible
        CHECK(bellman_residual(mdp, oracle.value).minCoeff() >= -1e-8);
    }
}

TEST_CASE("full representability recovers the optimal value function") {
    TabularMdp m2 = fixture_m2();
    FeatureBasis basis = identity_basis(2);
    Vector star = optimal_value(m2);

    AbpSolution solved = solve_abp(m2, basis, AbpVariant::robust(), 4, 0);
    CHECK(solved.objective == doctest::Approx(0.0).epsilon(1e-8));
    CHECK((solved.value - star).cwiseAbs().maxCoeff() <= 1e-7);

    AbpSolution oracle = abp_exact_oracle(m2, basis, AbpVariant::robust());
    CHECK(oracle.objective == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("residual-norm chain against grid-search certificates") {
    for (int trial = 0; trial < 8; ++trial) {
        TabularMdp mdp = random_mdp(3, 2, 1000 + trial);
        FeatureBasis basis = oracles::random_basis(3, 1, 50 + trial);
        Vector star = optimal_value(mdp);
        AbpSolution oracle = abp_exact_oracle(mdp, basis, AbpVariant::robust());

        double radius = 3.0 * std::max(star.cwiseAbs().maxCoeff(), 1.0);
        const int per_dim = 301;
        double dist_to_star = 0.0;
        double grid_resid =
            oracles::grid_min_residual(mdp, basis, radius, per_dim, &dist_to_star, &star);
        double slack = oracles::grid_slack(basis, mdp.discount, radius, per_dim);

        CHECK(oracle.objective <= 2.0 * (grid_resid + slack) + 1e-7);
        CHECK(oracle.objective <= 2.0 * (1.0 + mdp.discount) * (dist_to_star + slack) + 1e-7);
    }
}

TEST_CASE("expected-variant objective differs by the initial-value term") {
    TabularMdp mdp = fixture_m2();
    mdp.initial_dist << 1.0, 0.0; // point mass
    FeatureBasis basis = oracles::random_basis(2, 1, 4);
    AbpSolution oracle = abp_exact_oracle(mdp, basis, AbpVariant::robust());

    // evaluate both objectives on the same solution, term by term
    ResidualSystem sys = ResidualSystem::from_model(mdp, basis);
    Vector w = oracle.policy.flatten();
    double robust_obj = w.dot(oracle.lambda) + oracle.lambda_prime;
    double expected_obj =
        robust_obj - (1.0 - mdp.discount) * mdp.initial_dist.dot(oracle.value);
    CHECK(robust_obj == doctest::Approx(oracle.objective).epsilon(1e-9));
    CHECK(expected_obj == doctest::Approx(oracle.objective - (1.0 - mdp.discount) *
                                                                 oracle.value(0))
                              .epsilon(1e-9));
}

TEST_CASE("policy-fixed program: optimal policy with full basis reaches zero") {
    TabularMdp m2 = fixture_m2();
    Vector star = optimal_value(m2);
    Policy best = greedy_policy(m2, star);
    PolicyLpResult r = f2_policy_lp(m2, fixture_m2().n_states == 2 ? identity_basis(2)
                                                                   : identity_basis(2),
                                    best, AbpVariant::robust());
    CHECK(r.objective == doctest::Approx(0.0).epsilon(1e-8));
    CHECK((r.value - star).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("policy-fixed program matches a coefficient grid search") {
    for (int trial = 0; trial < 5; ++trial) {
        TabularMdp mdp = random_mdp(3, 2, 1100 + trial);
        FeatureBasis basis = oracles::random_basis(3, 1, 60 + trial);
        Policy pol = Policy::deterministic({trial % 2, 1 - trial % 2, 0}, 2);
        PolicyLpResult r = f2_policy_lp(mdp, basis, pol, AbpVariant::robust());

        // brute force over the two coefficients at a fine step
        Vector star = optimal_value(mdp);
        double radius = 3.0 * std::max(star.cwiseAbs().maxCoeff(), 1.0);
        const int per_dim = 601;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < per_dim; ++i)
            for (int j = 0; j < per_dim; ++j) {
                Vector coeffs(2);
                coeffs << -radius + 2 * radius * i / (per_dim - 1),
                    -radius + 2 * radius * j / (per_dim - 1);
                Vector v = basis.matrix * coeffs;
                if (bellman_residual(mdp, v).minCoeff() < -1e-9) continue;
                best = std::min(best,
                                policy_residuals(mdp, pol, v).cwiseAbs().maxCoeff());
            }
        double slack = oracles::grid_slack(basis, mdp.discount, radius, per_dim);
        CHECK(r.objective <= best + 1e-7);
        CHECK(r.objective >= best - slack - 1e-7);
    }
}

TEST_CASE("stochastic policies never beat their greedy rounding") {
    for (int trial = 0; trial < 10; ++trial) {
        TabularMdp mdp = random_mdp(3, 2, 1200 + trial);
        FeatureBasis basis = oracles::random_basis(3, 1, 70 + trial);
        Policy mixed = Policy::uniform(3, 2);
        PolicyLpResult stochastic = f2_policy_lp(mdp, basis, mixed, AbpVariant::robust());
        // the weighted-residual bound dominates the achieved policy norm
        double achieved = policy_residuals(mdp, mixed, stochastic.value).cwiseAbs().maxCoeff();
        CHECK(stochastic.objective >= achieved - 1e-9);

        Policy rounded = greedy_policy(mdp, stochastic.value);
        PolicyLpResult det = f2_policy_lp(mdp, basis, rounded, AbpVariant::robust());
        CHECK(det.objective <= stochastic.objective + 1e-9);
        // deterministic policies achieve the bound exactly
        double det_norm = policy_residuals(mdp, rounded, det.value).cwiseAbs().maxCoeff();
        CHECK(det.objective == doctest::Approx(det_norm).epsilon(1e-8));
    }
}

TEST_CASE("policy step selects per-state minima with low-index ties") {
    TabularMdp m2 = fixture_m2();
    Vector lambda(4);
    lambda << 0.3, 0.1, 0.2, 0.9;
    Policy pol = policy_step(lambda, 0.0, PolicyStepMode::argmin_lambda, m2, Vector::Zero(2));
    CHECK(pol.actions() == std::vector<int>{1, 0});

    Policy ties = policy_step(Vector::Zero(4), 0.0, PolicyStepMode::argmin_lambda, m2,
                              Vector::Zero(2));
    CHECK(ties.actions() == std::vector<int>{0, 0});
}

TEST_CASE("greedy step attains the unrestricted residual norm on feasible functions") {
    for (int trial = 0; trial < 10; ++trial) {
        TabularMdp mdp = random_mdp(4, 2, 1300 + trial);
        FeatureBasis basis = oracles::random_basis(4, 2, 80 + trial);
        Policy start = Policy::deterministic({0, 1, 0, 1}, 2);
        PolicyLpResult r = f2_policy_lp(mdp, basis, start, AbpVariant::robust());
        Policy greedy = policy_step(r.lambda, r.lambda_prime, PolicyStepMode::greedy_value, mdp,
                                    r.value);
        double via_greedy = policy_residuals(mdp, greedy, r.value).cwiseAbs().maxCoeff();
        double full = (r.value - bellman_backup(mdp, r.value)).cwiseAbs().maxCoeff();
        CHECK(via_greedy == doctest::Approx(full).epsilon(1e-9));
    }
}

TEST_CASE("variant objective identities hold at the solver's fixed points") {
    for (int trial = 0; trial < 10; ++trial) {
        TabularMdp mdp = random_mdp(3, 2, 1400 + trial);
        FeatureBasis basis = oracles::random_basis(3, 1, 90 + trial);
        // A valid bound: no state's discounted visitation mass can exceed
        // the total 1/(1-gamma).
        UBound ub;
        std::mt19937_64 rng(trial);
        std::uniform_real_distribution<double> unit(1.0, 2.0);
        ub.per_state =
            Vector::NullaryExpr(3, [&]() { return unit(rng) / (1.0 - mdp.discount); });

        AbpSolution robust = solve_abp(mdp, basis, AbpVariant::robust(), 4, trial);
        double resid_inf =
            (robust.value - bellman_backup(mdp, robust.value)).cwiseAbs().maxCoeff();
        CHECK(robust.objective == doctest::Approx(resid_inf).epsilon(1e-7));

        AbpSolution expected = solve_abp(mdp, basis, AbpVariant::expected(), 4, trial);
        double e_resid =
            (expected.value - bellman_backup(mdp, expected.value)).cwiseAbs().maxCoeff();
        CHECK(expected.objective ==
              doctest::Approx(e_resid - (1.0 - mdp.discount) *
                                            mdp.initial_dist.dot(expected.value))
                  .epsilon(1e-7));

        AbpSolution weighted = solve_abp(mdp, basis, AbpVariant::weighted(ub), 4, trial);
        Vector pol_res = policy_residuals(mdp, weighted.policy, weighted.value);
        double weighted_l1 = ub.per_state.dot(pol_res.cwiseAbs());
        CHECK(weighted.objective ==
              doctest::Approx(weighted_l1 - mdp.initial_dist.dot(weighted.value)).epsilon(1e-7));

        double k = 1.5;
        AbpSolution hybrid = solve_abp(mdp, basis, AbpVariant::hybrid(ub, k), 4, trial);
        Vector h_res = policy_residuals(mdp, hybrid.policy, hybrid.value);
        CHECK(hybrid.objective ==
              doctest::Approx(hybrid_norm(h_res, ub.per_state, k)).epsilon(1e-7));
    }
}

TEST_CASE("hybrid norm endpoints and fractional interpolation") {
    Vector x(3);
    x << 3.0, -2.0, 1.0;
    Vector ones = Vector::Ones(3);
    CHECK(hybrid_norm(x, ones, 1.0) == doctest::Approx(3.0));            // sup norm
    CHECK(hybrid_norm(x, ones, 3.0) == doctest::Approx(6.0));            // L1 norm
    CHECK(hybrid_norm(x, ones, 1.5) == doctest::Approx(3.0 + 0.5 * 2.0)); // fractional
    CHECK_THROWS_AS(hybrid_norm(x, ones, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(hybrid_norm(x, ones, 3.5), std::invalid_argument);

    // the max-weighted-subset definition, checked by enumerating subsets
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Vector v(4), c(4);
        for (int i = 0; i < 4; ++i) {
            v(i) = 2.0 * unit(rng) - 1.0;
            c(i) = unit(rng);
        }
        double k = 4.0 * unit(rng);
        // maximize sum y_i c_i |v_i| with 0 <= y <= 1, sum y = k: vertices put
        // weight 1 on floor(k) coordinates and the remainder on one more
        double best = 0.0;
        std::vector<int> idx{0, 1, 2, 3};
        std::sort(idx.begin(), idx.end(),
                  [&](int a, int b) { return c(a) * std::abs(v(a)) > c(b) * std::abs(v(b)); });
        double acc = 0.0;
        int whole = static_cast<int>(std::floor(k));
        for (int i = 0; i < whole; ++i) acc += c(idx[i]) * std::abs(v(idx[i]));
        if (k - whole > 0) acc += (k - whole) * c(idx[whole]) * std::abs(v(idx[whole]));
        best = acc;
        CHECK(hybrid_norm(v, c, k) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("approximate linear program with full representability is exact") {
    TabularMdp m2 = fixture_m2();
    Vector star = optimal_value(m2);
    Vector c = Vector::Constant(2, 0.5);
    Vector v = solve_alp(m2, identity_basis(2), c);
    CHECK((v - star).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("approximate linear program matches vertex enumeration on a coarse basis") {
    TabularMdp m2 = fixture_m2();
    FeatureBasis basis = oracles::random_basis(2, 1, 5);
    Vector c = Vector::Constant(2, 0.5);
    Vector v = solve_alp(m2, basis, c);
    CHECK(bellman_residual(m2, v).minCoeff() >= -1e-8);
    CHECK((v - optimal_value(m2)).minCoeff() >= -1e-8); // upper bound on the optimum

    // against the brute-force LP oracle in coefficient space
    ResidualSystem sys = ResidualSystem::from_model(m2, basis);
    LinearProgramSpec lp = LinearProgramSpec::with_vars(2);
    lp.set_all_free();
    lp.objective = basis.matrix.transpose() * c;
    lp.ineq_matrix = Matrix(sys.n_rows(), 2);
    lp.ineq_rhs = Vector(sys.n_rows());
    for (int i = 0; i < sys.n_rows(); ++i) {
        lp.ineq_matrix.row(i) = sys.rows[i].phi_row.transpose();
        lp.ineq_rhs(i) = sys.rows[i].rhs;
    }
    auto expected = oracles::lp_vertex_enumeration(lp);
    REQUIRE(expected.has_value());
    CHECK(c.dot(v) == doctest::Approx(*expected).epsilon(1e-7));
}

TEST_CASE("offline quality bound of the approximate linear program") {
    for (int trial = 0; trial < 6; ++trial) {
        TabularMdp mdp = random_mdp(3, 2, 1500 + trial);
        FeatureBasis basis = oracles::random_basis(3, 1, 110 + trial);
        Vector star = optimal_value(mdp);
        Vector v = solve_alp(mdp, basis, mdp.initial_dist);
        double lhs = (mdp.initial_dist.array() * (star - v).array().abs()).sum();

        double radius = 3.0 * std::max(star.cwiseAbs().maxCoeff(), 1.0);
        const int per_dim = 301;
        double dist = 0.0;
        oracles::grid_min_residual(mdp, basis, radius, per_dim, &dist, &star);
        double slack = oracles::grid_slack(basis, mdp.discount, radius, per_dim) /
                       (1.0 + mdp.discount);
        CHECK(lhs <= 2.0 / (1.0 - mdp.discount) * (dist + slack) + 1e-7);
    }
}

TEST_CASE("unrepresentable constants are rejected up front") {
    TabularMdp m2 = fixture_m2();
    Matrix m = Matrix::Zero(2, 1);
    m(1, 0) = 1.0;
    FeatureBasis no_ones(std::move(m), false);
    CHECK_THROWS_AS(solve_alp(m2, no_ones, Vector::Constant(2, 0.5)), std::invalid_argument);
    CHECK_THROWS_AS(solve_abp(m2, no_ones, AbpVariant::robust(), 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_abp(m2, no_ones, AbpVariant::robust()), std::invalid_argument);
}

TEST_CASE("variant parameter validation") {
    TabularMdp m2 = fixture_m2();
    FeatureBasis basis = oracles::random_basis(2, 1, 6);
    UBound zero;
    zero.per_state = Vector::Zero(2);
    CHECK_THROWS_AS(solve_abp(m2, basis, AbpVariant::hybrid(zero, 1.0), 2, 0),
                    std::invalid_argument);
    UBound ok;
    ok.per_state = Vector::Ones(2);
    CHECK_THROWS_AS(solve_abp(m2, basis, AbpVariant::hybrid(ok, 5.0), 2, 0),
                    std::invalid_argument); // k > n_states * n_actions
    AbpVariant missing{AbpKind::weighted_u, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(solve_abp(m2, basis, missing, 2, 0), std::invalid_argument);
}

TEST_CASE("policy iteration with full representability finds the best policy") {
    for (ApiInner inner : {ApiInner::l2, ApiInner::linf, ApiInner::oapi}) {
        TabularMdp m2 = fixture_m2();
        ApiResult r = api(m2, identity_basis(2), inner, 50, 3);
        CHECK(r.converged);
        auto [best_actions, best_value] = oracles::best_policy(m2);
        CHECK(r.policy.actions() == best_actions);
        CHECK(r.iterations <= 4);
    }
}

TEST_CASE("optimistic iterates stay transitive-feasible and monotone") {
    for (int trial = 0; trial < 10; ++trial) {
        TabularMdp mdp = random_mdp(4, 2, 1600 + trial);
        FeatureBasis basis = oracles::random_basis(4, 1, 120 + trial);
        ApiResult r = api(mdp, basis, ApiInner::oapi, 500, trial);
        CHECK(r.converged);
        CHECK(bellman_residual(mdp, r.value).minCoeff() >= -1e-8);
        for (size_t i = 1; i < r.residual_trace.size(); ++i)
            CHECK(r.residual_trace[i] <= r.residual_trace[i - 1] + 1e-9);
    }
}

TEST_CASE("one-sided and two-sided policy evaluations are a shift apart") {
    // programs bounding the residual from both sides vs from above with a
    // nonnegativity floor: optima satisfy 2*phi_two_sided = phi_floored and
    // the shifted solutions are optimal in the other program
    for (int trial = 0; trial < 20; ++trial) {
        TabularMdp mdp = random_mdp(3, 2, 1700 + trial);
        FeatureBasis basis = oracles::random_basis(3, 1, 130 + trial);
        ResidualSystem sys = ResidualSystem::from_model(mdp, basis);
        std::vector<int> actions{trial % 2, (trial / 2) % 2, 0};
        Policy pol = Policy::deterministic(actions, 2);

        auto policy_rows = [&](const Vector& coeffs) {
            Vector resid = sys.residuals(coeffs);
            Vector out(3);
            for (int s = 0; s < 3; ++s) out(s) = resid(mdp.pair_index(s, actions[s]));
            return out;
        };

        // two-sided program
        LinearProgramSpec two = LinearProgramSpec::with_vars(basis.n_features() + 1);
        for (int j = 0; j < basis.n_features(); ++j) two.set_free(j);
        two.objective(basis.n_features()) = 1.0;
        two.ineq_matrix = Matrix::Zero(6, basis.n_features() + 1);
        two.ineq_rhs = Vector::Zero(6);
        for (int s = 0; s < 3; ++s) {
            int row = mdp.pair_index(s, actions[s]);
            two.ineq_matrix.row(s).head(basis.n_features()) = sys.rows[row].phi_row.transpose();
            two.ineq_matrix(s, basis.n_features()) = 1.0;
            two.ineq_rhs(s) = sys.rows[row].rhs;
            two.ineq_matrix.row(3 + s).head(basis.n_features()) =
                -sys.rows[row].phi_row.transpose();
            two.ineq_matrix(3 + s, basis.n_features()) = 1.0;
            two.ineq_rhs(3 + s) = -sys.rows[row].rhs;
        }
        LpSolution sol_two = solve_lp(two);
        REQUIRE(sol_two.status == LpStatus::optimal);
        double phi1 = sol_two.objective_value;
        Vector v1 = sol_two.x.head(basis.n_features());

        // floored program: residuals nonnegative on the policy rows
        LinearProgramSpec floored = two;
        for (int s = 0; s < 3; ++s) floored.ineq_matrix(s, basis.n_features()) = 0.0;
        LpSolution sol_floor = solve_lp(floored);
        REQUIRE(sol_floor.status == LpStatus::optimal);
        double phi2 = sol_floor.objective_value;
        Vector v2 = sol_floor.x.head(basis.n_features());

        CHECK(2.0 * phi1 == doctest::Approx(phi2).epsilon(1e-7));

        // shifting the two-sided solution up is optimal for the floored one
        double shift = phi1 / (1.0 - mdp.discount);
        Vector shifted = v1;
        shifted(0) += shift; // column 0 is the constant feature
        Vector r_up = policy_rows(shifted);
        CHECK(r_up.minCoeff() >= -1e-8);
        CHECK(r_up.maxCoeff() == doctest::Approx(phi2).epsilon(1e-6));

        // and shifting the floored solution down is optimal two-sided
        Vector down = v2;
        down(0) -= phi2 / (2.0 * (1.0 - mdp.discount));
        CHECK(policy_rows(down).cwiseAbs().maxCoeff() == doctest::Approx(phi1).epsilon(1e-6));

        // identical greedy policies for both pairs
        Vector val1 = basis.matrix * v1;
        Vector val1_up = basis.matrix * shifted;
        CHECK(greedy_policy(mdp, val1).actions() == greedy_policy(mdp, val1_up).actions());
    }
}

TEST_CASE("rank-deficient least-squares inner step warns and continues") {
    TabularMdp m2 = fixture_m2();
    // duplicated feature column makes the normal equations singular
    Matrix m(2, 3);
    m.col(0).setOnes();
    m.col(1) << 1.0, 2.0;
    m.col(2) << 1.0, 2.0;
    FeatureBasis basis(std::move(m), true);
    ApiResult r = api(m2, basis, ApiInner::l2, 50, 0);
    CHECK(!r.warnings.empty());
}

TEST_CASE("halving shift keeps the greedy policy and halves the residual") {
    TabularMdp m2 = fixture_m2();
    Vector star = optimal_value(m2);
    CHECK((shift_halve(m2, star) - star).cwiseAbs().maxCoeff() <= 1e-12);

    for (int trial = 0; trial < 100; ++trial) {
        TabularMdp mdp = random_mdp(4, 2, 1800 + trial);
        Vector base = optimal_value(mdp);
        std::mt19937_64 rng(trial);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Vector v = base + Vector::NullaryExpr(4, [&]() { return 0.5 + unit(rng); });
        if (!is_transitive_feasible(mdp, v, 0.0)) continue;
        Vector halved = shift_halve(mdp, v);
        double before = (v - bellman_backup(mdp, v)).cwiseAbs().maxCoeff();
        double after = (halved - bellman_backup(mdp, halved)).cwiseAbs().maxCoeff();
        CHECK(after == doctest::Approx(before / 2.0).epsilon(1e-9));
        CHECK(greedy_policy(mdp, v).actions() == greedy_policy(mdp, halved).actions());
    }
    Vector bad = optimal_value(m2) - Vector::Constant(2, 1.0);
    CHECK_THROWS_AS(shift_halve(m2, bad), std::invalid_argument);
}

TEST_CASE("weighted residual of feasible functions is below the distance to the optimum") {
    for (int trial = 0; trial < 50; ++trial) {
        TabularMdp mdp = random_mdp(4, 2, 1900 + trial);
        Vector star = optimal_value(mdp);
        std::mt19937_64 rng(trial);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Vector v = star + Vector::NullaryExpr(4, [&]() { return unit(rng); });
        if (!is_transitive_feasible(mdp, v, 0.0)) continue;
        Policy pol = greedy_policy(mdp, v);
        Vector u = visitation_frequencies(mdp, pol).per_state;
        Vector gap = v - bellman_backup(mdp, v);
        double lhs = (u.array() * gap.array().abs()).sum();
        double rhs = (u.array() * (star - v).array().abs()).sum();
        CHECK(lhs <= rhs + 1e-9);
    }
}

TEST_CASE("chain-scale alternation converges quickly") {
    ChainSpec spec;
    TabularMdp chain = make_chain(spec);
    std::vector<int> cutoffs;
    for (int c = 10; c < 200; c += 14) cutoffs.push_back(c); // 14 ramps
    FeatureBasis basis = chain_basis(200, cutoffs);
    AbpSolution sol = solve_abp(chain, basis, AbpVariant::robust(), 2, 0);
    CHECK(sol.trace.converged);
    CHECK(sol.trace.iterations < 500);
    CHECK(bellman_residual(chain, sol.value).minCoeff() >= -1e-7);
    CHECK(sol.objective ==
          doctest::Approx((sol.value - bellman_backup(chain, sol.value)).cwiseAbs().maxCoeff())
              .epsilon(1e-6));
}
