#include "abp/benchmarks.hpp"

#include "abp/formulations.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace abp;

TEST_CASE("chain model structure") {
    ChainSpec spec;
    spec.n_states = 50;
    spec.init_state = 10;
    TabularMdp chain = make_chain(spec);
    chain.validate();
    CHECK(chain.n_actions == 2);
    CHECK(chain.initial_dist(9) == 1.0);
    for (int s = 0; s < 50; ++s) {
        CHECK(chain.reward(s, 0) == doctest::Approx(std::sin((s + 1) / 20.0)));
        CHECK(chain.reward(s, 1) == doctest::Approx(std::cos((s + 1) / 20.0)));
    }
    // noise is centered on the intended move: interior argmax at s +- 1
    Vector right = dense_row(chain.transition[0], 25);
    Vector left = dense_row(chain.transition[1], 25);
    int arg_r, arg_l;
    right.maxCoeff(&arg_r);
    left.maxCoeff(&arg_l);
    CHECK(arg_r == 26);
    CHECK(arg_l == 24);
    // renormalization keeps interior symmetry
    CHECK(right(27) == doctest::Approx(right(25)).epsilon(1e-12));
    CHECK_THROWS_AS(make_chain(ChainSpec{0, 3.0, 0.95, 1}), std::invalid_argument);
}

TEST_CASE("mountain car: absorbing goal and underpowered dynamics") {
    MountainCarSpec spec;
    spec.grid_pos = 19; // grid nodes land exactly on p = -0.5 and v = 0
    spec.grid_vel = 21;
    MountainCarModel model = make_mountain_car(spec);
    model.mdp.validate();
    CHECK(model.mdp.n_states == 19 * 21 + 1);

    // absorbing state loops on itself with zero reward
    for (int a = 0; a < 3; ++a) {
        Vector row = dense_row(model.mdp.transition[a], model.absorbing_state);
        CHECK(row(model.absorbing_state) == 1.0);
        CHECK(model.mdp.reward(model.absorbing_state, a) == 0.0);
    }

    // a full-throttle push from rest at -0.5 cannot reach the goal
    int from = -1;
    for (size_t i = 0; i < model.grid_points.size(); ++i)
        if (std::abs(model.grid_points[i][0] + 0.5) < 1e-9 &&
            std::abs(model.grid_points[i][1]) < 1e-9)
            from = static_cast<int>(i);
    REQUIRE(from >= 0);
    Vector row = dense_row(model.mdp.transition[2], from);
    CHECK(row(model.absorbing_state) == 0.0);

    // goal transitions carry the entry reward
    bool found_goal = false;
    for (int s = 0; s < model.mdp.n_states - 1; ++s)
        for (int a = 0; a < 3; ++a)
            if (dense_row(model.mdp.transition[a], s)(model.absorbing_state) == 1.0) {
                CHECK(model.mdp.reward(s, a) == 1.0);
                found_goal = true;
            }
    CHECK(found_goal);
}

TEST_CASE("mountain car feature basis pins the terminal value to zero") {
    MountainCarSpec spec;
    spec.grid_pos = 15;
    spec.grid_vel = 15;
    MountainCarModel model = make_mountain_car(spec);
    FeatureBasis basis = mountain_car_basis(model, 10);
    CHECK(basis.n_features() == 100);
    CHECK(basis.n_states() == model.mdp.n_states);
    CHECK(basis.matrix.row(model.absorbing_state).cwiseAbs().maxCoeff() == 0.0);
    // grid rows stay a partition of unity
    for (int s = 0; s < model.mdp.n_states - 1; ++s)
        CHECK(basis.matrix.row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("formula satisfiability ground truth") {
    CnfFormula sat;
    sat.n_vars = 3;
    sat.clauses = {{1, 2, 3}};
    CHECK(sat.satisfiable());

    CnfFormula unsat;
    unsat.n_vars = 3;
    unsat.clauses = {{1, 2, 3},  {1, 2, -3},  {1, -2, 3},  {1, -2, -3},
                     {-1, 2, 3}, {-1, 2, -3}, {-1, -2, 3}, {-1, -2, -3}};
    CHECK_FALSE(unsat.satisfiable());

    CnfFormula padded;
    padded.n_vars = 2;
    padded.clauses = {{1, 1, 2}}; // repeated literal is legal padding
    padded.validate();
    CHECK(padded.satisfiable());

    CnfFormula tautology;
    tautology.n_vars = 2;
    tautology.clauses = {{1, 2, -2}};
    CHECK_THROWS_AS(tautology.validate(), std::invalid_argument);
}

TEST_CASE("reduction shapes and deterministic transitions") {
    CnfFormula f;
    f.n_vars = 3;
    f.clauses = {{1, -2, 3}, {-1, 2, 3}};
    SatReduction red = sat_to_mdp(f, 0.95, false);
    CHECK(red.mdp.n_states == 4 * 2 + 1);
    CHECK(red.basis.n_features() == 3 + 1);
    SatReduction with = sat_to_mdp(f, 0.95, true);
    CHECK(with.mdp.n_states == 4 * 2 + 2);
    CHECK(with.basis.n_features() == 3 + 2);
    CHECK(with.basis.has_constant);
    red.mdp.validate();
    with.mdp.validate();

    // clause state j-th action moves to the j-th literal state
    for (int j = 0; j < 3; ++j) {
        Vector row = dense_row(red.mdp.transition[j], red.clause_states[0]);
        CHECK(row(red.literal_states[j]) == 1.0);
        CHECK(red.mdp.reward(red.clause_states[0], j) == doctest::Approx(0.05));
    }
}

TEST_CASE("satisfiable formulas admit the constructed low-residual witness") {
    const double gamma = 0.95;
    CnfFormula f;
    f.n_vars = 3;
    f.clauses = {{1, 2, 3}};
    SatReduction red = sat_to_mdp(f, gamma, false);

    // coefficients read off a satisfying all-true assignment
    Vector coeffs(4);
    coeffs << gamma, gamma, gamma, 2.0 - gamma;
    Vector v = represent(red.basis, coeffs);
    CHECK(bellman_residual(red.mdp, v).minCoeff() >= -1e-12);
    double resid = (v - bellman_backup(red.mdp, v)).cwiseAbs().maxCoeff();
    CHECK(resid == doctest::Approx(1.0 - gamma * gamma).epsilon(1e-9));

    // and the enumeration oracle reaches that quality
    AbpSolution oracle = abp_exact_oracle(red.mdp, red.basis, AbpVariant::robust());
    CHECK(oracle.objective <= 1.0 - gamma * gamma + 1e-6);
}

TEST_CASE("unsatisfiable formulas keep a large residual") {
    const double gamma = 0.95;
    // padded unit clauses on two variables, unsatisfiable by construction
    CnfFormula f;
    f.n_vars = 2;
    f.clauses = {{1, 1, 2}, {1, 1, -2}, {-1, -1, 2}, {-1, -1, -2}};
    REQUIRE_FALSE(f.satisfiable());
    SatReduction red = sat_to_mdp(f, gamma, false);
    AbpSolution oracle = abp_exact_oracle(red.mdp, red.basis, AbpVariant::robust());
    CHECK(oracle.objective >= 1.0 - gamma * gamma / 2.0 - 1e-6);

    // With the extra constant feature the floor comes from balancing the
    // padding state's residual (1-g)y + g/2 against the false-clause row
    // 1 - g*y, which meet at y = 1 - g/2 with value 1 - g + g^2/2.
    SatReduction with = sat_to_mdp(f, gamma, true);
    AbpSolution oracle_with = abp_exact_oracle(with.mdp, with.basis, AbpVariant::robust());
    double floor_with = 1.0 - gamma + gamma * gamma / 2.0;
    CHECK(oracle_with.objective == doctest::Approx(floor_with).epsilon(1e-6));
    // still clearly separated from the satisfiable threshold
    CHECK(oracle_with.objective >= 1.0 - gamma * gamma + 1e-3);
}

TEST_CASE("random models are valid and reproducible") {
    TabularMdp a = random_mdp(6, 3, 123, 0.4);
    TabularMdp b = random_mdp(6, 3, 123, 0.4);
    a.validate();
    for (int act = 0; act < 3; ++act)
        for (int s = 0; s < 6; ++s)
            CHECK((dense_row(a.transition[act], s) - dense_row(b.transition[act], s))
                      .cwiseAbs()
                      .maxCoeff() == 0.0);
    CHECK(a.reward == b.reward);
    CHECK_THROWS_AS(random_mdp(3, 2, 1, 1.0), std::invalid_argument);
}

TEST_CASE("frozen two-state fixture") {
    TabularMdp m2 = fixture_m2();
    CHECK(m2.n_states == 2);
    CHECK(m2.n_actions == 2);
    CHECK(m2.discount == 0.95);
    // frozen optimal values, computed once by plain value iteration
    Vector star = oracles::value_iteration(m2, 1e-14);
    CHECK(star(0) == doctest::Approx(12.153422357265487).epsilon(1e-9));
    CHECK(star(1) == doctest::Approx(11.886265548886012).epsilon(1e-9));
}
