#include "abp/linprog.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace abp;

namespace {

LinearProgramSpec random_lp(int n_vars, int n_rows, std::mt19937_64& rng, bool force_bounded) {
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    LinearProgramSpec lp = LinearProgramSpec::with_vars(n_vars);
    lp.set_all_free();
    lp.ineq_matrix = Matrix(n_rows, n_vars);
    lp.ineq_rhs = Vector(n_rows);
    for (int i = 0; i < n_rows; ++i) {
        for (int j = 0; j < n_vars; ++j) lp.ineq_matrix(i, j) = coef(rng);
        lp.ineq_rhs(i) = coef(rng);
    }
    for (int j = 0; j < n_vars; ++j) lp.objective(j) = coef(rng);
    if (force_bounded) {
        // Box the feasible set so a finite optimum always exists (as rows so
        // that strong duality reads c.x = h.y).
        Matrix box(2 * n_vars, n_vars);
        Vector box_rhs(2 * n_vars);
        box.setZero();
        for (int j = 0; j < n_vars; ++j) {
            box(2 * j, j) = 1.0;
            box_rhs(2 * j) = -10.0;
            box(2 * j + 1, j) = -1.0;
            box_rhs(2 * j + 1) = -10.0;
        }
        Matrix all(n_rows + 2 * n_vars, n_vars);
        all << lp.ineq_matrix, box;
        Vector all_rhs(n_rows + 2 * n_vars);
        all_rhs << lp.ineq_rhs, box_rhs;
        lp.ineq_matrix = all;
        lp.ineq_rhs = all_rhs;
    }
    return lp;
}

// Active linearly independent constraints at x, counting tight rows and bounds.
int active_rank(const LinearProgramSpec& spec, const Vector& x, double tol = 1e-6) {
    std::vector<Vector> active;
    for (int i = 0; i < spec.n_ineq(); ++i)
        if (std::abs(spec.ineq_matrix.row(i).dot(x) - spec.ineq_rhs(i)) <= tol)
            active.push_back(spec.ineq_matrix.row(i).transpose());
    for (int i = 0; i < spec.n_eq(); ++i) active.push_back(spec.eq_matrix.row(i).transpose());
    for (int j = 0; j < spec.n_vars(); ++j) {
        Vector e = Vector::Zero(spec.n_vars());
        e(j) = 1.0;
        if (std::isfinite(spec.lower_bounds(j)) && std::abs(x(j) - spec.lower_bounds(j)) <= tol)
            active.push_back(e);
        if (std::isfinite(spec.upper_bounds(j)) && std::abs(x(j) - spec.upper_bounds(j)) <= tol)
            active.push_back(e);
    }
    if (active.empty()) return 0;
    Matrix m(active.size(), spec.n_vars());
    for (size_t i = 0; i < active.size(); ++i) m.row(i) = active[i].transpose();
    return static_cast<int>(m.fullPivLu().rank());
}

} // namespace

TEST_CASE("one-variable minimum at the constraint") {
    LinearProgramSpec lp = LinearProgramSpec::with_vars(1);
    lp.set_all_free();
    lp.objective(0) = 1.0;
    lp.ineq_matrix = Matrix::Ones(1, 1);
    lp.ineq_rhs = Vector::Ones(1);
    LpSolution sol = solve_lp(lp);
    CHECK(sol.status == LpStatus::optimal);
    CHECK(sol.x(0) == doctest::Approx(1.0));
    CHECK(sol.objective_value == doctest::Approx(1.0));
    CHECK(sol.is_vertex);
    // dual of the only row carries the full objective
    CHECK(sol.dual_ineq(0) == doctest::Approx(1.0));
}

TEST_CASE("maximizing an unbounded variable is reported as unbounded") {
    LinearProgramSpec lp = LinearProgramSpec::with_vars(1);
    lp.objective(0) = -1.0; // min -x, x >= 0
    LpSolution sol = solve_lp(lp);
    CHECK(sol.status == LpStatus::unbounded);
    REQUIRE(sol.ray.size() == 1);
    CHECK(sol.ray(0) > 0.0);
    CHECK(lp.objective.dot(sol.ray) < 0.0);
}

TEST_CASE("contradictory rows are infeasible") {
    LinearProgramSpec lp = LinearProgramSpec::with_vars(1);
    lp.set_all_free();
    lp.ineq_matrix = Matrix(2, 1);
    lp.ineq_matrix << 1.0, -1.0;
    lp.ineq_rhs = Vector(2);
    lp.ineq_rhs << 2.0, -1.0; // x >= 2 and x <= 1
    LpSolution sol = solve_lp(lp);
    CHECK(sol.status == LpStatus::infeasible);
}

TEST_CASE("equalities and bounds work together") {
    // min x0 + x1  s.t.  x0 + x1 = 2, 0 <= x0 <= 1.5, x1 >= 0
    LinearProgramSpec lp = LinearProgramSpec::with_vars(2);
    lp.objective << 1.0, 2.0;
    lp.eq_matrix = Matrix::Ones(1, 2);
    lp.eq_rhs = Vector::Constant(1, 2.0);
    lp.upper_bounds(0) = 1.5;
    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.x(0) == doctest::Approx(1.5));
    CHECK(sol.x(1) == doctest::Approx(0.5));
}

TEST_CASE("random programs match vertex enumeration") {
    std::mt19937_64 rng(7);
    int solved = 0;
    for (int trial = 0; trial < 60; ++trial) {
        LinearProgramSpec lp = random_lp(5, 8, rng, /*force_bounded=*/true);
        auto expected = oracles::lp_vertex_enumeration(lp);
        LpSolution sol = solve_lp(lp);
        if (!expected.has_value()) {
            CHECK(sol.status == LpStatus::infeasible);
            continue;
        }
        REQUIRE(sol.status == LpStatus::optimal);
        CHECK(sol.objective_value == doctest::Approx(*expected).epsilon(1e-7));
        CHECK(sol.is_vertex);
        CHECK(active_rank(lp, sol.x) >= lp.n_vars());
        ++solved;
    }
    CHECK(solved >= 50);
}

TEST_CASE("random infeasible-or-unbounded programs are classified") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        LinearProgramSpec lp = random_lp(4, 6, rng, /*force_bounded=*/false);
        auto expected = oracles::lp_vertex_enumeration(lp);
        LpSolution sol = solve_lp(lp);
        if (sol.status == LpStatus::optimal) {
            REQUIRE(expected.has_value());
            CHECK(sol.objective_value <= *expected + 1e-7);
            // enumeration only sees vertices; equal when one exists
            CHECK(sol.objective_value >= *expected - 1e-7);
        } else if (sol.status == LpStatus::unbounded) {
            // certificate: a strictly improving feasible direction
            CHECK(lp.objective.dot(sol.ray) < -1e-9);
            if (lp.n_ineq() > 0) CHECK((lp.ineq_matrix * sol.ray).minCoeff() >= -1e-8);
        }
    }
}

TEST_CASE("strong duality holds on optimal solutions") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        LinearProgramSpec lp = random_lp(5, 8, rng, /*force_bounded=*/true);
        LpSolution sol = solve_lp(lp);
        auto expected = oracles::lp_vertex_enumeration(lp);
        if (sol.status != LpStatus::optimal) {
            // boxed rows can still conflict; the enumeration must agree
            CHECK_FALSE(expected.has_value());
            continue;
        }
        Vector duals = dual_values(sol);
        REQUIRE(duals.size() == lp.n_ineq());
        CHECK(duals.minCoeff() >= -1e-9);
        double dual_obj = lp.ineq_rhs.dot(sol.dual_ineq);
        CHECK(sol.objective_value == doctest::Approx(dual_obj).epsilon(1e-7));
        // complementary slackness
        Vector slack = lp.ineq_matrix * sol.x - lp.ineq_rhs;
        for (int i = 0; i < lp.n_ineq(); ++i)
            CHECK(std::abs(slack(i) * sol.dual_ineq(i)) <= 1e-6);
    }
}

TEST_CASE("duals on non-optimal solutions are an error") {
    LpSolution sol;
    sol.status = LpStatus::infeasible;
    CHECK_THROWS_AS(dual_values(sol), std::logic_error);
}

TEST_CASE("determinism: identical specs give identical solutions") {
    std::mt19937_64 rng(31);
    LinearProgramSpec lp = random_lp(5, 10, rng, true);
    LpSolution a = solve_lp(lp);
    LpSolution b = solve_lp(lp);
    REQUIRE(a.status == LpStatus::optimal);
    CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("degenerate cycling example terminates") {
    // A classic cycling-prone setup under most-negative pricing.
    LinearProgramSpec lp = LinearProgramSpec::with_vars(4);
    lp.objective << -0.75, 150.0, -0.02, 6.0;
    lp.ineq_matrix = Matrix(3, 4);
    lp.ineq_matrix << -0.25, 60.0, 0.04, -9.0,
                      -0.5, 90.0, 0.02, -3.0,
                      0.0, 0.0, -1.0, 0.0;
    lp.ineq_rhs = Vector::Zero(3);
    lp.ineq_rhs(2) = -1.0;
    LpSolution sol = solve_lp(lp);
    CHECK(sol.status == LpStatus::optimal);
    CHECK(sol.objective_value == doctest::Approx(-0.05).epsilon(1e-6));
}

TEST_CASE("free variables round-trip through the internal split") {
    LinearProgramSpec lp = LinearProgramSpec::with_vars(2);
    lp.set_all_free();
    lp.objective << 1.0, 1.0;
    lp.ineq_matrix = Matrix(2, 2);
    lp.ineq_matrix << 1.0, 0.0, 0.0, 1.0;
    lp.ineq_rhs = Vector(2);
    lp.ineq_rhs << -3.5, 2.0;
    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.x(0) == doctest::Approx(-3.5)); // negative part exercised
    CHECK(sol.x(1) == doctest::Approx(2.0));
}

TEST_CASE("many-row programs take the dual route and agree with the direct one") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    // 400 rows, 6 variables: the solver is free to dualize internally.
    const int rows = 400, vars = 6;
    LinearProgramSpec lp = LinearProgramSpec::with_vars(vars);
    lp.set_all_free();
    lp.ineq_matrix = Matrix(rows, vars);
    lp.ineq_rhs = Vector(rows);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < vars; ++j) lp.ineq_matrix(i, j) = coef(rng);
        lp.ineq_rhs(i) = -1.0 - std::abs(coef(rng)); // origin stays feasible
    }
    for (int j = 0; j < vars; ++j) lp.objective(j) = coef(rng);

    LpSolution big = solve_lp(lp);
    REQUIRE(big.status == LpStatus::optimal);
    CHECK((lp.ineq_matrix * big.x - lp.ineq_rhs).minCoeff() >= -1e-7);
    CHECK(big.is_vertex);
    CHECK(active_rank(lp, big.x) >= vars);
    CHECK(big.dual_ineq.minCoeff() >= -1e-9);
    CHECK(lp.ineq_rhs.dot(big.dual_ineq) == doctest::Approx(big.objective_value).epsilon(1e-6));

    // Same program restricted to its first 120 rows solves directly; append
    // redundant duplicates to cross the dualization threshold and compare.
    LinearProgramSpec small = lp;
    small.ineq_matrix = lp.ineq_matrix.topRows(120);
    small.ineq_rhs = lp.ineq_rhs.head(120);
    LpSolution direct = solve_lp(small);
    REQUIRE(direct.status == LpStatus::optimal);
    LinearProgramSpec padded = small;
    padded.ineq_matrix = Matrix(360, vars);
    padded.ineq_rhs = Vector(360);
    for (int k = 0; k < 3; ++k) {
        padded.ineq_matrix.middleRows(120 * k, 120) = small.ineq_matrix;
        padded.ineq_rhs.segment(120 * k, 120) = small.ineq_rhs;
    }
    LpSolution dualized = solve_lp(padded);
    REQUIRE(dualized.status == LpStatus::optimal);
    CHECK(dualized.objective_value == doctest::Approx(direct.objective_value).epsilon(1e-7));
}

TEST_CASE("debug dump has the fixed layout") {
    LinearProgramSpec lp = LinearProgramSpec::with_vars(2);
    lp.objective << 1.0, -1.0;
    lp.ineq_matrix = Matrix::Ones(1, 2);
    lp.ineq_rhs = Vector::Ones(1);
    std::string text = dump_lp(lp);
    CHECK(text.find("minimize 1 -1") == 0);
    CHECK(text.find(">= 1") != std::string::npos);
    CHECK(text.find("bound 0 <= x0") != std::string::npos);
}
