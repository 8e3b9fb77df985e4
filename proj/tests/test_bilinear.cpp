#include "abp/bilinear.hpp"

#include "abp/benchmarks.hpp"
#include "abp/formulations.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace abp;

namespace {

// Small decoupled program: two independent LPs glued by a zero (or not)
// coupling block.
//   left:  min r1.x  s.t. sum x = 1, x >= 0      (dim 2)
//   right: min r2.y  s.t. sum y = 2, y >= 0      (dim 2), z empty, w empty
SeparableBilinearProgram toy_bp(const Matrix& coupling) {
    SeparableBilinearProgram bp;
    bp.s1 = Vector::Zero(0);
    bp.r1 = Vector(2);
    bp.r1 << 1.0, 2.0;
    bp.a1 = Matrix::Ones(1, 2);
    bp.b1_mat = Matrix::Zero(1, 0);
    bp.b1 = Vector::Ones(1);
    bp.w_free = {};
    bp.x_free = {false, false};
    bp.r2 = Vector(2);
    bp.r2 << 3.0, 1.0;
    bp.s2 = Vector::Zero(0);
    bp.a2 = Matrix::Ones(1, 2);
    bp.b2_mat = Matrix::Zero(1, 0);
    bp.b2 = Vector::Constant(1, 2.0);
    bp.y_free = {false, false};
    bp.z_free = {};
    bp.coupling = coupling;
    return bp;
}

} // namespace

TEST_CASE("objective evaluation matches a term-by-term sum") {
    SeparableBilinearProgram bp = toy_bp(Matrix::Zero(2, 2));
    Vector x = Vector::Zero(2), y = Vector::Zero(2), none = Vector::Zero(0);
    CHECK(evaluate_objective(bp, none, x, y, none) == 0.0);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Matrix c(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c(i, j) = unit(rng);
    bp = toy_bp(c);
    for (int trial = 0; trial < 10; ++trial) {
        for (int i = 0; i < 2; ++i) {
            x(i) = unit(rng);
            y(i) = unit(rng);
        }
        double want = bp.r1.dot(x) + bp.r2.dot(y);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) want += x(i) * c(i, j) * y(j);
        CHECK(evaluate_objective(bp, none, x, y, none) == doctest::Approx(want).epsilon(1e-14));
    }
    CHECK_THROWS_AS(evaluate_objective(bp, none, Vector::Zero(3), y, none),
                    std::invalid_argument);
}

TEST_CASE("zero coupling converges in one round to the two LP optima") {
    SeparableBilinearProgram bp = toy_bp(Matrix::Zero(2, 2));
    Vector init(2);
    init << 1.0, 0.0;
    BilinearTrace trace = solve_alternating(bp, init);
    CHECK(trace.converged);
    CHECK(trace.iterations <= 3);
    // left optimum picks x = (1,0); right picks y = (0,2)
    CHECK(trace.final_objective() == doctest::Approx(1.0 + 2.0).epsilon(1e-9));
    CHECK(trace.final_left()(0) == doctest::Approx(1.0));
    CHECK(trace.final_right()(1) == doctest::Approx(2.0));
}

TEST_CASE("objective never increases along a trace") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix c(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) c(i, j) = unit(rng);
        SeparableBilinearProgram bp = toy_bp(c);
        Vector init(2);
        init << (trial % 2 ? 1.0 : 0.0), (trial % 2 ? 0.0 : 1.0);
        BilinearTrace trace = solve_alternating(bp, init);
        CHECK(trace.converged);
        for (size_t i = 1; i < trace.iterates.size(); ++i)
            CHECK(trace.iterates[i].objective <= trace.iterates[i - 1].objective + 1e-9);
    }
}

TEST_CASE("fixed point: re-running from a solution changes nothing") {
    TabularMdp m2 = fixture_m2();
    FeatureBasis basis = oracles::random_basis(2, 1, 3);
    SeparableBilinearProgram bp = build_abp(m2, basis, AbpVariant::robust());
    MultistartResult first = solve_multistart(bp, 4, 99);
    REQUIRE(first.best.converged);
    BilinearTrace again = solve_alternating(bp, first.best.final_left());
    CHECK(again.converged);
    CHECK(again.final_objective() == doctest::Approx(first.best.final_objective()).epsilon(1e-9));
    CHECK((again.final_left() - first.best.final_left()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("alternating on the policy-residual program reaches the enumerated optimum") {
    TabularMdp m2 = fixture_m2();
    FeatureBasis basis = oracles::random_basis(2, 1, 8);
    SeparableBilinearProgram bp = build_abp(m2, basis, AbpVariant::robust());
    AbpSolution oracle = abp_exact_oracle(m2, basis, AbpVariant::robust());

    // all four deterministic starts
    double best = std::numeric_limits<double>::infinity();
    for (const auto& actions : oracles::all_policies(2, 2)) {
        Vector init = Policy::deterministic(actions, 2).flatten();
        BilinearTrace trace = solve_alternating(bp, init);
        CHECK(trace.final_objective() >= oracle.objective - 1e-8);
        best = std::min(best, trace.final_objective());
    }
    CHECK(best == doctest::Approx(oracle.objective).epsilon(1e-7));
}

TEST_CASE("global optimum is a fixed point of the alternation") {
    TabularMdp m2 = fixture_m2();
    FeatureBasis basis = oracles::random_basis(2, 1, 21);
    SeparableBilinearProgram bp = build_abp(m2, basis, AbpVariant::robust());
    AbpSolution oracle = abp_exact_oracle(m2, basis, AbpVariant::robust());
    BilinearTrace trace = solve_alternating(bp, oracle.policy.flatten());
    CHECK(trace.converged);
    CHECK(trace.final_objective() == doctest::Approx(oracle.objective).epsilon(1e-8));
}

TEST_CASE("multistart with one start reduces to a single alternation") {
    SeparableBilinearProgram bp = toy_bp(Matrix::Zero(2, 2));
    MultistartResult one = solve_multistart(bp, 1, 7);
    CHECK(one.best.converged);
    CHECK(one.best.final_objective() == doctest::Approx(3.0).epsilon(1e-9));
    CHECK_THROWS_AS(solve_multistart(bp, 0, 7), std::invalid_argument);
}

TEST_CASE("best of sixteen starts attains the enumerated optimum") {
    TabularMdp m2 = fixture_m2();
    FeatureBasis basis = oracles::random_basis(2, 1, 13);
    SeparableBilinearProgram bp = build_abp(m2, basis, AbpVariant::robust());
    AbpSolution oracle = abp_exact_oracle(m2, basis, AbpVariant::robust());
    MultistartResult ms = solve_multistart(bp, 16, 1);
    CHECK(ms.best.final_objective() == doctest::Approx(oracle.objective).epsilon(1e-7));
}

TEST_CASE("pointwise minimum of feasible runs stays feasible") {
    TabularMdp mdp = random_mdp(3, 2, 42);
    FeatureBasis basis = oracles::random_basis(3, 2, 44);
    SeparableBilinearProgram bp = build_abp(mdp, basis, AbpVariant::robust());

    const int n_rows = 6; // 3 states x 2 actions
    MultistartCombine combine;
    combine.extract = [&](const Vector& right) {
        return Vector(basis.matrix * right.segment(n_rows, basis.n_features()));
    };
    combine.feasible = [&](const Vector& v) {
        return bellman_residual(mdp, v).minCoeff() >= -1e-9;
    };
    MultistartResult ms = solve_multistart(bp, 8, 5, &combine);
    REQUIRE(ms.combined_min.has_value());
    CHECK(ms.combined_feasible);
    CHECK(bellman_residual(mdp, *ms.combined_min).minCoeff() >= -1e-9);
    // the combined function cannot exceed the best run anywhere
    Vector best_v = combine.extract(ms.best.final_right());
    CHECK((*ms.combined_min - best_v).maxCoeff() <= 1e-12);
}

TEST_CASE("trace dumps are monotone json") {
    SeparableBilinearProgram bp = toy_bp(Matrix::Identity(2, 2));
    Vector init(2);
    init << 0.0, 1.0;
    BilinearTrace trace = solve_alternating(bp, init);
    // spot-check the shape of the iterate list used by the dump
    REQUIRE(!trace.iterates.empty());
    for (const auto& it : trace.iterates) {
        CHECK(it.left.size() == 2);
        CHECK(it.right.size() == 2);
    }
}
