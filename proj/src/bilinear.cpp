#include "abp/bilinear.hpp"

#include <cmath>
#include <random>
#include <string>
#include <unordered_set>
#include <stdexcept>

namespace abp {

namespace {

void check_dims(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("bilinear program: ") + what);
}

Vector concat(const Vector& a, const Vector& b) {
    Vector out(a.size() + b.size());
    out << a, b;
    return out;
}

bool same_point(const Vector& a, const Vector& b) {
    return a.size() == b.size() && ((a - b).cwiseAbs().maxCoeff() <= 1e-12);
}

} // namespace

void SeparableBilinearProgram::validate() const {
    check_dims(coupling.rows() == dim_x() && coupling.cols() == dim_y(),
               "coupling matrix must be dim(x) x dim(y)");
    check_dims(a1.cols() == dim_x() || b1.size() == 0, "a1 column count");
    check_dims(b1_mat.cols() == dim_w() || b1.size() == 0, "b1_mat column count");
    check_dims(a1.rows() == b1.size() && b1_mat.rows() == b1.size(), "left block row count");
    check_dims(a2.cols() == dim_y() || b2.size() == 0, "a2 column count");
    check_dims(b2_mat.cols() == dim_z() || b2.size() == 0, "b2_mat column count");
    check_dims(a2.rows() == b2.size() && b2_mat.rows() == b2.size(), "right block row count");
    check_dims(static_cast<int>(w_free.size()) == dim_w(), "w sign flags");
    check_dims(static_cast<int>(x_free.size()) == dim_x(), "x sign flags");
    check_dims(static_cast<int>(y_free.size()) == dim_y(), "y sign flags");
    check_dims(static_cast<int>(z_free.size()) == dim_z(), "z sign flags");
}

LinearProgramSpec SeparableBilinearProgram::left_lp(const Vector& y) const {
    check_dims(y.size() == dim_y(), "fixed y has wrong length");
    const int nx = dim_x(), nw = dim_w();
    LinearProgramSpec lp = LinearProgramSpec::with_vars(nx + nw);
    lp.objective.head(nx) = r1 + coupling * y;
    lp.objective.tail(nw) = s1;
    lp.eq_matrix = Matrix::Zero(b1.size(), nx + nw);
    if (b1.size() > 0) {
        lp.eq_matrix.leftCols(nx) = a1;
        lp.eq_matrix.rightCols(nw) = b1_mat;
    }
    lp.eq_rhs = b1;
    for (int j = 0; j < nx; ++j)
        if (x_free[j]) lp.set_free(j);
    for (int j = 0; j < nw; ++j)
        if (w_free[j]) lp.set_free(nx + j);
    return lp;
}

LinearProgramSpec SeparableBilinearProgram::right_lp(const Vector& x) const {
    check_dims(x.size() == dim_x(), "fixed x has wrong length");
    const int ny = dim_y(), nz = dim_z();
    LinearProgramSpec lp = LinearProgramSpec::with_vars(ny + nz);
    lp.objective.head(ny) = r2 + coupling.transpose() * x;
    lp.objective.tail(nz) = s2;
    lp.eq_matrix = Matrix::Zero(b2.size(), ny + nz);
    if (b2.size() > 0) {
        lp.eq_matrix.leftCols(ny) = a2;
        lp.eq_matrix.rightCols(nz) = b2_mat;
    }
    lp.eq_rhs = b2;
    for (int j = 0; j < ny; ++j)
        if (y_free[j]) lp.set_free(j);
    for (int j = 0; j < nz; ++j)
        if (z_free[j]) lp.set_free(ny + j);
    return lp;
}

double evaluate_objective(const SeparableBilinearProgram& bp, const Vector& w, const Vector& x,
                          const Vector& y, const Vector& z) {
    if (w.size() != bp.dim_w() || x.size() != bp.dim_x() || y.size() != bp.dim_y() ||
        z.size() != bp.dim_z())
        throw std::invalid_argument("objective evaluation: variable lengths do not match");
    double value = 0.0;
    if (w.size() > 0) value += bp.s1.dot(w);
    if (x.size() > 0) value += bp.r1.dot(x);
    if (x.size() > 0 && y.size() > 0) value += x.dot(bp.coupling * y);
    if (y.size() > 0) value += bp.r2.dot(y);
    if (z.size() > 0) value += bp.s2.dot(z);
    return value;
}

namespace {

double objective_of_points(const SeparableBilinearProgram& bp, const Vector& left,
                           const Vector& right) {
    return evaluate_objective(bp, left.tail(bp.dim_w()), left.head(bp.dim_x()),
                              right.head(bp.dim_y()), right.tail(bp.dim_z()));
}

Vector default_right_step(const SeparableBilinearProgram& bp, const Vector& left) {
    LpSolution sol = solve_lp(bp.right_lp(left.head(bp.dim_x())));
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error("right-block LP did not reach an optimum");
    return sol.x;
}

Vector default_left_step(const SeparableBilinearProgram& bp, const Vector& right) {
    LpSolution sol = solve_lp(bp.left_lp(right.head(bp.dim_y())));
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error("left-block LP did not reach an optimum");
    return sol.x;
}

} // namespace

BilinearTrace solve_alternating(const SeparableBilinearProgram& bp, const Vector& init_left,
                                int max_iters, const BlockSteps* steps) {
    bp.validate();
    if (init_left.size() != bp.dim_x() + bp.dim_w())
        throw std::invalid_argument("initial left point has wrong length");

    auto right_step = [&](const Vector& l) {
        return steps && steps->right ? steps->right(bp, l) : default_right_step(bp, l);
    };
    auto left_step = [&](const Vector& r) {
        return steps && steps->left ? steps->left(bp, r) : default_left_step(bp, r);
    };

    auto fingerprint = [](const Vector& l, const Vector& r) {
        std::string bytes(reinterpret_cast<const char*>(l.data()), l.size() * sizeof(double));
        bytes.append(reinterpret_cast<const char*>(r.data()), r.size() * sizeof(double));
        return bytes;
    };

    BilinearTrace trace;
    Vector left = init_left;
    Vector right = right_step(left);
    trace.iterates.push_back({objective_of_points(bp, left, right), left, right});
    std::unordered_set<std::string> seen;
    seen.insert(fingerprint(left, right));

    for (int it = 1; it < max_iters; ++it) {
        Vector new_left = left_step(right);
        Vector new_right = right_step(new_left);
        double obj = objective_of_points(bp, new_left, new_right);
        // Vertex solutions and exact block optima make the objective
        // nonincreasing; a tiny regression can only be roundoff.
        if (obj > trace.final_objective() + 1e-9)
            throw std::runtime_error("alternating minimization: objective increased");
        bool repeated = same_point(new_left, left) && same_point(new_right, right);
        // A revisit of any earlier vertex pair closes a constant-objective
        // cycle: no further improvement is possible.
        bool revisit = !seen.insert(fingerprint(new_left, new_right)).second;
        left = std::move(new_left);
        right = std::move(new_right);
        trace.iterates.push_back({obj, left, right});
        if (repeated || revisit) {
            trace.converged = true;
            break;
        }
    }
    trace.iterations = static_cast<int>(trace.iterates.size());
    return trace;
}

MultistartResult solve_multistart(const SeparableBilinearProgram& bp, int n_starts,
                                  unsigned long seed, const MultistartCombine* combine,
                                  int max_iters, const BlockSteps* steps) {
    if (n_starts < 1) throw std::invalid_argument("n_starts must be at least 1");
    bp.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    MultistartResult result;
    bool have_best = false;
    std::vector<Vector> extracted;
    for (int s = 0; s < n_starts; ++s) {
        // A random vertex of the left block: minimize a random objective.
        // Free variables get a zero cost so the start LP stays bounded.
        LinearProgramSpec start_lp = bp.left_lp(Vector::Zero(bp.dim_y()));
        for (int j = 0; j < start_lp.n_vars(); ++j) {
            double c = unit(rng);
            start_lp.objective(j) = std::isfinite(start_lp.lower_bounds(j)) ? c : 0.0;
        }
        LpSolution start = solve_lp(start_lp);
        if (start.status != LpStatus::optimal)
            throw std::runtime_error("left block is infeasible or unbounded at initialization");

        BilinearTrace trace = solve_alternating(bp, start.x, max_iters, steps);
        if (combine && combine->extract) extracted.push_back(combine->extract(trace.final_right()));
        if (!have_best || trace.final_objective() < result.best.final_objective()) {
            result.best = std::move(trace);
            have_best = true;
        }
    }
    if (!extracted.empty()) {
        Vector combined = extracted.front();
        for (size_t i = 1; i < extracted.size(); ++i) combined = combined.cwiseMin(extracted[i]);
        result.combined_feasible = combine->feasible ? combine->feasible(combined) : true;
        result.combined_min = std::move(combined);
    }
    return result;
}

} // namespace abp
