#pragma once

#include "abp/linprog.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace abp {

/// Separable bilinear program in normal form:
///   min  s1.w + r1.x + x' C y + r2.y + s2.z
///   s.t. A1 x + B1 w = b1   (left block, variables w and x)
///        A2 y + B2 z = b2   (right block, variables y and z)
/// with each variable either nonnegative or free. The two constraint blocks
/// share no variables; the only coupling is the bilinear objective term.
struct SeparableBilinearProgram {
    // left block
    Vector s1, r1;
    Matrix a1, b1_mat; // constraint  a1 * x + b1_mat * w = b1
    Vector b1;
    std::vector<bool> w_free, x_free;
    // right block
    Vector r2, s2;
    Matrix a2, b2_mat; // constraint  a2 * y + b2_mat * z = b2
    Vector b2;
    std::vector<bool> y_free, z_free;
    // coupling
    Matrix coupling; // dim(x) x dim(y)

    int dim_w() const { return static_cast<int>(s1.size()); }
    int dim_x() const { return static_cast<int>(r1.size()); }
    int dim_y() const { return static_cast<int>(r2.size()); }
    int dim_z() const { return static_cast<int>(s2.size()); }

    void validate() const;

    /// LP over the left block with the right block fixed at y.
    LinearProgramSpec left_lp(const Vector& y) const; // variables [x; w]
    /// LP over the right block with the left block fixed at x.
    LinearProgramSpec right_lp(const Vector& x) const; // variables [y; z]
};

/// s1.w + r1.x + x' C y + r2.y + s2.z, evaluated exactly.
double evaluate_objective(const SeparableBilinearProgram& bp, const Vector& w, const Vector& x,
                          const Vector& y, const Vector& z);

struct BilinearIterate {
    double objective;
    Vector left;  // [x; w]
    Vector right; // [y; z]
};

struct BilinearTrace {
    std::vector<BilinearIterate> iterates;
    bool converged = false;
    int iterations = 0;

    double final_objective() const { return iterates.back().objective; }
    const Vector& final_left() const { return iterates.back().left; }
    const Vector& final_right() const { return iterates.back().right; }
};

/// Optional replacement for the LP-based block minimizations; both hooks must
/// return exact block optima at vertices for the convergence guarantee to
/// carry over. Used to plug in closed-form or structure-aware block solvers.
struct BlockSteps {
    // Given the left point [x; w], return an optimal right point [y; z].
    std::function<Vector(const SeparableBilinearProgram&, const Vector&)> right;
    // Given the right point [y; z], return an optimal left point [x; w].
    std::function<Vector(const SeparableBilinearProgram&, const Vector&)> left;
};

/// Alternating block minimization: starting from a feasible left point,
/// repeatedly solve the right block and then the left block, each as a
/// vertex LP, until both repeat or max_iters is hit. The objective along the
/// trace never increases.
BilinearTrace solve_alternating(const SeparableBilinearProgram& bp, const Vector& init_left,
                                int max_iters = 500, const BlockSteps* steps = nullptr);

struct MultistartCombine {
    // Maps a right-block point to the quantity being combined (e.g. a value
    // function) and checks feasibility of the combined point.
    std::function<Vector(const Vector& right)> extract;
    std::function<bool(const Vector& combined)> feasible;
};

struct MultistartResult {
    BilinearTrace best;
    std::optional<Vector> combined_min; // pointwise minimum across runs
    bool combined_feasible = false;
};

/// Runs solve_alternating from n_starts random feasible left-block vertices
/// (random LP objectives over the left block) and keeps the best trace.
MultistartResult solve_multistart(const SeparableBilinearProgram& bp, int n_starts,
                                  unsigned long seed, const MultistartCombine* combine = nullptr,
                                  int max_iters = 500, const BlockSteps* steps = nullptr);

} // namespace abp
