#pragma once

#include "abp/linalg.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace abp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// General linear program: minimize objective . x subject to
///   ineq_matrix x >= ineq_rhs,  eq_matrix x == eq_rhs,
///   lower_bounds <= x <= upper_bounds (infinite entries mean unbounded).
struct LinearProgramSpec {
    Vector objective;
    Matrix ineq_matrix; // may have zero rows
    Vector ineq_rhs;
    Matrix eq_matrix; // may have zero rows
    Vector eq_rhs;
    Vector lower_bounds; // default 0
    Vector upper_bounds; // default +inf

    /// Program over n nonnegative variables with a zero objective and no rows.
    static LinearProgramSpec with_vars(int n);

    int n_vars() const { return static_cast<int>(objective.size()); }
    int n_ineq() const { return static_cast<int>(ineq_rhs.size()); }
    int n_eq() const { return static_cast<int>(eq_rhs.size()); }

    void set_free(int var) {
        lower_bounds(var) = -kInf;
        upper_bounds(var) = kInf;
    }
    void set_all_free() {
        lower_bounds.setConstant(-kInf);
        upper_bounds.setConstant(kInf);
    }

    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    Vector x;                    // primal point (optimal) or empty
    double objective_value = 0.0;
    bool is_vertex = false;      // basic feasible solution
    Vector dual_ineq;            // >= 0, one entry per inequality row (optimal only)
    Vector dual_eq;              // one entry per equality row (optimal only)
    Vector ray;                  // improving feasible ray (unbounded only)
    long iterations = 0;
};

/// Thrown when the simplex hits its pivot cap; never silently returned.
class LpIterationLimit : public std::runtime_error {
  public:
    explicit LpIterationLimit(long iters)
        : std::runtime_error("simplex iteration cap exceeded after " + std::to_string(iters) +
                             " pivots") {}
};

/// Two-phase dense revised simplex with Dantzig pricing and a Bland fallback
/// after 50 consecutive degenerate pivots. Free variables are split
/// internally, so reported solutions are vertices (basic feasible points).
/// Instances with many more rows than variables are transparently solved
/// through their dual, with the primal vertex recovered from the dual basis.
LpSolution solve_lp(const LinearProgramSpec& spec);

/// Duals of an optimal solution, inequality rows first, then equality rows.
/// Throws logic_error when the solution is not optimal.
Vector dual_values(const LpSolution& solution);

/// Fixed-layout plain-text dump (objective row, then constraints) for bug
/// reports.
std::string dump_lp(const LinearProgramSpec& spec);

} // namespace abp
