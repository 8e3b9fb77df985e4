#include "abp/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <vector>
#include <cstdio>
#include <cstdlib>

namespace abp {

void LinearProgramSpec::validate() const {
    const int n = n_vars();
    if (n <= 0) throw std::invalid_argument("LP has no variables");
    if (ineq_matrix.rows() != n_ineq() || (n_ineq() > 0 && ineq_matrix.cols() != n))
        throw std::invalid_argument("inequality block dimensions are inconsistent");
    if (eq_matrix.rows() != n_eq() || (n_eq() > 0 && eq_matrix.cols() != n))
        throw std::invalid_argument("equality block dimensions are inconsistent");
    if (lower_bounds.size() != n || upper_bounds.size() != n)
        throw std::invalid_argument("bound vectors must have one entry per variable");
    if (!ineq_rhs.allFinite() || !eq_rhs.allFinite())
        throw std::invalid_argument("constraint right-hand sides must be finite");
    if (!objective.allFinite()) throw std::invalid_argument("objective must be finite");
    for (int j = 0; j < n; ++j)
        if (lower_bounds(j) > upper_bounds(j))
            throw std::invalid_argument("variable " + std::to_string(j) + " has empty bounds");
}

LinearProgramSpec LinearProgramSpec::with_vars(int n) {
    LinearProgramSpec spec;
    spec.objective = Vector::Zero(n);
    spec.ineq_matrix.resize(0, n);
    spec.ineq_rhs.resize(0);
    spec.eq_matrix.resize(0, n);
    spec.eq_rhs.resize(0);
    spec.lower_bounds = Vector::Zero(n);
    spec.upper_bounds = Vector::Constant(n, kInf);
    return spec;
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-8;
constexpr double kDegenStep = 1e-12;
constexpr int kBlandTrigger = 50;
constexpr int kRefactorEvery = 64;

struct SingularBasis : std::runtime_error {
    SingularBasis() : std::runtime_error("simplex basis became singular") {}
};

// How each original variable maps to nonnegative standard-form columns.
struct VarMap {
    enum Kind { shift, mirror, split } kind = shift;
    int col = -1;      // first standard column
    double offset = 0; // lower bound (shift) or upper bound (mirror)
};

struct StandardForm {
    Matrix a;      // m x n_cols, equality rows with rhs >= 0
    Vector b;      // m
    Vector cost;   // phase-2 cost on standard columns
    int n_struct = 0; // structural columns (mapped variables)
    int n_cols = 0;   // structural + slacks
    std::vector<VarMap> vmap;
    std::vector<int> row_origin; // >=0: ineq row index; -1-k: eq row k; -2-... box rows
    std::vector<double> row_sign; // +1 kept, -1 flipped
    std::vector<int> slack_col;   // per row, -1 if none
};

constexpr int kBoxRowOrigin = std::numeric_limits<int>::min();

StandardForm build_standard_form(const LinearProgramSpec& spec) {
    const int n = spec.n_vars();
    // Assign standard columns per variable.
    std::vector<VarMap> vmap(n);
    std::vector<int> box_rows; // variables needing an explicit range row
    int n_struct = 0;
    for (int j = 0; j < n; ++j) {
        const double lo = spec.lower_bounds(j), hi = spec.upper_bounds(j);
        if (std::isfinite(lo)) {
            vmap[j] = {VarMap::shift, n_struct, lo};
            n_struct += 1;
            if (std::isfinite(hi)) box_rows.push_back(j);
        } else if (std::isfinite(hi)) {
            vmap[j] = {VarMap::mirror, n_struct, hi};
            n_struct += 1;
        } else {
            vmap[j] = {VarMap::split, n_struct, 0.0};
            n_struct += 2;
        }
    }

    const int m_ineq = spec.n_ineq(), m_eq = spec.n_eq();
    const int m = m_ineq + m_eq + static_cast<int>(box_rows.size());
    const int n_slack = m_ineq + static_cast<int>(box_rows.size());

    StandardForm sf;
    sf.n_struct = n_struct;
    sf.n_cols = n_struct + n_slack;
    sf.vmap = vmap;
    sf.a = Matrix::Zero(m, sf.n_cols);
    sf.b = Vector::Zero(m);
    sf.cost = Vector::Zero(sf.n_cols);
    sf.row_origin.assign(m, kBoxRowOrigin);
    sf.row_sign.assign(m, 1.0);
    sf.slack_col.assign(m, -1);

    auto emit_var = [&](int row, int j, double coef) {
        const VarMap& vm = vmap[j];
        switch (vm.kind) {
        case VarMap::shift:
            sf.a(row, vm.col) += coef;
            sf.b(row) -= coef * vm.offset;
            break;
        case VarMap::mirror:
            sf.a(row, vm.col) -= coef;
            sf.b(row) -= coef * vm.offset;
            break;
        case VarMap::split:
            sf.a(row, vm.col) += coef;
            sf.a(row, vm.col + 1) -= coef;
            break;
        }
    };

    int row = 0, slack = n_struct;
    for (int i = 0; i < m_ineq; ++i, ++row) {
        sf.b(row) = spec.ineq_rhs(i);
        for (int j = 0; j < n; ++j)
            if (spec.ineq_matrix(i, j) != 0.0) emit_var(row, j, spec.ineq_matrix(i, j));
        sf.a(row, slack) = -1.0; // surplus
        sf.slack_col[row] = slack++;
        sf.row_origin[row] = i;
    }
    for (int i = 0; i < m_eq; ++i, ++row) {
        sf.b(row) = spec.eq_rhs(i);
        for (int j = 0; j < n; ++j)
            if (spec.eq_matrix(i, j) != 0.0) emit_var(row, j, spec.eq_matrix(i, j));
        sf.row_origin[row] = -1 - i;
    }
    for (int j : box_rows) {
        sf.b(row) = spec.upper_bounds(j) - spec.lower_bounds(j);
        sf.a(row, vmap[j].col) = 1.0;
        sf.a(row, slack) = 1.0;
        sf.slack_col[row] = slack++;
        ++row;
    }

    for (int j = 0; j < n; ++j) {
        const VarMap& vm = vmap[j];
        const double c = spec.objective(j);
        if (vm.kind == VarMap::split) {
            sf.cost(vm.col) = c;
            sf.cost(vm.col + 1) = -c;
        } else if (vm.kind == VarMap::mirror) {
            sf.cost(vm.col) = -c;
        } else {
            sf.cost(vm.col) = c;
        }
    }

    // Normalize right-hand sides to be nonnegative; zero-rhs rows are also
    // flipped when that turns their slack coefficient positive, so they can
    // seed the initial basis with a clean +identity column.
    for (int i = 0; i < m; ++i) {
        bool flip = sf.b(i) < 0.0;
        if (!flip && sf.b(i) == 0.0 && sf.slack_col[i] >= 0 && sf.a(i, sf.slack_col[i]) < 0.0)
            flip = true;
        if (flip) {
            sf.a.row(i) = -sf.a.row(i);
            sf.b(i) = -sf.b(i);
            sf.row_sign[i] = -1.0;
        }
    }
    return sf;
}

Vector unmap_point(const StandardForm& sf, const Vector& z, const LinearProgramSpec& spec) {
    Vector x(spec.n_vars());
    for (int j = 0; j < spec.n_vars(); ++j) {
        const VarMap& vm = sf.vmap[j];
        switch (vm.kind) {
        case VarMap::shift: x(j) = vm.offset + z(vm.col); break;
        case VarMap::mirror: x(j) = vm.offset - z(vm.col); break;
        case VarMap::split: x(j) = z(vm.col) - z(vm.col + 1); break;
        }
    }
    return x;
}

Vector unmap_direction(const StandardForm& sf, const Vector& dz, int n_vars) {
    Vector dx(n_vars);
    for (int j = 0; j < n_vars; ++j) {
        const VarMap& vm = sf.vmap[j];
        switch (vm.kind) {
        case VarMap::shift: dx(j) = dz(vm.col); break;
        case VarMap::mirror: dx(j) = -dz(vm.col); break;
        case VarMap::split: dx(j) = dz(vm.col) - dz(vm.col + 1); break;
        }
    }
    return dx;
}

// Revised simplex over  min cost.z  s.t.  a z = b (b >= 0), z >= 0,
// with artificial columns appended internally for phase 1.
class SimplexEngine {
  public:
    SimplexEngine(const StandardForm& sf, bool bland_from_start, int refactor_every)
        : sf_(sf), bland_always_(bland_from_start), refactor_every_(refactor_every) {}

    // Result of the two-phase solve on the standard form.
    struct Outcome {
        LpStatus status = LpStatus::infeasible;
        Vector z;      // standard-form point
        Vector ray;    // standard-form improving ray (unbounded)
        Vector duals;  // row prices for the *kept* rows, indexed by original row id
        std::vector<char> row_kept;
        long iterations = 0;
    };

    Outcome run() {
        init();
        phase_one();
        Outcome out;
        out.iterations = iters_;
        out.row_kept = row_kept_;
        if (infeasible_) {
            out.status = LpStatus::infeasible;
            return out;
        }
        bool unbounded = !phase_two();
        out.iterations = iters_;
        out.row_kept = row_kept_;
        if (unbounded) {
            out.status = LpStatus::unbounded;
            out.ray = ray_;
            return out;
        }
        out.status = LpStatus::optimal;
        out.z = Vector::Zero(sf_.n_cols);
        for (int i = 0; i < m_; ++i)
            if (basis_[i] < sf_.n_cols) out.z(basis_[i]) = std::max(xb_(i), 0.0);
        // Row prices under the phase-2 costs, reported per original row index.
        Vector cb(m_);
        for (int i = 0; i < m_; ++i) cb(i) = cost_of(basis_[i]);
        Vector y = binv_.transpose() * cb;
        out.duals = Vector::Zero(static_cast<int>(row_kept_.size()));
        for (int i = 0; i < m_; ++i) out.duals(orig_row_[i]) = y(i);
        return out;
    }

  private:
    const StandardForm& sf_;
    bool bland_always_;
    int refactor_every_ = kRefactorEvery;
    int m_ = 0;
    int n_total_ = 0; // columns including artificials
    Matrix a_;        // working copy (rows may be dropped between phases)
    Vector b_;
    std::vector<int> basis_;
    std::vector<char> in_basis_;
    Matrix binv_;
    Vector xb_;
    std::vector<int> orig_row_;   // working row -> original row
    std::vector<char> row_kept_;
    bool phase1_ = true;
    bool infeasible_ = false;
    Vector ray_;
    long iters_ = 0;
    long iter_cap_ = 0;
    int degen_run_ = 0;
    int since_refactor_ = 0;

    double cost_of(int col) const {
        if (phase1_) return col >= sf_.n_cols ? 1.0 : 0.0;
        return col >= sf_.n_cols ? 0.0 : sf_.cost(col);
    }

    void init() {
        m_ = static_cast<int>(sf_.a.rows());
        a_ = sf_.a;
        b_ = sf_.b;
        orig_row_.resize(m_);
        for (int i = 0; i < m_; ++i) orig_row_[i] = i;
        row_kept_.assign(m_, 1);

        // Choose initial basic columns: the row's slack when it can sit at a
        // nonnegative value, otherwise a fresh artificial.
        std::vector<int> art_rows;
        basis_.assign(m_, -1);
        for (int i = 0; i < m_; ++i) {
            int s = sf_.slack_col[i];
            double coef = s >= 0 ? a_(i, s) : 0.0;
            if (s >= 0 && (coef > 0.5 || b_(i) == 0.0))
                basis_[i] = s;
            else
                art_rows.push_back(i);
        }
        int n_art = static_cast<int>(art_rows.size());
        n_total_ = sf_.n_cols + n_art;
        a_.conservativeResize(m_, n_total_);
        a_.rightCols(n_art).setZero();
        for (int k = 0; k < n_art; ++k) {
            a_(art_rows[k], sf_.n_cols + k) = 1.0;
            basis_[art_rows[k]] = sf_.n_cols + k;
        }
        in_basis_.assign(n_total_, 0);
        for (int i = 0; i < m_; ++i) in_basis_[basis_[i]] = 1;
        iter_cap_ = 50L * (m_ + n_total_);
        refactor();
    }

    void refactor() {
        Matrix basis_mat(m_, m_);
        for (int i = 0; i < m_; ++i) basis_mat.col(i) = a_.col(basis_[i]);
        Eigen::PartialPivLU<Matrix> lu(basis_mat);
        binv_ = lu.inverse();
        if (!binv_.allFinite()) {
            if (getenv("ABP_LP_DEBUG"))
                fprintf(stderr, "singular refactor: m=%d phase1=%d iters=%ld\n", m_, (int)phase1_,
                        iters_);
            throw SingularBasis();
        }
        xb_ = binv_ * b_;
        since_refactor_ = 0;
    }

    double artificial_mass() const {
        double total = 0.0;
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= sf_.n_cols) total += std::max(xb_(i), 0.0);
        return total;
    }

    // True when row a precedes row b in the lexicographic ratio order.
    bool lex_less(int a, int b, const Vector& w) const {
        for (int k = 0; k < m_; ++k) {
            double va = binv_(a, k) / w(a);
            double vb = binv_(b, k) / w(b);
            if (va != vb) return va < vb;
        }
        return basis_[a] < basis_[b];
    }

    // Returns false when the phase objective is unbounded below.
    bool iterate() {
        bool fresh = since_refactor_ == 0;
        while (true) {
            if (iters_ >= iter_cap_) throw LpIterationLimit(iters_);
            // Phase 1 is done the moment no artificial mass remains; waiting
            // for nonnegative reduced costs can spin through long degenerate
            // pivot chains on zero right-hand sides.
            if (phase1_ &&
                artificial_mass() <=
                    1e-12 * (1.0 + (b_.size() > 0 ? b_.cwiseAbs().maxCoeff() : 0.0)))
                return true;
            Vector cb(m_);
            for (int i = 0; i < m_; ++i) cb(i) = cost_of(basis_[i]);
            Vector y = binv_.transpose() * cb;
            Vector yta = a_.transpose() * y;

            const bool bland = bland_always_ || degen_run_ >= kBlandTrigger;
            int enter = -1;
            double best = -kPivotTol;
            const int limit = sf_.n_cols; // artificials never (re-)enter
            for (int j = 0; j < limit; ++j) {
                if (in_basis_[j]) continue;
                double d = cost_of(j) - yta(j);
                if (d < -kPivotTol) {
                    if (bland) {
                        enter = j;
                        break;
                    }
                    if (d < best) {
                        best = d;
                        enter = j;
                    }
                }
            }
            if (enter < 0) {
                // Confirm termination against a freshly factorized basis so
                // stale update drift cannot end a phase early.
                if (!fresh) {
                    refactor();
                    fresh = true;
                    continue;
                }
                return true;
            }

            Vector w = binv_ * a_.col(enter);
            // Two-pass ratio test: find the tightest ratio, then take the
            // largest pivot among near-ties (small pivots wreck the update).
            const double pivot_floor =
                std::max(kPivotTol, w.size() > 0 ? 1e-7 * w.cwiseAbs().maxCoeff() : 0.0);
            double step = kInf;
            for (int i = 0; i < m_; ++i)
                if (w(i) > pivot_floor) step = std::min(step, std::max(xb_(i), 0.0) / w(i));
            int leave = -1;
            if (step < kInf) {
                // Lexicographic tie-break over Binv rows scaled by the pivot:
                // cycle-free for any entering rule, and it never picks the
                // tiny-pivot rows the plain minimum-ratio rule can stall on.
                double cutoff = step + kDegenStep * (1.0 + step);
                for (int i = 0; i < m_; ++i) {
                    if (w(i) <= pivot_floor) continue;
                    if (std::max(xb_(i), 0.0) / w(i) > cutoff) continue;
                    if (leave < 0 || lex_less(i, leave, w)) leave = i;
                }
            }
            if (leave < 0) {
                if (!fresh) { // confirm the ray on a clean factorization
                    refactor();
                    fresh = true;
                    continue;
                }
                // Unbounded ray in standard-form space.
                ray_ = Vector::Zero(sf_.n_cols);
                if (enter < sf_.n_cols) ray_(enter) = 1.0;
                for (int i = 0; i < m_; ++i)
                    if (basis_[i] < sf_.n_cols) ray_(basis_[i]) = -w(i);
                return false;
            }

            // Pivot.
            ++iters_;
            fresh = false;
            double actual_step = std::max(xb_(leave), 0.0) / w(leave);
            degen_run_ = actual_step <= kDegenStep ? degen_run_ + 1 : 0;
            xb_ -= actual_step * w;
            xb_(leave) = actual_step;
            in_basis_[basis_[leave]] = 0;
            in_basis_[enter] = 1;
            basis_[leave] = enter;
            double piv = w(leave);
            binv_.row(leave) /= piv;
            for (int i = 0; i < m_; ++i)
                if (i != leave && w(i) != 0.0) binv_.row(i) -= w(i) * binv_.row(leave);
            if (++since_refactor_ >= refactor_every_) {
                refactor();
                fresh = true;
            }
        }
    }

    void phase_one() {
        phase1_ = true;
        bool has_art = n_total_ > sf_.n_cols;
        if (!has_art) {
            phase1_ = false;
            return;
        }
        if (!iterate()) throw SingularBasis(); // impossible in exact arithmetic
        double art_sum = 0.0;
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= sf_.n_cols) art_sum += std::max(xb_(i), 0.0);
        if (art_sum > kFeasTol * (1.0 + b_.cwiseAbs().maxCoeff())) {
            infeasible_ = true;
            return;
        }
        drive_out_artificials();
        phase1_ = false;
    }

    void drive_out_artificials() {
        // Pivot basic artificials (all at value ~0) onto structural columns;
        // rows admitting no pivot are redundant and get dropped.
        std::vector<int> redundant;
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < sf_.n_cols) continue;
            Vector row = (binv_.row(i) * a_.leftCols(sf_.n_cols)).transpose();
            int enter = -1;
            for (int j = 0; j < sf_.n_cols; ++j) {
                if (!in_basis_[j] && std::abs(row(j)) > 1e-7) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) {
                redundant.push_back(i);
                continue;
            }
            Vector w = binv_ * a_.col(enter);
            in_basis_[basis_[i]] = 0;
            in_basis_[enter] = 1;
            basis_[i] = enter;
            double piv = w(i);
            binv_.row(i) /= piv;
            for (int r = 0; r < m_; ++r)
                if (r != i && w(r) != 0.0) binv_.row(r) -= w(r) * binv_.row(i);
            xb_ = binv_ * b_;
        }
        if (redundant.empty()) return;

        std::vector<char> drop(m_, 0);
        for (int i : redundant) drop[i] = 1;
        int kept = 0;
        for (int i = 0; i < m_; ++i) {
            if (drop[i]) {
                row_kept_[orig_row_[i]] = 0;
                in_basis_[basis_[i]] = 0;
                continue;
            }
            a_.row(kept) = a_.row(i);
            b_(kept) = b_(i);
            basis_[kept] = basis_[i];
            orig_row_[kept] = orig_row_[i];
            ++kept;
        }
        m_ = kept;
        a_.conservativeResize(m_, Eigen::NoChange);
        b_.conservativeResize(m_);
        basis_.resize(m_);
        orig_row_.resize(m_);
        binv_.resize(m_, m_);
        xb_.resize(m_);
        refactor();
    }

    // Returns false on unbounded.
    bool phase_two() { return iterate(); }
};

struct DirectResult {
    LpSolution sol;
    bool numerically_ok = true;
};

double feasibility_violation(const LinearProgramSpec& spec, const Vector& x) {
    double v = 0.0;
    if (spec.n_ineq() > 0)
        v = std::max(v, (spec.ineq_rhs - spec.ineq_matrix * x).maxCoeff());
    if (spec.n_eq() > 0)
        v = std::max(v, (spec.eq_matrix * x - spec.eq_rhs).cwiseAbs().maxCoeff());
    for (int j = 0; j < spec.n_vars(); ++j) {
        if (std::isfinite(spec.lower_bounds(j))) v = std::max(v, spec.lower_bounds(j) - x(j));
        if (std::isfinite(spec.upper_bounds(j))) v = std::max(v, x(j) - spec.upper_bounds(j));
    }
    return v;
}

DirectResult solve_direct_once(const LinearProgramSpec& spec, bool bland_from_start,
                               int refactor_every) {
    StandardForm sf = build_standard_form(spec);
    SimplexEngine engine(sf, bland_from_start, refactor_every);
    SimplexEngine::Outcome out = engine.run();

    DirectResult res;
    res.sol.iterations = out.iterations;
    res.sol.status = out.status;
    if (out.status == LpStatus::infeasible) return res;

    if (out.status == LpStatus::unbounded) {
        res.sol.ray = unmap_direction(sf, out.ray, spec.n_vars());
        return res;
    }

    res.sol.x = unmap_point(sf, out.z, spec);
    res.sol.objective_value = spec.objective.dot(res.sol.x);
    res.sol.is_vertex = true;
    res.sol.dual_ineq = Vector::Zero(spec.n_ineq());
    res.sol.dual_eq = Vector::Zero(spec.n_eq());
    for (size_t r = 0; r < out.row_kept.size(); ++r) {
        if (!out.row_kept[r]) continue;
        int origin = sf.row_origin[r];
        double price = out.duals(static_cast<int>(r)) * sf.row_sign[r];
        if (origin >= 0)
            res.sol.dual_ineq(origin) = price;
        else if (origin != kBoxRowOrigin)
            res.sol.dual_eq(-1 - origin) = price;
    }
    // Clamp roundoff on inequality prices, which must be nonnegative.
    res.sol.dual_ineq = res.sol.dual_ineq.cwiseMax(0.0);

    double scale = 1.0 + res.sol.x.cwiseAbs().maxCoeff();
    double viol = feasibility_violation(spec, res.sol.x);
    res.numerically_ok = viol <= 10 * kFeasTol * scale;
    if (getenv("ABP_LP_DEBUG") && !res.numerically_ok)
        fprintf(stderr, "direct: violation %.3e scale %.3e iters %ld\n", viol, scale, res.sol.iterations);
    return res;
}

LpSolution solve_direct(const LinearProgramSpec& spec) {
    try {
        DirectResult first = solve_direct_once(spec, /*bland_from_start=*/false, kRefactorEvery);
        if (first.numerically_ok) return first.sol;
    } catch (const SingularBasis&) {
        // fall through to the more conservative retry
    }
    try {
        DirectResult retry = solve_direct_once(spec, /*bland_from_start=*/false, 16);
        if (retry.numerically_ok) return retry.sol;
    } catch (const SingularBasis&) {
    }
    DirectResult last = solve_direct_once(spec, /*bland_from_start=*/true, 8);
    if (last.numerically_ok) return last.sol;
    throw std::runtime_error("simplex failed to reach a numerically consistent solution");
}

bool plain_bounds(const LinearProgramSpec& spec) {
    for (int j = 0; j < spec.n_vars(); ++j) {
        bool nonneg = spec.lower_bounds(j) == 0.0 && spec.upper_bounds(j) == kInf;
        bool free_var = spec.lower_bounds(j) == -kInf && spec.upper_bounds(j) == kInf;
        if (!nonneg && !free_var) return false;
    }
    return true;
}

// Solves through the dual when the row count dwarfs the variable count; the
// primal vertex is recovered from the dual prices.
LpSolution solve_via_dual(const LinearProgramSpec& spec, bool& usable) {
    usable = false;
    const int n = spec.n_vars();
    const int m1 = spec.n_ineq(), m2 = spec.n_eq();

    LinearProgramSpec dual = LinearProgramSpec::with_vars(m1 + m2);
    for (int i = 0; i < m1; ++i) dual.objective(i) = -spec.ineq_rhs(i);
    for (int i = 0; i < m2; ++i) dual.objective(m1 + i) = -spec.eq_rhs(i);
    for (int i = 0; i < m2; ++i) dual.set_free(m1 + i);

    std::vector<int> ineq_rows, eq_rows; // primal variable per dual row
    for (int j = 0; j < n; ++j)
        (spec.lower_bounds(j) == 0.0 ? ineq_rows : eq_rows).push_back(j);

    auto primal_column = [&](int j) {
        Vector col(m1 + m2);
        if (m1 > 0) col.head(m1) = spec.ineq_matrix.col(j);
        if (m2 > 0) col.tail(m2) = spec.eq_matrix.col(j);
        return col;
    };

    dual.ineq_matrix = Matrix::Zero(static_cast<int>(ineq_rows.size()), m1 + m2);
    dual.ineq_rhs = Vector::Zero(static_cast<int>(ineq_rows.size()));
    for (size_t r = 0; r < ineq_rows.size(); ++r) {
        dual.ineq_matrix.row(static_cast<int>(r)) = -primal_column(ineq_rows[r]).transpose();
        dual.ineq_rhs(static_cast<int>(r)) = -spec.objective(ineq_rows[r]);
    }
    dual.eq_matrix = Matrix::Zero(static_cast<int>(eq_rows.size()), m1 + m2);
    dual.eq_rhs = Vector::Zero(static_cast<int>(eq_rows.size()));
    for (size_t r = 0; r < eq_rows.size(); ++r) {
        dual.eq_matrix.row(static_cast<int>(r)) = primal_column(eq_rows[r]).transpose();
        dual.eq_rhs(static_cast<int>(r)) = spec.objective(eq_rows[r]);
    }

    LpSolution dsol = solve_direct(dual);
    if (getenv("ABP_LP_DEBUG"))
        fprintf(stderr, "dual solve status=%d iters=%ld\n", (int)dsol.status, dsol.iterations);

    LpSolution out;
    out.iterations = dsol.iterations;
    if (dsol.status == LpStatus::unbounded) {
        out.status = LpStatus::infeasible;
        usable = true;
        return out;
    }
    if (dsol.status == LpStatus::infeasible) return out; // caller falls back

    out.status = LpStatus::optimal;
    out.x = Vector::Zero(n);
    for (size_t r = 0; r < ineq_rows.size(); ++r)
        out.x(ineq_rows[r]) = dsol.dual_ineq(static_cast<int>(r));
    for (size_t r = 0; r < eq_rows.size(); ++r)
        out.x(eq_rows[r]) = -dsol.dual_eq(static_cast<int>(r));
    out.objective_value = spec.objective.dot(out.x);
    out.is_vertex = true;
    out.dual_ineq = dsol.x.head(m1).cwiseMax(0.0);
    out.dual_eq = dsol.x.tail(m2);

    double scale = 1.0 + out.x.cwiseAbs().maxCoeff();
    double gap = std::abs(out.objective_value + dsol.objective_value);
    double viol = feasibility_violation(spec, out.x);
    usable = viol <= 10 * kFeasTol * scale &&
             gap <= 1e-6 * (1.0 + std::abs(out.objective_value));
    if (getenv("ABP_LP_DEBUG") && !usable)
        fprintf(stderr, "dual: violation %.3e gap %.3e scale %.3e\n", viol, gap, scale);
    return out;
}

} // namespace

LpSolution solve_lp(const LinearProgramSpec& spec) {
    spec.validate();
    const int rows = spec.n_ineq() + spec.n_eq();
    if (plain_bounds(spec) && rows >= 160 && rows > 2 * spec.n_vars()) {
        bool usable = false;
        try {
            LpSolution via_dual = solve_via_dual(spec, usable);
            if (usable) return via_dual;
        } catch (const std::exception&) {
            // fall through to the direct solve
        }
    }
    return solve_direct(spec);
}

Vector dual_values(const LpSolution& solution) {
    if (solution.status != LpStatus::optimal)
        throw std::logic_error("dual values are only defined for optimal solutions");
    Vector out(solution.dual_ineq.size() + solution.dual_eq.size());
    out << solution.dual_ineq, solution.dual_eq;
    return out;
}

std::string dump_lp(const LinearProgramSpec& spec) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "minimize";
    for (int j = 0; j < spec.n_vars(); ++j) os << ' ' << spec.objective(j);
    os << '\n';
    for (int i = 0; i < spec.n_ineq(); ++i) {
        os << "row";
        for (int j = 0; j < spec.n_vars(); ++j) os << ' ' << spec.ineq_matrix(i, j);
        os << " >= " << spec.ineq_rhs(i) << '\n';
    }
    for (int i = 0; i < spec.n_eq(); ++i) {
        os << "row";
        for (int j = 0; j < spec.n_vars(); ++j) os << ' ' << spec.eq_matrix(i, j);
        os << " == " << spec.eq_rhs(i) << '\n';
    }
    for (int j = 0; j < spec.n_vars(); ++j)
        os << "bound " << spec.lower_bounds(j) << " <= x" << j << " <= " << spec.upper_bounds(j)
           << '\n';
    return os.str();
}

} // namespace abp
