#include "abp/mdp.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace abp {

namespace {

void require_value_shape(const TabularMdp& mdp, const ValueFunction& v) {
    if (v.size() != mdp.n_states)
        throw std::invalid_argument("value function has length " + std::to_string(v.size()) +
                                    ", expected " + std::to_string(mdp.n_states));
}

void require_policy_shape(const TabularMdp& mdp, const Policy& pol) {
    if (pol.n_states() != mdp.n_states || pol.n_actions() != mdp.n_actions)
        throw std::invalid_argument("policy shape does not match the MDP");
}

// Q(.,a) = r(.,a) + gamma * P_a v
Matrix action_values(const TabularMdp& mdp, const ValueFunction& v) {
    Matrix q(mdp.n_states, mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a)
        q.col(a) = mdp.reward.col(a) + mdp.discount * (mdp.transition[a] * v);
    return q;
}

Vector solve_sparse(const SpMat& row_major, const Vector& rhs, const char* what) {
    Eigen::SparseMatrix<double> m = row_major; // SparseLU wants column-major
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error(std::string("sparse factorization failed in ") + what);
    Vector x = lu.solve(rhs);
    double resid = (row_major * x - rhs).cwiseAbs().maxCoeff();
    if (!(resid <= 1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff())))
        throw std::runtime_error(std::string("linear solve residual too large in ") + what);
    return x;
}

SpMat identity_minus(const SpMat& p, double gamma, bool transpose) {
    const int n = static_cast<int>(p.rows());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(p.nonZeros() + n);
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0);
    for (int i = 0; i < p.outerSize(); ++i)
        for (SpMat::InnerIterator it(p, i); it; ++it) {
            int r = transpose ? static_cast<int>(it.col()) : static_cast<int>(it.row());
            int c = transpose ? static_cast<int>(it.row()) : static_cast<int>(it.col());
            trip.emplace_back(r, c, -gamma * it.value()); // duplicates sum with the diagonal
        }
    SpMat out(n, n);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

} // namespace

Policy Policy::deterministic(const std::vector<int>& actions, int n_actions) {
    Policy pol;
    pol.probs = Matrix::Zero(static_cast<int>(actions.size()), n_actions);
    for (size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] < 0 || actions[s] >= n_actions)
            throw std::invalid_argument("action index out of range");
        pol.probs(static_cast<int>(s), actions[s]) = 1.0;
    }
    return pol;
}

Policy Policy::uniform(int n_states, int n_actions) {
    Policy pol;
    pol.probs = Matrix::Constant(n_states, n_actions, 1.0 / n_actions);
    return pol;
}

bool Policy::is_deterministic(double tol) const {
    for (int s = 0; s < probs.rows(); ++s) {
        int ones = 0;
        for (int a = 0; a < probs.cols(); ++a) {
            if (std::abs(probs(s, a) - 1.0) <= tol)
                ++ones;
            else if (std::abs(probs(s, a)) > tol)
                return false;
        }
        if (ones != 1) return false;
    }
    return true;
}

std::vector<int> Policy::actions() const {
    std::vector<int> out(probs.rows());
    for (int s = 0; s < probs.rows(); ++s) {
        int best = 0;
        probs.row(s).maxCoeff(&best);
        out[s] = best;
    }
    return out;
}

Vector Policy::flatten() const {
    Vector flat(probs.size());
    for (int s = 0; s < probs.rows(); ++s)
        for (int a = 0; a < probs.cols(); ++a) flat(s * probs.cols() + a) = probs(s, a);
    return flat;
}

void Policy::validate() const {
    for (int s = 0; s < probs.rows(); ++s) {
        if (std::abs(probs.row(s).sum() - 1.0) > 1e-12)
            throw std::invalid_argument("policy row " + std::to_string(s) + " does not sum to 1");
        if (probs.row(s).minCoeff() < -1e-12 || probs.row(s).maxCoeff() > 1.0 + 1e-12)
            throw std::invalid_argument("policy row " + std::to_string(s) +
                                        " has entries outside [0,1]");
    }
}

TabularMdp TabularMdp::make(const std::vector<Matrix>& transition_dense, const Matrix& reward,
                            double discount, const Vector& initial_dist) {
    std::vector<SpMat> sparse;
    sparse.reserve(transition_dense.size());
    for (const Matrix& p : transition_dense) sparse.push_back(p.sparseView());
    return make_sparse(std::move(sparse), reward, discount, initial_dist);
}

TabularMdp TabularMdp::make_sparse(std::vector<SpMat> transition, Matrix reward, double discount,
                                   Vector initial_dist) {
    TabularMdp mdp;
    mdp.n_states = static_cast<int>(reward.rows());
    mdp.n_actions = static_cast<int>(reward.cols());
    mdp.transition = std::move(transition);
    for (SpMat& p : mdp.transition) p.makeCompressed();
    mdp.reward = std::move(reward);
    mdp.discount = discount;
    mdp.initial_dist = std::move(initial_dist);
    mdp.validate();
    return mdp;
}

void TabularMdp::validate() const {
    std::vector<std::string> errs;
    if (n_states <= 0) errs.push_back("n_states must be positive");
    if (n_actions <= 0) errs.push_back("n_actions must be positive");
    if (static_cast<int>(transition.size()) != n_actions)
        errs.push_back("expected one transition matrix per action");
    if (!(discount > 0.0 && discount < 1.0))
        errs.push_back("discount must lie strictly inside (0,1)");
    if (reward.rows() != n_states || reward.cols() != n_actions)
        errs.push_back("reward matrix must be n_states x n_actions");
    if (initial_dist.size() != n_states) {
        errs.push_back("initial distribution length must equal n_states");
    } else {
        if (initial_dist.minCoeff() < 0.0) errs.push_back("initial distribution has negative mass");
        if (std::abs(initial_dist.sum() - 1.0) > 1e-12)
            errs.push_back("initial distribution does not sum to 1");
    }
    for (size_t a = 0; a < transition.size(); ++a) {
        const SpMat& p = transition[a];
        if (p.rows() != n_states || p.cols() != n_states) {
            errs.push_back("transition matrix for action " + std::to_string(a) +
                           " must be n_states x n_states");
            continue;
        }
        for (int s = 0; s < p.outerSize(); ++s) {
            double row_sum = 0.0;
            for (SpMat::InnerIterator it(p, s); it; ++it) {
                if (it.value() < 0.0) {
                    errs.push_back("transition[" + std::to_string(a) + "] row " +
                                   std::to_string(s) + " has a negative entry");
                    break;
                }
                row_sum += it.value();
            }
            if (std::abs(row_sum - 1.0) > 1e-12)
                errs.push_back("transition[" + std::to_string(a) + "] row " + std::to_string(s) +
                               " sums to " + std::to_string(row_sum));
        }
    }
    if (!errs.empty()) {
        std::ostringstream msg;
        msg << "invalid MDP:";
        for (const std::string& e : errs) msg << "\n  - " << e;
        throw std::invalid_argument(msg.str());
    }
}

SpMat TabularMdp::policy_transition(const Policy& pol) const {
    require_policy_shape(*this, pol);
    std::vector<Eigen::Triplet<double>> trip;
    for (int a = 0; a < n_actions; ++a) {
        const SpMat& p = transition[a];
        for (int s = 0; s < p.outerSize(); ++s) {
            double w = pol.probs(s, a);
            if (w == 0.0) continue;
            for (SpMat::InnerIterator it(p, s); it; ++it)
                trip.emplace_back(s, static_cast<int>(it.col()), w * it.value());
        }
    }
    SpMat out(n_states, n_states);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

Vector TabularMdp::policy_reward(const Policy& pol) const {
    require_policy_shape(*this, pol);
    return (reward.array() * pol.probs.array()).rowwise().sum();
}

ValueFunction bellman_backup(const TabularMdp& mdp, const ValueFunction& v) {
    require_value_shape(mdp, v);
    return action_values(mdp, v).rowwise().maxCoeff();
}

ValueFunction bellman_backup_policy(const TabularMdp& mdp, const Policy& pol,
                                    const ValueFunction& v) {
    require_value_shape(mdp, v);
    require_policy_shape(mdp, pol);
    return (action_values(mdp, v).array() * pol.probs.array()).rowwise().sum();
}

Policy greedy_policy(const TabularMdp& mdp, const ValueFunction& v) {
    require_value_shape(mdp, v);
    Matrix q = action_values(mdp, v);
    std::vector<int> best(mdp.n_states, 0);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 1; a < mdp.n_actions; ++a)
            if (q(s, a) > q(s, best[s])) best[s] = a; // strict: ties keep the lowest index
    }
    return Policy::deterministic(best, mdp.n_actions);
}

ValueFunction evaluate_policy(const TabularMdp& mdp, const Policy& pol) {
    pol.validate();
    SpMat sys = identity_minus(mdp.policy_transition(pol), mdp.discount, /*transpose=*/false);
    return solve_sparse(sys, mdp.policy_reward(pol), "evaluate_policy");
}

VisitFrequencies visitation_frequencies(const TabularMdp& mdp, const Policy& pol) {
    pol.validate();
    SpMat sys = identity_minus(mdp.policy_transition(pol), mdp.discount, /*transpose=*/true);
    VisitFrequencies f;
    f.per_state = solve_sparse(sys, mdp.initial_dist, "visitation_frequencies");
    f.per_state_action = pol.probs.array().colwise() * f.per_state.array();
    return f;
}

ValueFunction optimal_value(const TabularMdp& mdp, double tol) {
    // Value-iteration warm start.
    ValueFunction v = Vector::Zero(mdp.n_states);
    const double gamma = mdp.discount;
    const double stop = std::max(tol * (1.0 - gamma) / std::max(gamma, 0.5), 1e-15);
    const int max_sweeps = 100000;
    for (int i = 0; i < max_sweeps; ++i) {
        ValueFunction next = bellman_backup(mdp, v);
        double delta = (next - v).cwiseAbs().maxCoeff();
        v = std::move(next);
        if (delta <= stop) break;
        // Machine-precision plateau: hand over to the policy-iteration polish.
        if (delta <= 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, v.cwiseAbs().maxCoeff()))
            break;
    }
    // Policy-iteration polish: finitely many policies, each step solved exactly.
    Policy pol = greedy_policy(mdp, v);
    for (int i = 0; i < 1000; ++i) {
        v = evaluate_policy(mdp, pol);
        Policy next = greedy_policy(mdp, v);
        if ((next.probs.array() == pol.probs.array()).all()) break;
        pol = std::move(next);
    }
    return v;
}

double expected_policy_loss(const TabularMdp& mdp, const Policy& pol) {
    ValueFunction star = optimal_value(mdp);
    ValueFunction vp = evaluate_policy(mdp, pol);
    return mdp.initial_dist.dot(star - vp);
}

double robust_policy_loss(const TabularMdp& mdp, const Policy& pol) {
    ValueFunction star = optimal_value(mdp);
    ValueFunction vp = evaluate_policy(mdp, pol);
    return (star - vp).cwiseAbs().maxCoeff();
}

Vector bellman_residual(const TabularMdp& mdp, const ValueFunction& v) {
    require_value_shape(mdp, v);
    Vector out(mdp.n_states * mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a) {
        Vector col = v - mdp.discount * (mdp.transition[a] * v) - mdp.reward.col(a);
        for (int s = 0; s < mdp.n_states; ++s) out(mdp.pair_index(s, a)) = col(s);
    }
    return out;
}

std::pair<Matrix, Vector> constraint_matrix(const TabularMdp& mdp) {
    Matrix a = Matrix::Zero(mdp.n_states * mdp.n_actions, mdp.n_states);
    Vector b(mdp.n_states * mdp.n_actions);
    for (int act = 0; act < mdp.n_actions; ++act) {
        const SpMat& p = mdp.transition[act];
        for (int s = 0; s < mdp.n_states; ++s) {
            int row = mdp.pair_index(s, act);
            a(row, s) += 1.0;
            for (SpMat::InnerIterator it(p, s); it; ++it)
                a(row, static_cast<int>(it.col())) -= mdp.discount * it.value();
            b(row) = mdp.reward(s, act);
        }
    }
    return {std::move(a), std::move(b)};
}

Matrix constraint_matrix_B(const TabularMdp& mdp) {
    Matrix b = Matrix::Zero(mdp.n_states, mdp.n_states * mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a) b(s, mdp.pair_index(s, a)) = 1.0;
    return b;
}

bool is_transitive_feasible(const TabularMdp& mdp, const ValueFunction& v, double eps) {
    if (eps < 0.0) throw std::invalid_argument("eps must be nonnegative");
    ValueFunction lv = bellman_backup(mdp, v);
    return ((v - lv).array() >= -eps - kFeasSlack).all();
}

} // namespace abp
