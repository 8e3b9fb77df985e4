#include "abp/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace abp {

void ChainSpec::validate() const {
    if (n_states < 2) throw std::invalid_argument("chain needs at least two states");
    if (noise_sigma <= 0.0) throw std::invalid_argument("noise sigma must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in (0,1)");
    if (init_state < 1 || init_state > n_states)
        throw std::invalid_argument("initial state out of range");
}

void MountainCarSpec::validate() const {
    if (grid_pos < 10 || grid_vel < 10)
        throw std::invalid_argument("mountain-car grids must be at least 10");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in (0,1)");
    if (n_sample_states < 1) throw std::invalid_argument("need at least one sample state");
}

void CnfFormula::validate() const {
    if (n_vars < 1) throw std::invalid_argument("formula needs at least one variable");
    std::vector<bool> used(static_cast<size_t>(n_vars) + 1, false);
    for (const auto& clause : clauses) {
        for (int lit : clause) {
            int var = std::abs(lit);
            if (lit == 0 || var > n_vars)
                throw std::invalid_argument("literal index out of range");
            used[static_cast<size_t>(var)] = true;
        }
        // Repeated literals are allowed (short clauses are padded to three
        // literals that way), but a variable with both signs makes the
        // clause a tautology and is rejected.
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                if (clause[i] == -clause[j])
                    throw std::invalid_argument("clause contains a variable with both signs");
    }
    for (int v = 1; v <= n_vars; ++v)
        if (!used[static_cast<size_t>(v)])
            throw std::invalid_argument("variable x" + std::to_string(v) +
                                        " never occurs in the formula");
}

bool CnfFormula::satisfiable() const {
    validate();
    for (unsigned long mask = 0; mask < (1ul << n_vars); ++mask) {
        bool all = true;
        for (const auto& clause : clauses) {
            bool any = false;
            for (int lit : clause) {
                bool value = (mask >> (std::abs(lit) - 1)) & 1ul;
                if ((lit > 0) == value) {
                    any = true;
                    break;
                }
            }
            if (!any) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return clauses.empty();
}

TabularMdp make_chain(const ChainSpec& spec) {
    spec.validate();
    const int n = spec.n_states;
    std::vector<Matrix> transition(2, Matrix::Zero(n, n));
    Matrix reward(n, 2);
    for (int s = 0; s < n; ++s) {
        const int i = s + 1; // states are 1-indexed in the reward formulas
        reward(s, 0) = std::sin(i / 20.0);
        reward(s, 1) = std::cos(i / 20.0);
        for (int a = 0; a < 2; ++a) {
            const double target = a == 0 ? i + 1 : i - 1;
            double total = 0.0;
            for (int t = 1; t <= n; ++t) {
                double w = std::exp(-(t - target) * (t - target) /
                                    (2.0 * spec.noise_sigma * spec.noise_sigma));
                transition[a](s, t - 1) = w;
                total += w;
            }
            // Boundary mass folds back through renormalization.
            transition[a].row(s) /= total;
            double drift = transition[a].row(s).sum() - 1.0;
            transition[a](s, s) -= drift; // exact row sum under roundoff
        }
    }
    Vector alpha = Vector::Zero(n);
    alpha(spec.init_state - 1) = 1.0;
    return TabularMdp::make(transition, reward, spec.gamma, alpha);
}

MountainCarModel make_mountain_car(const MountainCarSpec& spec) {
    spec.validate();
    const int np = spec.grid_pos, nv = spec.grid_vel;
    const int n_grid = np * nv;
    const int n = n_grid + 1;
    const double p_lo = -1.2, p_hi = 0.6, v_lo = -0.07, v_hi = 0.07;
    const double p_step = (p_hi - p_lo) / (np - 1);
    const double v_step = (v_hi - v_lo) / (nv - 1);

    MountainCarModel model;
    model.absorbing_state = n_grid;
    model.grid_points.reserve(n_grid);
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < nv; ++j)
            model.grid_points.push_back({p_lo + i * p_step, v_lo + j * v_step});

    std::vector<SpMat> transition(3, SpMat(n, n));
    Matrix reward = Matrix::Zero(n, 3);
    std::vector<std::vector<Eigen::Triplet<double>>> trip(3);
    for (int s = 0; s < n_grid; ++s) {
        const double p = model.grid_points[s][0];
        const double v = model.grid_points[s][1];
        for (int a = 0; a < 3; ++a) {
            double v_next = v + 0.001 * (a - 1) - 0.0025 * std::cos(3.0 * p);
            v_next = std::clamp(v_next, v_lo, v_hi);
            double p_next = p + v_next;
            if (p_next >= 0.5) {
                trip[a].emplace_back(s, model.absorbing_state, 1.0);
                reward(s, a) = spec.goal_reward;
                continue;
            }
            p_next = std::clamp(p_next, p_lo, p_hi);
            double fi = (p_next - p_lo) / p_step;
            double fj = (v_next - v_lo) / v_step;
            int ci = std::min(static_cast<int>(std::floor(fi)), np - 2);
            int cj = std::min(static_cast<int>(std::floor(fj)), nv - 2);
            double ti = std::clamp(fi - ci, 0.0, 1.0);
            double tj = std::clamp(fj - cj, 0.0, 1.0);
            auto node = [&](int gi, int gj) { return gi * nv + gj; };
            trip[a].emplace_back(s, node(ci, cj), (1 - ti) * (1 - tj));
            if (ti > 0) trip[a].emplace_back(s, node(ci + 1, cj), ti * (1 - tj));
            if (tj > 0) trip[a].emplace_back(s, node(ci, cj + 1), (1 - ti) * tj);
            if (ti > 0 && tj > 0) trip[a].emplace_back(s, node(ci + 1, cj + 1), ti * tj);
        }
    }
    for (int a = 0; a < 3; ++a) {
        trip[a].emplace_back(model.absorbing_state, model.absorbing_state, 1.0);
        transition[a].setFromTriplets(trip[a].begin(), trip[a].end());
    }
    Vector alpha = Vector::Constant(n, 1.0 / n_grid);
    alpha(model.absorbing_state) = 0.0;
    alpha(0) += 1.0 - alpha.sum(); // exact unit mass
    model.mdp = TabularMdp::make_sparse(std::move(transition), std::move(reward), spec.gamma,
                                        std::move(alpha));
    return model;
}

FeatureBasis mountain_car_basis(const MountainCarModel& model, int feature_grid) {
    FeatureBasis grid_basis =
        spline_grid_basis(feature_grid, feature_grid, model.grid_points);
    Matrix full = Matrix::Zero(grid_basis.n_states() + 1, grid_basis.n_features());
    full.topRows(grid_basis.n_states()) = grid_basis.matrix;
    return FeatureBasis(std::move(full), /*constant=*/false);
}

SatReduction sat_to_mdp(const CnfFormula& formula, double gamma, bool with_constant) {
    formula.validate();
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in (0,1)");
    const int n_cl = static_cast<int>(formula.clauses.size());
    if (n_cl == 0) throw std::invalid_argument("formula needs at least one clause");
    const int n = 4 * n_cl + 1 + (with_constant ? 1 : 0);
    const int n_actions = 3;

    SatReduction red;
    for (int i = 0; i < n_cl; ++i) red.clause_states.push_back(i);
    for (int i = 0; i < 3 * n_cl; ++i) red.literal_states.push_back(n_cl + i);
    red.anchor_state = 4 * n_cl;
    const int extra_state = with_constant ? 4 * n_cl + 1 : -1;

    std::vector<Matrix> transition(n_actions, Matrix::Zero(n, n));
    Matrix reward = Matrix::Zero(n, n_actions);
    for (int i = 0; i < n_cl; ++i) {
        for (int j = 0; j < 3; ++j) {
            int lit_state = red.literal_states[3 * i + j];
            // Choosing the clause's j-th literal.
            transition[j](i, lit_state) = 1.0;
            reward(i, j) = 1.0 - gamma;
            // The literal state loops on itself under every action slot.
            for (int a = 0; a < n_actions; ++a) {
                transition[a](lit_state, lit_state) = 1.0;
                reward(lit_state, a) = -(1.0 - gamma);
            }
        }
    }
    for (int a = 0; a < n_actions; ++a) {
        transition[a](red.anchor_state, red.anchor_state) = 1.0;
        // Zero-residual fixed point at value 2 - gamma.
        reward(red.anchor_state, a) = (1.0 - gamma) * (2.0 - gamma);
        if (with_constant) {
            transition[a](extra_state, extra_state) = 1.0;
            reward(extra_state, a) = -gamma / 2.0;
        }
    }

    Vector alpha = Vector::Zero(n);
    alpha(0) = 1.0;
    red.mdp = TabularMdp::make(transition, reward, gamma, alpha);

    const int m = formula.n_vars + 1 + (with_constant ? 1 : 0);
    Matrix phi = Matrix::Zero(n, m);
    int col = 0;
    if (with_constant) phi.col(col++).setOnes();
    for (int k = 1; k <= formula.n_vars; ++k, ++col) {
        for (int i = 0; i < n_cl; ++i)
            for (int j = 0; j < 3; ++j) {
                int lit = formula.clauses[i][j];
                if (std::abs(lit) == k)
                    phi(red.literal_states[3 * i + j], col) = lit > 0 ? 1.0 : -1.0;
            }
    }
    for (int i = 0; i < n_cl; ++i) phi(red.clause_states[i], col) = 1.0;
    phi(red.anchor_state, col) = 1.0;
    red.basis = FeatureBasis(std::move(phi), with_constant);
    return red;
}

TabularMdp random_mdp(int n_states, int n_actions, unsigned long seed, double sparsity) {
    if (n_states < 1 || n_actions < 1) throw std::invalid_argument("empty model requested");
    if (sparsity < 0.0 || sparsity >= 1.0) throw std::invalid_argument("sparsity must be in [0,1)");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int n_succ = std::max(1, static_cast<int>(std::lround((1.0 - sparsity) * n_states)));
    std::vector<Matrix> transition(n_actions, Matrix::Zero(n_states, n_states));
    Matrix reward(n_states, n_actions);
    std::vector<int> perm(n_states);
    for (int a = 0; a < n_actions; ++a) {
        for (int s = 0; s < n_states; ++s) {
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            double total = 0.0;
            for (int k = 0; k < n_succ; ++k) {
                double w = -std::log(1.0 - unit(rng)); // exponential weights
                transition[a](s, perm[k]) = w;
                total += w;
            }
            transition[a].row(s) /= total;
            double drift = transition[a].row(s).sum() - 1.0;
            transition[a](s, perm[0]) -= drift;
            reward(s, a) = unit(rng);
        }
    }
    Vector alpha = Vector::Constant(n_states, 1.0 / n_states);
    alpha(0) += 1.0 - alpha.sum(); // exact unit mass
    double gamma = 0.95;
    return TabularMdp::make(transition, reward, gamma, alpha);
}

TabularMdp fixture_m2() { return random_mdp(2, 2, 0); }

} // namespace abp
