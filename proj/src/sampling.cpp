#include "abp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

namespace abp {

namespace {

void check_pair(int state, int action, int n_states, int n_actions) {
    if (state < 0 || state >= n_states) throw std::invalid_argument("sample state out of range");
    if (action < 0 || action >= n_actions) throw std::invalid_argument("sample action out of range");
}

template <typename SampleT>
void check_no_duplicates(const std::vector<SampleT>& entries) {
    std::set<std::pair<int, int>> seen;
    for (const auto& e : entries)
        if (!seen.insert({e.state, e.action}).second)
            throw std::invalid_argument("duplicate (state, action) sample entry");
}

// Sorted state-major row order, grouping per state, shared by both set kinds.
template <typename SampleT, typename RowFn>
ResidualSystem build_system(const std::vector<SampleT>& entries, const MdpDims& dims,
                            const FeatureBasis& basis, RowFn make_phi_row) {
    if (basis.n_states() != dims.n_states)
        throw std::invalid_argument("feature basis does not match the model dimensions");
    ResidualSystem sys;
    sys.n_model_states = dims.n_states;
    sys.n_actions = dims.n_actions;
    sys.n_features = basis.n_features();
    sys.discount = dims.discount;

    std::vector<int> order(entries.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::make_pair(entries[a].state, entries[a].action) <
               std::make_pair(entries[b].state, entries[b].action);
    });

    sys.rows_of_state.resize(dims.n_states);
    for (int idx : order) {
        const SampleT& e = entries[idx];
        ResidualRow row;
        row.state = e.state;
        row.action = e.action;
        row.phi_row = make_phi_row(e);
        row.rhs = e.reward;
        if (sys.rows_of_state[e.state].empty()) sys.covered_states.push_back(e.state);
        sys.rows_of_state[e.state].push_back(static_cast<int>(sys.rows.size()));
        sys.rows.push_back(std::move(row));
    }
    for (int s = 0; s < dims.n_states; ++s)
        if (sys.rows_of_state[s].empty()) sys.dropped_states.push_back(s);
    return sys;
}

} // namespace

void ExpectationSampleSet::validate() const {
    check_no_duplicates(entries);
    for (const auto& e : entries) {
        check_pair(e.state, e.action, n_model_states, n_actions);
        if (e.successor_dist.size() != n_model_states)
            throw std::invalid_argument("successor distribution has the wrong length");
        if (e.successor_dist.minCoeff() < 0.0 || std::abs(e.successor_dist.sum() - 1.0) > 1e-12)
            throw std::invalid_argument("successor distribution is not stochastic");
    }
}

void SimpleSampleSet::validate() const {
    if (n_per_entry < 1) throw std::invalid_argument("need at least one draw per entry");
    check_no_duplicates(entries);
    for (const auto& e : entries) {
        check_pair(e.state, e.action, n_model_states, n_actions);
        if (static_cast<int>(e.successors.size()) != n_per_entry)
            throw std::invalid_argument("entry has the wrong number of successor draws");
        for (int s : e.successors)
            if (s < 0 || s >= n_model_states)
                throw std::invalid_argument("successor index out of range");
    }
}

SimpleSampleSet draw_samples(const TabularMdp& mdp, const std::vector<int>& states,
                             const std::vector<int>& actions, int n, unsigned long seed) {
    if (states.empty() || actions.empty())
        throw std::invalid_argument("state and action subsets must be nonempty");
    if (n < 1) throw std::invalid_argument("need at least one draw per pair");

    SimpleSampleSet set;
    set.n_model_states = mdp.n_states;
    set.n_actions = mdp.n_actions;
    set.n_per_entry = n;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s : states) {
        for (int a : actions) {
            check_pair(s, a, mdp.n_states, mdp.n_actions);
            // Inverse-CDF draws over the sparse transition row.
            std::vector<int> idx;
            std::vector<double> cum;
            double total = 0.0;
            for (SpMat::InnerIterator it(mdp.transition[a], s); it; ++it) {
                total += it.value();
                idx.push_back(static_cast<int>(it.col()));
                cum.push_back(total);
            }
            SimpleSample sample;
            sample.state = s;
            sample.action = a;
            sample.reward = mdp.reward(s, a);
            sample.successors.reserve(n);
            for (int i = 0; i < n; ++i) {
                double u = unit(rng) * total;
                size_t j = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
                if (j >= idx.size()) j = idx.size() - 1;
                sample.successors.push_back(idx[j]);
            }
            set.entries.push_back(std::move(sample));
        }
    }
    return set;
}

ExpectationSampleSet take_expectation_samples(const TabularMdp& mdp,
                                              const std::vector<int>& states,
                                              const std::vector<int>& actions) {
    if (states.empty() || actions.empty())
        throw std::invalid_argument("state and action subsets must be nonempty");
    ExpectationSampleSet set;
    set.n_model_states = mdp.n_states;
    set.n_actions = mdp.n_actions;
    for (int s : states) {
        for (int a : actions) {
            check_pair(s, a, mdp.n_states, mdp.n_actions);
            ExpectationSample e;
            e.state = s;
            e.action = a;
            e.successor_dist = dense_row(mdp.transition[a], s);
            e.reward = mdp.reward(s, a);
            set.entries.push_back(std::move(e));
        }
    }
    return set;
}

double PartialValueFunction::at(int state) const {
    if (!has(state))
        throw std::domain_error("value undefined at state " + std::to_string(state) +
                                ": not sampled");
    return values(state);
}

std::vector<int> PartialValueFunction::defined_states() const {
    std::vector<int> out;
    for (size_t s = 0; s < defined.size(); ++s)
        if (defined[s]) out.push_back(static_cast<int>(s));
    return out;
}

PartialValueFunction sampled_bellman(const ExpectationSampleSet& samples, double discount,
                                     const ValueFunction& v) {
    if (v.size() != samples.n_model_states)
        throw std::invalid_argument("value function has the wrong length");
    PartialValueFunction out;
    out.values = Vector::Zero(samples.n_model_states);
    out.defined.assign(samples.n_model_states, false);
    for (const auto& e : samples.entries) {
        double backup = e.reward + discount * e.successor_dist.dot(v);
        if (!out.defined[e.state] || backup > out.values(e.state)) out.values(e.state) = backup;
        out.defined[e.state] = true;
    }
    return out;
}

PartialValueFunction estimated_bellman(const SimpleSampleSet& samples, double discount,
                                       const ValueFunction& v) {
    if (v.size() != samples.n_model_states)
        throw std::invalid_argument("value function has the wrong length");
    PartialValueFunction out;
    out.values = Vector::Zero(samples.n_model_states);
    out.defined.assign(samples.n_model_states, false);
    for (const auto& e : samples.entries) {
        double mean = 0.0;
        for (int s : e.successors) mean += v(s);
        mean /= static_cast<double>(e.successors.size());
        double backup = e.reward + discount * mean;
        if (!out.defined[e.state] || backup > out.values(e.state)) out.values(e.state) = backup;
        out.defined[e.state] = true;
    }
    return out;
}

ResidualSystem system_from_samples(const ExpectationSampleSet& samples, const MdpDims& dims,
                                   const FeatureBasis& basis) {
    samples.validate();
    return build_system(samples.entries, dims, basis, [&](const ExpectationSample& e) {
        Vector mean_phi = basis.matrix.transpose() * e.successor_dist;
        return Vector(basis.matrix.row(e.state).transpose() - dims.discount * mean_phi);
    });
}

ResidualSystem system_from_samples(const SimpleSampleSet& samples, const MdpDims& dims,
                                   const FeatureBasis& basis) {
    samples.validate();
    return build_system(samples.entries, dims, basis, [&](const SimpleSample& e) {
        Vector mean_phi = Vector::Zero(basis.n_features());
        for (int s : e.successors) mean_phi += basis.matrix.row(s).transpose();
        mean_phi /= static_cast<double>(e.successors.size());
        return Vector(basis.matrix.row(e.state).transpose() - dims.discount * mean_phi);
    });
}

SeparableBilinearProgram build_sampled_abp(const MdpDims& dims, const FeatureBasis& basis,
                                           const ExpectationSampleSet& samples) {
    return build_abp_from_system(system_from_samples(samples, dims, basis), AbpVariant::robust());
}

SeparableBilinearProgram build_sampled_abp(const MdpDims& dims, const FeatureBasis& basis,
                                           const SimpleSampleSet& samples) {
    return build_abp_from_system(system_from_samples(samples, dims, basis), AbpVariant::robust());
}

EpsilonEstimate estimate_epsilons(const TabularMdp& mdp, const FeatureBasis& basis,
                                  const SimpleSampleSet& samples, int n_probes,
                                  unsigned long seed) {
    samples.validate();
    std::vector<int> states, actions;
    {
        std::set<int> st;
        for (const auto& e : samples.entries) st.insert(e.state);
        states.assign(st.begin(), st.end());
    }
    // The sampled operator uses exact expectations for the sampled pairs.
    ExpectationSampleSet exact;
    exact.n_model_states = mdp.n_states;
    exact.n_actions = mdp.n_actions;
    for (const auto& e : samples.entries) {
        ExpectationSample x;
        x.state = e.state;
        x.action = e.action;
        x.successor_dist = dense_row(mdp.transition[e.action], e.state);
        x.reward = e.reward;
        exact.entries.push_back(std::move(x));
    }

    double scale = optimal_value(mdp).cwiseAbs().maxCoeff();
    if (scale <= 0.0) scale = 1.0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    EpsilonEstimate est;
    for (int p = 0; p < n_probes; ++p) {
        Vector coeffs(basis.n_features());
        for (int j = 0; j < coeffs.size(); ++j) coeffs(j) = gauss(rng) * scale;
        ValueFunction v = represent(basis, coeffs);
        ValueFunction full = bellman_backup(mdp, v);
        PartialValueFunction sampled = sampled_bellman(exact, mdp.discount, v);
        PartialValueFunction estimated = estimated_bellman(samples, mdp.discount, v);
        for (int s : states) {
            est.eps_p = std::max(est.eps_p, full(s) - sampled.at(s));
            est.eps_s = std::max(est.eps_s, std::abs(sampled.at(s) - estimated.at(s)));
        }
    }
    return est;
}

namespace {

// Smallest sup-norm Bellman residual over a coefficient grid; an upper bound
// on the true minimum over representable functions, which is the safe
// direction for the right-hand sides below.
double grid_min_residual(const ResidualSystem& sys, double radius) {
    const int dims = sys.n_features;
    int per_dim = std::max(3, static_cast<int>(std::floor(std::pow(1e6, 1.0 / dims))));
    per_dim = std::min(per_dim, 101);
    Vector coeffs(dims);
    std::vector<int> pick(dims, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        for (int d = 0; d < dims; ++d)
            coeffs(d) = -radius + 2.0 * radius * pick[d] / (per_dim - 1);
        best = std::min(best, sys.bellman_residual_linf(coeffs));
        int d = dims - 1;
        while (d >= 0 && ++pick[d] == per_dim) pick[d--] = 0;
        if (d < 0) break;
    }
    return best;
}

} // namespace

SampledBoundReport check_sampled_bound(const TabularMdp& mdp, const FeatureBasis& basis,
                                       const SimpleSampleSet& samples, double extra_slack) {
    SampledBoundReport rep;
    ValueFunction star = optimal_value(mdp);
    MdpDims dims{mdp.n_states, mdp.n_actions, mdp.discount};

    auto loss_of = [&](const Vector& coeffs) {
        Policy pol = greedy_policy(mdp, represent(basis, coeffs));
        return (star - evaluate_policy(mdp, pol)).cwiseAbs().maxCoeff();
    };

    AbpSolution exact = abp_exact_oracle(mdp, basis, AbpVariant::robust());
    rep.loss_exact = loss_of(exact.coeffs);

    ExpectationSampleSet expectation;
    expectation.n_model_states = mdp.n_states;
    expectation.n_actions = mdp.n_actions;
    for (const auto& e : samples.entries) {
        ExpectationSample x;
        x.state = e.state;
        x.action = e.action;
        x.successor_dist = dense_row(mdp.transition[e.action], e.state);
        x.reward = e.reward;
        expectation.entries.push_back(std::move(x));
    }
    ResidualSystem sys_exp = system_from_samples(expectation, dims, basis);
    rep.loss_expectation =
        loss_of(abp_oracle_on_system(sys_exp, AbpVariant::robust()).lp.coeffs);

    ResidualSystem sys_est = system_from_samples(samples, dims, basis);
    rep.loss_estimated = loss_of(abp_oracle_on_system(sys_est, AbpVariant::robust()).lp.coeffs);

    EpsilonEstimate eps = estimate_epsilons(mdp, basis, samples, 200, 1234);
    rep.eps_p = eps.eps_p;
    rep.eps_s = eps.eps_s;

    ResidualSystem full_sys = ResidualSystem::from_model(mdp, basis);
    double radius = 3.0 * std::max(star.cwiseAbs().maxCoeff(), 1.0);
    rep.min_residual_over_basis = grid_min_residual(full_sys, radius);

    double factor = 2.0 / (1.0 - mdp.discount);
    rep.bound_exact = factor * (rep.min_residual_over_basis + extra_slack) + kFeasSlack;
    rep.bound_expectation =
        factor * (rep.min_residual_over_basis + rep.eps_p + extra_slack) + kFeasSlack;
    rep.bound_estimated =
        factor * (rep.min_residual_over_basis + rep.eps_p + 2.0 * rep.eps_s + extra_slack) +
        kFeasSlack;
    return rep;
}

} // namespace abp
