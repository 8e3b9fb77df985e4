#pragma once

#include "abp/formulations.hpp"

#include <optional>
#include <vector>

namespace abp {

/// One-step sample carrying the exact successor distribution.
struct ExpectationSample {
    int state;
    int action;
    Vector successor_dist; // full row over model states
    double reward;
};

struct ExpectationSampleSet {
    int n_model_states = 0;
    int n_actions = 0;
    std::vector<ExpectationSample> entries;

    void validate() const; // no duplicate pairs, stochastic rows
};

/// One-step sample carrying n i.i.d. successor draws.
struct SimpleSample {
    int state;
    int action;
    std::vector<int> successors;
    double reward;
};

struct SimpleSampleSet {
    int n_model_states = 0;
    int n_actions = 0;
    int n_per_entry = 0;
    std::vector<SimpleSample> entries;

    void validate() const;
};

/// Draws n i.i.d. successors for every requested (state, action) pair;
/// reproducible for a fixed seed.
SimpleSampleSet draw_samples(const TabularMdp& mdp, const std::vector<int>& states,
                             const std::vector<int>& actions, int n, unsigned long seed);

/// Exact successor distributions for every requested pair.
ExpectationSampleSet take_expectation_samples(const TabularMdp& mdp,
                                              const std::vector<int>& states,
                                              const std::vector<int>& actions);

/// Value function defined only on sampled states; reading an absent state is
/// a hard error, never a silent zero.
struct PartialValueFunction {
    Vector values;              // meaningful only where defined
    std::vector<bool> defined;

    bool has(int state) const { return defined[static_cast<size_t>(state)]; }
    double at(int state) const;
    std::vector<int> defined_states() const;
};

/// Backup through the sampled operator: max over sampled actions of the
/// exact expectation, defined exactly on sampled states.
PartialValueFunction sampled_bellman(const ExpectationSampleSet& samples, double discount,
                                     const ValueFunction& v);

/// Backup through the estimated operator: empirical-mean successor values.
PartialValueFunction estimated_bellman(const SimpleSampleSet& samples, double discount,
                                       const ValueFunction& v);

/// Model dimensions needed to interpret a sample set.
struct MdpDims {
    int n_states = 0;
    int n_actions = 0;
    double discount = 0.0;
};

/// Residual system over the sampled pairs only (empirical means for simple
/// samples, exact expectations otherwise). States that lost every action are
/// recorded in dropped_states.
ResidualSystem system_from_samples(const ExpectationSampleSet& samples, const MdpDims& dims,
                                   const FeatureBasis& basis);
ResidualSystem system_from_samples(const SimpleSampleSet& samples, const MdpDims& dims,
                                   const FeatureBasis& basis);

/// Sampled robust bilinear program: policy and residual variables exist only
/// for sampled pairs, and the objective stays bounded below by zero.
SeparableBilinearProgram build_sampled_abp(const MdpDims& dims, const FeatureBasis& basis,
                                           const ExpectationSampleSet& samples);
SeparableBilinearProgram build_sampled_abp(const MdpDims& dims, const FeatureBasis& basis,
                                           const SimpleSampleSet& samples);

/// Empirical widths of the sampling assumptions, probed on random
/// representable value functions. These are estimates, not certified bounds:
///   eps_p bounds L against the sampled operator on sampled states,
///   eps_s bounds the sampled operator against the estimated one.
struct EpsilonEstimate {
    double eps_p = 0.0;
    double eps_s = 0.0;
};
EpsilonEstimate estimate_epsilons(const TabularMdp& mdp, const FeatureBasis& basis,
                                  const SimpleSampleSet& samples, int n_probes,
                                  unsigned long seed);

/// Checks the three sampled-optimum policy-loss bounds on a small fixture:
/// exact, expectation-sampled, and estimated-sampled minimizers, with the
/// right-hand sides widened by the estimated sampling widths plus slack.
struct SampledBoundReport {
    double loss_exact = 0.0, loss_expectation = 0.0, loss_estimated = 0.0;
    double bound_exact = 0.0, bound_expectation = 0.0, bound_estimated = 0.0;
    double eps_p = 0.0, eps_s = 0.0;
    double min_residual_over_basis = 0.0; // grid-search lower certificate
    bool holds() const {
        return loss_exact <= bound_exact && loss_expectation <= bound_expectation &&
               loss_estimated <= bound_estimated;
    }
};
SampledBoundReport check_sampled_bound(const TabularMdp& mdp, const FeatureBasis& basis,
                                       const SimpleSampleSet& samples, double extra_slack = 0.0);

} // namespace abp
