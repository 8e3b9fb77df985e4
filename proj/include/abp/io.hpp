#pragma once

#include "abp/benchmarks.hpp"
#include "abp/bilinear.hpp"
#include "abp/features.hpp"
#include "abp/formulations.hpp"
#include "abp/mdp.hpp"
#include "abp/sampling.hpp"

#include <string>

namespace abp {

/// MDP JSON object: {n_states, n_actions, gamma, alpha, reward[s][a],
/// transition[a][s][s']}. Loading validates every structural invariant and
/// reports all violations at once.
std::string mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const std::string& text);
void save_mdp(const TabularMdp& mdp, const std::string& path);
TabularMdp load_mdp(const std::string& path);

/// Basis JSON object: {n_states, m, columns: [[..]]} (column-major lists).
std::string basis_to_json(const FeatureBasis& basis);
FeatureBasis basis_from_json(const std::string& text);
void save_basis(const FeatureBasis& basis, const std::string& path);
FeatureBasis load_basis(const std::string& path);

/// Sample files are JSON lines, one record per entry:
///   {"s":..,"a":..,"r":..,"successors":[..]}  or  {"s":..,"a":..,"r":..,"dist":[..]}
void save_samples(const SimpleSampleSet& set, const std::string& path);
void save_samples(const ExpectationSampleSet& set, const std::string& path);
SimpleSampleSet load_simple_samples(const std::string& path, int n_states, int n_actions);
ExpectationSampleSet load_expectation_samples(const std::string& path, int n_states,
                                              int n_actions);

/// Iteration trace as a JSON array of {iter, objective}.
std::string trace_to_json(const BilinearTrace& trace);

/// Solver solution dump.
std::string solution_to_json(const AbpSolution& sol, const std::string& variant_name);

/// DIMACS CNF reader (p cnf header plus zero-terminated clauses).
CnfFormula load_dimacs(const std::string& path);

} // namespace abp
