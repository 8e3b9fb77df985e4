#include "abp/harness.hpp"
#include "abp/io.hpp"
#include "abp/sampling.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace abp;

int emit_experiment(const ExperimentConfig& config) {
    std::vector<ResultRecord> records = run_experiment(config);
    if (config.output_path.empty())
        emit_records(records, config.format, std::cout);
    else
        emit_records(records, config.format, config.output_path);
    auto summary = summarize(records);
    emit_summary(summary, "csv", std::cerr);
    return 0;
}

void add_experiment_flags(CLI::App* cmd, ExperimentConfig& config, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON config file; flags override its fields");
    cmd->add_option("--methods", config.methods, "methods to run")->delimiter(',');
    cmd->add_option("--features", config.n_features, "number of features");
    cmd->add_option("--runs", config.n_runs, "number of seeded runs");
    cmd->add_option("--seed", config.seed, "base seed");
    cmd->add_option("--hybrid-k", config.hybrid_k, "k for the hybrid variant");
    cmd->add_option("--starts", config.n_starts, "multistart count for bilinear methods");
    cmd->add_option("--out", config.output_path, "output path (stdout if omitted)");
    cmd->add_option("--format", config.format, "csv or json");
}

ExperimentConfig merge_config(const CLI::App* cmd, ExperimentConfig flags,
                              const std::string& config_path) {
    if (config_path.empty()) return flags;
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open " + config_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ExperimentConfig merged = ExperimentConfig::from_json(text);
    merged.benchmark = flags.benchmark;
    // Flags win over file values.
    if (cmd->count("--methods")) merged.methods = flags.methods;
    if (cmd->count("--features")) merged.n_features = flags.n_features;
    if (cmd->count("--runs")) merged.n_runs = flags.n_runs;
    if (cmd->count("--seed")) merged.seed = flags.seed;
    if (cmd->count("--hybrid-k")) merged.hybrid_k = flags.hybrid_k;
    if (cmd->count("--starts")) merged.n_starts = flags.n_starts;
    if (cmd->count("--out")) merged.output_path = flags.output_path;
    if (cmd->count("--format")) merged.format = flags.format;
    return merged;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bellman-residual minimization toolkit for tabular MDPs"};
    app.require_subcommand(1);

    // bench-chain
    auto* chain_cmd = app.add_subcommand("bench-chain", "chain benchmark experiments");
    ExperimentConfig chain_cfg;
    chain_cfg.benchmark = "chain";
    chain_cfg.methods = {"abp_robust", "abp_expected", "abp_hybrid", "alp", "api_l2"};
    std::string chain_config_path, chain_emit;
    add_experiment_flags(chain_cmd, chain_cfg, chain_config_path);
    chain_cmd->add_option("--states", chain_cfg.chain.n_states, "chain length");
    chain_cmd->add_option("--emit-mdp", chain_emit, "write the model JSON and exit");

    // bench-mcar
    auto* mcar_cmd = app.add_subcommand("bench-mcar", "mountain-car benchmark experiments");
    ExperimentConfig mcar_cfg;
    mcar_cfg.benchmark = "mountain_car";
    mcar_cfg.methods = {"oapi", "alp", "api_l2"};
    mcar_cfg.n_features = 100;
    std::string mcar_config_path, mcar_emit;
    add_experiment_flags(mcar_cmd, mcar_cfg, mcar_config_path);
    mcar_cmd->add_option("--grid", mcar_cfg.mountain_car.grid_pos, "ground grid side")
        ->check(CLI::Range(10, 200));
    mcar_cmd->add_option("--samples", mcar_cfg.mountain_car.n_sample_states, "sampled states");
    mcar_cmd->add_option("--emit-mdp", mcar_emit, "write the model JSON and exit");

    // sat
    auto* sat_cmd = app.add_subcommand("sat", "formula-to-MDP reduction");
    std::string sat_cnf, sat_mdp_out, sat_basis_out;
    double sat_gamma = 0.95;
    bool sat_with_constant = false;
    bool sat_solve = false;
    sat_cmd->add_option("--cnf", sat_cnf, "DIMACS CNF input")->required();
    sat_cmd->add_option("--gamma", sat_gamma, "discount factor");
    sat_cmd->add_flag("--with-constant", sat_with_constant, "add the constant feature");
    sat_cmd->add_option("--mdp-out", sat_mdp_out, "write the reduced MDP JSON here");
    sat_cmd->add_option("--basis-out", sat_basis_out, "write the feature basis JSON here");
    sat_cmd->add_flag("--solve", sat_solve, "run the enumeration oracle and report the residual");

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "solve one model with one method");
    std::string solve_mdp, solve_basis, solve_method = "abp_robust", solve_out;
    int solve_starts = 16;
    unsigned long solve_seed = 0;
    double solve_k = 5.0;
    solve_cmd->add_option("--mdp", solve_mdp, "model JSON")->required();
    solve_cmd->add_option("--basis", solve_basis, "basis JSON")->required();
    solve_cmd->add_option("--method", solve_method, "method name")->required();
    solve_cmd->add_option("--starts", solve_starts, "multistart count");
    solve_cmd->add_option("--seed", solve_seed, "seed");
    solve_cmd->add_option("--k", solve_k, "hybrid k");
    solve_cmd->add_option("--out", solve_out, "write the result JSON here");

    // gen-random
    auto* gen_cmd = app.add_subcommand("gen-random", "seeded random MDP generator");
    int gen_states = 5, gen_actions = 2;
    unsigned long gen_seed = 0;
    double gen_sparsity = 0.0;
    std::string gen_out;
    gen_cmd->add_option("--states", gen_states);
    gen_cmd->add_option("--actions", gen_actions);
    gen_cmd->add_option("--seed", gen_seed);
    gen_cmd->add_option("--sparsity", gen_sparsity);
    gen_cmd->add_option("--out", gen_out, "output path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (chain_cmd->parsed()) {
            if (!chain_emit.empty()) {
                save_mdp(make_chain(chain_cfg.chain), chain_emit);
                return 0;
            }
            return emit_experiment(merge_config(chain_cmd, chain_cfg, chain_config_path));
        }
        if (mcar_cmd->parsed()) {
            if (!mcar_emit.empty()) {
                save_mdp(make_mountain_car(mcar_cfg.mountain_car).mdp, mcar_emit);
                return 0;
            }
            return emit_experiment(merge_config(mcar_cmd, mcar_cfg, mcar_config_path));
        }
        if (sat_cmd->parsed()) {
            SatReduction red = sat_to_mdp(load_dimacs(sat_cnf), sat_gamma, sat_with_constant);
            if (!sat_mdp_out.empty()) save_mdp(red.mdp, sat_mdp_out);
            if (!sat_basis_out.empty()) save_basis(red.basis, sat_basis_out);
            if (sat_solve) {
                AbpSolution sol = abp_exact_oracle(red.mdp, red.basis, AbpVariant::robust());
                std::cout << solution_to_json(sol, "robust_linf") << '\n';
            } else if (sat_mdp_out.empty() && sat_basis_out.empty()) {
                std::cout << mdp_to_json(red.mdp) << '\n';
            }
            return 0;
        }
        if (gen_cmd->parsed()) {
            TabularMdp mdp = random_mdp(gen_states, gen_actions, gen_seed, gen_sparsity);
            if (gen_out.empty())
                std::cout << mdp_to_json(mdp) << '\n';
            else
                save_mdp(mdp, gen_out);
            return 0;
        }
        // solve
        TabularMdp mdp = load_mdp(solve_mdp);
        FeatureBasis basis = load_basis(solve_basis);
        AbpSolution sol;
        std::string variant_name = solve_method;
        if (solve_method == "abp_robust") {
            sol = solve_abp(mdp, basis, AbpVariant::robust(), solve_starts, solve_seed);
        } else if (solve_method == "abp_expected") {
            sol = solve_abp(mdp, basis, AbpVariant::expected(), solve_starts, solve_seed);
        } else if (solve_method == "abp_weighted") {
            sol = solve_abp(mdp, basis,
                            AbpVariant::weighted(UBound::constant_default(mdp.n_states,
                                                                          mdp.discount)),
                            solve_starts, solve_seed);
        } else if (solve_method == "abp_hybrid") {
            sol = solve_abp(mdp, basis,
                            AbpVariant::hybrid(UBound::constant_default(mdp.n_states,
                                                                        mdp.discount),
                                               solve_k),
                            solve_starts, solve_seed);
        } else if (solve_method == "oracle") {
            sol = abp_exact_oracle(mdp, basis, AbpVariant::robust());
            variant_name = "robust_linf";
        } else if (solve_method == "alp") {
            Vector c = Vector::Constant(mdp.n_states, 1.0 / mdp.n_states);
            sol.value = solve_alp(mdp, basis, c);
            sol.policy = greedy_policy(mdp, sol.value);
            sol.residual_linf = (sol.value - bellman_backup(mdp, sol.value)).cwiseAbs().maxCoeff();
            sol.objective = c.dot(sol.value);
            sol.trace.converged = true;
            sol.trace.iterations = 1;
        } else if (solve_method == "api_l2" || solve_method == "api_linf" ||
                   solve_method == "oapi") {
            ApiInner inner = solve_method == "api_l2" ? ApiInner::l2
                             : solve_method == "api_linf" ? ApiInner::linf
                                                          : ApiInner::oapi;
            ApiResult r = api(mdp, basis, inner, 500, solve_seed);
            sol.value = r.value;
            sol.policy = r.policy;
            sol.residual_linf = (sol.value - bellman_backup(mdp, sol.value)).cwiseAbs().maxCoeff();
            sol.objective = r.residual_trace.empty() ? 0.0 : r.residual_trace.back();
            sol.trace.converged = r.converged;
            sol.trace.iterations = r.iterations;
        } else {
            std::cerr << "unknown method: " << solve_method << "\n";
            return 2;
        }
        if (sol.coeffs.size() == 0) sol.coeffs = Vector::Zero(basis.n_features());
        std::string text = solution_to_json(sol, variant_name);
        if (solve_out.empty()) {
            std::cout << text << '\n';
        } else {
            std::ofstream out(solve_out);
            if (!out) throw std::runtime_error("cannot write " + solve_out);
            out << text << '\n';
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
