#include "abp/io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace abp {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector vector_from_json(const json& arr) {
    Vector v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v(static_cast<int>(i)) = arr[i].get<double>();
    return v;
}

} // namespace

std::string mdp_to_json(const TabularMdp& mdp) {
    json j;
    j["n_states"] = mdp.n_states;
    j["n_actions"] = mdp.n_actions;
    j["gamma"] = mdp.discount;
    j["alpha"] = vector_to_json(mdp.initial_dist);
    json reward = json::array();
    for (int s = 0; s < mdp.n_states; ++s) {
        json row = json::array();
        for (int a = 0; a < mdp.n_actions; ++a) row.push_back(mdp.reward(s, a));
        reward.push_back(row);
    }
    j["reward"] = reward;
    json transition = json::array();
    for (int a = 0; a < mdp.n_actions; ++a) {
        json per_action = json::array();
        for (int s = 0; s < mdp.n_states; ++s)
            per_action.push_back(vector_to_json(dense_row(mdp.transition[a], s)));
        transition.push_back(per_action);
    }
    j["transition"] = transition;
    return j.dump();
}

TabularMdp mdp_from_json(const std::string& text) {
    json j = json::parse(text);
    const int n = j.at("n_states").get<int>();
    const int na = j.at("n_actions").get<int>();
    Matrix reward(n, na);
    const auto& jr = j.at("reward");
    if (static_cast<int>(jr.size()) != n)
        throw std::invalid_argument("invalid MDP:\n  - reward must have one row per state");
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < na; ++a) reward(s, a) = jr[s].at(a).get<double>();
    std::vector<Matrix> transition(na, Matrix(n, n));
    const auto& jt = j.at("transition");
    if (static_cast<int>(jt.size()) != na)
        throw std::invalid_argument("invalid MDP:\n  - transition must have one matrix per action");
    for (int a = 0; a < na; ++a)
        for (int s = 0; s < n; ++s)
            for (int t = 0; t < n; ++t) transition[a](s, t) = jt[a].at(s).at(t).get<double>();
    Vector alpha = vector_from_json(j.at("alpha"));
    return TabularMdp::make(transition, reward, j.at("gamma").get<double>(), alpha);
}

void save_mdp(const TabularMdp& mdp, const std::string& path) {
    write_file(path, mdp_to_json(mdp));
}

TabularMdp load_mdp(const std::string& path) { return mdp_from_json(read_file(path)); }

std::string basis_to_json(const FeatureBasis& basis) {
    json j;
    j["n_states"] = basis.n_states();
    j["m"] = basis.n_features();
    json cols = json::array();
    for (int c = 0; c < basis.n_features(); ++c) cols.push_back(vector_to_json(basis.matrix.col(c)));
    j["columns"] = cols;
    return j.dump();
}

FeatureBasis basis_from_json(const std::string& text) {
    json j = json::parse(text);
    const int n = j.at("n_states").get<int>();
    const int m = j.at("m").get<int>();
    const auto& cols = j.at("columns");
    if (static_cast<int>(cols.size()) != m)
        throw std::invalid_argument("basis file: column count does not match m");
    Matrix mat(n, m);
    for (int c = 0; c < m; ++c) {
        if (static_cast<int>(cols[c].size()) != n)
            throw std::invalid_argument("basis file: column length does not match n_states");
        for (int s = 0; s < n; ++s) mat(s, c) = cols[c][s].get<double>();
    }
    bool constant = m > 0 && (mat.col(0).array() == 1.0).all();
    return FeatureBasis(std::move(mat), constant);
}

void save_basis(const FeatureBasis& basis, const std::string& path) {
    write_file(path, basis_to_json(basis));
}

FeatureBasis load_basis(const std::string& path) { return basis_from_json(read_file(path)); }

void save_samples(const SimpleSampleSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& e : set.entries) {
        json j{{"s", e.state}, {"a", e.action}, {"r", e.reward}, {"successors", e.successors}};
        out << j.dump() << '\n';
    }
}

void save_samples(const ExpectationSampleSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& e : set.entries) {
        json j{{"s", e.state}, {"a", e.action}, {"r", e.reward},
               {"dist", vector_to_json(e.successor_dist)}};
        out << j.dump() << '\n';
    }
}

SimpleSampleSet load_simple_samples(const std::string& path, int n_states, int n_actions) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    SimpleSampleSet set;
    set.n_model_states = n_states;
    set.n_actions = n_actions;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        SimpleSample e;
        e.state = j.at("s").get<int>();
        e.action = j.at("a").get<int>();
        e.reward = j.at("r").get<double>();
        e.successors = j.at("successors").get<std::vector<int>>();
        set.entries.push_back(std::move(e));
    }
    if (set.entries.empty()) throw std::runtime_error("sample file is empty");
    set.n_per_entry = static_cast<int>(set.entries.front().successors.size());
    set.validate();
    return set;
}

ExpectationSampleSet load_expectation_samples(const std::string& path, int n_states,
                                              int n_actions) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    ExpectationSampleSet set;
    set.n_model_states = n_states;
    set.n_actions = n_actions;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ExpectationSample e;
        e.state = j.at("s").get<int>();
        e.action = j.at("a").get<int>();
        e.reward = j.at("r").get<double>();
        e.successor_dist = vector_from_json(j.at("dist"));
        set.entries.push_back(std::move(e));
    }
    set.validate();
    return set;
}

std::string trace_to_json(const BilinearTrace& trace) {
    json arr = json::array();
    for (size_t i = 0; i < trace.iterates.size(); ++i)
        arr.push_back(json{{"iter", i}, {"objective", trace.iterates[i].objective}});
    return arr.dump();
}

std::string solution_to_json(const AbpSolution& sol, const std::string& variant_name) {
    json j;
    j["variant"] = variant_name;
    j["objective"] = sol.objective;
    j["residual_linf"] = sol.residual_linf;
    j["coeffs"] = vector_to_json(sol.coeffs);
    j["policy"] = sol.policy.actions();
    j["iterations"] = sol.trace.iterations;
    j["converged"] = sol.trace.converged;
    return j.dump();
}

CnfFormula load_dimacs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    CnfFormula formula;
    std::string line;
    bool have_header = false;
    std::vector<int> pending;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == 'c') continue;
        std::istringstream ls(line);
        if (line[0] == 'p') {
            std::string p, fmt;
            int n_clauses = 0;
            ls >> p >> fmt >> formula.n_vars >> n_clauses;
            if (fmt != "cnf") throw std::runtime_error("expected a DIMACS cnf header");
            have_header = true;
            continue;
        }
        int lit;
        while (ls >> lit) {
            if (lit == 0) {
                if (pending.size() != 3)
                    throw std::runtime_error("only 3-literal clauses are supported");
                formula.clauses.push_back({pending[0], pending[1], pending[2]});
                pending.clear();
            } else {
                pending.push_back(lit);
            }
        }
    }
    if (!have_header) throw std::runtime_error("missing DIMACS header");
    formula.validate();
    return formula;
}

} // namespace abp
