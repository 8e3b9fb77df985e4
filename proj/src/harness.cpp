#include "abp/harness.hpp"

#include "abp/io.hpp"
#include "abp/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace abp {

using nlohmann::json;

const char* kResultCsvHeader = "run_id,method,n_features,seed,bellman_linf,bellman_l1_weighted,"
                               "bellman_l2,expected_loss,robust_loss,iterations,converged,wall_ms";

const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> names = {"abp_robust", "abp_expected", "abp_weighted",
                                                   "abp_hybrid", "alp",          "api_l2",
                                                   "api_linf",   "oapi"};
    return names;
}

void ExperimentConfig::validate() const {
    if (benchmark != "chain" && benchmark != "mountain_car" && benchmark != "sat" &&
        benchmark != "file")
        throw std::invalid_argument("unknown benchmark: " + benchmark);
    if (methods.empty()) throw std::invalid_argument("no methods selected");
    for (const auto& m : methods)
        if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
            throw std::invalid_argument("unknown method: " + m);
    if (n_runs < 1) throw std::invalid_argument("n_runs must be at least 1");
    if (n_features < 1) throw std::invalid_argument("n_features must be positive");
    if (n_starts < 1) throw std::invalid_argument("n_starts must be positive");
    if (format != "csv" && format != "json") throw std::invalid_argument("format must be csv|json");
    if (benchmark == "file" && (mdp_path.empty() || basis_path.empty()))
        throw std::invalid_argument("file benchmark needs --mdp and --basis");
    if (benchmark == "sat" && cnf_path.empty())
        throw std::invalid_argument("sat benchmark needs --cnf");
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig c;
    if (j.contains("benchmark")) c.benchmark = j["benchmark"].get<std::string>();
    if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("n_features")) c.n_features = j["n_features"].get<int>();
    if (j.contains("n_runs")) c.n_runs = j["n_runs"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<unsigned long>();
    if (j.contains("hybrid_k")) c.hybrid_k = j["hybrid_k"].get<double>();
    if (j.contains("n_starts")) c.n_starts = j["n_starts"].get<int>();
    if (j.contains("output")) c.output_path = j["output"].get<std::string>();
    if (j.contains("format")) c.format = j["format"].get<std::string>();
    if (j.contains("mdp")) c.mdp_path = j["mdp"].get<std::string>();
    if (j.contains("basis")) c.basis_path = j["basis"].get<std::string>();
    if (j.contains("cnf")) c.cnf_path = j["cnf"].get<std::string>();
    return c;
}

namespace {

struct MethodOutput {
    ValueFunction value; // over all model states
    Vector coeffs;       // filled in sampled mode
    int iterations = 1;
    bool converged = true;
};

// Shared per-batch state: the ground model and its optimal value function.
struct BatchContext {
    TabularMdp mdp;
    ValueFunction v_star;
    UBound ubar;
    // mountain car only
    bool sampled_mode = false;
    std::vector<std::array<double, 2>> grid_points;
    int absorbing_state = -1;
};

AbpVariant variant_for(const std::string& method, const BatchContext& ctx, double hybrid_k) {
    if (method == "abp_robust") return AbpVariant::robust();
    if (method == "abp_expected") return AbpVariant::expected();
    if (method == "abp_weighted") return AbpVariant::weighted(ctx.ubar);
    return AbpVariant::hybrid(ctx.ubar, hybrid_k);
}

MethodOutput run_method_full(const std::string& method, const BatchContext& ctx,
                             const FeatureBasis& basis, const ExperimentConfig& config,
                             unsigned long run_seed) {
    MethodOutput out;
    if (method.rfind("abp_", 0) == 0) {
        AbpSolution sol = solve_abp(ctx.mdp, basis, variant_for(method, ctx, config.hybrid_k),
                                    config.n_starts, run_seed);
        out.value = sol.value;
        out.iterations = sol.trace.iterations;
        out.converged = sol.trace.converged;
    } else if (method == "alp") {
        Vector c = Vector::Constant(ctx.mdp.n_states, 1.0 / ctx.mdp.n_states);
        out.value = solve_alp(ctx.mdp, basis, c);
    } else {
        ApiInner inner = method == "api_l2" ? ApiInner::l2
                         : method == "api_linf" ? ApiInner::linf
                                                : ApiInner::oapi;
        ApiResult r = api(ctx.mdp, basis, inner, 500, run_seed);
        out.value = r.value;
        out.iterations = r.iterations;
        out.converged = r.converged;
    }
    return out;
}

MethodOutput run_method_system(const std::string& method, const BatchContext& ctx,
                               const ResidualSystem& sys, const FeatureBasis& basis,
                               const ExperimentConfig& config, unsigned long run_seed) {
    MethodOutput out;
    if (method.rfind("abp_", 0) == 0) {
        SystemAbpSolution sol = solve_abp_on_system(
            sys, variant_for(method, ctx, config.hybrid_k), config.n_starts, run_seed);
        out.coeffs = std::move(sol.coeffs);
        out.iterations = sol.trace.iterations;
        out.converged = sol.trace.converged;
    } else if (method == "alp") {
        Vector c = Vector::Constant(ctx.mdp.n_states, 1.0 / ctx.mdp.n_states);
        AlpResult r = solve_alp_system(sys, basis, c);
        if (r.status != LpStatus::optimal) {
            out.converged = false;
            return out;
        }
        out.coeffs = std::move(r.coeffs);
    } else {
        ApiInner inner = method == "api_l2" ? ApiInner::l2
                         : method == "api_linf" ? ApiInner::linf
                                                : ApiInner::oapi;
        SystemApiResult r = api_on_system(sys, inner, 500, run_seed);
        out.coeffs = std::move(r.coeffs);
        out.iterations = r.iterations;
        out.converged = r.converged;
    }
    out.value = represent(basis, out.coeffs);
    return out;
}

// Methods whose solutions are transitive-feasible by construction report
// their residuals after the free balancing shift (midpoint of the residual
// range); the greedy policy and hence the loss metrics are shift-invariant.
bool reports_centered(const std::string& method) {
    return method.rfind("abp_", 0) == 0 || method == "oapi";
}

void residual_metrics(ResultRecord& rec, const BatchContext& ctx, Vector state_gaps,
                      const std::vector<int>& states, bool center) {
    if (center && state_gaps.size() > 0) {
        double mid = 0.5 * (state_gaps.maxCoeff() + state_gaps.minCoeff());
        state_gaps.array() -= mid;
    }
    double l1w = 0.0;
    for (int i = 0; i < state_gaps.size(); ++i)
        l1w += ctx.ubar.per_state(states[i]) * std::abs(state_gaps(i));
    rec.bellman_linf = state_gaps.cwiseAbs().maxCoeff();
    rec.bellman_l2 = std::sqrt(state_gaps.squaredNorm() / state_gaps.size());
    rec.bellman_l1_weighted = l1w;
}

void loss_metrics(ResultRecord& rec, const BatchContext& ctx, const ValueFunction& v) {
    Policy pol = greedy_policy(ctx.mdp, v);
    ValueFunction v_pol = evaluate_policy(ctx.mdp, pol);
    rec.expected_loss = ctx.mdp.initial_dist.dot(ctx.v_star - v_pol);
    rec.robust_loss = (ctx.v_star - v_pol).cwiseAbs().maxCoeff();
}

void fill_metrics_full(ResultRecord& rec, const BatchContext& ctx, const ValueFunction& v,
                       bool center) {
    Vector gap = v - bellman_backup(ctx.mdp, v);
    std::vector<int> states(ctx.mdp.n_states);
    std::iota(states.begin(), states.end(), 0);
    residual_metrics(rec, ctx, std::move(gap), states, center);
    loss_metrics(rec, ctx, v);
}

void fill_metrics_system(ResultRecord& rec, const BatchContext& ctx, const ResidualSystem& sys,
                         const ValueFunction& v, const Vector& coeffs, bool center) {
    // Residual metrics over the sampled pairs; policy quality on the ground
    // model from the greedy extension of v.
    Vector gaps(sys.covered_states.size());
    Vector resid = sys.residuals(coeffs);
    for (size_t g = 0; g < sys.covered_states.size(); ++g) {
        double best = std::numeric_limits<double>::infinity();
        for (int i : sys.rows_of_state[sys.covered_states[g]]) best = std::min(best, resid(i));
        gaps(static_cast<int>(g)) = best;
    }
    residual_metrics(rec, ctx, std::move(gaps), sys.covered_states, center);
    loss_metrics(rec, ctx, v);
}

std::vector<int> sample_chain_cutoffs(int n_states, int count, std::mt19937_64& rng) {
    std::vector<int> pool(n_states - 1);
    std::iota(pool.begin(), pool.end(), 1); // cutoffs 1 .. n-1 give nonzero columns
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace

std::vector<ResultRecord> run_experiment(const ExperimentConfig& config) {
    config.validate();

    BatchContext ctx;
    FeatureBasis file_basis;
    MountainCarModel car;
    SatReduction sat;
    if (config.benchmark == "chain") {
        ctx.mdp = make_chain(config.chain);
    } else if (config.benchmark == "mountain_car") {
        int side = static_cast<int>(std::lround(std::sqrt(double(config.n_features))));
        if (side * side != config.n_features)
            throw std::invalid_argument("mountain car needs a square feature count");
        car = make_mountain_car(config.mountain_car);
        ctx.mdp = car.mdp;
        ctx.sampled_mode = true;
        ctx.grid_points = car.grid_points;
        ctx.absorbing_state = car.absorbing_state;
    } else if (config.benchmark == "sat") {
        sat = sat_to_mdp(load_dimacs(config.cnf_path), 0.95, false);
        ctx.mdp = sat.mdp;
        file_basis = sat.basis;
    } else {
        ctx.mdp = load_mdp(config.mdp_path);
        file_basis = load_basis(config.basis_path);
    }
    ctx.v_star = optimal_value(ctx.mdp);
    ctx.ubar = UBound::constant_default(ctx.mdp.n_states, ctx.mdp.discount);

    std::vector<ResultRecord> records;
    for (int run = 0; run < config.n_runs; ++run) {
        const unsigned long run_seed = config.seed + static_cast<unsigned long>(run);
        std::mt19937_64 rng(run_seed);

        FeatureBasis basis;
        ResidualSystem sys;
        if (config.benchmark == "chain") {
            basis = chain_basis(ctx.mdp.n_states,
                                sample_chain_cutoffs(ctx.mdp.n_states, config.n_features - 1, rng));
        } else if (config.benchmark == "mountain_car") {
            int side = static_cast<int>(std::lround(std::sqrt(double(config.n_features))));
            basis = mountain_car_basis(car, side);
            // Uniform state sample over the grid, every action included.
            std::vector<int> pool(ctx.grid_points.size());
            std::iota(pool.begin(), pool.end(), 0);
            std::shuffle(pool.begin(), pool.end(), rng);
            pool.resize(std::min<size_t>(pool.size(), config.mountain_car.n_sample_states));
            std::sort(pool.begin(), pool.end());
            std::vector<int> actions(ctx.mdp.n_actions);
            std::iota(actions.begin(), actions.end(), 0);
            ExpectationSampleSet samples = take_expectation_samples(ctx.mdp, pool, actions);
            MdpDims dims{ctx.mdp.n_states, ctx.mdp.n_actions, ctx.mdp.discount};
            sys = system_from_samples(samples, dims, basis);
            Vector alpha_restricted = Vector::Zero(ctx.mdp.n_states);
            for (int s : sys.covered_states) alpha_restricted(s) = ctx.mdp.initial_dist(s);
            sys.alpha_phi = basis.matrix.transpose() * alpha_restricted;
        } else {
            basis = file_basis;
        }

        for (const std::string& method : config.methods) {
            ResultRecord rec;
            rec.run_id = run;
            rec.method = method;
            rec.n_features = basis.n_features();
            rec.seed = run_seed;
            auto t0 = std::chrono::steady_clock::now();
            try {
                if (ctx.sampled_mode) {
                    MethodOutput out =
                        run_method_system(method, ctx, sys, basis, config, run_seed);
                    rec.iterations = out.iterations;
                    rec.converged = out.converged;
                    if (out.coeffs.size() > 0) {
                        fill_metrics_system(rec, ctx, sys, out.value, out.coeffs,
                                            reports_centered(method));
                    } else {
                        rec.bellman_linf = rec.bellman_l1_weighted = rec.bellman_l2 =
                            rec.expected_loss = rec.robust_loss =
                                std::numeric_limits<double>::quiet_NaN();
                    }
                } else {
                    MethodOutput out = run_method_full(method, ctx, basis, config, run_seed);
                    rec.iterations = out.iterations;
                    rec.converged = out.converged;
                    fill_metrics_full(rec, ctx, out.value, reports_centered(method));
                }
            } catch (const std::exception& err) {
                rec.converged = false;
                rec.bellman_linf = rec.bellman_l1_weighted = rec.bellman_l2 = rec.expected_loss =
                    rec.robust_loss = std::numeric_limits<double>::quiet_NaN();
                std::cerr << "run " << run << " method " << method << " failed: " << err.what()
                          << "\n";
            }
            rec.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            records.push_back(std::move(rec));
        }
    }
    std::sort(records.begin(), records.end(), [](const ResultRecord& a, const ResultRecord& b) {
        return std::tie(a.run_id, a.method) < std::tie(b.run_id, b.method);
    });
    return records;
}

namespace {

const std::vector<std::pair<std::string, double ResultRecord::*>>& metric_fields() {
    static const std::vector<std::pair<std::string, double ResultRecord::*>> fields = {
        {"bellman_linf", &ResultRecord::bellman_linf},
        {"bellman_l1_weighted", &ResultRecord::bellman_l1_weighted},
        {"bellman_l2", &ResultRecord::bellman_l2},
        {"expected_loss", &ResultRecord::expected_loss},
        {"robust_loss", &ResultRecord::robust_loss},
    };
    return fields;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records) {
    if (records.empty()) throw std::invalid_argument("nothing to summarize");
    std::vector<std::pair<std::string, int>> groups;
    for (const auto& r : records) {
        std::pair<std::string, int> key{r.method, r.n_features};
        if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
    }
    std::sort(groups.begin(), groups.end());

    std::vector<SummaryRow> rows;
    for (const auto& [method, nf] : groups) {
        for (const auto& [metric, field] : metric_fields()) {
            SummaryRow row;
            row.method = method;
            row.n_features = nf;
            row.metric = metric;
            std::vector<double> values;
            for (const auto& r : records)
                if (r.method == method && r.n_features == nf) values.push_back(r.*field);
            row.count = static_cast<int>(values.size());
            double sum = std::accumulate(values.begin(), values.end(), 0.0);
            row.mean = sum / values.size();
            if (values.size() > 1) {
                double sq = 0.0;
                for (double v : values) sq += (v - row.mean) * (v - row.mean);
                row.stddev = std::sqrt(sq / (values.size() - 1));
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void emit_records(const std::vector<ResultRecord>& records, const std::string& format,
                  std::ostream& out) {
    if (format == "csv") {
        out << kResultCsvHeader << '\n';
        for (const auto& r : records) {
            out << r.run_id << ',' << r.method << ',' << r.n_features << ',' << r.seed << ','
                << format_double(r.bellman_linf) << ',' << format_double(r.bellman_l1_weighted)
                << ',' << format_double(r.bellman_l2) << ',' << format_double(r.expected_loss)
                << ',' << format_double(r.robust_loss) << ',' << r.iterations << ','
                << (r.converged ? 1 : 0) << ',' << format_double(r.wall_ms) << '\n';
        }
    } else {
        json arr = json::array();
        for (const auto& r : records) {
            arr.push_back(json{{"run_id", r.run_id},
                               {"method", r.method},
                               {"n_features", r.n_features},
                               {"seed", r.seed},
                               {"bellman_linf", r.bellman_linf},
                               {"bellman_l1_weighted", r.bellman_l1_weighted},
                               {"bellman_l2", r.bellman_l2},
                               {"expected_loss", r.expected_loss},
                               {"robust_loss", r.robust_loss},
                               {"iterations", r.iterations},
                               {"converged", r.converged},
                               {"wall_ms", r.wall_ms}});
        }
        out << arr.dump(2) << '\n';
    }
}

void emit_records(const std::vector<ResultRecord>& records, const std::string& format,
                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    emit_records(records, format, out);
}

void emit_summary(const std::vector<SummaryRow>& rows, const std::string& format,
                  std::ostream& out) {
    if (format == "csv") {
        out << "method,n_features,metric,mean,std,count\n";
        for (const auto& r : rows)
            out << r.method << ',' << r.n_features << ',' << r.metric << ','
                << format_double(r.mean) << ',' << format_double(r.stddev) << ',' << r.count
                << '\n';
    } else {
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back(json{{"method", r.method},
                               {"n_features", r.n_features},
                               {"metric", r.metric},
                               {"mean", r.mean},
                               {"std", r.stddev},
                               {"count", r.count}});
        out << arr.dump(2) << '\n';
    }
}

std::vector<ResultRecord> parse_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kResultCsvHeader)
        throw std::runtime_error("unexpected CSV header");
    std::vector<ResultRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        ResultRecord r;
        auto next = [&]() {
            if (!std::getline(ls, field, ',')) throw std::runtime_error("short CSV row");
            return field;
        };
        r.run_id = std::stoi(next());
        r.method = next();
        r.n_features = std::stoi(next());
        r.seed = std::stoul(next());
        r.bellman_linf = std::stod(next());
        r.bellman_l1_weighted = std::stod(next());
        r.bellman_l2 = std::stod(next());
        r.expected_loss = std::stod(next());
        r.robust_loss = std::stod(next());
        r.iterations = std::stoi(next());
        r.converged = next() == "1";
        r.wall_ms = std::stod(next());
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace abp
