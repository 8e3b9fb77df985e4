#pragma once

#include "abp/benchmarks.hpp"
#include "abp/formulations.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace abp {

/// One experiment batch: which benchmark, which methods, how many seeded runs.
struct ExperimentConfig {
    std::string benchmark = "chain"; // chain | mountain_car | sat | file
    std::vector<std::string> methods;
    int n_features = 15;
    int n_runs = 1;
    unsigned long seed = 0;
    double hybrid_k = 5.0;
    int n_starts = 8; // multistart count for the bilinear methods
    std::string output_path;  // empty writes to stdout
    std::string format = "csv"; // csv | json
    std::string mdp_path, basis_path; // benchmark == file
    std::string cnf_path;             // benchmark == sat
    ChainSpec chain;
    MountainCarSpec mountain_car;

    void validate() const;
    static ExperimentConfig from_json(const std::string& text);
};

/// Known method names, in canonical order.
const std::vector<std::string>& known_methods();

struct ResultRecord {
    int run_id = 0;
    std::string method;
    int n_features = 0;
    unsigned long seed = 0;
    double bellman_linf = 0.0;
    double bellman_l1_weighted = 0.0;
    double bellman_l2 = 0.0;
    double expected_loss = 0.0;
    double robust_loss = 0.0;
    int iterations = 0;
    bool converged = false;
    double wall_ms = 0.0;
};

/// Runs every (run, method) cell; failures are recorded (converged = false,
/// NaN metrics) and never abort the batch. Deterministic for a fixed
/// (config, seed) apart from wall_ms.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& config);

struct SummaryRow {
    std::string method;
    int n_features = 0;
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0; // sample deviation, n-1 denominator; 0 for one record
    int count = 0;
};

/// Mean and sample standard deviation per (method, n_features, metric), in a
/// stable row order.
std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records);

/// CSV header, in emission order.
extern const char* kResultCsvHeader;

void emit_records(const std::vector<ResultRecord>& records, const std::string& format,
                  std::ostream& out);
void emit_records(const std::vector<ResultRecord>& records, const std::string& format,
                  const std::string& path);
void emit_summary(const std::vector<SummaryRow>& rows, const std::string& format,
                  std::ostream& out);

/// Round-trip helper for the CSV format.
std::vector<ResultRecord> parse_records_csv(std::istream& in);

} // namespace abp
