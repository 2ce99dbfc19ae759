#pragma once

#include "cgemev/estimators.hpp"
#include "cgemev/quadrature.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cgemev {

struct ExperimentConfig {
    double nu = 0.5;
    double b0 = 1.0;
    double theta0 = 1.0;
    double delta = 0.01;
    int n = 2000;
    int replicates = 500;
    std::uint64_t master_seed = 20260401;
    std::vector<std::string> estimators{"ev", "gev", "ml"};
    double box_factor = 100.0;
    int threads = 0;             // 0: MCGEV_THREADS env, else hardware
    std::string out_prefix;      // when set, raw CSV + summary JSON are written

    void validate() const;
};

ExperimentConfig parse_config_file(const std::string& path);
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Raw-table schema: one row per (replicate, method). Column order is stable.
struct ReplicateRow {
    int replicate = 0;
    std::uint64_t seed = 0;
    std::string method;
    double b_hat = 0, theta_hat = 0, c_hat = 0;
    bool converged = false;
    bool boundary_hit = false;
};

struct Moments {
    double mean = 0, bias = 0, var = 0, mse = 0, se_mse = 0;
};

struct MethodStats {
    std::string method;
    int attempted = 0, used = 0, excluded = 0;
    Moments b, theta, c;
};

struct RatioCheck {
    std::string name;
    std::string parameter;      // "b", "theta", "c"
    std::string numerator, denominator;
    bool use_variance = false;  // variance ratio instead of MSE ratio
    double empirical = 0, se = 0;
    double predicted = 0, zscore = 0;
    bool pass = false;
};

struct ExperimentSummary {
    ExperimentConfig config;
    std::uint64_t hash = 0;
    std::vector<MethodStats> methods;
    std::vector<RatioCheck> ratios; // filled by compare_report
    double exclusion_rate = 0.0;
    bool ok = true; // false when the exclusion rate exceeds 10%
};

/// Runs all replicates (deterministically with respect to the thread count),
/// persists the raw table when config.out_prefix is set, then aggregates.
ExperimentSummary run_experiment(const ExperimentConfig& cfg,
                                 std::vector<ReplicateRow>* raw_out = nullptr);

/// Aggregation of an existing raw table (also used to re-check summaries).
ExperimentSummary summarize(const ExperimentConfig& cfg, const std::vector<ReplicateRow>& rows);

std::string raw_table_csv(const std::vector<ReplicateRow>& rows);

/// Empirical-vs-quadrature ratio checks; pass iff |z| < 3. Throws
/// MismatchedConfig when the report and config parameters disagree.
void compare_report(ExperimentSummary& summary, const std::vector<ReplicateRow>& rows,
                    const AsymptoticReport& report);

std::string summary_json(const ExperimentSummary& summary);
std::string summary_text(const ExperimentSummary& summary);

/// Theorem 3.1 experiment: MC mean of y^T A(I-A) y / tr A - 1 evaluated at a
/// candidate (b, theta), data simulated at (b0, theta0).
struct PsiExperimentResult {
    double mean = 0, se = 0;
    int replicates = 0;
};
PsiExperimentResult psi_experiment(const ExperimentConfig& cfg, double b, double theta);

int resolve_threads(int requested);

} // namespace cgemev
