#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "explasso/calibration.hpp"
#include "explasso/design.hpp"
#include "explasso/noise.hpp"
#include "explasso/solver.hpp"

namespace explasso::experiments {

// Seeded simulation scenario. beta_magnitude is expressed in units of
// sigma_star, so rescaling sigma_star rescales the response exactly and the
// normalized error records are invariant at matched seeds.
struct ScenarioConfig {
    long n = 100;
    long p = 10;
    long s_star = 0;               // sparsity; active set = first s* penalized coords
    double beta_magnitude = 1.0;   // value of nonzero beta*_j, in sigma_star units
    double sigma_star = 1.0;
    std::string model = "gaussian";
    std::string design = "gaussian";  // gaussian | orthogonal | file
    std::string design_file;
    long replications = 100;
    double alpha = 0.05;
    double eta = 0.1;
    std::uint64_t seed = 1;
    long n_calib = 10000;  // lambda* replicates per calibration
    int n_threads = 0;     // 0 = hardware concurrency

    void validate() const;
};

struct ExperimentReport {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // one record per row
    std::vector<std::pair<std::string, double>> aggregates;
    std::vector<std::string> notes;

    double aggregate(const std::string& key) const;
    long column_index(const std::string& name) const;
    void write_csv(const std::string& path) const;
};

// Pure recomputations of the aggregates from the per-record rows; run_*
// installs exactly these, so aggregates always match their records.
std::vector<std::pair<std::string, double>> aggregate_rates(
    const ExperimentReport& rep, const ScenarioConfig& cfg);
std::vector<std::pair<std::string, double>> aggregate_edge(
    const ExperimentReport& rep, const ScenarioConfig& cfg);
std::vector<std::pair<std::string, double>> aggregate_select(
    const ExperimentReport& rep, const ScenarioConfig& cfg);
std::vector<std::pair<std::string, double>> aggregate_efficiency(
    const ExperimentReport& rep, const ScenarioConfig& cfg,
    const noise::FisherInfo& info);

// Oracle-rate study: fits at the calibrated lambda and records estimation,
// prediction and scale errors plus their lambda-normalized versions.
ExperimentReport run_oracle_rates(const ScenarioConfig& cfg);

// OLS slope of log(median error) against log(lambda * sqrt(s* v 1)) across
// several rate runs (an n-grid at fixed p); a slope near 1 confirms the
// error tracks the tuning scale. Needs at least two runs.
double rate_slope(const std::vector<const ExperimentReport*>& runs,
                  const std::vector<ScenarioConfig>& cfgs,
                  const std::string& error_key = "median_l2");

// Null-model detection edge: for each multiplier m fits at m * quantile and
// records whether all penalized coefficients stayed exactly zero, next to
// the empirical P(lambda*(1-eta) > lambda) comparison curve.
ExperimentReport run_detection_edge(const ScenarioConfig& cfg,
                                    const std::vector<double>& lambda_multipliers);

// Exact support recovery: no-false-positive frequency stratified by the
// realized irrepresentable constant against eta/(2-eta).
ExperimentReport run_variable_selection(const ScenarioConfig& cfg);

// Asymptotic efficiency of (sigma_hat, intercept): empirical covariance of
// sqrt(n)-normalized errors against the inverse information matrix, plus the
// paired comparison with the oracle MLE that knows the penalized block.
ExperimentReport run_efficiency(const ScenarioConfig& cfg);

}  // namespace explasso::experiments
