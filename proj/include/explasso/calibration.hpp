#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "explasso/design.hpp"
#include "explasso/noise.hpp"

namespace explasso::calibration {

// Monte Carlo approximation of the pivotal statistic's distribution and the
// resulting tuning parameter lambda = quantile / (1 - eta).
struct CalibrationResult {
    Eigen::VectorXd lambda_star_samples;  // sorted ascending, length N
    double quantile = 0;                  // ceil((1-alpha)N)-th order statistic
    double lambda = 0;                    // quantile / (1 - eta)
    double alpha = 0;
    double eta = 0;
    std::uint64_t seed = 0;
    long n_samples = 0;
    double mc_bracket_lo = 0;  // order statistics at ranks ceil((1-alpha -+ 2*se)*N)
    double mc_bracket_hi = 0;

    // Empirical P(lambda_star * (1 - eta_val) > lambda_val).
    double exceedance_probability(double lambda_val, double eta_val) const;
};

// Smallest-integer-at-least rank with a guard against floating error when
// (1-alpha)*N is an exact integer.
long quantile_rank(double alpha, long n);

// N independent replicates of
//   lambda* = || (1/n) sum_i l_dot(xi_i) x_i ||_inf * exp[-(1/n) sum_i log f(xi_i)]
// on the given fixed design; only penalized columns enter the sup norm.
// Replicate i draws from a stream derived from (seed, i), so the output is
// bitwise identical for any thread count. Requires N >= 100.
Eigen::VectorXd sample_lambda_star(const Eigen::MatrixXd& X,
                                   const std::vector<char>& penalty_mask,
                                   const noise::NoiseModel& model, long N,
                                   std::uint64_t seed, int n_threads = 1);

Eigen::VectorXd sample_lambda_star(const design::Dataset& ds,
                                   const noise::NoiseModel& model, long N,
                                   std::uint64_t seed, int n_threads = 1);

CalibrationResult calibrate(const Eigen::MatrixXd& X,
                            const std::vector<char>& penalty_mask,
                            const noise::NoiseModel& model, double alpha, double eta,
                            long N, std::uint64_t seed, int n_threads = 1);

CalibrationResult calibrate(const design::Dataset& ds, const noise::NoiseModel& model,
                            double alpha, double eta, long N, std::uint64_t seed,
                            int n_threads = 1);

struct ScalingRow {
    long n = 0;
    long p = 0;
    double quantile = 0;
    double ratio = 0;  // quantile / sqrt(log(p)/n)
};

// Quantiles of lambda* on fresh Gaussian designs over an (n, p) grid,
// normalized by sqrt(log p / n); the ratio staying in a fixed bracket is
// the tuning-scale law.
std::vector<ScalingRow> quantile_scaling_check(const noise::NoiseModel& model,
                                               const std::vector<long>& n_grid,
                                               const std::vector<long>& p_grid,
                                               double alpha, long N,
                                               std::uint64_t seed, int n_threads = 1);

}  // namespace explasso::calibration
