#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace explasso::design {

// Regression data: response, design matrix, and the penalty mask marking
// which coefficients carry the l1 penalty (false = unpenalized, e.g. the
// intercept). column_means holds the training-time centering offsets so
// predictions can be made from raw inputs.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::vector<char> penalty_mask;  // size p; nonzero = penalized
    bool centered = false;
    bool has_intercept = false;      // column 0 is an all-ones unpenalized column
    Eigen::VectorXd column_means;    // size p when centered, else empty

    long n() const { return y.size(); }
    long p() const { return X.cols(); }
    long n_penalized() const;
    std::vector<int> penalized_indices() const;

    // Checks finiteness, n >= 2, p >= 1 and mask/centering consistency.
    // Throws std::invalid_argument on violation.
    void validate() const;
};

// CSV with a header row; the column named 'y' is the response, remaining
// numeric columns are predictors in header order. All coefficients start
// penalized and no centering is applied. Throws explasso::io_error naming
// the offending row/column on malformed input.
Dataset load_csv(const std::string& path);

// Same CSV format but y optional: used for design-only input. If a 'y'
// header is present that column is dropped.
Eigen::MatrixXd load_matrix_csv(const std::string& path);

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& col_names);

// Prepends an all-ones unpenalized column and mean-centers every penalized
// column, recording the means for prediction-time de-centering.
Dataset with_intercept(const Dataset& ds);

// Normalized Gram matrix X^T X / n, exactly symmetric.
Eigen::MatrixXd gram(const Dataset& ds);

// Irrepresentable constant eta_0 = max over sign vectors tau in {-1,+1}^|S|
// of || X_{-S}^T X_S (X_S^T X_S)^{-1} tau ||_inf, which equals the maximum
// row l1 norm of X_{-S}^T X_S (X_S^T X_S)^{-1}. Throws on singular
// X_S^T X_S; when cond is non-null the condition number of X_S^T X_S is
// written there.
double irrepresentable_eta0(const Dataset& ds, const std::vector<int>& S,
                            double* cond = nullptr);

// Randomized lower-bound estimate of min b^T Gram b / ||b||_2^2 over the
// cone ||b||_1 <= (9/eta) ||b_S||_1. A diagnostic, not a certificate: it
// samples cone directions (boundary and interior) and reports the smallest
// Rayleigh quotient seen. Empty S returns the unrestricted minimum
// eigenvalue of the Gram matrix.
double restricted_eigenvalue_proxy(const Dataset& ds, const std::vector<int>& S,
                                   double eta, long n_random, std::uint64_t seed);

// n x p matrix of i.i.d. standard normal entries.
Eigen::MatrixXd generate_gaussian_design(long n, long p, std::mt19937_64& rng);

struct DesignDiagnostics {
    double k_x = 0;                              // max |x_ij|
    double min_col_norm_sq = 0;                  // min over penalized j of ||x_j||^2 / n
    std::optional<double> gram_deviation;        // max |Gram - Sigma_ref|_inf
    std::optional<double> irrepresentable_eta0;  // when S supplied
    std::optional<double> cond_s;                // condition number of X_S^T X_S
};

DesignDiagnostics diagnose(const Dataset& ds, const std::vector<int>* S = nullptr,
                           const Eigen::MatrixXd* sigma_ref = nullptr);

}  // namespace explasso::design
