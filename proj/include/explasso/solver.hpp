#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "explasso/calibration.hpp"
#include "explasso/design.hpp"
#include "explasso/noise.hpp"

namespace explasso::solver {

struct FitConfig {
    // Tuning parameter; empty means "calibrate" (a CalibrationResult must
    // then be supplied to fit_exp_lasso).
    std::optional<double> lambda;
    double alpha = 0.05;  // calibration level, in (0, 1/2]
    double eta = 0.1;     // detection-edge margin, lambda = quantile/(1-eta)

    double tol_obj = 1e-10;  // relative objective-change stopping threshold
    // KKT threshold relative to exp[R_n] at the current iterate; the
    // absolute threshold tol_kkt * exp[R_n(beta,sigma)] keeps the
    // certificate scale-equivariant.
    double tol_kkt = 1e-8;
    long max_outer = 200;
    long max_inner = 10000;
    // Lower guard on sigma; defaults to 1e-10 * (sample std of y + eps).
    std::optional<double> sigma_floor;
    std::uint64_t seed = 0;
    int n_starts = 1;  // start 1 is beta = 0; extra starts perturb randomly

    void validate() const;
    double resolve_sigma_floor(const Eigen::VectorXd& y) const;
};

struct FitResult {
    Eigen::VectorXd beta_hat;
    double sigma_hat = 0;
    std::vector<int> active_set;  // penalized j with beta_hat[j] != 0
    double objective = 0;         // exp[R_n] + lambda * ||beta_penalized||_1
    double lambda = 0;            // tuning parameter actually used
    double kkt_residual = 0;      // absolute stationarity residual
    double kkt_tol = 0;           // threshold the certificate was checked at
    long outer_iters = 0;
    bool converged = false;
    bool degenerate = false;  // sigma collapsed to the floor
    std::vector<double> objective_trace;  // one entry per outer iteration
};

// Empirical risk R_n(beta, sigma) = (1/n) sum l((y_i - x_i beta)/sigma)
// + log sigma, with l the exactly normalized -log f (l_const included), so
// that exp[R_n] lives on the same scale as the calibrated lambda.
double risk(const design::Dataset& ds, const noise::NoiseModel& model,
            const Eigen::VectorXd& beta, double sigma);

struct ScaleStep {
    double sigma = 0;
    bool degenerate = false;  // all residuals zero; sigma is the floor
};

// argmin over sigma >= sigma_floor of R_n(beta, .): closed form
// ((1/n) sum |r_i|^r)^{1/r} for Subbotin; otherwise the root of the scale
// score equation (1/n) sum l_dot(r_i/sigma) (r_i/sigma) = 1 by bisection in
// log sigma (the score is monotone there for convex l).
ScaleStep scale_step(const Eigen::VectorXd& residuals, const noise::NoiseModel& model,
                     double sigma_floor);
ScaleStep scale_step(const design::Dataset& ds, const noise::NoiseModel& model,
                     const Eigen::VectorXd& beta, double sigma_floor);

// The exp-Lasso: joint minimization of exp[R_n(beta, sigma)]
// + lambda * ||beta_penalized||_1 by alternating an exact sigma step with
// proximal-gradient beta steps. Non-convergence is reported through
// converged=false, never an exception.
FitResult fit_exp_lasso(const design::Dataset& ds, const noise::NoiseModel& model,
                        const FitConfig& cfg,
                        const calibration::CalibrationResult* calib = nullptr);

// Known-scale Lasso: min over beta of R_n(beta, sigma*) +
// lambda * ||beta_penalized||_1 / sigma*, same proximal-gradient machinery
// and KKT contract with the gradient of R_n in place of exp[R_n].
FitResult fit_known_scale(const design::Dataset& ds, const noise::NoiseModel& model,
                          double sigma_star, double lambda,
                          const FitConfig& cfg = FitConfig{});

// Mean prediction on raw (uncentered) inputs, using the training dataset's
// centering metadata. X_new excludes the intercept column when the training
// data carried one.
Eigen::VectorXd predict(const design::Dataset& trained, const Eigen::VectorXd& beta_hat,
                        double sigma_hat, const Eigen::MatrixXd& X_new);

// Stationarity residual of the exp-Lasso objective at (beta, sigma):
// max over penalized coordinates of the soft-threshold violation, over
// unpenalized coordinates and sigma of the bare partial derivatives.
double kkt_residual(const design::Dataset& ds, const noise::NoiseModel& model,
                    const Eigen::VectorXd& beta, double sigma, double lambda);

}  // namespace explasso::solver
