#include "explasso/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "explasso/rng.hpp"

namespace explasso::solver {

namespace {

constexpr double kArmijo = 1e-4;

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double penalized_l1(const Eigen::VectorXd& beta, const std::vector<char>& mask) {
    double s = 0.0;
    for (long j = 0; j < beta.size(); ++j)
        if (mask[j]) s += std::abs(beta[j]);
    return s;
}

// Scale score psi(sigma) = (1/n) sum l_dot(r_i/sigma) (r_i/sigma) - 1,
// nonincreasing in sigma.
double scale_score(const Eigen::VectorXd& r, const noise::NoiseModel& model,
                   double sigma, Eigen::VectorXd& u, Eigen::VectorXd& d) {
    u = r / sigma;
    model.apply_l_dot(u, d);
    return d.dot(u) / double(r.size()) - 1.0;
}

struct Workspace {
    Eigen::VectorXd residual;   // y - X beta
    Eigen::VectorXd residual_trial;
    Eigen::VectorXd scaled;     // residual / sigma
    Eigen::VectorXd scratch;    // l or l_dot values
    Eigen::VectorXd grad;       // gradient wrt beta
    Eigen::VectorXd beta_new;
    Eigen::VectorXd delta;
};

// risk given precomputed residuals
double risk_from_residuals(const Eigen::VectorXd& r, const noise::NoiseModel& model,
                           double sigma, Workspace& w) {
    w.scaled = r / sigma;
    w.scratch.resize(r.size());
    model.apply_l(w.scaled, w.scratch);
    return w.scratch.mean() + model.l_const() + std::log(sigma);
}

}  // namespace

void FitConfig::validate() const {
    if (lambda && !(*lambda > 0))
        throw std::invalid_argument("fit config: lambda must be > 0");
    if (!(alpha > 0.0) || !(alpha <= 0.5))
        throw std::invalid_argument("fit config: alpha must lie in (0, 1/2]");
    if (!(eta >= 0.0) || !(eta < 1.0))
        throw std::invalid_argument("fit config: eta must lie in [0, 1)");
    if (!(tol_obj > 0) || !(tol_kkt > 0))
        throw std::invalid_argument("fit config: tolerances must be > 0");
    if (max_outer < 1 || max_inner < 1)
        throw std::invalid_argument("fit config: iteration caps must be >= 1");
    if (sigma_floor && !(*sigma_floor > 0))
        throw std::invalid_argument("fit config: sigma_floor must be > 0");
    if (n_starts < 1) throw std::invalid_argument("fit config: n_starts must be >= 1");
}

double FitConfig::resolve_sigma_floor(const Eigen::VectorXd& y) const {
    if (sigma_floor) return *sigma_floor;
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().sum() /
                                double(std::max<long>(1, y.size() - 1)));
    return 1e-10 * (sd + std::numeric_limits<double>::epsilon());
}

double risk(const design::Dataset& ds, const noise::NoiseModel& model,
            const Eigen::VectorXd& beta, double sigma) {
    if (!(sigma > 0)) throw std::domain_error("risk: sigma must be > 0");
    if (beta.size() != ds.p()) throw std::invalid_argument("risk: beta length != p");
    Workspace w;
    const Eigen::VectorXd r = ds.y - ds.X * beta;
    return risk_from_residuals(r, model, sigma, w);
}

ScaleStep scale_step(const Eigen::VectorXd& r, const noise::NoiseModel& model,
                     double sigma_floor) {
    if (!(sigma_floor > 0)) throw std::invalid_argument("scale_step: sigma_floor must be > 0");
    const double r_max = r.cwiseAbs().maxCoeff();
    if (r_max == 0.0) return {sigma_floor, true};

    if (model.family() == noise::Family::gaussian) {
        const double s = std::sqrt(r.squaredNorm() / double(r.size()));
        return {std::max(s, sigma_floor), s < sigma_floor};
    }
    if (model.family() == noise::Family::subbotin) {
        const double shape = *model.shape();
        const double s =
            std::pow(r.array().abs().pow(shape).sum() / double(r.size()), 1.0 / shape);
        return {std::max(s, sigma_floor), s < sigma_floor};
    }

    // Bisection on log sigma; psi is nonincreasing, psi -> -1 as sigma
    // grows, so the root is bracketed once psi(lo) > 0.
    Eigen::VectorXd u(r.size()), d(r.size());
    double lo = std::log(sigma_floor);
    double hi = std::log(10.0 * r_max + sigma_floor);
    if (scale_score(r, model, std::exp(lo), u, d) <= 0.0) return {sigma_floor, true};
    if (scale_score(r, model, std::exp(hi), u, d) > 0.0) {
        // enormous residual/floor ratios only; widen until bracketed
        for (int k = 0; k < 60 && scale_score(r, model, std::exp(hi), u, d) > 0.0; ++k)
            hi += std::log(4.0);
    }
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (scale_score(r, model, std::exp(mid), u, d) > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15) break;
    }
    return {std::exp(0.5 * (lo + hi)), false};
}

ScaleStep scale_step(const design::Dataset& ds, const noise::NoiseModel& model,
                     const Eigen::VectorXd& beta, double sigma_floor) {
    return scale_step(Eigen::VectorXd(ds.y - ds.X * beta), model, sigma_floor);
}

double kkt_residual(const design::Dataset& ds, const noise::NoiseModel& model,
                    const Eigen::VectorXd& beta, double sigma, double lambda) {
    const long n = ds.n();
    Workspace w;
    w.residual = ds.y - ds.X * beta;
    const double rn = risk_from_residuals(w.residual, model, sigma, w);
    const double expo = std::exp(rn);
    w.scratch.resize(n);
    model.apply_l_dot(w.scaled, w.scratch);
    // grad_j exp[R_n] = -exp[R_n]/(n sigma) sum_i l_dot(r_i/sigma) x_ij
    Eigen::VectorXd grad = ds.X.transpose() * w.scratch * (-expo / (double(n) * sigma));
    double res = 0.0;
    for (long j = 0; j < ds.p(); ++j) {
        if (ds.penalty_mask[j]) {
            if (beta[j] != 0.0)
                res = std::max(res, std::abs(grad[j] + lambda * (beta[j] > 0 ? 1.0 : -1.0)));
            else
                res = std::max(res, std::abs(grad[j]) - lambda);
        } else {
            res = std::max(res, std::abs(grad[j]));
        }
    }
    // d/dsigma exp[R_n] = exp[R_n]/sigma * (1 - (1/n) sum l_dot(u_i) u_i)
    const double sigma_partial =
        expo / sigma * (1.0 - w.scratch.dot(w.scaled) / double(n));
    res = std::max(res, std::abs(sigma_partial));
    return res;
}

namespace {

struct Objective {
    // shared proximal-gradient driver for the two losses:
    //   exp_lasso: g(beta) = exp[R_n(beta, sigma)], threshold lambda
    //   known_scale: g(beta) = R_n(beta, sigma*), threshold lambda/sigma*
    const design::Dataset& ds;
    const noise::NoiseModel& model;
    double sigma;
    bool exponentiated;

    double value(const Eigen::VectorXd& r, Workspace& w) const {
        const double rn = risk_from_residuals(r, model, sigma, w);
        return exponentiated ? std::exp(rn) : rn;
    }

    // gradient at beta given residuals and the loss value there
    void gradient(const Eigen::VectorXd& r, double g_val, Workspace& w) const {
        w.scaled = r / sigma;
        w.scratch.resize(r.size());
        model.apply_l_dot(w.scaled, w.scratch);
        const double scale = (exponentiated ? g_val : 1.0) / (double(ds.n()) * sigma);
        w.grad.resize(ds.p());
        w.grad.noalias() = ds.X.transpose() * w.scratch * (-scale);
    }
};

// One proximal-gradient pass at fixed sigma: backtracking (halving) line
// search with sufficient-decrease parameter kArmijo, stopping once the
// prox-step movement ||delta||_inf / t falls below move_target (a proxy
// for the stationarity residual) or the budget runs out. Returns the loss
// value at the final beta; step is carried across calls as a warm start.
double beta_steps(const Objective& obj, double threshold, Eigen::VectorXd& beta,
                  const std::vector<char>& mask, double move_target, long budget,
                  double& step, Workspace& w) {
    const auto& X = obj.ds.X;
    w.residual = obj.ds.y - X * beta;
    double g_val = obj.value(w.residual, w);
    double f_val = g_val + threshold * penalized_l1(beta, mask);

    for (long it = 0; it < budget; ++it) {
        obj.gradient(w.residual, g_val, w);
        bool moved = false;
        for (int half = 0; half < 120; ++half) {
            const double t = step;
            for (long j = 0; j < beta.size(); ++j) {
                const double z = beta[j] - t * w.grad[j];
                w.beta_new[j] = mask[j] ? soft_threshold(z, t * threshold) : z;
            }
            w.delta = w.beta_new - beta;
            const double move2 = w.delta.squaredNorm();
            if (move2 == 0.0) break;
            w.residual_trial = w.residual;
            w.residual_trial.noalias() -= X * w.delta;
            const double g_new = obj.value(w.residual_trial, w);
            const double f_new = g_new + threshold * penalized_l1(w.beta_new, mask);
            // Armijo sufficient decrease, with the quadratic majorization
            // test as fallback once decreases sink to the fp floor of the
            // objective. The 1.25 factor on the quadratic term makes the
            // fallback resolvable at any scale while still certifying
            // t <= ~1.25/L, so the fixed-point iteration keeps contracting;
            // the step only grows on strict Armijo passes.
            const bool armijo_ok = f_new <= f_val - kArmijo * move2 / t;
            const double slack =
                2.0 * std::numeric_limits<double>::epsilon() * std::abs(g_val);
            const bool major_ok =
                g_new <= g_val + w.grad.dot(w.delta) + 0.625 * move2 / t + slack &&
                f_new <= f_val + slack;
            if (armijo_ok || major_ok) {
                beta.swap(w.beta_new);
                w.residual.swap(w.residual_trial);
                g_val = g_new;
                f_val = f_new;
                moved = true;
                if (armijo_ok) step *= 1.25;
                if (w.delta.lpNorm<Eigen::Infinity>() / t <= move_target) return g_val;
                break;
            }
            step *= 0.5;
            if (step < 1e-280) break;
        }
        if (!moved) break;
    }
    return g_val;
}

double initial_step(const design::Dataset& ds, double g_val, double sigma,
                    bool exponentiated, const Eigen::VectorXd& grad) {
    // crude curvature bound from the Gram diagonal and the current loss
    double maxdiag = 0.0;
    for (long j = 0; j < ds.p(); ++j)
        maxdiag = std::max(maxdiag, ds.X.col(j).squaredNorm() / double(ds.n()));
    double L = maxdiag / (sigma * sigma);
    if (exponentiated) L = g_val * L + grad.squaredNorm() / std::max(g_val, 1e-300);
    return 1.0 / std::max(L, 1e-300);
}

FitResult run_alternation(const design::Dataset& ds, const noise::NoiseModel& model,
                          const FitConfig& cfg, double lambda, double sigma_floor,
                          Eigen::VectorXd beta) {
    const long p = ds.p();
    Workspace w;
    w.beta_new.resize(p);
    w.delta.resize(p);

    FitResult res;
    res.lambda = lambda;

    auto sstep = scale_step(Eigen::VectorXd(ds.y - ds.X * beta), model, sigma_floor);
    double sigma = sstep.sigma;
    res.degenerate = sstep.degenerate;

    Objective obj{ds, model, sigma, true};
    w.residual = ds.y - ds.X * beta;
    double g_val = obj.value(w.residual, w);
    double objective = g_val + lambda * penalized_l1(beta, ds.penalty_mask);
    res.objective_trace.push_back(objective);

    obj.gradient(w.residual, g_val, w);
    double step = initial_step(ds, g_val, sigma, true, w.grad);

    // Short beta passes between sigma refreshes: with sigma re-profiled
    // frequently the prox steps track the profiled objective
    // exp[R_n(beta, sigma_hat(beta))] + lambda*||.||_1 (envelope theorem),
    // whose conditioning comes from the design rather than from the
    // beta-sigma coupling.
    long inner_left = cfg.max_inner;
    for (long outer = 0; outer < cfg.max_outer && inner_left > 0; ++outer) {
        const long budget = std::min<long>(10, inner_left);
        const double move_target = 0.25 * cfg.tol_kkt * g_val;
        g_val = beta_steps(obj, lambda, beta, ds.penalty_mask, move_target, budget, step, w);
        inner_left -= budget;

        // sigma step: exact minimizer of R_n(beta, .); keep the old value
        // if the bisection tolerance would break monotonicity
        w.residual = ds.y - ds.X * beta;
        sstep = scale_step(w.residual, model, sigma_floor);
        if (risk_from_residuals(w.residual, model, sstep.sigma, w) <=
            risk_from_residuals(w.residual, model, sigma, w)) {
            sigma = sstep.sigma;
            res.degenerate = sstep.degenerate;
        }
        obj.sigma = sigma;
        g_val = obj.value(w.residual, w);

        const double objective_new = g_val + lambda * penalized_l1(beta, ds.penalty_mask);
        const double rel = (objective - objective_new) / std::max(std::abs(objective), 1e-300);
        res.objective_trace.push_back(std::min(objective_new, objective));
        objective = res.objective_trace.back();
        res.outer_iters = outer + 1;

        const double kkt = kkt_residual(ds, model, beta, sigma, lambda);
        const double kkt_tol = cfg.tol_kkt * g_val;
        res.kkt_residual = kkt;
        res.kkt_tol = kkt_tol;
        if (std::abs(rel) <= cfg.tol_obj && kkt <= kkt_tol) {
            res.converged = true;
            break;
        }
    }

    res.beta_hat = std::move(beta);
    res.sigma_hat = sigma;
    res.objective = objective;
    res.degenerate = res.degenerate || sigma <= sigma_floor * (1.0 + 1e-12);
    for (long j = 0; j < p; ++j)
        if (ds.penalty_mask[j] && res.beta_hat[j] != 0.0) res.active_set.push_back(int(j));
    if (!std::isfinite(res.objective))
        throw numeric_error("exp-Lasso objective overflowed; consider rescaling y");
    return res;
}

}  // namespace

FitResult fit_exp_lasso(const design::Dataset& ds, const noise::NoiseModel& model,
                        const FitConfig& cfg, const calibration::CalibrationResult* calib) {
    cfg.validate();
    ds.validate();
    double lambda;
    if (cfg.lambda) {
        lambda = *cfg.lambda;
    } else if (calib) {
        lambda = calib->lambda;
    } else {
        throw std::invalid_argument(
            "fit_exp_lasso: lambda unset and no calibration result supplied");
    }
    const double sigma_floor = cfg.resolve_sigma_floor(ds.y);

    FitResult best;
    for (int s = 0; s < cfg.n_starts; ++s) {
        Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(ds.p());
        if (s > 0) {
            auto rng = make_engine(derive_seed(cfg.seed, 7717 + std::uint64_t(s)));
            std::normal_distribution<double> normal(0.0, 1.0);
            const double scale = std::sqrt(ds.y.squaredNorm() / double(ds.n())) /
                                 std::sqrt(double(ds.p()));
            for (long j = 0; j < ds.p(); ++j) beta0[j] = scale * normal(rng);
        }
        FitResult r = run_alternation(ds, model, cfg, lambda, sigma_floor, std::move(beta0));
        if (s == 0 || r.objective < best.objective) best = std::move(r);
    }
    return best;
}

FitResult fit_known_scale(const design::Dataset& ds, const noise::NoiseModel& model,
                          double sigma_star, double lambda, const FitConfig& cfg) {
    if (!(sigma_star > 0)) throw std::invalid_argument("fit_known_scale: sigma_star must be > 0");
    if (!(lambda > 0)) throw std::invalid_argument("fit_known_scale: lambda must be > 0");
    ds.validate();

    const long p = ds.p();
    Workspace w;
    w.beta_new.resize(p);
    w.delta.resize(p);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);

    Objective obj{ds, model, sigma_star, false};
    const double threshold = lambda / sigma_star;

    w.residual = ds.y - ds.X * beta;
    double g_val = obj.value(w.residual, w);
    obj.gradient(w.residual, g_val, w);
    double step = initial_step(ds, g_val, sigma_star, false, w.grad);

    FitResult res;
    res.lambda = lambda;
    double objective = g_val + threshold * penalized_l1(beta, ds.penalty_mask);
    res.objective_trace.push_back(objective);
    for (long outer = 0; outer < cfg.max_outer; ++outer) {
        const double move_target = 0.25 * cfg.tol_kkt * std::max(std::abs(g_val), 1.0);
        g_val = beta_steps(obj, threshold, beta, ds.penalty_mask, move_target,
                           cfg.max_inner, step, w);
        const double objective_new = g_val + threshold * penalized_l1(beta, ds.penalty_mask);
        const double rel = (objective - objective_new) / std::max(std::abs(objective), 1e-300);
        res.objective_trace.push_back(std::min(objective_new, objective));
        objective = res.objective_trace.back();
        res.outer_iters = outer + 1;

        // same KKT contract with the gradient of R_n
        w.residual = ds.y - ds.X * beta;
        risk_from_residuals(w.residual, model, sigma_star, w);
        model.apply_l_dot(w.scaled, w.scratch);
        Eigen::VectorXd grad =
            ds.X.transpose() * w.scratch * (-1.0 / (double(ds.n()) * sigma_star));
        double kkt = 0.0;
        for (long j = 0; j < p; ++j) {
            if (ds.penalty_mask[j]) {
                if (beta[j] != 0.0)
                    kkt = std::max(kkt,
                                   std::abs(grad[j] + threshold * (beta[j] > 0 ? 1.0 : -1.0)));
                else
                    kkt = std::max(kkt, std::abs(grad[j]) - threshold);
            } else {
                kkt = std::max(kkt, std::abs(grad[j]));
            }
        }
        res.kkt_residual = kkt;
        res.kkt_tol = cfg.tol_kkt * std::max(std::abs(g_val), 1.0);
        if (std::abs(rel) <= cfg.tol_obj && kkt <= res.kkt_tol) {
            res.converged = true;
            break;
        }
    }
    res.beta_hat = std::move(beta);
    res.sigma_hat = sigma_star;
    res.objective = objective;
    for (long j = 0; j < p; ++j)
        if (ds.penalty_mask[j] && res.beta_hat[j] != 0.0) res.active_set.push_back(int(j));
    return res;
}

Eigen::VectorXd predict(const design::Dataset& trained, const Eigen::VectorXd& beta_hat,
                        double sigma_hat, const Eigen::MatrixXd& X_new) {
    (void)sigma_hat;  // mean prediction only
    if (beta_hat.size() != trained.p())
        throw std::invalid_argument("predict: beta length != trained p");
    if (trained.has_intercept) {
        if (X_new.cols() != trained.p() - 1)
            throw std::invalid_argument("predict: X_new must have p-1 columns (no intercept)");
        Eigen::VectorXd out =
            Eigen::VectorXd::Constant(X_new.rows(), beta_hat[0]);
        for (long j = 1; j < trained.p(); ++j) {
            const double mean = trained.column_means.size() ? trained.column_means[j] : 0.0;
            out += (X_new.col(j - 1).array() - mean).matrix() * beta_hat[j];
        }
        return out;
    }
    if (X_new.cols() != trained.p())
        throw std::invalid_argument("predict: X_new column count mismatch");
    return X_new * beta_hat;
}

}  // namespace explasso::solver
