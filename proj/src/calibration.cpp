#include "explasso/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "explasso/rng.hpp"

namespace explasso::calibration {

namespace {

void validate_levels(double alpha, double eta) {
    if (!(alpha > 0.0) || !(alpha <= 0.5))
        throw std::invalid_argument("calibrate: alpha must lie in (0, 1/2]");
    if (!(eta >= 0.0) || !(eta < 1.0))
        throw std::invalid_argument("calibrate: eta must lie in [0, 1)");
}

Eigen::MatrixXd penalized_columns(const Eigen::MatrixXd& X,
                                  const std::vector<char>& penalty_mask) {
    if (long(penalty_mask.size()) != X.cols())
        throw std::invalid_argument("sample_lambda_star: mask length != p");
    long np = 0;
    for (char m : penalty_mask) np += (m != 0);
    if (np == 0)
        throw std::invalid_argument("sample_lambda_star: no penalized columns");
    Eigen::MatrixXd Xp(X.rows(), np);
    long k = 0;
    for (long j = 0; j < X.cols(); ++j)
        if (penalty_mask[j]) Xp.col(k++) = X.col(j);
    return Xp;
}

}  // namespace

long quantile_rank(double alpha, long n) {
    const double v = (1.0 - alpha) * double(n);
    long k = long(std::ceil(v - 1e-9 * std::max(1.0, v)));
    return std::clamp(k, 1L, n);
}

double CalibrationResult::exceedance_probability(double lambda_val, double eta_val) const {
    // samples sorted ascending: count of lambda_star > lambda_val/(1-eta_val)
    const double threshold = lambda_val / (1.0 - eta_val);
    const double* begin = lambda_star_samples.data();
    const double* end = begin + lambda_star_samples.size();
    const auto it = std::upper_bound(begin, end, threshold);
    return double(end - it) / double(lambda_star_samples.size());
}

Eigen::VectorXd sample_lambda_star(const Eigen::MatrixXd& X,
                                   const std::vector<char>& penalty_mask,
                                   const noise::NoiseModel& model, long N,
                                   std::uint64_t seed, int n_threads) {
    if (N < 100)
        throw std::invalid_argument("sample_lambda_star: need N >= 100 replicates");
    const long n = X.rows();
    if (n < 1) throw std::invalid_argument("sample_lambda_star: empty design");
    const Eigen::MatrixXd Xp = penalized_columns(X, penalty_mask);
    const double l_const = model.l_const();

    Eigen::VectorXd out(N);
    auto worker = [&](long lo, long hi) {
        Eigen::VectorXd xi(n), score(n), lvals(n), v(Xp.cols());
        for (long i = lo; i < hi; ++i) {
            auto rng = make_engine(derive_seed(seed, std::uint64_t(i)));
            model.sample(rng, xi);
            model.apply_l_dot(xi, score);
            v.noalias() = Xp.transpose() * score / double(n);
            model.apply_l(xi, lvals);
            const double log_pivot = lvals.mean() + l_const;  // -(1/n) sum log f
            out[i] = v.lpNorm<Eigen::Infinity>() * std::exp(log_pivot);
        }
    };

    const int workers = std::max(1, n_threads);
    if (workers == 1 || N < 2 * workers) {
        worker(0, N);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (N + workers - 1) / workers;
        for (int t = 0; t < workers; ++t) {
            const long lo = t * chunk;
            const long hi = std::min(N, lo + chunk);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

Eigen::VectorXd sample_lambda_star(const design::Dataset& ds,
                                   const noise::NoiseModel& model, long N,
                                   std::uint64_t seed, int n_threads) {
    return sample_lambda_star(ds.X, ds.penalty_mask, model, N, seed, n_threads);
}

CalibrationResult calibrate(const Eigen::MatrixXd& X,
                            const std::vector<char>& penalty_mask,
                            const noise::NoiseModel& model, double alpha, double eta,
                            long N, std::uint64_t seed, int n_threads) {
    validate_levels(alpha, eta);
    CalibrationResult res;
    res.lambda_star_samples = sample_lambda_star(X, penalty_mask, model, N, seed, n_threads);
    std::sort(res.lambda_star_samples.data(), res.lambda_star_samples.data() + N);
    res.alpha = alpha;
    res.eta = eta;
    res.seed = seed;
    res.n_samples = N;
    const long k = quantile_rank(alpha, N);
    res.quantile = res.lambda_star_samples[k - 1];
    res.lambda = res.quantile / (1.0 - eta);
    // binomial order-statistic bracket for the quantile's MC error
    const double half_width = 2.0 * std::sqrt(alpha * (1.0 - alpha) / double(N));
    const long k_lo = quantile_rank(alpha + half_width, N);
    const long k_hi = quantile_rank(alpha - half_width, N);
    res.mc_bracket_lo = res.lambda_star_samples[k_lo - 1];
    res.mc_bracket_hi = res.lambda_star_samples[k_hi - 1];
    return res;
}

CalibrationResult calibrate(const design::Dataset& ds, const noise::NoiseModel& model,
                            double alpha, double eta, long N, std::uint64_t seed,
                            int n_threads) {
    return calibrate(ds.X, ds.penalty_mask, model, alpha, eta, N, seed, n_threads);
}

std::vector<ScalingRow> quantile_scaling_check(const noise::NoiseModel& model,
                                               const std::vector<long>& n_grid,
                                               const std::vector<long>& p_grid,
                                               double alpha, long N,
                                               std::uint64_t seed, int n_threads) {
    if (n_grid.empty() || p_grid.empty())
        throw std::invalid_argument("quantile_scaling_check: empty grid");
    std::vector<ScalingRow> rows;
    std::uint64_t cell = 0;
    for (long n : n_grid) {
        for (long p : p_grid) {
            auto rng = make_engine(derive_seed(seed, 1000003 + cell));
            Eigen::MatrixXd X = design::generate_gaussian_design(n, p, rng);
            std::vector<char> mask(p, 1);
            const auto res =
                calibrate(X, mask, model, alpha, 0.0, N, derive_seed(seed, cell), n_threads);
            ScalingRow row;
            row.n = n;
            row.p = p;
            row.quantile = res.quantile;
            row.ratio = res.quantile / std::sqrt(std::log(double(p)) / double(n));
            rows.push_back(row);
            ++cell;
        }
    }
    return rows;
}

}  // namespace explasso::calibration
