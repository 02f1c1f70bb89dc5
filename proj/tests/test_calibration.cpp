#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "explasso/calibration.hpp"
#include "explasso/design.hpp"
#include "explasso/noise.hpp"
#include "explasso/rng.hpp"

using namespace explasso;
using noise::NoiseModel;

namespace {

design::Dataset gaussian_dataset(long n, long p, std::uint64_t seed) {
    auto rng = make_engine(seed);
    design::Dataset ds;
    ds.X = design::generate_gaussian_design(n, p, rng);
    ds.y = Eigen::VectorXd::Zero(n);
    ds.penalty_mask.assign(p, 1);
    return ds;
}

}  // namespace

TEST_CASE("quantile is the ceil((1-alpha)N) order statistic") {
    CHECK(calibration::quantile_rank(0.05, 1000) == 950);
    CHECK(calibration::quantile_rank(0.05, 999) == 950);  // ceil(949.05)
    CHECK(calibration::quantile_rank(0.5, 100) == 50);
    CHECK(calibration::quantile_rank(0.01, 100) == 99);

    auto ds = gaussian_dataset(50, 5, 1);
    const auto res = calibration::calibrate(ds, NoiseModel::gaussian(), 0.05, 0.0, 1000, 2);
    CHECK(res.quantile == res.lambda_star_samples[949]);
    CHECK(res.lambda == res.quantile);  // eta = 0
    CHECK(res.mc_bracket_lo <= res.quantile);
    CHECK(res.quantile <= res.mc_bracket_hi);
    CHECK(std::is_sorted(res.lambda_star_samples.data(),
                         res.lambda_star_samples.data() + res.n_samples));
}

TEST_CASE("lambda = quantile / (1 - eta) to machine precision") {
    auto ds = gaussian_dataset(40, 4, 3);
    const auto res = calibration::calibrate(ds, NoiseModel::logistic(), 0.1, 0.25, 400, 4);
    CHECK(res.lambda == res.quantile / 0.75);
    CHECK(res.lambda >= res.quantile);
}

TEST_CASE("lambda* on a single ones column concentrates near zero") {
    const long n = 10000;
    design::Dataset ds;
    ds.X = Eigen::MatrixXd::Ones(n, 1);
    ds.y = Eigen::VectorXd::Zero(n);
    ds.penalty_mask = {1};
    auto samples =
        calibration::sample_lambda_star(ds, NoiseModel::gaussian(), 2000, 5);
    std::sort(samples.data(), samples.data() + samples.size());
    const double median = samples[samples.size() / 2];
    // |mean(xi)| is half-normal with scale 1/sqrt(n); the pivot multiplier
    // concentrates at e^{(1+log 2pi)/2} ~= 4.1327
    CHECK(median > 0.0);
    CHECK(median <= 4.2 * 0.6745 / std::sqrt(double(n)) * 2.0);
    for (long i = 0; i < samples.size(); ++i) CHECK(samples[i] > 0.0);
}

TEST_CASE("representation shift leaves lambda* unchanged") {
    auto ds = gaussian_dataset(60, 8, 6);
    const auto model = NoiseModel::gumbel();
    const auto shifted = model.with_constant_shift(2.5);
    const auto a = calibration::sample_lambda_star(ds, model, 300, 7);
    const auto b = calibration::sample_lambda_star(ds, shifted, 300, 7);
    for (long i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
}

TEST_CASE("fixed seed reproduces bitwise, across thread counts") {
    auto ds = gaussian_dataset(50, 6, 8);
    const auto a = calibration::sample_lambda_star(ds, NoiseModel::huber(), 500, 9, 1);
    const auto b = calibration::sample_lambda_star(ds, NoiseModel::huber(), 500, 9, 1);
    const auto c = calibration::sample_lambda_star(ds, NoiseModel::huber(), 500, 9, 4);
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("N below 100 is rejected") {
    auto ds = gaussian_dataset(30, 3, 10);
    CHECK_THROWS_AS(calibration::sample_lambda_star(ds, NoiseModel::gaussian(), 99, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(calibration::calibrate(ds, NoiseModel::gaussian(), 0.05, 0.1, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(calibration::calibrate(ds, NoiseModel::gaussian(), 0.7, 0.1, 500, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(calibration::calibrate(ds, NoiseModel::gaussian(), 0.05, 1.0, 500, 1),
                    std::invalid_argument);
}

TEST_CASE("gaussian lambda* equals the direct formula for the same draws") {
    const long n = 40, p = 5, N = 200;
    auto ds = gaussian_dataset(n, p, 11);
    const std::uint64_t seed = 12;
    const auto samples =
        calibration::sample_lambda_star(ds, NoiseModel::gaussian(), N, seed);
    const auto model = NoiseModel::gaussian();
    for (long i = 0; i < N; ++i) {
        auto rng = make_engine(derive_seed(seed, std::uint64_t(i)));
        const Eigen::VectorXd xi = model.sample(rng, n);
        // independent re-derivation: e^{(1/n) sum(xi^2/2 + log sqrt(2pi))}
        // * max_j |x_j' xi / n|
        double acc = 0;
        for (long k = 0; k < n; ++k) acc += 0.5 * xi[k] * xi[k] + 0.5 * std::log(2 * M_PI);
        const double direct =
            std::exp(acc / double(n)) * (ds.X.transpose() * xi / double(n))
                                            .lpNorm<Eigen::Infinity>();
        CHECK(samples[i] == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("calibration depends only on penalized columns") {
    const long n = 30;
    auto ds = gaussian_dataset(n, 4, 13);
    ds.penalty_mask = {0, 1, 0, 1};
    auto permuted = ds;
    permuted.X.col(0).swap(permuted.X.col(2));  // swap the two unpenalized columns
    const auto a = calibration::sample_lambda_star(ds, NoiseModel::logistic(), 300, 14);
    const auto b = calibration::sample_lambda_star(permuted, NoiseModel::logistic(), 300, 14);
    CHECK(a == b);

    std::vector<char> none(4, 0);
    CHECK_THROWS_AS(
        calibration::sample_lambda_star(ds.X, none, NoiseModel::logistic(), 300, 14),
        std::invalid_argument);
}

TEST_CASE("high-dimensional quantile sits on the sqrt(log p / n) scale") {
    auto ds = gaussian_dataset(200, 500, 15);
    const auto res = calibration::calibrate(ds, NoiseModel::gaussian(), 0.05, 0.0, 10000, 16, 2);
    const double ratio = res.quantile / std::sqrt(std::log(500.0) / 200.0);
    CHECK(ratio >= 2.0);
    CHECK(ratio <= 12.0);
}

TEST_CASE("quantile_scaling_check ratio is bounded across n") {
    for (const auto& model : {NoiseModel::gaussian(), NoiseModel::logistic()}) {
        const auto rows = calibration::quantile_scaling_check(
            model, {100, 400, 1600}, {200}, 0.05, 2000, 17, 2);
        REQUIRE(rows.size() == 3);
        double lo = rows[0].ratio, hi = rows[0].ratio;
        for (const auto& r : rows) {
            lo = std::min(lo, r.ratio);
            hi = std::max(hi, r.ratio);
        }
        CHECK(hi / lo <= 2.0);
    }
    const auto single = calibration::quantile_scaling_check(NoiseModel::gaussian(), {100},
                                                            {50}, 0.05, 500, 18);
    CHECK(single.size() == 1);
    CHECK_THROWS_AS(calibration::quantile_scaling_check(NoiseModel::gaussian(), {}, {50},
                                                        0.05, 500, 18),
                    std::invalid_argument);
}

TEST_CASE("exceedance probability matches a direct count") {
    auto ds = gaussian_dataset(50, 10, 19);
    const auto res = calibration::calibrate(ds, NoiseModel::gaussian(), 0.05, 0.1, 500, 20);
    const double lam = res.quantile * 0.4;
    const double p_hat = res.exceedance_probability(lam, 0.1);
    long count = 0;
    for (long i = 0; i < res.n_samples; ++i)
        count += (res.lambda_star_samples[i] * 0.9 > lam);
    CHECK(p_hat == double(count) / double(res.n_samples));
}
