#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace explasso::noise {

enum class Family { gaussian, subbotin, logistic, huber, gumbel };

// A log-concave noise family: the density f is known up to the scale
// parameter of the regression model, and l(y) = -log f(y) up to the
// additive constant l_const(), which is stored separately so that
// optimization code may work with l alone while calibration uses the
// exactly normalized -log f = l + l_const.
class NoiseModel {
public:
    static NoiseModel gaussian();
    static NoiseModel subbotin(double r);  // requires r >= 1
    static NoiseModel logistic();
    static NoiseModel huber();
    static NoiseModel gumbel();

    // Parses the CLI/config grammar: gaussian | subbotin:<r> | logistic |
    // huber | gumbel. Throws std::invalid_argument on anything else.
    static NoiseModel parse(const std::string& spec);

    Family family() const { return family_; }
    std::optional<double> shape() const;
    std::string name() const;  // canonical specifier string

    double l(double y) const;      // -log f(y) - l_const()
    double l_dot(double y) const;  // derivative of l; clamped value at Huber kinks
    bool has_l_ddot() const;
    double l_ddot(double y) const;
    double l_const() const { return l_const_; }
    bool has_closed_scale_step() const;

    // Vectorized evaluation without the per-call finite checks of the
    // scalar entry points; inputs are trusted internal values.
    void apply_l(const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Ref<Eigen::VectorXd> out) const;
    void apply_l_dot(const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Ref<Eigen::VectorXd> out) const;

    // i.i.d. draws from the normalized density exp[-(l + l_const)].
    Eigen::VectorXd sample(std::mt19937_64& rng, long count) const;
    void sample(std::mt19937_64& rng, Eigen::Ref<Eigen::VectorXd> out) const;

    // Equivalent representation with c moved from l into l_const; the
    // normalized density (and hence all distributional quantities) is
    // unchanged.
    NoiseModel with_constant_shift(double c) const;

    // Interior points where l is not twice differentiable (Huber +-1,
    // Subbotin r<2 at 0). Quadrature splits panels there.
    std::vector<double> kink_points() const;

private:
    NoiseModel(Family f, double shape, double l_const, double shift)
        : family_(f), shape_(shape), l_const_(l_const), shift_(shift) {}

    double l_raw(double y) const;  // family formula before shift

    Family family_;
    double shape_;    // Subbotin r; unused otherwise
    double l_const_;  // includes any representation shift
    double shift_;    // l() = l_raw() - shift_
};

// The 2x2 information matrix K(0,1) in the (scale, location)
// parametrization, ordered (scale-scale, scale-location, location-location):
//   scale    = E(l_dot(xi) xi)^2 - 1   (Fisher information for scale)
//   location = E(l_dot(xi))^2          (Fisher information for location)
//   cross    = E l_dot(xi)^2 xi        (zero for symmetric f)
// Its inverse is the asymptotic covariance of sqrt(n)*(sigma_hat - sigma*,
// intercept_hat - intercept*).
struct FisherInfo {
    double scale = 0;
    double cross = 0;
    double location = 0;

    Eigen::Matrix2d matrix() const;   // [[scale, cross], [cross, location]]
    Eigen::Matrix2d inverse() const;
    bool positive_definite() const;
};

enum class FisherMethod { analytic, quadrature };

// analytic is available for the Gaussian and Subbotin families (closed
// forms in the shape parameter); other families throw and should use
// quadrature over the normalized density.
FisherInfo fisher_info(const NoiseModel& model, FisherMethod method);

// Monte Carlo estimates of (E l_dot(xi), E l_dot(xi) xi) under the model's
// own sampler; a well-specified model returns (0, 1) up to MC error.
// Requires n_mc >= 10^4.
std::pair<double, double> normalization_check(const NoiseModel& model, long n_mc,
                                              std::uint64_t seed);

double neg_log_const(const NoiseModel& model);  // = model.l_const()

// Adaptive Gauss-Kronrod integral of g(y)*f(y) over the support, where f is
// the normalized density; panels split at the model's kink points.
// Throws explasso::numeric_error when the error estimate exceeds 1e-8.
double integrate_against_density(const NoiseModel& model,
                                 const std::function<double(double)>& g);

}  // namespace explasso::noise

namespace explasso {

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace explasso
