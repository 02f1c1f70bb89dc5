#include "explasso/noise.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "explasso/rng.hpp"

namespace explasso::noise {

namespace {

constexpr double kPi = std::numbers::pi;

double log1pexp(double x) {
    // log(1 + e^x) without overflow
    if (x > 35.0) return x;
    return std::log1p(std::exp(x));
}

double standard_normal_cdf(double y) {
    return 0.5 * std::erfc(-y / std::numbers::sqrt2);
}

double standard_normal_quantile(double p) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

// Huber normalizing constant Z = sqrt(2*pi)*(2*Phi(1)-1) + 2*e^{-1/2}.
double huber_partition() {
    const double middle = std::sqrt(2.0 * kPi) * (2.0 * standard_normal_cdf(1.0) - 1.0);
    return middle + 2.0 * std::exp(-0.5);
}

void require_finite(double y) {
    if (!std::isfinite(y)) throw std::domain_error("noise model: non-finite input");
}

}  // namespace

NoiseModel NoiseModel::gaussian() {
    return NoiseModel(Family::gaussian, 0.0, 0.5 * std::log(2.0 * kPi), 0.0);
}

NoiseModel NoiseModel::subbotin(double r) {
    if (!(r >= 1.0) || !std::isfinite(r))
        throw std::invalid_argument("subbotin shape must satisfy r >= 1 (convex -log f)");
    // Normalized density r^{1-1/r} / (2*Gamma(1/r)) * exp(-|y|^r / r), so
    // l_const = log(2*Gamma(1/r)) + (1/r - 1)*log(r); at r=2 this is
    // log(sqrt(2*pi)), the Gaussian constant.
    const double c = std::log(2.0) + std::lgamma(1.0 / r) + (1.0 / r - 1.0) * std::log(r);
    return NoiseModel(Family::subbotin, r, c, 0.0);
}

NoiseModel NoiseModel::logistic() { return NoiseModel(Family::logistic, 0.0, 0.0, 0.0); }

NoiseModel NoiseModel::huber() {
    return NoiseModel(Family::huber, 0.0, std::log(huber_partition()), 0.0);
}

NoiseModel NoiseModel::gumbel() { return NoiseModel(Family::gumbel, 0.0, 0.0, 0.0); }

NoiseModel NoiseModel::parse(const std::string& spec) {
    if (spec == "gaussian") return gaussian();
    if (spec == "logistic") return logistic();
    if (spec == "huber") return huber();
    if (spec == "gumbel") return gumbel();
    const std::string prefix = "subbotin:";
    if (spec.rfind(prefix, 0) == 0) {
        const std::string arg = spec.substr(prefix.size());
        std::size_t pos = 0;
        double r = 0;
        try {
            r = std::stod(arg, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("invalid subbotin shape: '" + arg + "'");
        }
        if (pos != arg.size())
            throw std::invalid_argument("invalid subbotin shape: '" + arg + "'");
        return subbotin(r);
    }
    throw std::invalid_argument(
        "unknown noise model '" + spec +
        "' (expected gaussian | subbotin:<r> | logistic | huber | gumbel)");
}

std::optional<double> NoiseModel::shape() const {
    if (family_ == Family::subbotin) return shape_;
    return std::nullopt;
}

std::string NoiseModel::name() const {
    switch (family_) {
        case Family::gaussian: return "gaussian";
        case Family::logistic: return "logistic";
        case Family::huber: return "huber";
        case Family::gumbel: return "gumbel";
        case Family::subbotin: {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "subbotin:%g", shape_);
            return buf;
        }
    }
    return "?";
}

double NoiseModel::l_raw(double y) const {
    switch (family_) {
        case Family::gaussian:
            return 0.5 * y * y;
        case Family::subbotin:
            return std::pow(std::abs(y), shape_) / shape_;
        case Family::logistic:
            // y + 2*log(1+e^{-y}), evaluated stably on both sides
            return y >= 0 ? y + 2.0 * log1pexp(-y) : -y + 2.0 * log1pexp(y);
        case Family::huber: {
            const double a = std::abs(y);
            return a <= 1.0 ? 0.5 * y * y : a - 0.5;
        }
        case Family::gumbel:
            return y + std::exp(-y);
    }
    return 0;
}

double NoiseModel::l(double y) const {
    require_finite(y);
    return l_raw(y) - shift_;
}

double NoiseModel::l_dot(double y) const {
    require_finite(y);
    switch (family_) {
        case Family::gaussian:
            return y;
        case Family::subbotin: {
            if (y == 0.0) return 0.0;  // subgradient midpoint at the r=1 kink
            const double mag = std::pow(std::abs(y), shape_ - 1.0);
            return y > 0 ? mag : -mag;
        }
        case Family::logistic:
            return std::tanh(0.5 * y);
        case Family::huber:
            return std::clamp(y, -1.0, 1.0);
        case Family::gumbel:
            return 1.0 - std::exp(-y);
    }
    return 0;
}

bool NoiseModel::has_l_ddot() const {
    switch (family_) {
        case Family::gaussian:
        case Family::logistic:
        case Family::gumbel:
            return true;
        case Family::subbotin:
            return shape_ >= 2.0;
        case Family::huber:
            return false;
    }
    return false;
}

double NoiseModel::l_ddot(double y) const {
    require_finite(y);
    switch (family_) {
        case Family::gaussian:
            return 1.0;
        case Family::subbotin:
            if (!has_l_ddot()) throw std::domain_error("subbotin r<2 has no global l_ddot");
            return shape_ == 2.0 ? 1.0 : (shape_ - 1.0) * std::pow(std::abs(y), shape_ - 2.0);
        case Family::logistic: {
            const double c = std::cosh(0.5 * y);
            return 0.5 / (c * c);
        }
        case Family::gumbel:
            return std::exp(-y);
        case Family::huber:
            throw std::domain_error("huber l_ddot undefined at the kinks");
    }
    return 0;
}

bool NoiseModel::has_closed_scale_step() const {
    return family_ == Family::subbotin || family_ == Family::gaussian;
}

void NoiseModel::apply_l(const Eigen::Ref<const Eigen::VectorXd>& y,
                         Eigen::Ref<Eigen::VectorXd> out) const {
    const long n = y.size();
    switch (family_) {
        case Family::gaussian:
            out = 0.5 * y.array().square();
            break;
        case Family::subbotin:
            out = y.array().abs().pow(shape_) / shape_;
            break;
        case Family::logistic:
            for (long i = 0; i < n; ++i) {
                const double v = y[i];
                out[i] = v >= 0 ? v + 2.0 * log1pexp(-v) : -v + 2.0 * log1pexp(v);
            }
            break;
        case Family::huber:
            for (long i = 0; i < n; ++i) {
                const double a = std::abs(y[i]);
                out[i] = a <= 1.0 ? 0.5 * a * a : a - 0.5;
            }
            break;
        case Family::gumbel:
            out = y.array() + (-y.array()).exp();
            break;
    }
    if (shift_ != 0.0) out.array() -= shift_;
}

void NoiseModel::apply_l_dot(const Eigen::Ref<const Eigen::VectorXd>& y,
                             Eigen::Ref<Eigen::VectorXd> out) const {
    const long n = y.size();
    switch (family_) {
        case Family::gaussian:
            out = y;
            break;
        case Family::subbotin:
            for (long i = 0; i < n; ++i) {
                const double v = y[i];
                if (v == 0.0) {
                    out[i] = 0.0;
                } else {
                    const double mag = std::pow(std::abs(v), shape_ - 1.0);
                    out[i] = v > 0 ? mag : -mag;
                }
            }
            break;
        case Family::logistic:
            out = (0.5 * y.array()).tanh();
            break;
        case Family::huber:
            out = y.array().min(1.0).max(-1.0);
            break;
        case Family::gumbel:
            out = 1.0 - (-y.array()).exp();
            break;
    }
}

Eigen::VectorXd NoiseModel::sample(std::mt19937_64& rng, long count) const {
    if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
    Eigen::VectorXd out(count);
    sample(rng, out);
    return out;
}

void NoiseModel::sample(std::mt19937_64& rng, Eigen::Ref<Eigen::VectorXd> out) const {
    const long n = out.size();
    switch (family_) {
        case Family::gaussian: {
            std::normal_distribution<double> dist(0.0, 1.0);
            for (long i = 0; i < n; ++i) out[i] = dist(rng);
            break;
        }
        case Family::subbotin: {
            // |xi| = (r*G)^{1/r} with G ~ Gamma(1/r, 1); random sign.
            std::gamma_distribution<double> gamma(1.0 / shape_, 1.0);
            std::uniform_int_distribution<int> coin(0, 1);
            for (long i = 0; i < n; ++i) {
                const double mag = std::pow(shape_ * gamma(rng), 1.0 / shape_);
                out[i] = coin(rng) ? mag : -mag;
            }
            break;
        }
        case Family::logistic: {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            for (long i = 0; i < n; ++i) {
                double u;
                do { u = unif(rng); } while (u <= 0.0 || u >= 1.0);
                out[i] = std::log(u / (1.0 - u));
            }
            break;
        }
        case Family::huber: {
            // Piecewise inverse CDF: exponential tails beyond |y|=1,
            // truncated-normal middle, masses from the partition function.
            const double z = huber_partition();
            const double tail_mass = std::exp(-0.5) / z;
            const double sqrt2pi = std::sqrt(2.0 * kPi);
            const double phi_m1 = standard_normal_cdf(-1.0);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            for (long i = 0; i < n; ++i) {
                double u;
                do { u = unif(rng); } while (u <= 0.0 || u >= 1.0);
                if (u < tail_mass) {
                    out[i] = std::log(u * z) - 0.5;
                } else if (u > 1.0 - tail_mass) {
                    out[i] = 0.5 - std::log((1.0 - u) * z);
                } else {
                    const double p = phi_m1 + (u - tail_mass) * z / sqrt2pi;
                    out[i] = standard_normal_quantile(p);
                }
            }
            break;
        }
        case Family::gumbel: {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            for (long i = 0; i < n; ++i) {
                double u;
                do { u = unif(rng); } while (u <= 0.0 || u >= 1.0);
                out[i] = -std::log(-std::log(u));
            }
            break;
        }
    }
}

NoiseModel NoiseModel::with_constant_shift(double c) const {
    if (!std::isfinite(c)) throw std::domain_error("constant shift must be finite");
    NoiseModel m(*this);
    m.shift_ += c;
    m.l_const_ += c;
    return m;
}

std::vector<double> NoiseModel::kink_points() const {
    switch (family_) {
        case Family::huber:
            return {-1.0, 1.0};
        case Family::subbotin:
            return shape_ < 2.0 ? std::vector<double>{0.0} : std::vector<double>{};
        default:
            return {};
    }
}

Eigen::Matrix2d FisherInfo::matrix() const {
    Eigen::Matrix2d m;
    m << scale, cross, cross, location;
    return m;
}

Eigen::Matrix2d FisherInfo::inverse() const {
    const double det = scale * location - cross * cross;
    if (det <= 0) throw numeric_error("fisher information matrix is not positive definite");
    Eigen::Matrix2d m;
    m << location / det, -cross / det, -cross / det, scale / det;
    return m;
}

bool FisherInfo::positive_definite() const {
    return scale > 0 && location > 0 && scale * location - cross * cross > 0;
}

double integrate_against_density(const NoiseModel& model,
                                 const std::function<double(double)>& g) {
    // All five families have at-worst exponential tails on at least one
    // side; [-40, 40] leaves a remainder below 1e-10 even against
    // polynomial weights up to degree 4.
    const double lo = -40.0, hi = 40.0;
    std::vector<double> cuts{lo};
    for (double k : model.kink_points()) cuts.push_back(k);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());

    const double c = model.l_const();
    auto integrand = [&](double y) { return g(y) * std::exp(-(model.l(y) + c)); };

    double total = 0.0, err_total = 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double err = 0.0;
        // depth 30 lets endpoint cusps like |y|^{r-1} refine far enough;
        // smooth integrands terminate much earlier
        total += GK::integrate(integrand, cuts[i], cuts[i + 1], 30, 1e-10, &err);
        err_total += err;
    }
    if (!std::isfinite(total) || err_total > 1e-8) {
        throw numeric_error("quadrature did not converge for model " + model.name() +
                            " (error estimate " + std::to_string(err_total) + ")");
    }
    return total;
}

FisherInfo fisher_info(const NoiseModel& model, FisherMethod method) {
    if (method == FisherMethod::analytic) {
        switch (model.family()) {
            case Family::gaussian: {
                return FisherInfo{2.0, 0.0, 1.0};
            }
            case Family::subbotin: {
                const double r = *model.shape();
                // E|xi|^k = r^{k/r} Gamma((k+1)/r) / Gamma(1/r); the scale
                // entry E|xi|^{2r} - 1 collapses to r.
                const double location =
                    std::pow(r, 2.0 - 2.0 / r) *
                    std::exp(std::lgamma(2.0 - 1.0 / r) - std::lgamma(1.0 / r));
                return FisherInfo{r, 0.0, location};
            }
            default:
                throw std::invalid_argument("no analytic Fisher information for " +
                                            model.name() + "; use quadrature");
        }
    }
    FisherInfo info;
    info.location = integrate_against_density(
        model, [&](double y) { const double d = model.l_dot(y); return d * d; });
    info.scale = integrate_against_density(
        model, [&](double y) { const double d = model.l_dot(y) * y; return d * d; }) - 1.0;
    info.cross = integrate_against_density(
        model, [&](double y) { const double d = model.l_dot(y); return d * d * y; });
    if (!info.positive_definite())
        throw numeric_error("computed Fisher information is not positive definite for " +
                            model.name());
    return info;
}

std::pair<double, double> normalization_check(const NoiseModel& model, long n_mc,
                                              std::uint64_t seed) {
    if (n_mc < 10000) throw std::invalid_argument("normalization_check: n_mc must be >= 10^4");
    auto rng = make_engine(seed);
    const long block = 1 << 16;
    Eigen::VectorXd xi(block), d(block);
    double sum_score = 0.0, sum_score_xi = 0.0;
    long done = 0;
    while (done < n_mc) {
        const long m = std::min(block, n_mc - done);
        auto head = xi.head(m);
        model.sample(rng, head);
        model.apply_l_dot(head, d.head(m));
        sum_score += d.head(m).sum();
        sum_score_xi += d.head(m).dot(head);
        done += m;
    }
    return {sum_score / double(n_mc), sum_score_xi / double(n_mc)};
}

double neg_log_const(const NoiseModel& model) { return model.l_const(); }

}  // namespace explasso::noise
