#include "pacbandit/core_math.hpp"

#include <cmath>
#include <string>

#include "pacbandit/errors.hpp"

namespace pacbandit {

namespace {

void require_probability(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0))
        throw Error(ErrorKind::Domain, std::string(name) + " must lie in [0,1], got " + std::to_string(x));
}

// x * ln(x / y) with 0 ln 0 = 0.
double xlogxy(double x, double y) {
    if (x == 0.0) return 0.0;
    if (y == 0.0) return kInfinity;
    return x * std::log(x / y);
}

}  // namespace

Confidence::Confidence(double delta) : delta_(delta) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw Error(ErrorKind::Domain, "delta must lie in (0,1], got " + std::to_string(delta));
}

double Confidence::log_inv() const { return -std::log(delta_); }

CategoricalDistribution::CategoricalDistribution(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw Error(ErrorKind::Domain, "categorical distribution needs at least one weight");
    double total = 0.0;
    for (double x : w_) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw Error(ErrorKind::Domain, "categorical weights must be finite and nonnegative");
        total += x;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance)
        throw Error(ErrorKind::Domain, "categorical weights sum to " + std::to_string(total));
    for (double& x : w_) x /= total;
}

CategoricalDistribution CategoricalDistribution::uniform(std::size_t k) {
    if (k == 0) throw Error(ErrorKind::Domain, "uniform distribution needs k >= 1");
    return CategoricalDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

CategoricalDistribution CategoricalDistribution::one_hot(std::size_t k, std::size_t index) {
    if (index >= k) throw Error(ErrorKind::Domain, "one-hot index out of range");
    std::vector<double> w(k, 0.0);
    w[index] = 1.0;
    return CategoricalDistribution(std::move(w));
}

CategoricalDistribution CategoricalDistribution::from_unnormalized(std::vector<double> weights) {
    double total = 0.0;
    for (double x : weights) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw Error(ErrorKind::Domain, "unnormalized weights must be finite and nonnegative");
        total += x;
    }
    if (!(total > 0.0)) throw Error(ErrorKind::Domain, "unnormalized weights have zero mass");
    for (double& x : weights) x /= total;
    return CategoricalDistribution(std::move(weights));
}

double CategoricalDistribution::entropy() const {
    double h = 0.0;
    for (double x : w_)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

DiagonalGaussian::DiagonalGaussian(Eigen::VectorXd mean, Eigen::VectorXd variance)
    : mean_(std::move(mean)), var_(std::move(variance)) {
    if (mean_.size() != var_.size())
        throw Error(ErrorKind::DimensionMismatch, "gaussian mean and variance sizes differ");
    for (Eigen::Index i = 0; i < var_.size(); ++i)
        if (!(var_[i] > 0.0) || !std::isfinite(var_[i]))
            throw Error(ErrorKind::Domain, "gaussian variance must be strictly positive");
}

DiagonalGaussian DiagonalGaussian::standard(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return DiagonalGaussian(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n));
}

double binary_kl(double p, double q) {
    require_probability(p, "p");
    require_probability(q, "q");
    if (p == q) return 0.0;
    return xlogxy(p, q) + xlogxy(1.0 - p, 1.0 - q);
}

double kl_inverse_lower(double p, double b) {
    require_probability(p, "p");
    if (!(b >= 0.0)) throw Error(ErrorKind::Domain, "kl budget must be nonnegative");
    if (p == 0.0 || b == 0.0) return p;
    if (std::isinf(b)) return 0.0;
    double lo = 0.0, hi = p;
    for (int it = 0; it < 100 && hi - lo >= 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (binary_kl(p, mid) <= b)
            hi = mid;
        else
            lo = mid;
    }

    // Bisection leaves an absolute error of 1e-12, which is a large relative
    // error when the root is tiny. Polish with Newton on t = ln q, where the
    // kl is close to linear near q = 0, keeping the iterate inside [lo, hi].
    const double t_min = std::log(std::numeric_limits<double>::denorm_min());
    const double t_lo = lo > 0.0 ? std::log(lo) : t_min;
    const double t_hi = std::log(hi);
    double t = t_hi;
    for (int it = 0; it < 60; ++it) {
        const double q = std::exp(t);
        const double g = binary_kl(p, q) - b;
        if (std::abs(g) <= 1e-15 * std::max(1.0, b)) break;
        const double slope = (q - p) / (1.0 - q);  // d kl / d ln q
        if (slope == 0.0) break;
        double next = t - g / slope;
        if (next < t_lo) next = 0.5 * (t + t_lo);
        if (next > t_hi) next = 0.5 * (t + t_hi);
        if (next == t) break;
        t = next;
    }
    double q = std::exp(t);
    if (q > hi) q = hi;
    // Guarantee kl(p||q) <= b by stepping toward p.
    for (int it = 0; it < 64 && q < p && binary_kl(p, q) > b; ++it) q = std::nextafter(q, p);
    if (binary_kl(p, q) > b) {
        // Geometric bisection; the root can sit hundreds of decades below hi.
        double a = q, c = hi;
        for (int it = 0; it < 200 && a < c && std::nextafter(a, c) < c; ++it) {
            double mid = a > 0.0 ? std::sqrt(a) * std::sqrt(c) : 0.5 * c;
            if (!(mid > a && mid < c)) mid = 0.5 * (a + c);
            if (binary_kl(p, mid) <= b)
                c = mid;
            else
                a = mid;
        }
        q = c;
    }
    return q;
}

KlInverseGradient kl_inverse_derivatives(double p, double b) {
    if (!(p > 0.0 && p < 1.0) || !(b > 0.0) || !std::isfinite(b))
        throw Error(ErrorKind::Boundary, "kl inverse derivatives need 0 < p < 1 and b > 0");
    const double q = kl_inverse_lower(p, b);
    if (!(q > 0.0)) throw Error(ErrorKind::Boundary, "kl inverse is zero; derivative undefined");
    const double dkl_dq = -p / q + (1.0 - p) / (1.0 - q);
    const double dkl_dp = std::log(p / q) - std::log((1.0 - p) / (1.0 - q));
    return {-dkl_dp / dkl_dq, 1.0 / dkl_dq};
}

double kl_categorical(const CategoricalDistribution& rho, const CategoricalDistribution& mu) {
    if (rho.size() != mu.size())
        throw Error(ErrorKind::DimensionMismatch, "categorical sizes differ");
    double kl = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double term = xlogxy(rho[i], mu[i]);
        if (std::isinf(term)) return kInfinity;
        kl += term;
    }
    return std::max(kl, 0.0);
}

double kl_diag_gaussian(const DiagonalGaussian& rho, const DiagonalGaussian& mu) {
    if (rho.dim() != mu.dim())
        throw Error(ErrorKind::DimensionMismatch, "gaussian dimensions differ");
    double kl = 0.0;
    for (std::size_t i = 0; i < rho.dim(); ++i) {
        const auto j = static_cast<Eigen::Index>(i);
        const double vr = rho.variance()[j], vm = mu.variance()[j];
        const double dm = rho.mean()[j] - mu.mean()[j];
        kl += std::log(vm / vr) + (vr + dm * dm) / vm - 1.0;
    }
    return std::max(0.5 * kl, 0.0);
}

}  // namespace pacbandit
