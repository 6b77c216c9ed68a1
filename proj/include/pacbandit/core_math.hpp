#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace pacbandit {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kSimplexTolerance = 1e-9;

// Failure probability of a high-probability statement, delta in (0, 1].
class Confidence {
public:
    explicit Confidence(double delta);
    double value() const { return delta_; }
    double log_inv() const;  // ln(1/delta)

private:
    double delta_;
};

class CategoricalDistribution {
public:
    CategoricalDistribution() = default;
    // Weights must be nonnegative and sum to 1 within kSimplexTolerance; they
    // are renormalized exactly on construction.
    explicit CategoricalDistribution(std::vector<double> weights);

    static CategoricalDistribution uniform(std::size_t k);
    static CategoricalDistribution one_hot(std::size_t k, std::size_t index);
    // Normalizes arbitrary nonnegative weights (at least one positive).
    static CategoricalDistribution from_unnormalized(std::vector<double> weights);

    std::size_t size() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    const std::vector<double>& weights() const { return w_; }
    double entropy() const;

private:
    std::vector<double> w_;
};

// Diagonal Gaussian over a flattened parameter vector (d x K weights are
// flattened column-major, one column per action).
class DiagonalGaussian {
public:
    DiagonalGaussian() = default;
    DiagonalGaussian(Eigen::VectorXd mean, Eigen::VectorXd variance);

    static DiagonalGaussian standard(std::size_t dim);

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::VectorXd& variance() const { return var_; }
    std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd var_;
};

// kl(p||q) between Bernoulli(p) and Bernoulli(q). Returns +infinity when q is
// 0 or 1 and p differs from it; finite inputs never overflow otherwise.
double binary_kl(double p, double q);

// min{q in [0,1] : kl(p||q) <= b}.
double kl_inverse_lower(double p, double b);

struct KlInverseGradient {
    double d_p;  // dq/dp
    double d_b;  // dq/db
};

// Implicit derivatives of q = kl_inverse_lower(p, b); interior points only.
KlInverseGradient kl_inverse_derivatives(double p, double b);

double kl_categorical(const CategoricalDistribution& rho, const CategoricalDistribution& mu);
double kl_diag_gaussian(const DiagonalGaussian& rho, const DiagonalGaussian& mu);

}  // namespace pacbandit
