#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pacbandit/core_math.hpp"

namespace pacbandit {

// d x K weights; column a holds the coefficients of action a.
using WeightMatrix = Eigen::MatrixXd;
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class PolicyClass {
public:
    static PolicyClass finite_actions(std::size_t k);
    static PolicyClass linear_softmax(std::size_t d, std::size_t k);

    bool is_finite() const { return d_ == 0; }
    std::size_t num_actions() const { return k_; }
    std::size_t state_dim() const { return d_; }
    // K for finite classes (one policy per action), d*K for linear softmax.
    std::size_t num_params() const { return is_finite() ? k_ : d_ * k_; }

    bool operator==(const PolicyClass&) const = default;

private:
    PolicyClass(std::size_t d, std::size_t k) : d_(d), k_(k) {}
    std::size_t d_ = 0;
    std::size_t k_ = 0;
};

// An action index for FiniteActions, a weight matrix for LinearSoftmax.
using Policy = std::variant<std::size_t, WeightMatrix>;

CategoricalDistribution softmax_action_probs(const WeightMatrix& theta, const Eigen::VectorXd& s);

// In-place max-subtracted softmax over k logits.
void softmax_inplace(double* logits, std::size_t k);

// logits = s^T theta written to out (size K).
void linear_logits(const WeightMatrix& theta, std::span<const double> s, double* out);

double policy_prob(const PolicyClass& cls, const Policy& policy, std::size_t a,
                   std::span<const double> s = {});

Eigen::VectorXd flatten(const WeightMatrix& theta);
WeightMatrix unflatten(const Eigen::VectorXd& v, std::size_t d, std::size_t k);

class Posterior {
public:
    struct Point {
        WeightMatrix theta;
    };

    static Posterior categorical(PolicyClass cls, CategoricalDistribution dist);
    static Posterior gaussian(PolicyClass cls, DiagonalGaussian dist);
    // Point mass on one weight matrix (deterministic baselines such as TL2).
    static Posterior point(PolicyClass cls, WeightMatrix theta);

    const PolicyClass& policy_class() const { return cls_; }
    bool is_categorical() const { return std::holds_alternative<CategoricalDistribution>(dist_); }
    bool is_gaussian() const { return std::holds_alternative<DiagonalGaussian>(dist_); }
    bool is_point() const { return std::holds_alternative<Point>(dist_); }
    const CategoricalDistribution& categorical() const;
    const DiagonalGaussian& gaussian() const;
    const WeightMatrix& point_theta() const;

private:
    Posterior(PolicyClass cls, std::variant<CategoricalDistribution, DiagonalGaussian, Point> dist)
        : cls_(cls), dist_(std::move(dist)) {}
    PolicyClass cls_;
    std::variant<CategoricalDistribution, DiagonalGaussian, Point> dist_;
};

std::vector<Policy> sample_policies(const Posterior& rho, std::size_t m, std::uint64_t seed);

// KL between two posteriors of the same family and class. Point masses have
// no finite KL to anything but themselves and are rejected.
double posterior_kl(const Posterior& rho, const Posterior& mu);

class BehaviourPolicy {
public:
    struct Uniform {
        std::size_t k;
    };
    struct Categorical {
        CategoricalDistribution weights;
    };
    struct SmoothedSoftmax {
        WeightMatrix theta;
        double epsilon;
    };
    struct FromPropensities {};

    static BehaviourPolicy uniform(std::size_t k);
    static BehaviourPolicy categorical(CategoricalDistribution weights);
    // (1 - K eps) softmax(s^T theta) + eps.
    static BehaviourPolicy smoothed_softmax(WeightMatrix theta, double epsilon);
    static BehaviourPolicy from_propensities();

    bool samplable() const { return !std::holds_alternative<FromPropensities>(v_); }
    // Guaranteed minimum action probability, if one exists.
    std::optional<double> floor() const;
    std::size_t num_actions() const;
    // Action probabilities at state s (ignored for non-contextual variants).
    void probs(std::span<const double> s, std::vector<double>& out) const;
    std::vector<double> probs(std::span<const double> s = {}) const;

    const std::variant<Uniform, Categorical, SmoothedSoftmax, FromPropensities>& variant() const { return v_; }

private:
    explicit BehaviourPolicy(std::variant<Uniform, Categorical, SmoothedSoftmax, FromPropensities> v)
        : v_(std::move(v)) {}
    std::variant<Uniform, Categorical, SmoothedSoftmax, FromPropensities> v_;
};

// 1/eps_n: sup over actions of (max policy prob) / (min behaviour prob).
double weight_bound(const BehaviourPolicy& behaviour, const PolicyClass& cls);

}  // namespace pacbandit
