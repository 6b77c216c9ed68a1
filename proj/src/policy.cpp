#include "pacbandit/policy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "pacbandit/errors.hpp"
#include "pacbandit/numeric.hpp"

namespace pacbandit {

PolicyClass PolicyClass::finite_actions(std::size_t k) {
    if (k < 2) throw Error(ErrorKind::Domain, "policy class needs K >= 2");
    return PolicyClass(0, k);
}

PolicyClass PolicyClass::linear_softmax(std::size_t d, std::size_t k) {
    if (k < 2) throw Error(ErrorKind::Domain, "policy class needs K >= 2");
    if (d < 1) throw Error(ErrorKind::Domain, "linear softmax needs d >= 1");
    return PolicyClass(d, k);
}

void softmax_inplace(double* logits, std::size_t k) {
    double mx = -kInfinity;
    for (std::size_t a = 0; a < k; ++a) {
        if (!std::isfinite(logits[a])) throw Error(ErrorKind::Domain, "non-finite logit");
        mx = std::max(mx, logits[a]);
    }
    double total = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        logits[a] = std::exp(logits[a] - mx);
        total += logits[a];
    }
    for (std::size_t a = 0; a < k; ++a) logits[a] /= total;
}

void linear_logits(const WeightMatrix& theta, std::span<const double> s, double* out) {
    const auto d = static_cast<std::size_t>(theta.rows());
    const auto k = static_cast<std::size_t>(theta.cols());
    if (s.size() != d) throw Error(ErrorKind::DimensionMismatch, "state dimension does not match weights");
    for (std::size_t a = 0; a < k; ++a) {
        const double* col = theta.data() + a * d;
        double z = 0.0;
        for (std::size_t j = 0; j < d; ++j) z += s[j] * col[j];
        out[a] = z;
    }
}

CategoricalDistribution softmax_action_probs(const WeightMatrix& theta, const Eigen::VectorXd& s) {
    std::vector<double> p(static_cast<std::size_t>(theta.cols()));
    linear_logits(theta, std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), p.data());
    softmax_inplace(p.data(), p.size());
    return CategoricalDistribution(std::move(p));
}

double policy_prob(const PolicyClass& cls, const Policy& policy, std::size_t a, std::span<const double> s) {
    if (a >= cls.num_actions()) throw Error(ErrorKind::Domain, "action index out of range");
    if (cls.is_finite()) {
        const auto* idx = std::get_if<std::size_t>(&policy);
        if (!idx) throw Error(ErrorKind::Domain, "finite class expects an action-index policy");
        if (*idx >= cls.num_actions()) throw Error(ErrorKind::Domain, "policy index out of range");
        return *idx == a ? 1.0 : 0.0;
    }
    const auto* theta = std::get_if<WeightMatrix>(&policy);
    if (!theta) throw Error(ErrorKind::Domain, "linear softmax class expects a weight matrix");
    if (static_cast<std::size_t>(theta->rows()) != cls.state_dim() ||
        static_cast<std::size_t>(theta->cols()) != cls.num_actions())
        throw Error(ErrorKind::DimensionMismatch, "weight matrix shape does not match class");
    std::vector<double> p(cls.num_actions());
    linear_logits(*theta, s, p.data());
    softmax_inplace(p.data(), p.size());
    return p[a];
}

Eigen::VectorXd flatten(const WeightMatrix& theta) {
    return Eigen::Map<const Eigen::VectorXd>(theta.data(), theta.size());
}

WeightMatrix unflatten(const Eigen::VectorXd& v, std::size_t d, std::size_t k) {
    if (static_cast<std::size_t>(v.size()) != d * k)
        throw Error(ErrorKind::DimensionMismatch, "flattened weights have the wrong length");
    return Eigen::Map<const WeightMatrix>(v.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
}

Posterior Posterior::categorical(PolicyClass cls, CategoricalDistribution dist) {
    if (!cls.is_finite()) throw Error(ErrorKind::Domain, "categorical posterior needs a finite class");
    if (dist.size() != cls.num_actions())
        throw Error(ErrorKind::DimensionMismatch, "categorical posterior size does not match K");
    return Posterior(cls, std::move(dist));
}

Posterior Posterior::gaussian(PolicyClass cls, DiagonalGaussian dist) {
    if (cls.is_finite()) throw Error(ErrorKind::Domain, "gaussian posterior needs a linear softmax class");
    if (dist.dim() != cls.num_params())
        throw Error(ErrorKind::DimensionMismatch, "gaussian posterior dimension does not match d*K");
    return Posterior(cls, std::move(dist));
}

Posterior Posterior::point(PolicyClass cls, WeightMatrix theta) {
    if (cls.is_finite()) throw Error(ErrorKind::Domain, "point posterior needs a linear softmax class");
    if (static_cast<std::size_t>(theta.rows()) != cls.state_dim() ||
        static_cast<std::size_t>(theta.cols()) != cls.num_actions())
        throw Error(ErrorKind::DimensionMismatch, "point posterior shape does not match class");
    return Posterior(cls, Point{std::move(theta)});
}

const CategoricalDistribution& Posterior::categorical() const {
    if (!is_categorical()) throw Error(ErrorKind::Domain, "posterior is not categorical");
    return std::get<CategoricalDistribution>(dist_);
}

const DiagonalGaussian& Posterior::gaussian() const {
    if (!is_gaussian()) throw Error(ErrorKind::Domain, "posterior is not gaussian");
    return std::get<DiagonalGaussian>(dist_);
}

const WeightMatrix& Posterior::point_theta() const {
    if (!is_point()) throw Error(ErrorKind::Domain, "posterior is not a point mass");
    return std::get<Point>(dist_).theta;
}

std::vector<Policy> sample_policies(const Posterior& rho, std::size_t m, std::uint64_t seed) {
    if (m < 1) throw Error(ErrorKind::Domain, "need at least one policy sample");
    Rng rng(seed);
    std::vector<Policy> out;
    out.reserve(m);
    const auto& cls = rho.policy_class();
    if (rho.is_categorical()) {
        const auto& w = rho.categorical().weights();
        for (std::size_t i = 0; i < m; ++i) out.emplace_back(sample_index(w.data(), w.size(), rng));
    } else if (rho.is_gaussian()) {
        const auto& g = rho.gaussian();
        std::normal_distribution<double> z(0.0, 1.0);
        Eigen::VectorXd v(g.mean().size());
        for (std::size_t i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = g.mean()[j] + std::sqrt(g.variance()[j]) * z(rng);
            out.emplace_back(unflatten(v, cls.state_dim(), cls.num_actions()));
        }
    } else {
        for (std::size_t i = 0; i < m; ++i) out.emplace_back(rho.point_theta());
    }
    return out;
}

double posterior_kl(const Posterior& rho, const Posterior& mu) {
    if (!(rho.policy_class() == mu.policy_class()))
        throw Error(ErrorKind::DimensionMismatch, "posterior and prior classes differ");
    if (rho.is_categorical() && mu.is_categorical()) return kl_categorical(rho.categorical(), mu.categorical());
    if (rho.is_gaussian() && mu.is_gaussian()) return kl_diag_gaussian(rho.gaussian(), mu.gaussian());
    throw Error(ErrorKind::Domain, "KL needs posterior and prior of the same family");
}

BehaviourPolicy BehaviourPolicy::uniform(std::size_t k) {
    if (k < 1) throw Error(ErrorKind::Domain, "uniform behaviour needs K >= 1");
    return BehaviourPolicy(Uniform{k});
}

BehaviourPolicy BehaviourPolicy::categorical(CategoricalDistribution weights) {
    return BehaviourPolicy(Categorical{std::move(weights)});
}

BehaviourPolicy BehaviourPolicy::smoothed_softmax(WeightMatrix theta, double epsilon) {
    const double k = static_cast<double>(theta.cols());
    if (!(epsilon > 0.0 && epsilon <= 1.0 / k + 1e-15))
        throw Error(ErrorKind::Domain, "smoothing epsilon must lie in (0, 1/K]");
    return BehaviourPolicy(SmoothedSoftmax{std::move(theta), epsilon});
}

BehaviourPolicy BehaviourPolicy::from_propensities() { return BehaviourPolicy(FromPropensities{}); }

std::optional<double> BehaviourPolicy::floor() const {
    if (const auto* u = std::get_if<Uniform>(&v_)) return 1.0 / static_cast<double>(u->k);
    if (const auto* c = std::get_if<Categorical>(&v_)) {
        const auto& w = c->weights.weights();
        const double mn = *std::min_element(w.begin(), w.end());
        if (mn > 0.0) return mn;
        return std::nullopt;
    }
    if (const auto* s = std::get_if<SmoothedSoftmax>(&v_)) return s->epsilon;
    return std::nullopt;
}

std::size_t BehaviourPolicy::num_actions() const {
    if (const auto* u = std::get_if<Uniform>(&v_)) return u->k;
    if (const auto* c = std::get_if<Categorical>(&v_)) return c->weights.size();
    if (const auto* s = std::get_if<SmoothedSoftmax>(&v_)) return static_cast<std::size_t>(s->theta.cols());
    return 0;
}

void BehaviourPolicy::probs(std::span<const double> s, std::vector<double>& out) const {
    if (const auto* u = std::get_if<Uniform>(&v_)) {
        out.assign(u->k, 1.0 / static_cast<double>(u->k));
    } else if (const auto* c = std::get_if<Categorical>(&v_)) {
        out = c->weights.weights();
    } else if (const auto* sm = std::get_if<SmoothedSoftmax>(&v_)) {
        const std::size_t k = static_cast<std::size_t>(sm->theta.cols());
        out.resize(k);
        linear_logits(sm->theta, s, out.data());
        softmax_inplace(out.data(), k);
        const double mix = 1.0 - static_cast<double>(k) * sm->epsilon;
        for (double& p : out) p = mix * p + sm->epsilon;
    } else {
        throw Error(ErrorKind::NotSamplable, "behaviour known only through logged propensities");
    }
}

std::vector<double> BehaviourPolicy::probs(std::span<const double> s) const {
    std::vector<double> out;
    probs(s, out);
    return out;
}

double weight_bound(const BehaviourPolicy& behaviour, const PolicyClass& cls) {
    const auto fl = behaviour.floor();
    if (!fl) throw Error(ErrorKind::NoUniformBound, "behaviour has no positive probability floor");
    if (behaviour.num_actions() != cls.num_actions())
        throw Error(ErrorKind::DimensionMismatch, "behaviour and policy class disagree on K");
    // Both classes contain policies whose action probability approaches 1.
    return 1.0 / *fl;
}

}  // namespace pacbandit
