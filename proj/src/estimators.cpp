#include "pacbandit/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pacbandit/errors.hpp"
#include "pacbandit/numeric.hpp"

namespace pacbandit {

EstimatorKind EstimatorKind::cis(double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorKind::Domain, "tau must lie in (0,1]");
    return {Type::CIS, tau};
}

std::string EstimatorKind::name() const {
    switch (type) {
        case Type::IS: return "IS";
        case Type::CIS: return "CIS";
        case Type::WIS: return "WIS";
    }
    return "?";
}

namespace {

// Row-wise softmax of X theta: n x K probabilities.
Eigen::MatrixXd softmax_rows(const WeightMatrix& theta, const StateMatrix& x) {
    Eigen::MatrixXd logits = x * theta;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        if (!std::isfinite(mx)) throw Error(ErrorKind::Domain, "non-finite logit");
        logits.row(i) = (logits.row(i).array() - mx).exp();
        logits.row(i) /= logits.row(i).sum();
    }
    return logits;
}

// Full per-record action probability table of a policy: n x K.
Eigen::MatrixXd policy_table(const Policy& policy, const LoggedDataset& d) {
    const auto n = static_cast<Eigen::Index>(d.size());
    const auto k = static_cast<Eigen::Index>(d.num_actions());
    if (const auto* a = std::get_if<std::size_t>(&policy)) {
        if (static_cast<Eigen::Index>(*a) >= k) throw Error(ErrorKind::Domain, "policy action out of range");
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, k);
        t.col(static_cast<Eigen::Index>(*a)).setOnes();
        return t;
    }
    const auto& theta = std::get<WeightMatrix>(policy);
    if (static_cast<std::size_t>(theta.rows()) != d.state_dim() || theta.cols() != k)
        throw Error(ErrorKind::DimensionMismatch, "policy weights do not match dataset shape");
    return softmax_rows(theta, d.states());
}

double mean_of(const std::vector<double>& x) {
    KahanSum s;
    for (double v : x) s.add(v);
    return s.value() / static_cast<double>(x.size());
}

}  // namespace

std::vector<double> logged_action_probs(const Policy& policy, const LoggedDataset& d) {
    std::vector<double> out(d.size());
    if (const auto* a = std::get_if<std::size_t>(&policy)) {
        if (*a >= d.num_actions()) throw Error(ErrorKind::Domain, "policy action out of range");
        for (std::size_t i = 0; i < d.size(); ++i) out[i] = d.action(i) == *a ? 1.0 : 0.0;
        return out;
    }
    const auto& theta = std::get<WeightMatrix>(policy);
    if (static_cast<std::size_t>(theta.rows()) != d.state_dim() ||
        static_cast<std::size_t>(theta.cols()) != d.num_actions())
        throw Error(ErrorKind::DimensionMismatch, "policy weights do not match dataset shape");
    const auto probs = softmax_rows(theta, d.states());
    for (std::size_t i = 0; i < d.size(); ++i)
        out[i] = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d.action(i)));
    return out;
}

std::vector<double> importance_weights(const Policy& policy, const LoggedDataset& d) {
    auto w = logged_action_probs(policy, d);
    for (std::size_t i = 0; i < d.size(); ++i) w[i] /= d.propensity(i);
    return w;
}

namespace {

double is_from_weights(const std::vector<double>& w, const LoggedDataset& d) {
    KahanSum s;
    for (std::size_t i = 0; i < w.size(); ++i) s.add(w[i] * d.reward(i));
    return s.value() / static_cast<double>(w.size());
}

double cis_from_weights(const std::vector<double>& w, const LoggedDataset& d, double tau) {
    const double cap = 1.0 / tau;
    KahanSum s;
    for (std::size_t i = 0; i < w.size(); ++i) s.add(std::min(w[i], cap) * d.reward(i));
    return s.value() / static_cast<double>(w.size());
}

double wis_from_weights(const std::vector<double>& w, const LoggedDataset& d) {
    KahanSum num, den;
    for (std::size_t i = 0; i < w.size(); ++i) {
        num.add(w[i] * d.reward(i));
        den.add(w[i]);
    }
    if (!(den.value() > 0.0)) throw Error(ErrorKind::UndefinedEstimate, "all importance weights are zero");
    return std::clamp(num.value() / den.value(), 0.0, 1.0);
}

double from_weights(const EstimatorKind& kind, const std::vector<double>& w, const LoggedDataset& d) {
    switch (kind.type) {
        case EstimatorKind::Type::IS: return is_from_weights(w, d);
        case EstimatorKind::Type::CIS: return cis_from_weights(w, d, kind.tau);
        case EstimatorKind::Type::WIS: return wis_from_weights(w, d);
    }
    return 0.0;
}

}  // namespace

double is_reward(const Policy& policy, const LoggedDataset& d) {
    return is_from_weights(importance_weights(policy, d), d);
}

double cis_reward(const Policy& policy, const LoggedDataset& d, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorKind::Domain, "tau must lie in (0,1]");
    return cis_from_weights(importance_weights(policy, d), d, tau);
}

double wis_reward(const Policy& policy, const LoggedDataset& d) {
    return wis_from_weights(importance_weights(policy, d), d);
}

double estimate(const EstimatorKind& kind, const Policy& policy, const LoggedDataset& d) {
    return from_weights(kind, importance_weights(policy, d), d);
}

std::vector<double> per_action_estimates(const EstimatorKind& kind, const LoggedDataset& d, std::size_t k) {
    if (d.contextual()) throw Error(ErrorKind::Domain, "per-action estimates need non-contextual data");
    if (k < d.num_actions()) throw Error(ErrorKind::Domain, "K smaller than the logged action range");
    std::vector<KahanSum> num(k), den(k);
    const double cap = kind.type == EstimatorKind::Type::CIS ? 1.0 / kind.tau : kInfinity;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double w = 1.0 / d.propensity(i);
        num[d.action(i)].add(std::min(w, cap) * d.reward(i));
        den[d.action(i)].add(w);
    }
    std::vector<double> out(k);
    const double n = static_cast<double>(d.size());
    for (std::size_t a = 0; a < k; ++a) {
        if (kind.type == EstimatorKind::Type::WIS) {
            out[a] = den[a].value() > 0.0 ? std::clamp(num[a].value() / den[a].value(), 0.0, 1.0)
                                          : std::numeric_limits<double>::quiet_NaN();
        } else {
            out[a] = num[a].value() / n;
        }
    }
    return out;
}

double posterior_estimate(const EstimatorKind& kind, const Posterior& rho, const LoggedDataset& d,
                          std::size_t mc_samples, std::uint64_t seed) {
    if (rho.is_categorical()) {
        const auto& w = rho.categorical();
        const auto est = per_action_estimates(kind, d, w.size());
        KahanSum s;
        for (std::size_t a = 0; a < w.size(); ++a) {
            if (w[a] == 0.0) continue;
            if (std::isnan(est[a]))
                throw Error(ErrorKind::UndefinedEstimate, "WIS undefined for never-logged action " + std::to_string(a));
            s.add(w[a] * est[a]);
        }
        return s.value();
    }
    if (rho.is_point()) return estimate(kind, Policy(rho.point_theta()), d);
    if (mc_samples < 1) throw Error(ErrorKind::Domain, "gaussian posterior needs mc_samples >= 1");
    const auto samples = sample_policies(rho, mc_samples, seed);
    KahanSum s;
    for (const auto& p : samples) s.add(estimate(kind, p, d));
    return s.value() / static_cast<double>(mc_samples);
}

double is_regret(std::size_t a, std::size_t a_star, const LoggedDataset& d) {
    if (a >= d.num_actions() || a_star >= d.num_actions()) throw Error(ErrorKind::Domain, "action out of range");
    return is_reward(Policy(a_star), d) - is_reward(Policy(a), d);
}

double cis_variance_upper(double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorKind::Domain, "tau must lie in (0,1]");
    return 1.0 / tau;
}

double cis_sample_variance(const Policy& policy, const LoggedDataset& d, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorKind::Domain, "tau must lie in (0,1]");
    if (d.size() < 2) throw Error(ErrorKind::Domain, "sample variance needs n >= 2");
    const auto w = importance_weights(policy, d);
    std::vector<double> x(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) x[i] = std::min(w[i], 1.0 / tau) * d.reward(i);
    const double mean = mean_of(x);
    KahanSum s;
    for (double v : x) s.add((v - mean) * (v - mean));
    return s.value() / static_cast<double>(d.size() - 1);
}

std::vector<double> wis_variance_proxy_many(std::span<const Policy> policies, const LoggedDataset& d,
                                            const BehaviourPolicy& behaviour, std::size_t m, std::uint64_t seed) {
    if (!behaviour.samplable()) throw Error(ErrorKind::NotSamplable, "ghost samples need a samplable behaviour");
    if (m < 1) throw Error(ErrorKind::Domain, "need m >= 1 ghost draws");
    const std::size_t n = d.size();
    const std::size_t k = d.num_actions();
    if (behaviour.num_actions() != k) throw Error(ErrorKind::DimensionMismatch, "behaviour K differs from data");
    const std::size_t np = policies.size();

    std::vector<double> cdf(n * k), bprob(n * k);
    std::vector<double> bp;
    for (std::size_t i = 0; i < n; ++i) {
        behaviour.probs(d.state(i), bp);
        double c = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
            bprob[i * k + a] = bp[a];
            cdf[i * k + a] = (c += bp[a]);
        }
        cdf[i * k + k - 1] = kInfinity;
    }
    // ratio[(p*n + i)*k + a] = pi_p(a|s_i) / b(a|s_i); logged[p*n + i] uses the
    // recorded propensity.
    std::vector<double> ratio(np * n * k), logged(np * n);
    for (std::size_t p = 0; p < np; ++p) {
        const auto tab = policy_table(policies[p], d);
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            for (std::size_t a = 0; a < k; ++a)
                ratio[(p * n + i) * k + a] = tab(r, static_cast<Eigen::Index>(a)) / bprob[i * k + a];
            logged[p * n + i] = tab(r, static_cast<Eigen::Index>(d.action(i))) / d.propensity(i);
        }
    }

    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw = [&](std::size_t i) {
        const double u = unif(rng);
        const double* c = cdf.data() + i * k;
        std::size_t a = 0;
        while (u >= c[a]) ++a;
        return a;
    };

    std::vector<std::size_t> redraw(n), ghost(n);
    std::vector<double> suffix(n);
    std::vector<KahanSum> acc(np);
    for (std::size_t rep = 0; rep < m; ++rep) {
        for (std::size_t j = 0; j < n; ++j) redraw[j] = draw(j);
        for (std::size_t i = 0; i < n; ++i) ghost[i] = draw(i);
        for (std::size_t p = 0; p < np; ++p) {
            const double* rt = ratio.data() + p * n * k;
            const double* lw = logged.data() + p * n;
            double s = 0.0;
            for (std::size_t i = n; i-- > 0;) {
                suffix[i] = s;
                s += rt[i * k + redraw[i]];
            }
            double prefix = 0.0;  // sum_{j<i} w_j
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double wi = lw[i];
                const double den_w = prefix + wi + suffix[i];
                const double w_hat = den_w > 0.0 ? wi / den_w : 0.0;
                const double wg = rt[i * k + ghost[i]];
                const double den_u = wg + prefix + suffix[i];
                const double u_hat = den_u > 0.0 ? wg / den_u : 0.0;
                total += w_hat * w_hat + u_hat * u_hat;
                prefix += wi;
            }
            acc[p].add(total);
        }
    }
    std::vector<double> out(np);
    for (std::size_t p = 0; p < np; ++p) out[p] = acc[p].value() / static_cast<double>(m);
    return out;
}

VarianceReport wis_variance_proxy(const Policy& policy, const LoggedDataset& d, const BehaviourPolicy& behaviour,
                                  std::size_t m, std::uint64_t seed) {
    const auto v = wis_variance_proxy_many(std::span<const Policy>(&policy, 1), d, behaviour, m, seed);
    return {VarianceReport::Kind::WisProxyEstimate, v[0], m};
}

}  // namespace pacbandit
