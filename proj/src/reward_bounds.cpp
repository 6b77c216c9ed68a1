#include "pacbandit/reward_bounds.hpp"

#include <algorithm>
#include <cmath>

#include "pacbandit/core_math.hpp"
#include "pacbandit/errors.hpp"
#include "pacbandit/numeric.hpp"

namespace pacbandit {

namespace {

void require_iid(const LoggedDataset& d, const char* bound) {
    if (!d.iid()) throw Error(ErrorKind::NonIid, std::string(bound) + " needs a single fixed behaviour policy");
}

void base_terms(BoundReport& r, double est) {
    r.terms["empirical_estimate"] = est;
    r.terms["variance_term"] = 0.0;
    r.terms["kl_term"] = 0.0;
    r.terms["confidence_term"] = 0.0;
    r.terms["bias_flag"] = 0.0;
}

// Lower-bound values never exceed their estimate; catches sign slips early.
void check_lower(const BoundReport& r) {
    const double est = r.term("empirical_estimate");
    if (r.value > est + 1e-9 * std::max(1.0, std::abs(est)))
        throw Error(ErrorKind::Domain, r.bound_id + " exceeds its empirical estimate");
}

double log_2sqrtn_over_delta(double n, double delta) { return std::log(2.0 * std::sqrt(n) / delta); }

struct Stats {
    double r_hat;
    double kl;
    double n;
    double kappa;
};

Stats gather(const EstimatorKind& kind, const Posterior& rho, const Posterior& mu, const LoggedDataset& d,
             const EvalOptions& opts) {
    if (kind.type == EstimatorKind::Type::WIS)
        throw Error(ErrorKind::Domain, "this bound takes IS or CIS estimates");
    return {posterior_estimate(kind, rho, d, opts.mc_samples, opts.seed), posterior_kl(rho, mu),
            static_cast<double>(d.size()), estimator_kappa(kind, d)};
}

void stamp(BoundReport& r, const EstimatorKind& kind, const LoggedDataset& d) {
    r.params.estimator = kind.name();
    if (kind.type == EstimatorKind::Type::CIS) r.params.tau = kind.tau;
    r.params.extra["n"] = static_cast<double>(d.size());
}

}  // namespace

VarianceMode VarianceMode::supplied(double v) {
    if (!(v >= 0.0)) throw Error(ErrorKind::Domain, "supplied variance must be nonnegative");
    return {false, v};
}

double unified_bound(double b2_mean, double kl, double lambda, double delta) {
    if (!(lambda > 0.0)) throw Error(ErrorKind::Domain, "lambda must be positive");
    if (!(b2_mean >= 0.0)) throw Error(ErrorKind::Domain, "b2 mean must be nonnegative");
    return 0.5 * lambda * b2_mean + (kl + Confidence(delta).log_inv()) / lambda;
}

double default_ha_lambda(double n, double kappa, double delta) {
    const double l = std::sqrt(8.0 * n * kappa * kappa * Confidence(delta).log_inv());
    if (!(l > 0.0)) throw Error(ErrorKind::Domain, "default lambda undefined at delta = 1");
    return l;
}

double default_bernstein_lambda(double n, double kappa, double delta) {
    const double l = std::sqrt(n * kappa * Confidence(delta).log_inv() / kEMinus2);
    if (!(l > 0.0)) throw Error(ErrorKind::Domain, "default lambda undefined at delta = 1");
    return std::min(l, n * kappa);
}

BoundReport ha_from_stats(double r_hat, double n, double kappa, double lambda, double kl, double delta) {
    if (!(lambda > 0.0)) throw Error(ErrorKind::Domain, "lambda must be positive");
    BoundReport r;
    r.bound_id = "hoeffding_azuma";
    base_terms(r, r_hat);
    r.terms["variance_term"] = lambda / (8.0 * n * kappa * kappa);
    r.terms["kl_term"] = kl / lambda;
    r.terms["confidence_term"] = Confidence(delta).log_inv() / lambda;
    r.terms["kl"] = kl;
    r.terms["kappa"] = kappa;
    r.value = recompute_value(r);
    r.params.delta = delta;
    r.params.lambda = lambda;
    check_lower(r);
    return r;
}

BoundReport kl_inverse_from_budget(double r_hat, double kappa, double kl_part, double confidence_part) {
    BoundReport r;
    r.bound_id = "kl_inverse";
    r.composition = Composition::KlInverse;
    base_terms(r, r_hat);
    r.terms["kl_term"] = kl_part;
    r.terms["confidence_term"] = confidence_part;
    r.terms["kappa"] = kappa;
    const double p = kappa * r_hat;
    if (p > 1.0 + 1e-9 || p < -1e-12) throw Error(ErrorKind::Domain, "kappa * estimate must lie in [0,1]");
    r.value = recompute_value(r);
    check_lower(r);
    return r;
}

BoundReport pinsker_from_budget(double r_hat, double kappa, double kl_part, double confidence_part) {
    BoundReport r;
    r.bound_id = "pinsker";
    r.composition = Composition::Pinsker;
    base_terms(r, r_hat);
    r.terms["kl_term"] = kl_part;
    r.terms["confidence_term"] = confidence_part;
    r.terms["kappa"] = kappa;
    r.value = recompute_value(r);
    check_lower(r);
    return r;
}

BoundReport kl_family_from_stats(double r_hat, double n, double kappa, double kl, double delta, KlMode mode) {
    Confidence conf(delta);
    (void)conf;
    auto r = mode == KlMode::Inverse ? kl_inverse_from_budget(r_hat, kappa, kl / n, log_2sqrtn_over_delta(n, delta) / n)
                                     : pinsker_from_budget(r_hat, kappa, kl / n, log_2sqrtn_over_delta(n, delta) / n);
    r.terms["kl"] = kl;
    r.params.delta = delta;
    return r;
}

BoundReport bernstein_from_stats(double r_hat, double n, double kappa, double lambda, const VarianceMode& vm,
                                 double kl, double delta) {
    if (!(lambda > 0.0 && lambda <= n * kappa * (1.0 + 1e-12)))
        throw Error(ErrorKind::Domain, "bernstein lambda must lie in (0, n*kappa]");
    const double v = vm.worst_case ? 1.0 / kappa : vm.v;
    BoundReport r;
    r.bound_id = "bernstein";
    base_terms(r, r_hat);
    r.terms["variance_term"] = lambda * kEMinus2 * v / n;
    r.terms["kl_term"] = kl / lambda;
    r.terms["confidence_term"] = Confidence(delta).log_inv() / lambda;
    r.terms["kl"] = kl;
    r.terms["kappa"] = kappa;
    r.terms["variance"] = v;
    r.value = recompute_value(r);
    r.params.delta = delta;
    r.params.lambda = lambda;
    r.params.extra["variance_worst_case"] = vm.worst_case ? 1.0 : 0.0;
    check_lower(r);
    return r;
}

BoundReport london_sandler_from_stats(double r_hat, double n, double tau, double kl, double delta) {
    if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorKind::Domain, "tau must lie in (0,1]");
    const double g = kl + log_2sqrtn_over_delta(n, Confidence(delta).value());
    BoundReport r;
    r.bound_id = "london_sandler_risk";
    r.composition = Composition::Risk;
    base_terms(r, r_hat);
    r.terms["variance_term"] = std::sqrt(std::max(0.0, 2.0 * (1.0 / tau - r_hat) * g / (tau * n)));
    r.terms["confidence_term"] = 2.0 * g / (tau * n);
    r.terms["kl"] = kl;
    r.terms["kappa"] = tau;
    r.value = recompute_value(r);
    r.terms["reward_lower_bound"] = 1.0 - r.value;
    r.params.delta = delta;
    r.params.tau = tau;
    return r;
}

BoundReport efron_stein_from_stats(double r_wis, double v_hat, double y, double kl, double delta) {
    if (!(y > 0.0)) throw Error(ErrorKind::Domain, "y must be positive");
    if (!(v_hat >= 0.0)) throw Error(ErrorKind::Domain, "variance proxy must be nonnegative");
    BoundReport r;
    r.bound_id = "efron_stein_wis";
    r.composition = Composition::EfronStein;
    base_terms(r, r_wis);
    r.terms["variance_term"] = std::sqrt(2.0 * (y + 2.0 * v_hat));
    r.terms["kl_term"] = kl;
    r.terms["confidence_term"] = 0.5 * std::log1p(2.0 * v_hat / y) + Confidence(delta).log_inv();
    r.terms["bias_term"] = 0.0;
    r.terms["bias_flag"] = 1.0;
    r.terms["kl"] = kl;
    r.terms["v_hat"] = v_hat;
    r.value = recompute_value(r);
    r.params.delta = delta;
    r.params.y = y;
    r.notes.push_back("estimate-based, not certified: uses the estimated variance proxy and assumes zero bias");
    check_lower(r);
    return r;
}

double estimator_kappa(const EstimatorKind& kind, const LoggedDataset& d) {
    switch (kind.type) {
        case EstimatorKind::Type::IS: return d.epsilon();
        case EstimatorKind::Type::CIS: return kind.tau;
        case EstimatorKind::Type::WIS: break;
    }
    throw Error(ErrorKind::Domain, "WIS has no weight bound kappa");
}

BoundReport hoeffding_azuma_bound(const EstimatorKind& kind, const Posterior& rho, const Posterior& mu,
                                  const LoggedDataset& d, std::optional<double> lambda, double delta,
                                  const EvalOptions& opts) {
    const auto s = gather(kind, rho, mu, d, opts);
    const double l = lambda ? *lambda : default_ha_lambda(s.n, s.kappa, delta);
    auto r = ha_from_stats(s.r_hat, s.n, s.kappa, l, s.kl, delta);
    r.bound_id = "hoeffding_azuma_" + kind.name();
    stamp(r, kind, d);
    return r;
}

BoundReport kl_family_bound(const EstimatorKind& kind, const Posterior& rho, const Posterior& mu,
                            const LoggedDataset& d, double delta, KlMode mode, const EvalOptions& opts) {
    if (kind.type == EstimatorKind::Type::CIS) require_iid(d, "CIS kl bound");
    const auto s = gather(kind, rho, mu, d, opts);
    auto r = kl_family_from_stats(s.r_hat, s.n, s.kappa, s.kl, delta, mode);
    r.bound_id = std::string(mode == KlMode::Inverse ? "kl_inverse_" : "pinsker_") + kind.name();
    stamp(r, kind, d);
    return r;
}

BoundReport bernstein_bound(const EstimatorKind& kind, const Posterior& rho, const Posterior& mu,
                            const LoggedDataset& d, std::optional<double> lambda, double delta,
                            const VarianceMode& vm, const EvalOptions& opts) {
    const auto s = gather(kind, rho, mu, d, opts);
    const double l = lambda ? *lambda : default_bernstein_lambda(s.n, s.kappa, delta);
    auto r = bernstein_from_stats(s.r_hat, s.n, s.kappa, l, vm, s.kl, delta);
    r.bound_id = "bernstein_" + kind.name();
    stamp(r, kind, d);
    return r;
}

BoundReport london_sandler_risk_bound(const Posterior& rho, const Posterior& mu, const LoggedDataset& d, double tau,
                                      double delta, const EvalOptions& opts) {
    require_iid(d, "London-Sandler risk bound");
    const auto kind = EstimatorKind::cis(tau);
    const auto s = gather(kind, rho, mu, d, opts);
    auto r = london_sandler_from_stats(s.r_hat, s.n, tau, s.kl, delta);
    stamp(r, kind, d);
    return r;
}

BoundReport efron_stein_wis_bound(const Posterior& rho, const Posterior& mu, const LoggedDataset& d,
                                  const BehaviourPolicy& behaviour, std::optional<double> y, double delta,
                                  std::size_t m, std::uint64_t seed, bool assume_zero_bias, const EvalOptions& opts) {
    require_iid(d, "Efron-Stein WIS bound");
    if (!assume_zero_bias) throw Error(ErrorKind::BiasUnavailable, "no empirical bound on the WIS bias exists");
    const double r_wis = posterior_estimate(EstimatorKind::wis(), rho, d, opts.mc_samples, opts.seed);
    const double kl = posterior_kl(rho, mu);
    double v_hat = 0.0;
    if (rho.is_categorical()) {
        const auto& w = rho.categorical();
        std::vector<Policy> pols;
        std::vector<double> wts;
        for (std::size_t a = 0; a < w.size(); ++a)
            if (w[a] > 0.0) {
                pols.emplace_back(a);
                wts.push_back(w[a]);
            }
        const auto v = wis_variance_proxy_many(pols, d, behaviour, m, seed);
        for (std::size_t i = 0; i < v.size(); ++i) v_hat += wts[i] * v[i];
    } else {
        const auto pols = sample_policies(rho, rho.is_point() ? 1 : opts.mc_samples, opts.seed);
        const auto v = wis_variance_proxy_many(pols, d, behaviour, m, seed);
        for (double x : v) v_hat += x / static_cast<double>(v.size());
    }
    const double yy = y ? *y : 2.0 * v_hat;
    if (!(yy > 0.0)) throw Error(ErrorKind::Domain, "y must be positive (variance proxy is zero)");
    auto r = efron_stein_from_stats(r_wis, v_hat, yy, kl, delta);
    r.params.estimator = "WIS";
    r.params.extra["n"] = static_cast<double>(d.size());
    r.params.extra["ghost_draws"] = static_cast<double>(m);
    return r;
}

double ValidityResult::tolerance() const {
    if (trials == 0) return 1.0;
    return delta + 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
}

ValidityResult validity_monte_carlo(const std::function<ValidityTrial(std::uint64_t)>& trial, std::size_t trials,
                                    double delta, std::uint64_t seed) {
    Confidence conf(delta);
    std::vector<char> violated(trials, 0);
    parallel_for(trials, [&](std::size_t t) {
        const auto res = trial(derive_seed(seed, t));
        violated[t] = res.bound > res.truth ? 1 : 0;
    });
    ValidityResult out;
    out.trials = trials;
    out.delta = conf.value();
    for (char v : violated) out.violations += static_cast<std::size_t>(v);
    return out;
}

}  // namespace pacbandit
