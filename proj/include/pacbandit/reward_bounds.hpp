#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "pacbandit/bound_report.hpp"
#include "pacbandit/dataset.hpp"
#include "pacbandit/estimators.hpp"
#include "pacbandit/policy.hpp"

namespace pacbandit {

inline constexpr double kEMinus2 = 0.71828182845904523536;  // e - 2

struct EvalOptions {
    std::size_t mc_samples = 100;
    std::uint64_t seed = 0;
};

enum class KlMode { Inverse, Pinsker };

struct VarianceMode {
    bool worst_case = true;
    double v = 0.0;
    static VarianceMode worst() { return {true, 0.0}; }
    static VarianceMode supplied(double v);
};

// (lambda/2) b2_mean + (kl + ln(1/delta)) / lambda.
double unified_bound(double b2_mean, double kl, double lambda, double delta);

// lambda that is optimal when the KL term vanishes.
double default_ha_lambda(double n, double kappa, double delta);
double default_bernstein_lambda(double n, double kappa, double delta);

// Scalar forms, shared by the posterior-level bounds, the learners and tests.
BoundReport ha_from_stats(double r_hat, double n, double kappa, double lambda, double kl, double delta);
BoundReport kl_inverse_from_budget(double r_hat, double kappa, double kl_part, double confidence_part);
BoundReport pinsker_from_budget(double r_hat, double kappa, double kl_part, double confidence_part);
// kl part KL/n, confidence part ln(2 sqrt(n)/delta)/n.
BoundReport kl_family_from_stats(double r_hat, double n, double kappa, double kl, double delta, KlMode mode);
BoundReport bernstein_from_stats(double r_hat, double n, double kappa, double lambda, const VarianceMode& vm,
                                 double kl, double delta);
BoundReport london_sandler_from_stats(double r_hat, double n, double tau, double kl, double delta);
BoundReport efron_stein_from_stats(double r_wis, double v_hat, double y, double kl, double delta);

// kappa is eps_n for IS and tau for CIS.
double estimator_kappa(const EstimatorKind& kind, const LoggedDataset& d);

BoundReport hoeffding_azuma_bound(const EstimatorKind& kind, const Posterior& rho, const Posterior& mu,
                                  const LoggedDataset& d, std::optional<double> lambda, double delta,
                                  const EvalOptions& opts = {});
BoundReport kl_family_bound(const EstimatorKind& kind, const Posterior& rho, const Posterior& mu,
                            const LoggedDataset& d, double delta, KlMode mode, const EvalOptions& opts = {});
BoundReport bernstein_bound(const EstimatorKind& kind, const Posterior& rho, const Posterior& mu,
                            const LoggedDataset& d, std::optional<double> lambda, double delta,
                            const VarianceMode& vm = VarianceMode::worst(), const EvalOptions& opts = {});
// Upper bound on 1 - R(rho); terms["reward_lower_bound"] = 1 - value.
BoundReport london_sandler_risk_bound(const Posterior& rho, const Posterior& mu, const LoggedDataset& d, double tau,
                                      double delta, const EvalOptions& opts = {});
// y unset: y = 2 V_hat. Categorical posteriors average per-action proxies.
BoundReport efron_stein_wis_bound(const Posterior& rho, const Posterior& mu, const LoggedDataset& d,
                                  const BehaviourPolicy& behaviour, std::optional<double> y, double delta,
                                  std::size_t m, std::uint64_t seed, bool assume_zero_bias,
                                  const EvalOptions& opts = {});

struct ValidityTrial {
    double bound;
    double truth;
};

struct ValidityResult {
    std::size_t trials = 0;
    std::size_t violations = 0;
    double delta = 0.0;
    double violation_rate() const { return trials ? static_cast<double>(violations) / static_cast<double>(trials) : 0.0; }
    // delta + 3 binomial standard deviations.
    double tolerance() const;
    bool within_tolerance() const { return violation_rate() <= tolerance(); }
};

// Each trial draws its own environment/log from the derived seed and reports
// the bound and the exact (or oracle) reward of the posterior it certified.
ValidityResult validity_monte_carlo(const std::function<ValidityTrial(std::uint64_t)>& trial, std::size_t trials,
                                    double delta, std::uint64_t seed);

}  // namespace pacbandit
