#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pacbandit/dataset.hpp"
#include "pacbandit/policy.hpp"

namespace pacbandit {

struct EstimatorKind {
    enum class Type { IS, CIS, WIS };
    Type type = Type::IS;
    double tau = 1.0;  // CIS only

    static EstimatorKind is() { return {Type::IS, 1.0}; }
    static EstimatorKind cis(double tau);
    static EstimatorKind wis() { return {Type::WIS, 1.0}; }
    std::string name() const;
};

struct VarianceReport {
    enum class Kind { CisUpper, WisProxyEstimate, CisSampleVariance };
    Kind kind;
    double value;
    std::size_t mc_samples;
};

// pi(a_i | s_i) for every record; policy is an action index (non-contextual
// data) or a d x K weight matrix.
std::vector<double> logged_action_probs(const Policy& policy, const LoggedDataset& d);
// pi(a_i | s_i) / propensity_i.
std::vector<double> importance_weights(const Policy& policy, const LoggedDataset& d);

double is_reward(const Policy& policy, const LoggedDataset& d);
double cis_reward(const Policy& policy, const LoggedDataset& d, double tau);
double wis_reward(const Policy& policy, const LoggedDataset& d);
double estimate(const EstimatorKind& kind, const Policy& policy, const LoggedDataset& d);

// Estimate for every deterministic policy (action) 0..K-1 of a finite class.
std::vector<double> per_action_estimates(const EstimatorKind& kind, const LoggedDataset& d, std::size_t k);

// E_{pi ~ rho}[estimate]. Exact for categorical posteriors, Monte Carlo over
// mc_samples sampled weight matrices for gaussian ones.
double posterior_estimate(const EstimatorKind& kind, const Posterior& rho, const LoggedDataset& d,
                          std::size_t mc_samples = 100, std::uint64_t seed = 0);

double is_regret(std::size_t a, std::size_t a_star, const LoggedDataset& d);

double cis_variance_upper(double tau);
double cis_sample_variance(const Policy& policy, const LoggedDataset& d, double tau);

// Ghost-sample / redraw estimate of the WIS Efron-Stein variance proxy.
VarianceReport wis_variance_proxy(const Policy& policy, const LoggedDataset& d, const BehaviourPolicy& behaviour,
                                  std::size_t m, std::uint64_t seed);
// Same draws shared across several policies.
std::vector<double> wis_variance_proxy_many(std::span<const Policy> policies, const LoggedDataset& d,
                                            const BehaviourPolicy& behaviour, std::size_t m, std::uint64_t seed);

}  // namespace pacbandit
