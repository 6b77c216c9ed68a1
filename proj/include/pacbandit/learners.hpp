#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pacbandit/bound_report.hpp"
#include "pacbandit/dataset.hpp"
#include "pacbandit/estimators.hpp"
#include "pacbandit/policy.hpp"

namespace pacbandit {

CategoricalDistribution gibbs_posterior_finite(const CategoricalDistribution& mu, std::span<const double> scores,
                                               double lambda);

// Bound value as a function of the posterior's expected estimate r and its KL
// to the prior:
//   Linear:    r - kl_weight * KL - offset
//   Sqrt:      r - coef * sqrt(KL + offset)
//   KlInverse: kl_inverse_lower(kappa r, (KL + log_term) / n) / kappa
class BoundForm {
public:
    enum class Type { Linear, Sqrt, KlInverse };

    static BoundForm linear(double kl_weight, double offset);
    static BoundForm sqrt_penalty(double coef, double offset);
    // (1/kappa) sqrt((KL + log_term) / (2n)).
    static BoundForm pinsker(double kappa, double n, double log_term);
    static BoundForm kl_inverse(double kappa, double n, double log_term);

    Type type() const { return type_; }
    double value(double r, double kl) const;
    double d_r(double r, double kl) const;
    double d_kl(double r, double kl) const;

private:
    Type type_ = Type::Linear;
    double a_ = 0.0;  // kl_weight | coef | kappa
    double b_ = 0.0;  // offset | offset | n
    double c_ = 0.0;  // - | - | log_term
};

// Objective over a categorical posterior. eval returns the value and, when
// grad is non-null, the partial derivatives with respect to each rho_a
// (treating rho as free coordinates).
struct CategoricalObjective {
    std::function<double(const std::vector<double>& rho, std::vector<double>* grad)> eval;
};

// Phi(sum_a rho_a s_a, KL(rho||mu)).
CategoricalObjective categorical_objective(const BoundForm& form, std::vector<double> scores,
                                           CategoricalDistribution mu);
// r_wis(rho) - sqrt(2(y + 2V)) sqrt(KL + ln(1 + 2V/y)/2 + ln(1/delta)) with
// V = sum_a rho_a v_a and y = 2V when unset.
CategoricalObjective efron_stein_objective(std::vector<double> wis_scores, std::vector<double> proxies,
                                           CategoricalDistribution mu, std::optional<double> y, double delta);

struct LearnerConfig {
    std::size_t steps = 1000;
    double step_size = 0.05;
    std::size_t mc_samples = 100;
    std::uint64_t seed = 0;
    std::size_t batch_size = 256;  // gaussian / deterministic learners
    std::size_t eval_every = 100;  // best-iterate re-evaluation period

    void validate() const;
};

// Exponentiated-gradient ascent over the simplex with backtracking; returns
// the best iterate. Coordinates where init is zero stay zero.
CategoricalDistribution maximize_bound_categorical(const CategoricalObjective& objective,
                                                   const CategoricalDistribution& init, const LearnerConfig& config);

struct GaussianParams {
    Eigen::VectorXd mean;
    Eigen::VectorXd log_var;
};

// Single-sample local-reparameterisation surrogate on the records idx:
// Phi(r_tilde, KL) where r_tilde uses logits z_ik = s_i.m_k + sd_ik xi_ik.
// noise holds xi row-major (|idx| x K). Gradient w.r.t. (mean, log_var).
double gaussian_surrogate(const BoundForm& form, const EstimatorKind& kind, const LoggedDataset& d,
                          std::span<const std::size_t> idx, const GaussianParams& params,
                          const DiagonalGaussian& mu, std::span<const double> noise, GaussianParams* grad);

// Phi(E_rho r_hat, KL) with a Monte Carlo expectation over mc_samples.
double gaussian_objective_value(const BoundForm& form, const EstimatorKind& kind, const LoggedDataset& d,
                                const DiagonalGaussian& rho, const DiagonalGaussian& mu, std::size_t mc_samples,
                                std::uint64_t seed);

struct GaussianLearnResult {
    DiagonalGaussian posterior;
    double objective = 0.0;          // full re-evaluation of the returned iterate
    double initial_objective = 0.0;  // same evaluation at the initialization
    bool variance_clamped = false;
};

GaussianLearnResult maximize_bound_gaussian(const BoundForm& form, const EstimatorKind& kind, const LoggedDataset& d,
                                            const DiagonalGaussian& mu, const DiagonalGaussian& init,
                                            const LearnerConfig& config);

struct Certificate {
    Posterior posterior;
    std::optional<Posterior> prior;
    BoundReport bound;
    std::string partition;
    std::size_t prior_begin = 0, prior_end = 0;  // records used to learn the prior / select
    std::size_t bound_begin = 0, bound_end = 0;  // records backing the bound
};

nlohmann::json to_json(const Posterior& p);
nlohmann::json to_json(const Certificate& c);

struct PipelineConfig {
    LearnerConfig prior_learner{2000, 0.05, 100, 0, 256, 250};
    LearnerConfig posterior_learner{2000, 0.02, 100, 1, 256, 250};
    std::vector<double> betas{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    std::size_t tau_grid = 50;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct PipelineTrace {
    double selected_beta = 0.0;
    double selected_tau = 0.0;
    std::vector<double> tau_values;
    std::vector<double> tau_objective;
};

// Prior on the first half, tau from the first half, posterior and bound on the
// second half.
Certificate offline_cb_pipeline(const LoggedDataset& d, double delta, const PipelineConfig& config,
                                PipelineTrace* trace = nullptr);

// Deterministic-policy objectives used by the baselines; full-data versions
// exposed for gradient checks.
double tpoem_objective(const LoggedDataset& d, const WeightMatrix& theta, double beta, double tau,
                       WeightMatrix* grad = nullptr);
double tl2_objective(const LoggedDataset& d, const WeightMatrix& theta, double beta, double tau,
                     WeightMatrix* grad = nullptr);

struct BaselineConfig {
    LearnerConfig learner{1500, 0.05, 1, 0, 256, 0};
    double train_fraction = 0.8;
};

Certificate tpoem_select(const LoggedDataset& d, double delta, double tau, const BaselineConfig& config = {});
Certificate tl2_select(const LoggedDataset& d, double delta, double tau, const BaselineConfig& config = {});

// Validation bounds of the baselines (|Pi| = 6 candidates).
double tpoem_validation_bound(double r_cis, double v_cis, std::size_t n_val, double tau, double delta);
double tl2_validation_bound(double r_cis, std::size_t n_val, double tau, double delta);

}  // namespace pacbandit
