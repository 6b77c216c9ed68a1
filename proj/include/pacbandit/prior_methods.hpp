#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pacbandit/bound_report.hpp"
#include "pacbandit/dataset.hpp"
#include "pacbandit/learners.hpp"
#include "pacbandit/policy.hpp"
#include "pacbandit/reward_bounds.hpp"

namespace pacbandit {

// Records [0, m) learn the prior, [m, n) evaluate the bound.
struct SplitSpec {
    std::size_t m = 0;
    std::size_t n = 0;
    void validate() const;
    static SplitSpec half(std::size_t n) { return {n / 2, n}; }
};

struct ExplicitGrid {
    std::vector<double> values;
    std::vector<double> delta_weights;  // positive, sum to delta
};

// {c^k a} intersected with [a, b].
struct GeometricGrid {
    double a = 0.0;
    double b = 0.0;
    double c = 2.0;
    void validate() const;
    // a = sqrt(n eps ln(1/delta) / (e-2)), b = n eps.
    static GeometricGrid bernstein(double n, double eps, double delta, double c);
};

using PriorLearner = std::function<Posterior(const LoggedDataset& first)>;
// Evaluates a bound on the held-out records with the learned prior.
using SplitEvaluator = std::function<BoundReport(const Posterior& prior, const LoggedDataset& second, double delta)>;

BoundReport split_prior_bound(const LoggedDataset& d, const SplitSpec& split, const PriorLearner& learner,
                              const SplitEvaluator& evaluate, double delta, std::optional<Posterior>* learned = nullptr);

struct UnionCandidate {
    std::string label;
    std::function<BoundReport(double delta_i)> evaluate;
    double delta_i = 0.0;
};

// Max over candidates, each evaluated at its own delta_i. Winner recorded in
// params.extra["union_winner"] and the notes.
BoundReport union_bound_select(const std::vector<UnionCandidate>& candidates, double delta);
// Uniform delta split.
std::vector<UnionCandidate> uniform_candidates(std::vector<std::string> labels,
                                               std::vector<std::function<BoundReport(double)>> evals, double delta);

// Number of grid points used in the union bound (clamped to >= 1).
double geometric_grid_count(double n, double eps, double delta, double c);

BoundReport geometric_lambda_bernstein_from_stats(double r_hat, double n, double eps, double kl, double c,
                                                  double delta);
BoundReport geometric_lambda_bernstein(const Posterior& rho, const Posterior& mu, const LoggedDataset& d, double c,
                                       double delta, const EvalOptions& opts = {});

// Posterior chosen on the held-out half for a given lambda and its IS scores.
using SubsetPosterior = std::function<CategoricalDistribution(double lambda, const std::vector<double>& scores)>;

struct SubsetLambdaResult {
    BoundReport report;
    double lambda_hat = 0.0;
    double lambda_used = 0.0;
    CategoricalDistribution rho;
};

// Finite class only. Default posterior is the Gibbs posterior at lambda_used.
SubsetLambdaResult subset_lambda_bernstein(const CategoricalDistribution& mu, const LoggedDataset& d, double delta,
                                           const SubsetPosterior& rho_learner = {});

// Budget addition of the differentially private prior (excluding KL/n and
// ln(4 sqrt(n)/delta)/n).
double dp_extra_budget(double n, double eta, double delta);
BoundReport dp_prior_bound(const Posterior& rho, const Posterior& mu_d, double eta, const LoggedDataset& d,
                           double delta, const EvalOptions& opts = {});

struct SgldConfig {
    std::size_t steps = 10000;
    double step_size = 1e-3;
    std::uint64_t seed = 0;
    std::size_t batch_size = 256;
    double decay = 0.99;
    double damping = 1e-8;
};

struct SgldPrior {
    Posterior prior;
    double eta = 0.0;  // 2 lambda / (n eps)
};

// One PSGLD draw w from p(w) exp(lambda E[r_IS]), p standard normal.
// Finite class: prior softmax(w). Linear softmax: prior N(w, I).
SgldPrior sgld_gibbs_prior(const LoggedDataset& d, double lambda, const PolicyClass& cls, const SgldConfig& config);

double lever_budget(double gamma, double n, double eps, double delta);
// rho_gamma proportional to mu exp(gamma r_IS).
CategoricalDistribution lever_posterior(const CategoricalDistribution& mu, const LoggedDataset& d, double gamma);
// Bound evaluated at an arbitrary finite-class posterior (rho_gamma in practice).
BoundReport lever_bound_at(double r_hat, double gamma, double n, double eps, double delta);
BoundReport lever_bound(const CategoricalDistribution& mu, const LoggedDataset& d, double gamma, double delta);

double oneto_penalty(double gamma, double n, double eps, double delta);
BoundReport oneto_stability_bound(const CategoricalDistribution& mu, const LoggedDataset& d, double gamma,
                                  double delta);

BoundReport localized_bernstein_from_stats(double r_hat, double n, double eps, double lambda, double beta,
                                           double kl_emp, double delta);
BoundReport localized_bernstein_bound(const Posterior& rho, const Posterior& mu, const LoggedDataset& d,
                                      double lambda, double beta, double delta);

BoundReport ha_empirical_gibbs_from_stats(double r_hat, double n, double eps, double lambda, double beta,
                                          double kl_emp, double delta);
BoundReport ha_empirical_gibbs_bound(const Posterior& rho, const Posterior& mu, const LoggedDataset& d,
                                     double lambda, double beta, double delta);

double hypothesis_sensitivity_bound(double beta_n, double sigma, double n, double eps, double delta);
double london_sandler_kl_budget(double theta_dist, double beta_lip, double lambda_reg, double sigma, double n,
                                double delta);

// Grid defaults. gamma in {0.1, 0.5, 1} sqrt(n eps).
std::vector<double> default_gamma_grid(double n, double eps);
// sqrt(2 n eps ln(1/delta) / (e-2)).
double localized_base_lambda(double n, double eps, double delta);
// sqrt(2 n (eps^2 ln(1/delta) + 2)).
double ha_empirical_gibbs_lambda(double n, double eps, double delta);

// Grid-searched, union-bounded versions on a finite class with Gibbs posteriors.
BoundReport best_lever_bound(const CategoricalDistribution& mu, const LoggedDataset& d, double delta);
BoundReport best_oneto_bound(const CategoricalDistribution& mu, const LoggedDataset& d, double delta);
BoundReport best_localized_bernstein(const CategoricalDistribution& mu, const LoggedDataset& d, double delta);
BoundReport best_ha_empirical_gibbs(const CategoricalDistribution& mu, const LoggedDataset& d, double delta);

// Empirical Gibbs prior mu exp(beta sqrt(n_tr) r_IS(D_tr)), beta picked on a
// 4:1 validation split, then refit on all records.
CategoricalDistribution learn_gibbs_prior(const CategoricalDistribution& mu, const LoggedDataset& d,
                                          const std::vector<double>& betas = {1.0, 5.0, 10.0},
                                          double train_fraction = 0.8);
// Diagonal Gaussian approximation of the same prior for linear softmax:
// maximize E r_IS - KL(q || N(0, I)) / (beta sqrt(n_tr)).
DiagonalGaussian learn_gaussian_prior(const LoggedDataset& d, const LearnerConfig& config,
                                      const std::vector<double>& betas = {10.0, 100.0, 1000.0},
                                      double train_fraction = 0.8);

}  // namespace pacbandit
