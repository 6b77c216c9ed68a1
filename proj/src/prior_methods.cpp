#include "pacbandit/prior_methods.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pacbandit/core_math.hpp"
#include "pacbandit/errors.hpp"
#include "pacbandit/estimators.hpp"
#include "pacbandit/numeric.hpp"

namespace pacbandit {

namespace {

void require_iid(const LoggedDataset& d, const char* what) {
    if (!d.iid()) throw Error(ErrorKind::NonIid, std::string(what) + " needs a single fixed behaviour policy");
}

void base_terms(BoundReport& r, double est) {
    r.terms["empirical_estimate"] = est;
    r.terms["variance_term"] = 0.0;
    r.terms["kl_term"] = 0.0;
    r.terms["confidence_term"] = 0.0;
    r.terms["bias_flag"] = 0.0;
}

double log_4sqrtn_over_delta(double n, double delta) { return std::log(4.0 * std::sqrt(n) / delta); }

std::vector<double> is_scores(const LoggedDataset& d) {
    return per_action_estimates(EstimatorKind::is(), d, d.num_actions());
}

double dot(const CategoricalDistribution& rho, const std::vector<double>& s) {
    double r = 0.0;
    for (std::size_t a = 0; a < rho.size(); ++a) r += rho[a] * s[a];
    return r;
}

const CategoricalDistribution& finite_dist(const Posterior& p, const char* what) {
    if (!p.is_categorical()) throw Error(ErrorKind::FiniteClassOnly, std::string(what) + " needs a finite class");
    return p.categorical();
}

}  // namespace

void SplitSpec::validate() const {
    if (!(m >= 1 && m < n)) throw Error(ErrorKind::Domain, "split needs 1 <= m < n");
}

void GeometricGrid::validate() const {
    if (!(c > 1.0)) throw Error(ErrorKind::Domain, "geometric grid needs c > 1");
    if (!(a > 0.0 && a <= b)) throw Error(ErrorKind::Domain, "geometric grid needs 0 < a <= b");
}

GeometricGrid GeometricGrid::bernstein(double n, double eps, double delta, double c) {
    return {std::sqrt(n * eps * Confidence(delta).log_inv() / kEMinus2), n * eps, c};
}

BoundReport split_prior_bound(const LoggedDataset& d, const SplitSpec& split, const PriorLearner& learner,
                              const SplitEvaluator& evaluate, double delta, std::optional<Posterior>* learned) {
    split.validate();
    if (split.n != d.size()) throw Error(ErrorKind::Domain, "split total does not match the dataset size");
    const Posterior prior = learner(d.slice(0, split.m));
    auto r = evaluate(prior, d.slice(split.m, split.n), delta);
    r.params.extra["split_m"] = static_cast<double>(split.m);
    r.params.extra["split_n"] = static_cast<double>(split.n);
    r.notes.push_back("prior learned on records [0, " + std::to_string(split.m) + ")");
    if (learned) *learned = prior;
    return r;
}

BoundReport union_bound_select(const std::vector<UnionCandidate>& candidates, double delta) {
    Confidence conf(delta);
    if (candidates.empty()) throw Error(ErrorKind::Domain, "union bound needs at least one candidate");
    double total = 0.0;
    for (const auto& c : candidates) {
        if (!(c.delta_i > 0.0)) throw Error(ErrorKind::Domain, "candidate delta must be positive");
        total += c.delta_i;
    }
    if (std::abs(total - delta) > 1e-12) throw Error(ErrorKind::Domain, "candidate deltas must sum to delta");
    std::vector<BoundReport> reports(candidates.size());
    parallel_for(candidates.size(), [&](std::size_t i) { reports[i] = candidates[i].evaluate(candidates[i].delta_i); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < reports.size(); ++i)
        if (reports[i].value > reports[best].value) best = i;
    auto r = reports[best];
    r.params.extra["union_winner"] = static_cast<double>(best);
    r.params.extra["union_candidates"] = static_cast<double>(candidates.size());
    r.params.extra["union_delta"] = delta;
    r.notes.push_back("union winner: " + candidates[best].label);
    return r;
}

std::vector<UnionCandidate> uniform_candidates(std::vector<std::string> labels,
                                               std::vector<std::function<BoundReport(double)>> evals, double delta) {
    if (labels.size() != evals.size()) throw Error(ErrorKind::DimensionMismatch, "labels and evaluators differ");
    std::vector<UnionCandidate> out;
    const double di = delta / static_cast<double>(evals.size());
    for (std::size_t i = 0; i < evals.size(); ++i) out.push_back({std::move(labels[i]), std::move(evals[i]), di});
    // Exact sum despite rounding.
    double rest = delta;
    for (std::size_t i = 0; i + 1 < out.size(); ++i) rest -= out[i].delta_i;
    if (!out.empty()) out.back().delta_i = rest;
    return out;
}

double geometric_grid_count(double n, double eps, double delta, double c) {
    if (!(c > 1.0)) throw Error(ErrorKind::Domain, "geometric grid needs c > 1");
    const double l = Confidence(delta).log_inv();
    const double nu = std::log(std::sqrt(n * eps * kEMinus2 / l)) / std::log(c);
    return std::max(1.0, nu);
}

BoundReport geometric_lambda_bernstein_from_stats(double r_hat, double n, double eps, double kl, double c,
                                                  double delta) {
    const double nu = geometric_grid_count(n, eps, delta, c);
    const double g = kl + std::log(nu / delta);
    BoundReport r;
    r.bound_id = "bernstein_geometric_lambda";
    base_terms(r, r_hat);
    // Case condition with the worst-case variance 1/eps.
    const bool first = std::sqrt(g * eps / (n * kEMinus2)) <= eps;
    if (first) {
        r.terms["variance_term"] = (1.0 + c) * std::sqrt(kEMinus2 * g / (n * eps));
    } else {
        r.terms["kl_term"] = 2.0 * kl / (n * eps);
        r.terms["confidence_term"] = 2.0 * std::log(nu / delta) / (n * eps);
    }
    r.terms["nu"] = nu;
    r.terms["branch"] = first ? 1.0 : 2.0;
    r.terms["kl"] = kl;
    r.value = recompute_value(r);
    r.params.delta = delta;
    r.params.c = c;
    r.params.estimator = "IS";
    return r;
}

BoundReport geometric_lambda_bernstein(const Posterior& rho, const Posterior& mu, const LoggedDataset& d, double c,
                                       double delta, const EvalOptions& opts) {
    const double r_hat = posterior_estimate(EstimatorKind::is(), rho, d, opts.mc_samples, opts.seed);
    auto r = geometric_lambda_bernstein_from_stats(r_hat, static_cast<double>(d.size()), d.epsilon(),
                                                   posterior_kl(rho, mu), c, delta);
    r.params.extra["n"] = static_cast<double>(d.size());
    return r;
}

namespace {

// max_rho r(rho) - KL/lambda = (1/lambda) ln sum_a mu_a exp(lambda s_a).
double gibbs_log_partition_over_lambda(const CategoricalDistribution& mu, const std::vector<double>& s,
                                       double lambda) {
    double mx = -kInfinity;
    for (std::size_t a = 0; a < s.size(); ++a)
        if (mu[a] > 0.0) mx = std::max(mx, s[a]);
    double z = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a)
        if (mu[a] > 0.0) z += mu[a] * std::exp(lambda * (s[a] - mx));
    return mx + std::log(z) / lambda;
}

}  // namespace

SubsetLambdaResult subset_lambda_bernstein(const CategoricalDistribution& mu, const LoggedDataset& d, double delta,
                                           const SubsetPosterior& rho_learner) {
    const double log_inv = Confidence(delta).log_inv();
    const std::size_t n = d.size();
    if (n < 2) throw Error(ErrorKind::Domain, "subset lambda needs n >= 2");
    if (mu.size() != d.num_actions()) throw Error(ErrorKind::DimensionMismatch, "prior size differs from K");
    const std::size_t n1 = n / 2;
    const auto d1 = d.slice(0, n1);
    const auto d2 = d.slice(n1, n);
    const double eps = d.epsilon();
    const auto s1 = is_scores(d1);
    const double nn1 = static_cast<double>(n1);
    auto f = [&](double lambda) {
        return gibbs_log_partition_over_lambda(mu, s1, lambda) - lambda * kEMinus2 / (nn1 * eps) - log_inv / lambda;
    };
    // Coarse log grid, then golden section around the best point.
    const double lo = 1e-3, hi = 1e3 * std::max(1.0, nn1 * eps);
    const int grid = 400;
    double best_x = lo, best_f = f(lo);
    for (int i = 1; i <= grid; ++i) {
        const double x = lo * std::pow(hi / lo, static_cast<double>(i) / grid);
        const double fx = f(x);
        if (fx > best_f) {
            best_f = fx;
            best_x = x;
        }
    }
    const double step = std::pow(hi / lo, 1.0 / grid);
    double a = std::log(best_x / step), b = std::log(best_x * step);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
        const double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
        if (f(std::exp(x1)) >= f(std::exp(x2)))
            b = x2;
        else
            a = x1;
    }
    const double mid = std::exp(0.5 * (a + b));
    const double lambda_hat = f(mid) >= best_f ? mid : best_x;
    const double lambda_used = std::min(lambda_hat, nn1 * eps);

    const auto s2 = is_scores(d2);
    CategoricalDistribution rho = rho_learner ? rho_learner(lambda_used, s2) : gibbs_posterior_finite(mu, s2, lambda_used);
    auto r = bernstein_from_stats(dot(rho, s2), static_cast<double>(d2.size()), eps, lambda_used,
                                  VarianceMode::worst(), kl_categorical(rho, mu), delta);
    r.bound_id = "bernstein_subset_lambda";
    r.params.estimator = "IS";
    r.params.extra["lambda_hat"] = lambda_hat;
    r.params.extra["split_m"] = nn1;
    r.params.extra["n"] = static_cast<double>(n);
    return {r, lambda_hat, lambda_used, rho};
}

double dp_extra_budget(double n, double eta, double delta) {
    if (!(eta >= 0.0)) throw Error(ErrorKind::Domain, "eta must be nonnegative");
    const double l4 = std::log(4.0 / Confidence(delta).value());
    return (n * eta * eta / 2.0 + eta * std::sqrt(n * l4 / 2.0)) / n;
}

BoundReport dp_prior_bound(const Posterior& rho, const Posterior& mu_d, double eta, const LoggedDataset& d,
                           double delta, const EvalOptions& opts) {
    require_iid(d, "differentially private prior bound");
    const double n = static_cast<double>(d.size());
    const double r_hat = posterior_estimate(EstimatorKind::is(), rho, d, opts.mc_samples, opts.seed);
    const double kl = posterior_kl(rho, mu_d);
    auto r = kl_inverse_from_budget(r_hat, d.epsilon(), kl / n,
                                    log_4sqrtn_over_delta(n, delta) / n + dp_extra_budget(n, eta, delta));
    r.bound_id = "kl_inverse_dp_prior";
    r.terms["kl"] = kl;
    r.params.delta = delta;
    r.params.eta = eta;
    r.params.estimator = "IS";
    r.params.extra["n"] = n;
    return r;
}

namespace {

// Gradient of r_IS(pi_theta) on a minibatch of records (deterministic softmax policy).
void is_gradient(const LoggedDataset& d, std::span<const std::size_t> idx, const Eigen::VectorXd& w,
                 Eigen::VectorXd& g) {
    const std::size_t dim = d.state_dim(), k = d.num_actions();
    g.setZero(w.size());
    std::vector<double> z(k);
    const double inv_b = 1.0 / static_cast<double>(idx.size());
    for (std::size_t i : idx) {
        const auto s = d.state(i);
        for (std::size_t a = 0; a < k; ++a) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dim; ++j) acc += s[j] * w[static_cast<Eigen::Index>(a * dim + j)];
            z[a] = acc;
        }
        softmax_inplace(z.data(), k);
        const std::size_t act = d.action(i);
        const double coef = d.reward(i) / d.propensity(i) * inv_b;
        if (coef == 0.0) continue;
        for (std::size_t a = 0; a < k; ++a) {
            const double dz = coef * z[act] * ((a == act ? 1.0 : 0.0) - z[a]);
            for (std::size_t j = 0; j < dim; ++j) g[static_cast<Eigen::Index>(a * dim + j)] += dz * s[j];
        }
    }
}

}  // namespace

SgldPrior sgld_gibbs_prior(const LoggedDataset& d, double lambda, const PolicyClass& cls, const SgldConfig& config) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::Domain, "lambda must be finite and >= 0");
    if (!(config.step_size > 0.0) || !(config.decay >= 0.0 && config.decay < 1.0))
        throw Error(ErrorKind::Config, "bad sgld configuration");
    if (cls.num_actions() != d.num_actions()) throw Error(ErrorKind::DimensionMismatch, "class and data K differ");
    const std::size_t p = cls.num_params();
    const std::size_t n = d.size();
    Rng rng(config.seed);
    std::normal_distribution<double> z01(0.0, 1.0);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = z01(rng);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(w.size()), g(w.size()), gr(w.size());

    std::vector<double> scores;
    if (cls.is_finite()) scores = is_scores(d);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t b = std::min(config.batch_size, n);
    std::vector<std::size_t> idx(b);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<double> prob(p);

    for (std::size_t t = 0; t < config.steps; ++t) {
        if (lambda > 0.0) {
            if (cls.is_finite()) {
                for (std::size_t a = 0; a < p; ++a) prob[a] = w[static_cast<Eigen::Index>(a)];
                softmax_inplace(prob.data(), p);
                double mean = 0.0;
                for (std::size_t a = 0; a < p; ++a) mean += prob[a] * scores[a];
                for (std::size_t a = 0; a < p; ++a) gr[static_cast<Eigen::Index>(a)] = prob[a] * (scores[a] - mean);
            } else {
                if (b < n)
                    for (auto& i : idx) i = pick(rng);
                is_gradient(d, idx, w, gr);
            }
            g = -w + lambda * gr;
        } else {
            g = -w;
        }
        v = config.decay * v + (1.0 - config.decay) * g.cwiseProduct(g);
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            const double pre = 1.0 / (config.damping + std::sqrt(v[j]));
            w[j] += 0.5 * config.step_size * pre * g[j] + std::sqrt(config.step_size * pre) * z01(rng);
        }
        if (!w.allFinite()) throw Error(ErrorKind::Divergence, "sgld chain produced non-finite parameters");
    }
    const double eta = 2.0 * lambda / (static_cast<double>(n) * d.epsilon());
    if (cls.is_finite()) {
        std::vector<double> logits(w.data(), w.data() + w.size());
        softmax_inplace(logits.data(), p);
        return {Posterior::categorical(cls, CategoricalDistribution(std::move(logits))), eta};
    }
    return {Posterior::gaussian(cls, DiagonalGaussian(w, Eigen::VectorXd::Ones(w.size()))), eta};
}

double lever_budget(double gamma, double n, double eps, double delta) {
    if (!(gamma > 0.0)) throw Error(ErrorKind::Domain, "gamma must be positive");
    const double l = log_4sqrtn_over_delta(n, delta);
    return l / n + gamma * gamma / (2.0 * n * n * eps * eps) + gamma * std::sqrt(2.0 * l) / (n * std::sqrt(n) * eps);
}

CategoricalDistribution lever_posterior(const CategoricalDistribution& mu, const LoggedDataset& d, double gamma) {
    return gibbs_posterior_finite(mu, is_scores(d), gamma);
}

BoundReport lever_bound_at(double r_hat, double gamma, double n, double eps, double delta) {
    const double l = log_4sqrtn_over_delta(n, delta);
    const double conf = l / n;
    auto r = kl_inverse_from_budget(r_hat, eps, lever_budget(gamma, n, eps, delta) - conf, conf);
    r.bound_id = "kl_inverse_lever";
    r.params.delta = delta;
    r.params.gamma = gamma;
    r.params.estimator = "IS";
    r.params.extra["n"] = n;
    return r;
}

BoundReport lever_bound(const CategoricalDistribution& mu, const LoggedDataset& d, double gamma, double delta) {
    const auto s = is_scores(d);
    const auto rho = gibbs_posterior_finite(mu, s, gamma);
    return lever_bound_at(dot(rho, s), gamma, static_cast<double>(d.size()), d.epsilon(), delta);
}

double oneto_penalty(double gamma, double n, double eps, double delta) {
    if (!(gamma >= 0.0)) throw Error(ErrorKind::Domain, "gamma must be nonnegative");
    const double root = std::sqrt(std::log(2.0 / Confidence(delta).value()) / (2.0 * n));
    return 4.0 * gamma / (n * eps) + (8.0 * gamma / eps + 1.0 / eps) * root;
}

BoundReport oneto_stability_bound(const CategoricalDistribution& mu, const LoggedDataset& d, double gamma,
                                  double delta) {
    require_iid(d, "distribution stability bound");
    const auto s = is_scores(d);
    const auto rho = gibbs_posterior_finite(mu, s, gamma);
    const double n = static_cast<double>(d.size()), eps = d.epsilon();
    BoundReport r;
    r.bound_id = "oneto_distribution_stability";
    base_terms(r, dot(rho, s));
    r.terms["variance_term"] = 4.0 * gamma / (n * eps);
    r.terms["confidence_term"] = oneto_penalty(gamma, n, eps, delta) - 4.0 * gamma / (n * eps);
    r.value = recompute_value(r);
    r.params.delta = delta;
    r.params.gamma = gamma;
    r.params.estimator = "IS";
    r.params.extra["n"] = n;
    return r;
}

BoundReport localized_bernstein_from_stats(double r_hat, double n, double eps, double lambda, double beta,
                                           double kl_emp, double delta) {
    if (!(beta >= 0.0 && beta < lambda)) throw Error(ErrorKind::Domain, "localized bound needs 0 <= beta < lambda");
    if (lambda > n * eps * (1.0 + 1e-12)) throw Error(ErrorKind::Domain, "localized bound needs lambda <= n eps");
    const double gap = lambda - beta;
    BoundReport r;
    r.bound_id = "bernstein_localized";
    base_terms(r, r_hat);
    r.terms["variance_term"] = (lambda * lambda + beta * beta) * kEMinus2 / (gap * n * eps);
    r.terms["kl_term"] = kl_emp / gap;
    r.terms["confidence_term"] = 2.0 * Confidence(delta).log_inv() / gap;
    r.terms["kl"] = kl_emp;
    r.value = recompute_value(r);
    r.params.delta = delta;
    r.params.lambda = lambda;
    r.params.beta = beta;
    r.params.estimator = "IS";
    r.params.extra["n"] = n;
    return r;
}

namespace {

// r_hat(rho) and KL(rho || mu_{beta r_hat}) for a finite class.
std::pair<double, double> empirical_gibbs_stats(const CategoricalDistribution& rho, const CategoricalDistribution& mu,
                                                const LoggedDataset& d, double beta) {
    const auto s = is_scores(d);
    const auto prior = gibbs_posterior_finite(mu, s, beta);
    return {dot(rho, s), kl_categorical(rho, prior)};
}

}  // namespace

BoundReport localized_bernstein_bound(const Posterior& rho, const Posterior& mu, const LoggedDataset& d,
                                      double lambda, double beta, double delta) {
    const auto& r = finite_dist(rho, "localized bernstein bound");
    const auto& m = finite_dist(mu, "localized bernstein bound");
    const auto [r_hat, kl] = empirical_gibbs_stats(r, m, d, beta);
    return localized_bernstein_from_stats(r_hat, static_cast<double>(d.size()), d.epsilon(), lambda, beta, kl, delta);
}

BoundReport ha_empirical_gibbs_from_stats(double r_hat, double n, double eps, double lambda, double beta,
                                          double kl_emp, double delta) {
    if (!(beta >= 0.0 && beta <= lambda) || !(lambda > 0.0))
        throw Error(ErrorKind::Domain, "empirical Gibbs bound needs 0 <= beta <= lambda, lambda > 0");
    const double x = lambda * lambda / (2.0 * n * eps * eps);
    const double log1pe = x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    BoundReport r;
    r.bound_id = "hoeffding_azuma_empirical_gibbs";
    base_terms(r, r_hat);
    r.terms["variance_term"] = 2.0 / (lambda * eps * eps) + 4.0 * beta / (n * eps * eps);
    r.terms["kl_term"] = kl_emp / lambda;
    r.terms["confidence_term"] = (log1pe + Confidence(delta).log_inv()) / lambda;
    r.terms["kl"] = kl_emp;
    r.value = recompute_value(r);
    r.params.delta = delta;
    r.params.lambda = lambda;
    r.params.beta = beta;
    r.params.estimator = "IS";
    r.params.extra["n"] = n;
    return r;
}

BoundReport ha_empirical_gibbs_bound(const Posterior& rho, const Posterior& mu, const LoggedDataset& d,
                                     double lambda, double beta, double delta) {
    require_iid(d, "empirical Gibbs bound");
    const auto& r = finite_dist(rho, "empirical Gibbs bound");
    const auto& m = finite_dist(mu, "empirical Gibbs bound");
    const auto [r_hat, kl] = empirical_gibbs_stats(r, m, d, beta);
    return ha_empirical_gibbs_from_stats(r_hat, static_cast<double>(d.size()), d.epsilon(), lambda, beta, kl, delta);
}

double hypothesis_sensitivity_bound(double beta_n, double sigma, double n, double eps, double delta) {
    (void)eps;
    if (!(beta_n >= 0.0) || !(sigma > 0.0)) throw Error(ErrorKind::Domain, "need beta_n >= 0 and sigma > 0");
    const double f = 1.0 + std::sqrt(std::log(2.0 / Confidence(delta).value()) / 2.0);
    return log_4sqrtn_over_delta(n, delta) / n + n * beta_n * beta_n * f * f / (2.0 * sigma * sigma);
}

double london_sandler_kl_budget(double theta_dist, double beta_lip, double lambda_reg, double sigma, double n,
                                double delta) {
    if (!(sigma > 0.0) || !(lambda_reg > 0.0)) throw Error(ErrorKind::Domain, "need sigma > 0 and lambda > 0");
    const double shift =
        theta_dist + beta_lip / lambda_reg * std::sqrt(2.0 * std::log(4.0 / Confidence(delta).value()) / n);
    return log_4sqrtn_over_delta(n, delta) / n + shift * shift / (2.0 * n * sigma * sigma);
}

std::vector<double> default_gamma_grid(double n, double eps) {
    const double s = std::sqrt(n * eps);
    return {0.1 * s, 0.5 * s, s};
}

double localized_base_lambda(double n, double eps, double delta) {
    return std::sqrt(2.0 * n * eps * Confidence(delta).log_inv() / kEMinus2);
}

double ha_empirical_gibbs_lambda(double n, double eps, double delta) {
    return std::sqrt(2.0 * n * (eps * eps * Confidence(delta).log_inv() + 2.0));
}

namespace {

std::string fmt(const char* name, double v) { return std::string(name) + "=" + std::to_string(v); }

}  // namespace

BoundReport best_lever_bound(const CategoricalDistribution& mu, const LoggedDataset& d, double delta) {
    std::vector<std::string> labels;
    std::vector<std::function<BoundReport(double)>> evals;
    for (double g : default_gamma_grid(static_cast<double>(d.size()), d.epsilon())) {
        labels.push_back(fmt("gamma", g));
        evals.push_back([&, g](double di) { return lever_bound(mu, d, g, di); });
    }
    return union_bound_select(uniform_candidates(labels, evals, delta), delta);
}

BoundReport best_oneto_bound(const CategoricalDistribution& mu, const LoggedDataset& d, double delta) {
    std::vector<std::string> labels;
    std::vector<std::function<BoundReport(double)>> evals;
    for (double g : default_gamma_grid(static_cast<double>(d.size()), d.epsilon())) {
        labels.push_back(fmt("gamma", g));
        evals.push_back([&, g](double di) { return oneto_stability_bound(mu, d, g, di); });
    }
    return union_bound_select(uniform_candidates(labels, evals, delta), delta);
}

BoundReport best_localized_bernstein(const CategoricalDistribution& mu, const LoggedDataset& d, double delta) {
    const double n = static_cast<double>(d.size()), eps = d.epsilon();
    const auto s = is_scores(d);
    const double base = localized_base_lambda(n, eps, delta);
    std::vector<std::string> labels;
    std::vector<std::function<BoundReport(double)>> evals;
    for (double mult : {1.0, 1.5, 2.0}) {
        const double lambda = std::min(mult * base, n * eps);
        const auto rho = gibbs_posterior_finite(mu, s, lambda);
        for (double frac : {0.0, 0.25, 0.5}) {
            const double beta = frac * lambda;
            const auto prior = gibbs_posterior_finite(mu, s, beta);
            const double kl = kl_categorical(rho, prior), r_hat = dot(rho, s);
            labels.push_back(fmt("lambda", lambda) + "," + fmt("beta", beta));
            evals.push_back([=](double di) {
                return localized_bernstein_from_stats(r_hat, n, eps, lambda, beta, kl, di);
            });
        }
    }
    return union_bound_select(uniform_candidates(labels, evals, delta), delta);
}

BoundReport best_ha_empirical_gibbs(const CategoricalDistribution& mu, const LoggedDataset& d, double delta) {
    require_iid(d, "empirical Gibbs bound");
    const double n = static_cast<double>(d.size()), eps = d.epsilon();
    const auto s = is_scores(d);
    const double lambda = ha_empirical_gibbs_lambda(n, eps, delta);
    const auto rho = gibbs_posterior_finite(mu, s, lambda);
    std::vector<std::string> labels;
    std::vector<std::function<BoundReport(double)>> evals;
    for (double frac : {0.0, 0.25, 0.5}) {
        const double beta = frac * lambda;
        const double kl = kl_categorical(rho, gibbs_posterior_finite(mu, s, beta)), r_hat = dot(rho, s);
        labels.push_back(fmt("beta", beta));
        evals.push_back([=](double di) { return ha_empirical_gibbs_from_stats(r_hat, n, eps, lambda, beta, kl, di); });
    }
    return union_bound_select(uniform_candidates(labels, evals, delta), delta);
}

namespace {

std::size_t train_size(std::size_t n, double fraction) {
    if (n < 2) throw Error(ErrorKind::Domain, "prior learning needs at least two records");
    if (!(fraction > 0.0 && fraction < 1.0)) throw Error(ErrorKind::Config, "train fraction must lie in (0,1)");
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n))), 1, n - 1);
}

}  // namespace

CategoricalDistribution learn_gibbs_prior(const CategoricalDistribution& mu, const LoggedDataset& d,
                                          const std::vector<double>& betas, double train_fraction) {
    if (betas.empty()) throw Error(ErrorKind::Config, "empty beta grid");
    const std::size_t n_tr = train_size(d.size(), train_fraction);
    const auto s_tr = is_scores(d.slice(0, n_tr));
    const auto s_val = is_scores(d.slice(n_tr, d.size()));
    const double root = std::sqrt(static_cast<double>(n_tr));
    double best = -kInfinity, beta = betas.front();
    for (double b : betas) {
        const double v = dot(gibbs_posterior_finite(mu, s_tr, b * root), s_val);
        if (v > best) {
            best = v;
            beta = b;
        }
    }
    return gibbs_posterior_finite(mu, is_scores(d), beta * std::sqrt(static_cast<double>(d.size())));
}

DiagonalGaussian learn_gaussian_prior(const LoggedDataset& d, const LearnerConfig& config,
                                      const std::vector<double>& betas, double train_fraction) {
    if (betas.empty()) throw Error(ErrorKind::Config, "empty beta grid");
    if (!d.contextual()) throw Error(ErrorKind::Domain, "gaussian prior needs contextual data");
    const std::size_t n_tr = train_size(d.size(), train_fraction);
    const auto d_tr = d.slice(0, n_tr);
    const auto d_val = d.slice(n_tr, d.size());
    const auto cls = PolicyClass::linear_softmax(d.state_dim(), d.num_actions());
    const auto standard = DiagonalGaussian::standard(cls.num_params());
    auto fit = [&](const LoggedDataset& data, double beta, std::uint64_t seed) {
        auto cfg = config;
        cfg.seed = seed;
        const double weight = 1.0 / (beta * std::sqrt(static_cast<double>(data.size())));
        return maximize_bound_gaussian(BoundForm::linear(weight, 0.0), EstimatorKind::is(), data, standard, standard,
                                       cfg)
            .posterior;
    };
    double best = -kInfinity, beta = betas.front();
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const auto q = fit(d_tr, betas[i], derive_seed(config.seed, i));
        const double v = posterior_estimate(EstimatorKind::is(), Posterior::gaussian(cls, q), d_val, config.mc_samples,
                                            derive_seed(config.seed, 100 + i));
        if (v > best) {
            best = v;
            beta = betas[i];
        }
    }
    return fit(d, beta, derive_seed(config.seed, 200));
}

}  // namespace pacbandit
