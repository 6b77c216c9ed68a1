#include "pacbandit/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pacbandit/errors.hpp"
#include "pacbandit/numeric.hpp"
#include "pacbandit/reward_bounds.hpp"

namespace pacbandit {

CategoricalDistribution gibbs_posterior_finite(const CategoricalDistribution& mu, std::span<const double> scores,
                                               double lambda) {
    const std::size_t k = mu.size();
    if (scores.size() != k) throw Error(ErrorKind::DimensionMismatch, "scores and prior sizes differ");
    for (double s : scores)
        if (std::isnan(s) || s == kInfinity) throw Error(ErrorKind::Domain, "scores must be finite or -inf");
    if (lambda == 0.0) return mu;
    std::vector<double> w(k, 0.0);
    if (std::isinf(lambda)) {
        if (lambda < 0.0) throw Error(ErrorKind::Domain, "lambda must not be -inf");
        std::size_t best = k;
        for (std::size_t a = 0; a < k; ++a)
            if (mu[a] > 0.0 && std::isfinite(scores[a]) && (best == k || scores[a] > scores[best])) best = a;
        if (best == k) throw Error(ErrorKind::Domain, "all prior mass sits on -inf scores");
        w[best] = 1.0;
        return CategoricalDistribution(std::move(w));
    }
    double mx = -kInfinity;
    for (std::size_t a = 0; a < k; ++a)
        if (mu[a] > 0.0 && std::isfinite(scores[a])) {
            w[a] = std::log(mu[a]) + lambda * scores[a];
            mx = std::max(mx, w[a]);
        }
    if (!std::isfinite(mx)) throw Error(ErrorKind::Domain, "all prior mass sits on -inf scores");
    for (std::size_t a = 0; a < k; ++a)
        w[a] = (mu[a] > 0.0 && std::isfinite(scores[a])) ? std::exp(w[a] - mx) : 0.0;
    return CategoricalDistribution::from_unnormalized(std::move(w));
}

BoundForm BoundForm::linear(double kl_weight, double offset) {
    BoundForm f;
    f.type_ = Type::Linear;
    f.a_ = kl_weight;
    f.b_ = offset;
    return f;
}

BoundForm BoundForm::sqrt_penalty(double coef, double offset) {
    if (!(coef >= 0.0)) throw Error(ErrorKind::Domain, "sqrt penalty coefficient must be nonnegative");
    BoundForm f;
    f.type_ = Type::Sqrt;
    f.a_ = coef;
    f.b_ = offset;
    return f;
}

BoundForm BoundForm::pinsker(double kappa, double n, double log_term) {
    return sqrt_penalty(1.0 / (kappa * std::sqrt(2.0 * n)), log_term);
}

BoundForm BoundForm::kl_inverse(double kappa, double n, double log_term) {
    if (!(kappa > 0.0 && kappa <= 1.0) || !(n > 0.0)) throw Error(ErrorKind::Domain, "bad kl inverse form");
    BoundForm f;
    f.type_ = Type::KlInverse;
    f.a_ = kappa;
    f.b_ = n;
    f.c_ = log_term;
    return f;
}

double BoundForm::value(double r, double kl) const {
    switch (type_) {
        case Type::Linear: return r - a_ * kl - b_;
        case Type::Sqrt: return r - a_ * std::sqrt(std::max(0.0, kl + b_));
        case Type::KlInverse: {
            const double p = std::clamp(a_ * r, 0.0, 1.0);
            return kl_inverse_lower(p, std::max(0.0, (kl + c_) / b_)) / a_;
        }
    }
    return 0.0;
}

namespace {

KlInverseGradient interior_kl_gradient(double p, double b) {
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    b = std::max(b, 1e-300);
    if (kl_inverse_lower(p, b) <= 0.0) return {0.0, 0.0};
    return kl_inverse_derivatives(p, b);
}

}  // namespace

double BoundForm::d_r(double r, double kl) const {
    if (type_ != Type::KlInverse) return 1.0;
    return interior_kl_gradient(a_ * r, (kl + c_) / b_).d_p;
}

double BoundForm::d_kl(double r, double kl) const {
    switch (type_) {
        case Type::Linear: return -a_;
        case Type::Sqrt: return -a_ / (2.0 * std::sqrt(std::max(1e-300, kl + b_)));
        case Type::KlInverse: return interior_kl_gradient(a_ * r, (kl + c_) / b_).d_b / (b_ * a_);
    }
    return 0.0;
}

namespace {

// Sum rho_a ln(rho_a/mu_a) over free coordinates.
double free_kl(const std::vector<double>& rho, const CategoricalDistribution& mu) {
    double kl = 0.0;
    for (std::size_t a = 0; a < rho.size(); ++a) {
        if (rho[a] <= 0.0) continue;
        if (mu[a] <= 0.0) return kInfinity;
        kl += rho[a] * std::log(rho[a] / mu[a]);
    }
    return kl;
}

double dkl_da(double rho_a, double mu_a) { return rho_a > 0.0 ? std::log(rho_a / mu_a) + 1.0 : 0.0; }

}  // namespace

CategoricalObjective categorical_objective(const BoundForm& form, std::vector<double> scores,
                                           CategoricalDistribution mu) {
    if (scores.size() != mu.size()) throw Error(ErrorKind::DimensionMismatch, "scores and prior sizes differ");
    return {[form, scores = std::move(scores), mu = std::move(mu)](const std::vector<double>& rho,
                                                                   std::vector<double>* grad) {
        double r = 0.0;
        for (std::size_t a = 0; a < rho.size(); ++a) r += rho[a] * scores[a];
        const double kl = free_kl(rho, mu);
        const double v = form.value(r, kl);
        if (grad) {
            const double gr = form.d_r(r, kl), gk = form.d_kl(r, kl);
            grad->assign(rho.size(), 0.0);
            for (std::size_t a = 0; a < rho.size(); ++a) (*grad)[a] = gr * scores[a] + gk * dkl_da(rho[a], mu[a]);
        }
        return v;
    }};
}

CategoricalObjective efron_stein_objective(std::vector<double> wis_scores, std::vector<double> proxies,
                                           CategoricalDistribution mu, std::optional<double> y, double delta) {
    if (wis_scores.size() != mu.size() || proxies.size() != mu.size())
        throw Error(ErrorKind::DimensionMismatch, "score, proxy and prior sizes differ");
    const double log_inv = Confidence(delta).log_inv();
    return {[w = std::move(wis_scores), v = std::move(proxies), mu = std::move(mu), y, log_inv](
                const std::vector<double>& rho, std::vector<double>* grad) {
        double r = 0.0, vv = 0.0;
        for (std::size_t a = 0; a < rho.size(); ++a) {
            if (rho[a] == 0.0) continue;
            r += rho[a] * w[a];
            vv += rho[a] * v[a];
        }
        const double kl = free_kl(rho, mu);
        const double yy = y ? *y : 2.0 * vv;
        const double amp = std::sqrt(2.0 * (yy + 2.0 * vv));
        const double c = kl + 0.5 * std::log1p(2.0 * vv / yy) + log_inv;
        const double sc = std::sqrt(std::max(c, 0.0));
        if (grad) {
            grad->assign(rho.size(), 0.0);
            // d amp/dV and d c/dV depend on whether y is tied to V.
            const double damp_dv = y ? 2.0 / amp : 4.0 / amp;
            const double dc_dv = y ? 1.0 / (yy + 2.0 * vv) : 0.0;
            for (std::size_t a = 0; a < rho.size(); ++a) {
                const double dv = v[a];
                (*grad)[a] = w[a] - (damp_dv * dv * sc + amp / (2.0 * sc) * (dc_dv * dv + dkl_da(rho[a], mu[a])));
            }
        }
        return r - amp * sc;
    }};
}

void LearnerConfig::validate() const {
    if (!(step_size > 0.0)) throw Error(ErrorKind::Config, "step_size must be positive");
    if (mc_samples < 1) throw Error(ErrorKind::Config, "mc_samples must be >= 1");
    if (batch_size < 1) throw Error(ErrorKind::Config, "batch_size must be >= 1");
}

CategoricalDistribution maximize_bound_categorical(const CategoricalObjective& objective,
                                                   const CategoricalDistribution& init, const LearnerConfig& config) {
    config.validate();
    std::vector<double> rho = init.weights();
    const std::size_t k = rho.size();
    std::vector<double> grad, cand(k);
    double f = objective.eval(rho, &grad);
    std::vector<double> best = rho;
    double best_f = f;
    double eta = config.step_size;
    for (std::size_t t = 0; t < config.steps; ++t) {
        double gmax = -kInfinity;
        for (std::size_t a = 0; a < k; ++a) {
            if (rho[a] <= 0.0) continue;
            if (!std::isfinite(grad[a])) throw Error(ErrorKind::Domain, "non-finite objective gradient");
            gmax = std::max(gmax, grad[a]);
        }
        bool accepted = false;
        double f_new = f;
        for (int tries = 0; tries < 60; ++tries) {
            double total = 0.0;
            for (std::size_t a = 0; a < k; ++a) {
                cand[a] = rho[a] > 0.0 ? rho[a] * std::exp(eta * (grad[a] - gmax)) : 0.0;
                total += cand[a];
            }
            for (double& x : cand) x /= total;
            f_new = objective.eval(cand, nullptr);
            if (std::isfinite(f_new) && f_new >= f) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) break;
        const double gain = f_new - f;
        rho = cand;
        f = objective.eval(rho, &grad);
        if (f > best_f) {
            best_f = f;
            best = rho;
        }
        eta *= 1.5;
        if (gain <= 1e-15 * std::max(1.0, std::abs(f)) && t > 10) break;
    }
    return CategoricalDistribution(std::move(best));
}

double gaussian_surrogate(const BoundForm& form, const EstimatorKind& kind, const LoggedDataset& d,
                          std::span<const std::size_t> idx, const GaussianParams& params,
                          const DiagonalGaussian& mu, std::span<const double> noise, GaussianParams* grad) {
    if (kind.type == EstimatorKind::Type::WIS) throw Error(ErrorKind::Domain, "gaussian learner takes IS or CIS");
    const std::size_t dim = d.state_dim(), k = d.num_actions(), b = idx.size();
    if (dim == 0) throw Error(ErrorKind::Domain, "gaussian learner needs contextual data");
    if (static_cast<std::size_t>(params.mean.size()) != dim * k || noise.size() != b * k)
        throw Error(ErrorKind::DimensionMismatch, "surrogate inputs have inconsistent shapes");
    const Eigen::VectorXd var = params.log_var.array().exp();
    const double cap = kind.type == EstimatorKind::Type::CIS ? 1.0 / kind.tau : kInfinity;

    Eigen::VectorXd g_mean = Eigen::VectorXd::Zero(params.mean.size());
    Eigen::VectorXd g_var = Eigen::VectorXd::Zero(params.mean.size());  // w.r.t. variance
    std::vector<double> z(k), sd(k), dz(k);
    KahanSum r_sum;
    for (std::size_t bi = 0; bi < b; ++bi) {
        const std::size_t i = idx[bi];
        const auto s = d.state(i);
        for (std::size_t a = 0; a < k; ++a) {
            const double* m = params.mean.data() + a * dim;
            const double* v = var.data() + a * dim;
            double mz = 0.0, vz = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                mz += s[j] * m[j];
                vz += s[j] * s[j] * v[j];
            }
            sd[a] = std::sqrt(vz);
            z[a] = mz + sd[a] * noise[bi * k + a];
        }
        softmax_inplace(z.data(), k);
        const std::size_t act = d.action(i);
        const double w = z[act] / d.propensity(i);
        const bool clipped = w > cap;
        r_sum.add((clipped ? cap : w) * d.reward(i));
        if (!grad || clipped) continue;
        const double coef = d.reward(i) / d.propensity(i) / static_cast<double>(b);
        if (coef == 0.0) continue;
        for (std::size_t a = 0; a < k; ++a) dz[a] = coef * z[act] * ((a == act ? 1.0 : 0.0) - z[a]);
        for (std::size_t a = 0; a < k; ++a) {
            double* gm = g_mean.data() + a * dim;
            double* gv = g_var.data() + a * dim;
            const double scale_v = sd[a] > 0.0 ? dz[a] * noise[bi * k + a] / (2.0 * sd[a]) : 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                gm[j] += dz[a] * s[j];
                gv[j] += scale_v * s[j] * s[j];
            }
        }
    }
    const double r = r_sum.value() / static_cast<double>(b);
    const DiagonalGaussian rho(params.mean, var);
    const double kl = kl_diag_gaussian(rho, mu);
    const double val = form.value(r, kl);
    if (grad) {
        const double gr = form.d_r(r, kl), gk = form.d_kl(r, kl);
        const Eigen::ArrayXd vm = mu.variance().array();
        grad->mean = gr * g_mean.array() + gk * ((params.mean - mu.mean()).array() / vm);
        grad->log_var = gr * (g_var.array() * var.array()) + gk * 0.5 * (var.array() / vm - 1.0);
    }
    return val;
}

namespace {

// r_hat of each of m policy samples (rows of the returned weights table are
// the per-record importance weights of one sample).
std::vector<std::vector<double>> sampled_weights(const DiagonalGaussian& rho, const LoggedDataset& d,
                                                 std::size_t m, std::uint64_t seed) {
    const auto cls = PolicyClass::linear_softmax(d.state_dim(), d.num_actions());
    const auto pols = sample_policies(Posterior::gaussian(cls, rho), m, seed);
    std::vector<std::vector<double>> out;
    out.reserve(m);
    for (const auto& p : pols) out.push_back(importance_weights(p, d));
    return out;
}

double mean_estimate(const std::vector<std::vector<double>>& weights, const LoggedDataset& d, double cap) {
    KahanSum total;
    for (const auto& w : weights) {
        KahanSum s;
        for (std::size_t i = 0; i < w.size(); ++i) s.add(std::min(w[i], cap) * d.reward(i));
        total.add(s.value() / static_cast<double>(w.size()));
    }
    return total.value() / static_cast<double>(weights.size());
}

double estimator_cap(const EstimatorKind& kind) {
    if (kind.type == EstimatorKind::Type::WIS) throw Error(ErrorKind::Domain, "gaussian learner takes IS or CIS");
    return kind.type == EstimatorKind::Type::CIS ? 1.0 / kind.tau : kInfinity;
}

}  // namespace

double gaussian_objective_value(const BoundForm& form, const EstimatorKind& kind, const LoggedDataset& d,
                                const DiagonalGaussian& rho, const DiagonalGaussian& mu, std::size_t mc_samples,
                                std::uint64_t seed) {
    const double cap = estimator_cap(kind);
    const double r = mean_estimate(sampled_weights(rho, d, mc_samples, seed), d, cap);
    return form.value(r, kl_diag_gaussian(rho, mu));
}

GaussianLearnResult maximize_bound_gaussian(const BoundForm& form, const EstimatorKind& kind, const LoggedDataset& d,
                                            const DiagonalGaussian& mu, const DiagonalGaussian& init,
                                            const LearnerConfig& config) {
    config.validate();
    estimator_cap(kind);
    const std::size_t n = d.size(), k = d.num_actions();
    if (init.dim() != d.state_dim() * k || mu.dim() != init.dim())
        throw Error(ErrorKind::DimensionMismatch, "gaussian learner dimensions do not match data");
    const double min_log_var = std::log(1e-12);

    GaussianParams p{init.mean(), init.variance().array().log()};
    const auto dim = p.mean.size();
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(2 * dim), m2 = Eigen::VectorXd::Zero(2 * dim);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    Rng rng(derive_seed(config.seed, 1));
    std::normal_distribution<double> z01(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::uint64_t eval_seed = derive_seed(config.seed, 2);

    GaussianLearnResult res{init, 0.0, 0.0, false};
    res.initial_objective = gaussian_objective_value(form, kind, d, init, mu, config.mc_samples, eval_seed);
    res.objective = res.initial_objective;

    const std::size_t b = std::min(config.batch_size, n);
    std::vector<std::size_t> idx(b);
    std::vector<double> noise(b * k);
    GaussianParams g;
    for (std::size_t t = 1; t <= config.steps; ++t) {
        if (b == n)
            std::iota(idx.begin(), idx.end(), std::size_t{0});
        else
            for (auto& i : idx) i = pick(rng);
        for (auto& x : noise) x = z01(rng);
        gaussian_surrogate(form, kind, d, idx, p, mu, noise, &g);
        for (Eigen::Index j = 0; j < 2 * dim; ++j) {
            const double gj = j < dim ? g.mean[j] : g.log_var[j - dim];
            if (!std::isfinite(gj)) throw Error(ErrorKind::Domain, "non-finite gaussian gradient");
            m1[j] = b1 * m1[j] + (1 - b1) * gj;
            m2[j] = b2 * m2[j] + (1 - b2) * gj * gj;
            const double mh = m1[j] / (1 - std::pow(b1, static_cast<double>(t)));
            const double vh = m2[j] / (1 - std::pow(b2, static_cast<double>(t)));
            const double step = config.step_size * mh / (std::sqrt(vh) + eps);
            if (j < dim)
                p.mean[j] += step;
            else
                p.log_var[j - dim] += step;
        }
        for (Eigen::Index j = 0; j < dim; ++j)
            if (p.log_var[j] < min_log_var) {
                p.log_var[j] = min_log_var;
                res.variance_clamped = true;
            }
        const bool eval_now = (config.eval_every > 0 && t % config.eval_every == 0) || t == config.steps;
        if (eval_now) {
            DiagonalGaussian cur(p.mean, p.log_var.array().exp());
            const double val = gaussian_objective_value(form, kind, d, cur, mu, config.mc_samples, eval_seed);
            if (val > res.objective) {
                res.objective = val;
                res.posterior = cur;
            }
        }
    }
    return res;
}

nlohmann::json to_json(const Posterior& p) {
    const auto& cls = p.policy_class();
    nlohmann::json j;
    j["class"] = cls.is_finite() ? "finite_actions" : "linear_softmax";
    j["K"] = cls.num_actions();
    if (!cls.is_finite()) j["d"] = cls.state_dim();
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    if (p.is_categorical()) {
        j["type"] = "categorical";
        j["weights"] = p.categorical().weights();
    } else if (p.is_gaussian()) {
        j["type"] = "gaussian";
        j["mean"] = vec(p.gaussian().mean());
        j["variance"] = vec(p.gaussian().variance());
    } else {
        j["type"] = "point";
        j["theta"] = vec(flatten(p.point_theta()));
    }
    return j;
}

nlohmann::json to_json(const Certificate& c) {
    nlohmann::json j;
    j["posterior"] = to_json(c.posterior);
    if (c.prior) j["prior"] = to_json(*c.prior);
    j["bound"] = to_json(c.bound);
    j["data_partition"] = {{"description", c.partition},
                           {"prior_records", {c.prior_begin, c.prior_end}},
                           {"bound_records", {c.bound_begin, c.bound_end}}};
    return j;
}

Certificate offline_cb_pipeline(const LoggedDataset& d, double delta, const PipelineConfig& config,
                                PipelineTrace* trace) {
    Confidence conf(delta);
    if (!d.iid()) throw Error(ErrorKind::NonIid, "offline pipeline needs a single fixed behaviour policy");
    if (!d.contextual()) throw Error(ErrorKind::Domain, "offline pipeline needs contextual data");
    const std::size_t n = d.size();
    if (n < 4) throw Error(ErrorKind::Domain, "offline pipeline needs n >= 4");
    if (config.betas.empty() || config.tau_grid < 1) throw Error(ErrorKind::Config, "empty beta or tau grid");
    const std::size_t half = n / 2;
    const std::size_t n_tr = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(config.train_fraction * static_cast<double>(half))), 1, half - 1);
    const auto d1 = d.slice(0, half);
    const auto d2 = d.slice(half, n);
    const auto d_tr = d1.slice(0, n_tr);
    const auto d_val = d1.slice(n_tr, half);
    const std::size_t dim = d.state_dim() * d.num_actions();
    const auto cls = PolicyClass::linear_softmax(d.state_dim(), d.num_actions());
    const auto standard = DiagonalGaussian::standard(dim);

    // Prior: maximize E r_IS - beta KL(mu_D || N(0, I)), beta by validation.
    std::size_t best_b = 0;
    double best_val = -kInfinity;
    for (std::size_t bi = 0; bi < config.betas.size(); ++bi) {
        auto cfg = config.prior_learner;
        cfg.seed = derive_seed(config.seed, 10 + bi);
        const auto res = maximize_bound_gaussian(BoundForm::linear(config.betas[bi], 0.0), EstimatorKind::is(), d_tr,
                                                 standard, standard, cfg);
        const double val = posterior_estimate(EstimatorKind::is(), Posterior::gaussian(cls, res.posterior), d_val,
                                              cfg.mc_samples, derive_seed(config.seed, 100 + bi));
        if (val > best_val) {
            best_val = val;
            best_b = bi;
        }
    }
    const double beta = config.betas[best_b];
    auto prior_cfg = config.prior_learner;
    prior_cfg.seed = derive_seed(config.seed, 20);
    const auto mu_d =
        maximize_bound_gaussian(BoundForm::linear(beta, 0.0), EstimatorKind::is(), d1, standard, standard, prior_cfg)
            .posterior;

    // tau on a log grid over [eps_n, 1], scored on the first half.
    const double n2 = static_cast<double>(d2.size());
    const double log_term = std::log(2.0 * std::sqrt(n2) / delta);
    const auto w1 = sampled_weights(mu_d, d1, config.prior_learner.mc_samples, derive_seed(config.seed, 30));
    const double eps_n = d.epsilon();
    double tau = 1.0, best_tau_obj = -kInfinity;
    if (trace) {
        trace->tau_values.clear();
        trace->tau_objective.clear();
    }
    for (std::size_t g = 0; g < config.tau_grid; ++g) {
        const double frac = config.tau_grid == 1 ? 0.0 : static_cast<double>(g) / static_cast<double>(config.tau_grid - 1);
        const double t = std::exp(std::log(eps_n) * (1.0 - frac));
        const double r = mean_estimate(w1, d1, 1.0 / t);
        const double obj = kl_inverse_lower(std::clamp(t * r, 0.0, 1.0), log_term / n2) / t;
        if (trace) {
            trace->tau_values.push_back(t);
            trace->tau_objective.push_back(obj);
        }
        if (obj > best_tau_obj) {
            best_tau_obj = obj;
            tau = t;
        }
    }

    // Posterior on the second half, initialized at the prior.
    auto post_cfg = config.posterior_learner;
    post_cfg.seed = derive_seed(config.seed, 40);
    const auto form = BoundForm::kl_inverse(tau, n2, log_term);
    const auto rho = maximize_bound_gaussian(form, EstimatorKind::cis(tau), d2, mu_d, mu_d, post_cfg).posterior;

    Certificate cert{Posterior::gaussian(cls, rho), Posterior::gaussian(cls, mu_d), {}, {}, 0, half, half, n};
    cert.bound = kl_family_bound(EstimatorKind::cis(tau), cert.posterior, *cert.prior, d2, delta, KlMode::Inverse,
                                 EvalOptions{config.posterior_learner.mc_samples, derive_seed(config.seed, 50)});
    cert.bound.bound_id = "offline_pipeline_kl_inverse_CIS";
    cert.bound.params.beta = beta;
    cert.bound.params.extra["prior_validation_reward"] = best_val;
    cert.partition = "prior and tau learned on records [0, " + std::to_string(half) +
                     "); posterior and bound on records [" + std::to_string(half) + ", " + std::to_string(n) + ")";
    if (trace) {
        trace->selected_beta = beta;
        trace->selected_tau = tau;
    }
    return cert;
}

namespace {

enum class Baseline { Tpoem, Tl2 };

// Deterministic softmax-policy objective on the records idx; var_n is the n
// inside sqrt(v/n).
double baseline_objective(Baseline kind, const LoggedDataset& d, std::span<const std::size_t> idx,
                          const WeightMatrix& theta, double beta, double tau, double var_n, WeightMatrix* grad) {
    const std::size_t dim = d.state_dim(), k = d.num_actions(), b = idx.size();
    const double cap = 1.0 / tau;
    std::vector<double> x(b), z(k);
    std::vector<std::vector<double>> dx;  // per-record d x / d logits (only when unclipped)
    if (grad) dx.assign(b, std::vector<double>(k, 0.0));
    for (std::size_t bi = 0; bi < b; ++bi) {
        const std::size_t i = idx[bi];
        linear_logits(theta, d.state(i), z.data());
        softmax_inplace(z.data(), k);
        const std::size_t act = d.action(i);
        const double w = z[act] / d.propensity(i);
        x[bi] = std::min(w, cap) * d.reward(i);
        if (grad && w <= cap) {
            const double coef = d.reward(i) / d.propensity(i);
            for (std::size_t a = 0; a < k; ++a) dx[bi][a] = coef * z[act] * ((a == act ? 1.0 : 0.0) - z[a]);
        }
    }
    KahanSum s;
    for (double v : x) s.add(v);
    const double mean = s.value() / static_cast<double>(b);
    double value = mean;
    // coefficient of d x_i in the objective
    std::vector<double> cx(b, 1.0 / static_cast<double>(b));
    if (kind == Baseline::Tpoem) {
        if (b < 2) throw Error(ErrorKind::Domain, "sample variance needs at least two records");
        KahanSum q;
        for (double v : x) q.add((v - mean) * (v - mean));
        const double var = q.value() / static_cast<double>(b - 1);
        const double sd = std::sqrt(var / var_n);
        value -= beta * sd;
        if (grad && sd > 0.0)
            for (std::size_t bi = 0; bi < b; ++bi)
                cx[bi] -= beta / (2.0 * sd * var_n) * 2.0 * (x[bi] - mean) / static_cast<double>(b - 1);
    } else {
        value -= beta * theta.squaredNorm();
    }
    if (grad) {
        grad->setZero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(k));
        for (std::size_t bi = 0; bi < b; ++bi) {
            const auto st = d.state(idx[bi]);
            for (std::size_t a = 0; a < k; ++a) {
                const double c = cx[bi] * dx[bi][a];
                if (c == 0.0) continue;
                for (std::size_t j = 0; j < dim; ++j) (*grad)(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)) += c * st[j];
            }
        }
        if (kind == Baseline::Tl2) *grad -= 2.0 * beta * theta;
    }
    return value;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

WeightMatrix train_baseline(Baseline kind, const LoggedDataset& d, double beta, double tau, const LearnerConfig& cfg) {
    const std::size_t n = d.size(), dim = d.state_dim(), k = d.num_actions();
    WeightMatrix theta = WeightMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(k));
    WeightMatrix m1 = theta, m2 = theta, g;
    Rng rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t b = std::min(cfg.batch_size, n);
    std::vector<std::size_t> idx = all_indices(b);
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
        if (b < n)
            for (auto& i : idx) i = pick(rng);
        baseline_objective(kind, d, idx, theta, beta, tau, static_cast<double>(n), &g);
        m1 = 0.9 * m1 + 0.1 * g;
        m2 = 0.999 * m2 + 0.001 * g.cwiseProduct(g);
        const double c1 = 1 - std::pow(0.9, static_cast<double>(t)), c2 = 1 - std::pow(0.999, static_cast<double>(t));
        theta.array() += cfg.step_size * (m1.array() / c1) / ((m2.array() / c2).sqrt() + 1e-8);
        if (!theta.allFinite()) throw Error(ErrorKind::Domain, "baseline training diverged");
    }
    return theta;
}

Certificate select_baseline(Baseline kind, const LoggedDataset& d, double delta, double tau,
                            const BaselineConfig& config) {
    Confidence conf(delta);
    if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorKind::Domain, "tau must lie in (0,1]");
    if (!d.contextual()) throw Error(ErrorKind::Domain, "baselines need contextual data");
    const std::size_t n = d.size();
    if (n < 5) throw Error(ErrorKind::Domain, "baseline selection needs n >= 5");
    const std::size_t n_tr = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(config.train_fraction * static_cast<double>(n))), 1, n - 2);
    const auto d_tr = d.slice(0, n_tr);
    const auto d_val = d.slice(n_tr, n);
    const std::size_t n_val = d_val.size();
    std::vector<double> betas;
    if (kind == Baseline::Tpoem)
        betas = {1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    else
        betas = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};

    const auto cls = PolicyClass::linear_softmax(d.state_dim(), d.num_actions());
    double best = -kInfinity;
    std::size_t best_i = 0;
    WeightMatrix best_theta;
    BoundReport best_report;
    for (std::size_t bi = 0; bi < betas.size(); ++bi) {
        auto cfg = config.learner;
        cfg.seed = derive_seed(config.learner.seed, bi);
        const auto theta = train_baseline(kind, d_tr, betas[bi], tau, cfg);
        const double r = cis_reward(Policy(theta), d_val, tau);
        BoundReport rep;
        rep.composition = Composition::Additive;
        rep.terms = {{"empirical_estimate", r}, {"variance_term", 0.0}, {"kl_term", 0.0},
                     {"confidence_term", 0.0}, {"bias_flag", 0.0}};
        if (kind == Baseline::Tpoem) {
            const double v = cis_sample_variance(Policy(theta), d_val, tau);
            const double l = std::log(2.0 * 6.0 / delta);
            rep.bound_id = "tpoem_validation";
            rep.terms["variance_term"] = std::sqrt(2.0 * v * l / static_cast<double>(n_val));
            rep.terms["confidence_term"] = 7.0 * l / (tau * static_cast<double>(n_val - 1));
            rep.terms["sample_variance"] = v;
        } else {
            rep.bound_id = "tl2_validation";
            rep.terms["confidence_term"] = std::sqrt(std::log(6.0 / delta) / (2.0 * static_cast<double>(n_val))) / tau;
        }
        rep.value = recompute_value(rep);
        rep.params.delta = delta;
        rep.params.tau = tau;
        rep.params.beta = betas[bi];
        rep.params.estimator = "CIS";
        rep.params.extra["candidates"] = static_cast<double>(betas.size());
        if (rep.value > best) {
            best = rep.value;
            best_i = bi;
            best_theta = theta;
            best_report = rep;
        }
    }
    best_report.params.extra["selected_index"] = static_cast<double>(best_i);
    Certificate cert{Posterior::point(cls, best_theta), std::nullopt, best_report, {}, 0, n_tr, n_tr, n};
    cert.partition = "candidates trained on records [0, " + std::to_string(n_tr) + "); bound on validation records [" +
                     std::to_string(n_tr) + ", " + std::to_string(n) + ")";
    return cert;
}

}  // namespace

double tpoem_objective(const LoggedDataset& d, const WeightMatrix& theta, double beta, double tau, WeightMatrix* grad) {
    const auto idx = all_indices(d.size());
    return baseline_objective(Baseline::Tpoem, d, idx, theta, beta, tau, static_cast<double>(d.size()), grad);
}

double tl2_objective(const LoggedDataset& d, const WeightMatrix& theta, double beta, double tau, WeightMatrix* grad) {
    const auto idx = all_indices(d.size());
    return baseline_objective(Baseline::Tl2, d, idx, theta, beta, tau, static_cast<double>(d.size()), grad);
}

Certificate tpoem_select(const LoggedDataset& d, double delta, double tau, const BaselineConfig& config) {
    return select_baseline(Baseline::Tpoem, d, delta, tau, config);
}

Certificate tl2_select(const LoggedDataset& d, double delta, double tau, const BaselineConfig& config) {
    return select_baseline(Baseline::Tl2, d, delta, tau, config);
}

double tpoem_validation_bound(double r_cis, double v_cis, std::size_t n_val, double tau, double delta) {
    const double l = std::log(2.0 * 6.0 / delta);
    return r_cis - std::sqrt(2.0 * v_cis * l / static_cast<double>(n_val)) -
           7.0 * l / (tau * static_cast<double>(n_val - 1));
}

double tl2_validation_bound(double r_cis, std::size_t n_val, double tau, double delta) {
    return r_cis - std::sqrt(std::log(6.0 / delta) / (2.0 * static_cast<double>(n_val))) / tau;
}

}  // namespace pacbandit
