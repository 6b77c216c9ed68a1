#include "pacbandit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>

#include "pacbandit/errors.hpp"
#include "pacbandit/numeric.hpp"
#include "pacbandit/online.hpp"
#include "pacbandit/svg.hpp"

namespace pacbandit {

using nlohmann::json;

std::string BoundSpec::label() const {
    std::string s = id;
    if (estimator != "IS" && id != "efron_stein_wis") s += "_" + estimator;
    if (tau) {
        std::ostringstream o;
        o << *tau;
        s += "(tau=" + o.str() + ")";
    }
    return s;
}

EstimatorKind BoundSpec::kind() const {
    if (estimator == "IS") return EstimatorKind::is();
    if (estimator == "WIS") return EstimatorKind::wis();
    if (estimator == "CIS") {
        if (!tau) throw Error(ErrorKind::Config, "CIS bound " + id + " needs tau");
        return EstimatorKind::cis(*tau);
    }
    throw Error(ErrorKind::Config, "unknown estimator: " + estimator);
}

BoundSpec BoundSpec::from_json(const json& j) {
    BoundSpec s;
    if (j.is_string()) {
        s.id = j.get<std::string>();
        return s;
    }
    s.id = j.at("id").get<std::string>();
    s.estimator = j.value("estimator", std::string("IS"));
    if (j.contains("tau")) s.tau = j["tau"].get<double>();
    if (j.contains("lambda")) s.lambda = j["lambda"].get<double>();
    if (j.contains("c")) s.c = j["c"].get<double>();
    if (j.contains("tau_grid")) s.tau_grid = j["tau_grid"].get<std::vector<double>>();
    return s;
}

json BoundSpec::to_json() const {
    json j{{"id", id}, {"estimator", estimator}};
    if (tau) j["tau"] = *tau;
    if (lambda) j["lambda"] = *lambda;
    if (c) j["c"] = *c;
    if (!tau_grid.empty()) j["tau_grid"] = tau_grid;
    return j;
}

CategoricalDistribution maximize_kl_family_posterior(const EstimatorKind& kind, const LoggedDataset& d,
                                                     const CategoricalDistribution& mu, double delta, KlMode mode,
                                                     const LearnerConfig& config) {
    const double n = static_cast<double>(d.size());
    const double kappa = estimator_kappa(kind, d);
    const double log_term = std::log(2.0 * std::sqrt(n) / Confidence(delta).value());
    const auto form = mode == KlMode::Inverse ? BoundForm::kl_inverse(kappa, n, log_term)
                                              : BoundForm::pinsker(kappa, n, log_term);
    return maximize_bound_categorical(categorical_objective(form, per_action_estimates(kind, d, mu.size()), mu), mu,
                                      config);
}

namespace {

struct Ctx {
    const BoundSpec& spec;
    const Environment& env;
    const LoggedDataset& d;
    const BehaviourPolicy& behaviour;
    double delta;
    std::uint64_t seed;
    const RunSettings& settings;
    PolicyClass cls;
    EvalOptions eval;
    double n() const { return static_cast<double>(d.size()); }
};

BoundForm linear_form(const std::string& id, double n, double kappa, double lambda, double delta) {
    const double l = Confidence(delta).log_inv();
    if (id == "ha") return BoundForm::linear(1.0 / lambda, lambda / (8.0 * n * kappa * kappa) + l / lambda);
    return BoundForm::linear(1.0 / lambda, lambda * kEMinus2 / (n * kappa) + l / lambda);
}

double default_lambda(const std::string& id, double n, double kappa, double delta) {
    return id == "ha" ? default_ha_lambda(n, kappa, delta) : default_bernstein_lambda(n, kappa, delta);
}

// (lambda, value) maximizing max_rho of the worst-case Bernstein objective over (0, n kappa].
std::pair<double, double> oracle_bernstein_lambda(const CategoricalDistribution& mu, const std::vector<double>& s,
                                                  double n, double kappa, double delta) {
    const double l = Confidence(delta).log_inv();
    auto f = [&](double lambda) {
        const auto rho = gibbs_posterior_finite(mu, s, lambda);
        double r = 0.0;
        for (std::size_t a = 0; a < s.size(); ++a) r += rho[a] * s[a];
        return r - lambda * kEMinus2 / (n * kappa) - (kl_categorical(rho, mu) + l) / lambda;
    };
    const double hi = n * kappa, lo = 1e-3 * hi;
    double best_x = hi, best_f = f(hi);
    const int grid = 200;
    for (int i = 0; i < grid; ++i) {
        const double x = lo * std::pow(hi / lo, static_cast<double>(i) / grid);
        const double fx = f(x);
        if (fx > best_f) best_f = fx, best_x = x;
    }
    const double step = std::pow(hi / lo, 1.0 / grid);
    double a = std::log(best_x / step), b = std::log(std::min(hi, best_x * step));
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 80 && b > a; ++it) {
        const double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
        if (f(std::exp(x1)) >= f(std::exp(x2)))
            b = x2;
        else
            a = x1;
    }
    const double mid = std::exp(0.5 * (a + b));
    if (f(mid) > best_f) best_f = f(mid), best_x = mid;
    return {best_x, best_f};
}

EvalOutcome finish(const Ctx& c, BoundReport report, Posterior rho) {
    auto truth = c.settings.truth;
    truth.seed = derive_seed(c.seed, 8);
    const double r = true_reward(c.env, rho, truth);
    return {std::move(report), std::move(rho), r};
}

EvalOutcome eval_finite(const Ctx& c) {
    const std::string& id = c.spec.id;
    const std::size_t k = c.cls.num_actions();
    const auto mu = CategoricalDistribution::uniform(k);
    const Posterior mu_p = Posterior::categorical(c.cls, mu);
    auto wrap = [&](const CategoricalDistribution& r) { return Posterior::categorical(c.cls, r); };
    auto cat_cfg = c.settings.categorical;
    cat_cfg.seed = derive_seed(c.seed, 5);

    if (id == "ha" || id == "bernstein") {
        const auto kind = c.spec.kind();
        const double kappa = estimator_kappa(kind, c.d);
        const double lambda = c.spec.lambda ? *c.spec.lambda : default_lambda(id, c.n(), kappa, c.delta);
        const auto rho = gibbs_posterior_finite(mu, per_action_estimates(kind, c.d, k), lambda);
        auto rep = id == "ha" ? hoeffding_azuma_bound(kind, wrap(rho), mu_p, c.d, lambda, c.delta, c.eval)
                              : bernstein_bound(kind, wrap(rho), mu_p, c.d, lambda, c.delta, VarianceMode::worst(), c.eval);
        return finish(c, rep, wrap(rho));
    }
    if (id == "kl_inverse" || id == "pinsker") {
        const auto kind = c.spec.kind();
        const auto mode = id == "kl_inverse" ? KlMode::Inverse : KlMode::Pinsker;
        const auto rho = maximize_kl_family_posterior(kind, c.d, mu, c.delta, mode, cat_cfg);
        return finish(c, kl_family_bound(kind, wrap(rho), mu_p, c.d, c.delta, mode, c.eval), wrap(rho));
    }
    if (id == "kl_inverse_best_tau") {
        auto grid = c.spec.tau_grid.empty() ? std::vector<double>{0.05, 0.1, 0.2, 0.5, 1.0} : c.spec.tau_grid;
        std::vector<std::optional<CategoricalDistribution>> rhos(grid.size());
        std::vector<std::string> labels;
        std::vector<std::function<BoundReport(double)>> evals;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            labels.push_back("tau=" + std::to_string(grid[i]));
            evals.push_back([&, i](double di) {
                const auto kind = EstimatorKind::cis(grid[i]);
                rhos[i] = maximize_kl_family_posterior(kind, c.d, mu, di, KlMode::Inverse, cat_cfg);
                return kl_family_bound(kind, wrap(*rhos[i]), mu_p, c.d, di, KlMode::Inverse, c.eval);
            });
        }
        auto rep = union_bound_select(uniform_candidates(labels, evals, c.delta), c.delta);
        const auto win = static_cast<std::size_t>(rep.params.extra.at("union_winner"));
        return finish(c, rep, wrap(*rhos[win]));
    }
    if (id == "efron_stein_wis") {
        std::vector<Policy> pols;
        for (std::size_t a = 0; a < k; ++a) pols.emplace_back(a);
        const std::uint64_t es_seed = derive_seed(c.seed, 6);
        const auto proxies = wis_variance_proxy_many(pols, c.d, c.behaviour, c.settings.es_ghost_draws, es_seed);
        auto w = per_action_estimates(EstimatorKind::wis(), c.d, k);
        std::vector<double> init(k, 0.0);
        for (std::size_t a = 0; a < k; ++a) {
            if (std::isnan(w[a])) {
                w[a] = 0.0;
            } else {
                init[a] = 1.0;
            }
        }
        const auto obj = efron_stein_objective(w, proxies, mu, std::nullopt, c.delta);
        const auto rho =
            maximize_bound_categorical(obj, CategoricalDistribution::from_unnormalized(init), cat_cfg);
        auto rep = efron_stein_wis_bound(wrap(rho), mu_p, c.d, c.behaviour, std::nullopt, c.delta,
                                         c.settings.es_ghost_draws, es_seed, true, c.eval);
        return finish(c, rep, wrap(rho));
    }
    if (id == "kl_inverse_split") {
        std::optional<CategoricalDistribution> rho;
        auto rep = split_prior_bound(
            c.d, SplitSpec::half(c.d.size()),
            [&](const LoggedDataset& first) { return wrap(learn_gibbs_prior(mu, first)); },
            [&](const Posterior& prior, const LoggedDataset& second, double di) {
                rho = maximize_kl_family_posterior(EstimatorKind::is(), second, prior.categorical(), di,
                                                   KlMode::Inverse, cat_cfg);
                return kl_family_bound(EstimatorKind::is(), wrap(*rho), prior, second, di, KlMode::Inverse, c.eval);
            },
            c.delta);
        rep.bound_id = "kl_inverse_split_prior";
        return finish(c, rep, wrap(*rho));
    }
    if (id == "dp_prior") {
        const auto lambdas = default_gamma_grid(c.n(), c.d.epsilon());
        std::vector<SgldPrior> priors;
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            auto cfg = c.settings.sgld;
            cfg.seed = derive_seed(c.seed, 20 + i);
            priors.push_back(sgld_gibbs_prior(c.d, lambdas[i], c.cls, cfg));
        }
        std::vector<std::optional<CategoricalDistribution>> rhos(lambdas.size());
        std::vector<std::string> labels;
        std::vector<std::function<BoundReport(double)>> evals;
        const auto scores = per_action_estimates(EstimatorKind::is(), c.d, k);
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            labels.push_back("lambda=" + std::to_string(lambdas[i]));
            evals.push_back([&, i](double di) {
                const auto& p = priors[i];
                const double n = c.n();
                const auto form = BoundForm::kl_inverse(
                    c.d.epsilon(), n, std::log(4.0 * std::sqrt(n) / di) + n * dp_extra_budget(n, p.eta, di));
                rhos[i] = maximize_bound_categorical(categorical_objective(form, scores, p.prior.categorical()),
                                                     p.prior.categorical(), cat_cfg);
                auto r = dp_prior_bound(wrap(*rhos[i]), p.prior, p.eta, c.d, di, c.eval);
                r.params.lambda = lambdas[i];
                return r;
            });
        }
        auto rep = union_bound_select(uniform_candidates(labels, evals, c.delta), c.delta);
        const auto win = static_cast<std::size_t>(rep.params.extra.at("union_winner"));
        return finish(c, rep, wrap(*rhos[win]));
    }
    if (id == "lever" || id == "oneto") {
        auto rep = id == "lever" ? best_lever_bound(mu, c.d, c.delta) : best_oneto_bound(mu, c.d, c.delta);
        return finish(c, rep, wrap(lever_posterior(mu, c.d, *rep.params.gamma)));
    }
    if (id == "localized_bernstein" || id == "ha_empirical_gibbs") {
        auto rep = id == "localized_bernstein" ? best_localized_bernstein(mu, c.d, c.delta)
                                               : best_ha_empirical_gibbs(mu, c.d, c.delta);
        const auto scores = per_action_estimates(EstimatorKind::is(), c.d, k);
        return finish(c, rep, wrap(gibbs_posterior_finite(mu, scores, *rep.params.lambda)));
    }
    if (id == "bernstein_subset_lambda") {
        auto res = subset_lambda_bernstein(mu, c.d, c.delta);
        return finish(c, res.report, wrap(res.rho));
    }
    if (id == "bernstein_geometric") {
        const double cc = c.spec.c ? *c.spec.c : 1.5;
        const double n = c.n(), eps = c.d.epsilon();
        const double nu = geometric_grid_count(n, eps, c.delta, cc);
        const auto form = BoundForm::sqrt_penalty((1.0 + cc) * std::sqrt(kEMinus2 / (n * eps)),
                                                  std::log(nu / c.delta));
        const auto rho = maximize_bound_categorical(
            categorical_objective(form, per_action_estimates(EstimatorKind::is(), c.d, k), mu), mu, cat_cfg);
        return finish(c, geometric_lambda_bernstein(wrap(rho), mu_p, c.d, cc, c.delta, c.eval), wrap(rho));
    }
    if (id == "bernstein_oracle_lambda") {
        const double kappa = c.d.epsilon();
        const auto scores = per_action_estimates(EstimatorKind::is(), c.d, k);
        const auto [lambda, value] = oracle_bernstein_lambda(mu, scores, c.n(), kappa, c.delta);
        (void)value;
        const auto rho = gibbs_posterior_finite(mu, scores, lambda);
        auto rep = bernstein_bound(EstimatorKind::is(), wrap(rho), mu_p, c.d, lambda, c.delta, VarianceMode::worst(),
                                   c.eval);
        rep.bound_id = "bernstein_oracle_lambda";
        rep.notes.push_back("lambda tuned on the evaluation data; reference value, not a certified bound");
        return finish(c, rep, wrap(rho));
    }
    throw Error(ErrorKind::Config, "bound " + id + " is not available for finite policy classes");
}

EvalOutcome eval_linear(const Ctx& c) {
    const std::string& id = c.spec.id;
    const auto standard = DiagonalGaussian::standard(c.cls.num_params());
    const Posterior std_p = Posterior::gaussian(c.cls, standard);
    auto wrap = [&](const DiagonalGaussian& g) { return Posterior::gaussian(c.cls, g); };
    auto g_cfg = c.settings.gaussian;
    g_cfg.seed = derive_seed(c.seed, 5);

    if (id == "kl_inverse" || id == "pinsker" || id == "ha" || id == "bernstein") {
        const auto kind = c.spec.kind();
        const double kappa = estimator_kappa(kind, c.d), n = c.n();
        const double log_term = std::log(2.0 * std::sqrt(n) / Confidence(c.delta).value());
        std::optional<double> lambda;
        BoundForm form = BoundForm::kl_inverse(kappa, n, log_term);
        if (id == "pinsker") form = BoundForm::pinsker(kappa, n, log_term);
        if (id == "ha" || id == "bernstein") {
            lambda = c.spec.lambda ? *c.spec.lambda : default_lambda(id, n, kappa, c.delta);
            form = linear_form(id, n, kappa, *lambda, c.delta);
        }
        const auto rho = wrap(maximize_bound_gaussian(form, kind, c.d, standard, standard, g_cfg).posterior);
        BoundReport rep;
        if (id == "ha")
            rep = hoeffding_azuma_bound(kind, rho, std_p, c.d, lambda, c.delta, c.eval);
        else if (id == "bernstein")
            rep = bernstein_bound(kind, rho, std_p, c.d, lambda, c.delta, VarianceMode::worst(), c.eval);
        else
            rep = kl_family_bound(kind, rho, std_p, c.d, c.delta,
                                  id == "kl_inverse" ? KlMode::Inverse : KlMode::Pinsker, c.eval);
        return finish(c, rep, rho);
    }
    if (id == "kl_inverse_split") {
        std::optional<Posterior> rho;
        auto rep = split_prior_bound(
            c.d, SplitSpec::half(c.d.size()),
            [&](const LoggedDataset& first) {
                auto cfg = g_cfg;
                cfg.seed = derive_seed(c.seed, 30);
                return wrap(learn_gaussian_prior(first, cfg));
            },
            [&](const Posterior& prior, const LoggedDataset& second, double di) {
                const double n2 = static_cast<double>(second.size());
                const auto form = BoundForm::kl_inverse(second.epsilon(), n2, std::log(2.0 * std::sqrt(n2) / di));
                rho = wrap(maximize_bound_gaussian(form, EstimatorKind::is(), second, prior.gaussian(),
                                                   prior.gaussian(), g_cfg)
                               .posterior);
                return kl_family_bound(EstimatorKind::is(), *rho, prior, second, di, KlMode::Inverse, c.eval);
            },
            c.delta);
        rep.bound_id = "kl_inverse_split_prior";
        return finish(c, rep, *rho);
    }
    if (id == "dp_prior") {
        const auto lambdas = default_gamma_grid(c.n(), c.d.epsilon());
        std::vector<SgldPrior> priors;
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            auto cfg = c.settings.sgld;
            cfg.seed = derive_seed(c.seed, 20 + i);
            priors.push_back(sgld_gibbs_prior(c.d, lambdas[i], c.cls, cfg));
        }
        std::vector<std::optional<Posterior>> rhos(lambdas.size());
        std::vector<std::string> labels;
        std::vector<std::function<BoundReport(double)>> evals;
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            labels.push_back("lambda=" + std::to_string(lambdas[i]));
            evals.push_back([&, i](double di) {
                const auto& p = priors[i];
                const double n = c.n();
                const auto form = BoundForm::kl_inverse(
                    c.d.epsilon(), n, std::log(4.0 * std::sqrt(n) / di) + n * dp_extra_budget(n, p.eta, di));
                rhos[i] = wrap(maximize_bound_gaussian(form, EstimatorKind::is(), c.d, p.prior.gaussian(),
                                                       p.prior.gaussian(), g_cfg)
                                   .posterior);
                auto r = dp_prior_bound(*rhos[i], p.prior, p.eta, c.d, di, c.eval);
                r.params.lambda = lambdas[i];
                return r;
            });
        }
        auto rep = union_bound_select(uniform_candidates(labels, evals, c.delta), c.delta);
        const auto win = static_cast<std::size_t>(rep.params.extra.at("union_winner"));
        return finish(c, rep, *rhos[win]);
    }
    if (id == "offline_pipeline") {
        auto cfg = c.settings.pipeline;
        cfg.seed = derive_seed(c.seed, 40);
        const auto cert = offline_cb_pipeline(c.d, c.delta, cfg);
        return finish(c, cert.bound, cert.posterior);
    }
    if (id == "tl2" || id == "tpoem") {
        const double tau = c.spec.tau ? *c.spec.tau : c.d.epsilon();
        auto cfg = c.settings.baseline;
        cfg.learner.seed = derive_seed(c.seed, 50);
        const auto cert = id == "tl2" ? tl2_select(c.d, c.delta, tau, cfg) : tpoem_select(c.d, c.delta, tau, cfg);
        return finish(c, cert.bound, cert.posterior);
    }
    throw Error(ErrorKind::Config, "bound " + id + " is not available for linear softmax policies");
}

}  // namespace

EvalOutcome evaluate_bound(const BoundSpec& spec, const Environment& env, const LoggedDataset& d,
                           const BehaviourPolicy& behaviour, double delta, std::uint64_t seed,
                           const RunSettings& settings) {
    Ctx c{spec, env, d, behaviour, delta, seed, settings, env_policy_class(env), settings.eval};
    c.eval.seed = derive_seed(seed, 7);
    return c.cls.is_finite() ? eval_finite(c) : eval_linear(c);
}

void ExperimentConfig::validate() const {
    if (version != 1) throw Error(ErrorKind::Config, "unsupported config version");
    if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorKind::Config, "delta must lie in (0,1]");
    if (n < 1) throw Error(ErrorKind::Config, "n must be >= 1");
    if (seeds.empty()) throw Error(ErrorKind::Config, "no seeds");
    if (mode != "offline" && mode != "online") throw Error(ErrorKind::Config, "mode must be offline or online");
    if (env.type != "mab_binary" && env.type != "cb_binary_linear" && env.type != "csv")
        throw Error(ErrorKind::Config, "unknown env type: " + env.type);
    if (env.type == "csv" && env.path.empty()) throw Error(ErrorKind::Config, "csv env needs a path");
    if (mode == "online") {
        if (env.type != "mab_binary") throw Error(ErrorKind::Config, "online mode runs on mab_binary");
        for (const auto& s : schedules) ScheduleSpec::parse(s);
    }
    parse_behaviour_kind(behaviour);
    static const std::vector<std::string> known = {
        "ha", "pinsker", "kl_inverse", "bernstein", "kl_inverse_best_tau", "efron_stein_wis", "kl_inverse_split",
        "dp_prior", "lever", "oneto", "localized_bernstein", "ha_empirical_gibbs", "bernstein_subset_lambda",
        "bernstein_geometric", "bernstein_oracle_lambda", "offline_pipeline", "tl2", "tpoem"};
    for (const auto& b : bounds) {
        if (std::find(known.begin(), known.end(), b.id) == known.end())
            throw Error(ErrorKind::Config, "unknown bound: " + b.id);
        if (b.estimator != "IS" && b.estimator != "CIS" && b.estimator != "WIS")
            throw Error(ErrorKind::Config, "unknown estimator: " + b.estimator);
        if (b.estimator == "CIS" && !b.tau && b.id != "kl_inverse_best_tau")
            throw Error(ErrorKind::Config, "CIS bound needs tau");
        if (b.tau && !(*b.tau > 0.0 && *b.tau <= 1.0)) throw Error(ErrorKind::Config, "tau must lie in (0,1]");
    }
}

namespace {

void learner_from_json(const json& j, LearnerConfig& c) {
    c.steps = j.value("steps", c.steps);
    c.step_size = j.value("step_size", c.step_size);
    c.mc_samples = j.value("mc_samples", c.mc_samples);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.eval_every = j.value("eval_every", c.eval_every);
}

json learner_to_json(const LearnerConfig& c) {
    return {{"steps", c.steps}, {"step_size", c.step_size}, {"mc_samples", c.mc_samples},
            {"batch_size", c.batch_size}, {"eval_every", c.eval_every}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("preset"))
            c = preset(j["preset"].get<std::string>(), j.value("base_seed", std::uint64_t{0}),
                       j.value("num_seeds", std::size_t{0}));
        c.version = j.value("version", 1);
        c.name = j.value("name", c.name);
        c.mode = j.value("mode", c.mode);
        if (j.contains("env")) {
            const auto& e = j["env"];
            c.env.type = e.value("type", c.env.type);
            c.env.k = e.value("K", c.env.k);
            c.env.d = e.value("d", c.env.d);
            c.env.path = e.value("path", c.env.path);
        }
        if (j.contains("behaviour")) {
            const auto& b = j["behaviour"];
            c.behaviour = b.value("kind", c.behaviour);
            c.behaviour_epsilon = b.value("epsilon", c.behaviour_epsilon);
        }
        c.n = j.value("n", c.n);
        c.delta = j.value("delta", c.delta);
        if (j.contains("bounds")) {
            c.bounds.clear();
            for (const auto& b : j["bounds"]) c.bounds.push_back(BoundSpec::from_json(b));
        }
        if (j.contains("sweep_K")) c.sweep_k = j["sweep_K"].get<std::vector<std::size_t>>();
        if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("schedules")) c.schedules = j["schedules"].get<std::vector<std::string>>();
        if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("settings")) {
            const auto& s = j["settings"];
            if (s.contains("categorical")) learner_from_json(s["categorical"], c.settings.categorical);
            if (s.contains("gaussian")) learner_from_json(s["gaussian"], c.settings.gaussian);
            if (s.contains("pipeline_prior")) learner_from_json(s["pipeline_prior"], c.settings.pipeline.prior_learner);
            if (s.contains("pipeline_posterior"))
                learner_from_json(s["pipeline_posterior"], c.settings.pipeline.posterior_learner);
            if (s.contains("baseline")) learner_from_json(s["baseline"], c.settings.baseline.learner);
            c.settings.sgld.steps = s.value("sgld_steps", c.settings.sgld.steps);
            c.settings.sgld.step_size = s.value("sgld_step_size", c.settings.sgld.step_size);
            c.settings.es_ghost_draws = s.value("es_ghost_draws", c.settings.es_ghost_draws);
            c.settings.truth.states = s.value("truth_states", c.settings.truth.states);
            c.settings.truth.policies = s.value("truth_policies", c.settings.truth.policies);
            c.settings.eval.mc_samples = s.value("mc_samples", c.settings.eval.mc_samples);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("bad experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

json ExperimentConfig::to_json() const {
    json b = json::array();
    for (const auto& s : bounds) b.push_back(s.to_json());
    return {{"version", version},
            {"name", name},
            {"mode", mode},
            {"env", {{"type", env.type}, {"K", env.k}, {"d", env.d}, {"path", env.path}}},
            {"behaviour", {{"kind", behaviour}, {"epsilon", behaviour_epsilon}}},
            {"n", n},
            {"delta", delta},
            {"bounds", b},
            {"sweep_K", sweep_k},
            {"seeds", seeds},
            {"schedules", schedules},
            {"out_dir", out_dir.string()},
            {"settings",
             {{"categorical", learner_to_json(settings.categorical)},
              {"gaussian", learner_to_json(settings.gaussian)},
              {"pipeline_prior", learner_to_json(settings.pipeline.prior_learner)},
              {"pipeline_posterior", learner_to_json(settings.pipeline.posterior_learner)},
              {"baseline", learner_to_json(settings.baseline.learner)},
              {"sgld_steps", settings.sgld.steps},
              {"sgld_step_size", settings.sgld.step_size},
              {"es_ghost_draws", settings.es_ghost_draws},
              {"truth_states", settings.truth.states},
              {"truth_policies", settings.truth.policies},
              {"mc_samples", settings.eval.mc_samples}}}};
}

ExperimentConfig ExperimentConfig::preset(const std::string& name, std::uint64_t base_seed, std::size_t num_seeds) {
    ExperimentConfig c;
    c.name = name;
    std::size_t seeds = 20;
    auto is = [](std::string id, std::string est = "IS", std::optional<double> tau = std::nullopt) {
        BoundSpec b;
        b.id = std::move(id);
        b.estimator = std::move(est);
        b.tau = tau;
        return b;
    };
    if (name == "fig2") {
        c.mode = "online";
        c.n = 10000;
        c.schedules = {"exp3", "ha_exp3", "bern_exp3", "ha_eps_greedy", "bern_eps_greedy", "ucb1"};
    } else if (name == "fig3") {
        c.sweep_k = {2, 5, 10, 20, 30, 40, 50};
        c.bounds = {is("ha"), is("pinsker"), is("kl_inverse"), is("bernstein")};
    } else if (name == "fig4") {
        c.behaviour = "informative";
        c.bounds.push_back(is("kl_inverse"));
        for (double t : {0.05, 0.1, 0.2, 0.5, 1.0}) c.bounds.push_back(is("kl_inverse", "CIS", t));
        c.bounds.push_back(is("kl_inverse_best_tau", "CIS"));
    } else if (name == "fig5l") {
        seeds = 10;
        c.bounds = {is("kl_inverse"), is("kl_inverse_split"), is("dp_prior"),           is("lever"),
                    is("oneto"),      is("localized_bernstein"), is("ha_empirical_gibbs")};
    } else if (name == "fig5l-cb") {
        seeds = 10;
        c.env.type = "cb_binary_linear";
        c.n = 10000;
        c.bounds = {is("kl_inverse"), is("kl_inverse_split"), is("dp_prior")};
    } else if (name == "fig7") {
        c.bounds = {is("bernstein"), is("bernstein_subset_lambda"), is("bernstein_geometric"),
                    is("bernstein_oracle_lambda")};
    } else if (name == "offline") {
        seeds = 10;
        c.env.type = "cb_binary_linear";
        c.n = 10000;
        c.bounds = {is("offline_pipeline"), is("tl2"), is("tpoem")};
    } else {
        throw Error(ErrorKind::Config, "unknown preset: " + name);
    }
    if (num_seeds > 0) seeds = num_seeds;
    for (std::size_t i = 0; i < seeds; ++i) c.seeds.push_back(base_seed + i);
    c.out_dir = "out";
    return c;
}

Environment make_environment(const EnvSpec& spec, std::size_t k, std::uint64_t seed) {
    if (spec.type == "mab_binary") return gen_mab_binary(k, seed);
    if (spec.type == "cb_binary_linear") return gen_cb_binary_linear(spec.d, k, seed);
    if (spec.type == "csv") return csv_to_cb_env(spec.path, seed);
    throw Error(ErrorKind::Config, "unknown env type: " + spec.type);
}

double median(std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace {

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream o;
    o.precision(10);
    o << v;
    return o.str();
}

struct Run {
    ExperimentResult res;
    std::string svg;
};

Run run_online_experiment(const ExperimentConfig& c) {
    Run out;
    auto& res = out.res;
    const std::size_t k = c.env.k;
    std::vector<ScheduleSpec> scheds;
    for (const auto& s : c.schedules) scheds.push_back(ScheduleSpec::parse(s));
    const std::size_t tasks = c.seeds.size() * scheds.size();
    std::vector<std::optional<OnlineTrace>> traces(tasks);
    std::vector<std::string> errors(tasks);
    parallel_for(tasks, [&](std::size_t t) {
        const std::size_t si = t / scheds.size(), ai = t % scheds.size();
        try {
            const auto env = gen_mab_binary(k, derive_seed(c.seeds[si], 1));
            traces[t] = run_online(scheds[ai], env.means, c.n, derive_seed(c.seeds[si], 2 + ai));
        } catch (const std::exception& e) {
            errors[t] = "seed=" + std::to_string(c.seeds[si]) + " schedule=" + scheds[ai].name() + ": " + e.what();
        }
    });
    auto curve_for = [&](const ScheduleSpec& s, double n) {
        switch (s.kind) {
            case ScheduleKind::HoeffdingAzuma: return regret_bound_curve(RegretCurveKind::HoeffdingAzuma, n, k, c.delta).value;
            case ScheduleKind::HaEpsGreedy: return regret_bound_curve(RegretCurveKind::HoeffdingAzuma, n, k, c.delta, true).value;
            case ScheduleKind::Bernstein: return regret_bound_curve(RegretCurveKind::Bernstein, n, k, c.delta).value;
            case ScheduleKind::BernEpsGreedy: return regret_bound_curve(RegretCurveKind::Bernstein, n, k, c.delta, true).value;
            case ScheduleKind::Exp3: return regret_bound_curve(RegretCurveKind::HypothesizedExp3, n, k, c.delta).value;
            case ScheduleKind::Ucb1: return std::numeric_limits<double>::quiet_NaN();
        }
        return std::numeric_limits<double>::quiet_NaN();
    };
    for (std::size_t t = 0; t < tasks; ++t) {
        if (!errors[t].empty()) {
            res.failures.push_back(errors[t]);
            continue;
        }
        const auto& s = scheds[t % scheds.size()];
        ResultRow r;
        r.seed = c.seeds[t / scheds.size()];
        r.k = k;
        r.n = c.n;
        r.bound_id = s.name();
        r.label = s.name();
        r.bound_value = curve_for(s, static_cast<double>(c.n));
        r.expected_reward = std::numeric_limits<double>::quiet_NaN();
        r.measured_regret = traces[t]->final_regret();
        res.rows.push_back(r);
    }
    // Mean regret curves at ~100 checkpoints.
    std::vector<PlotSeries> series;
    std::vector<double> xs;
    for (std::size_t i = 1; i <= 100; ++i) xs.push_back(std::max<double>(1.0, std::round(c.n * i / 100.0)));
    for (std::size_t ai = 0; ai < scheds.size(); ++ai) {
        PlotSeries p{scheds[ai].name(), xs, std::vector<double>(xs.size(), 0.0)};
        std::size_t cnt = 0;
        for (std::size_t si = 0; si < c.seeds.size(); ++si) {
            const auto& tr = traces[si * scheds.size() + ai];
            if (!tr) continue;
            ++cnt;
            for (std::size_t j = 0; j < xs.size(); ++j) p.y[j] += tr->cum_regret[static_cast<std::size_t>(xs[j]) - 1];
        }
        for (auto& y : p.y) y /= static_cast<double>(std::max<std::size_t>(cnt, 1));
        series.push_back(std::move(p));
    }
    for (auto [kind, name] : {std::pair{RegretCurveKind::HoeffdingAzuma, "HA bound"},
                              std::pair{RegretCurveKind::Bernstein, "Bernstein bound"},
                              std::pair{RegretCurveKind::HypothesizedExp3, "EXP3 bound (hypothesized)"},
                              std::pair{RegretCurveKind::Trivial, "trivial"}}) {
        PlotSeries p{name, xs, {}, true};
        for (double x : xs) p.y.push_back(regret_bound_curve(kind, x, k, c.delta).value);
        series.push_back(std::move(p));
    }
    PlotSpec spec{c.name + ": cumulative regret (K=" + std::to_string(k) + ")", "round", "cumulative regret", false, {}};
    out.svg = line_plot_svg(spec, series);
    return out;
}

Run run_offline_experiment(const ExperimentConfig& c) {
    Run out;
    auto& res = out.res;
    const auto ks = c.sweep_k.empty() ? std::vector<std::size_t>{c.env.k} : c.sweep_k;
    const std::size_t tasks = ks.size() * c.seeds.size();
    std::vector<std::vector<ResultRow>> rows(tasks);
    std::vector<std::vector<std::string>> fails(tasks);
    const auto kind = parse_behaviour_kind(c.behaviour);
    parallel_for(tasks, [&](std::size_t t) {
        const std::size_t k = ks[t / c.seeds.size()];
        const std::uint64_t seed = c.seeds[t % c.seeds.size()];
        const std::uint64_t s = derive_seed(seed, 1000 + k);
        try {
            const auto env = make_environment(c.env, k, derive_seed(s, 1));
            const auto beh = make_behaviour(kind, env, c.behaviour_epsilon, derive_seed(s, 2));
            const auto d = collect_log(env, beh, c.n, derive_seed(s, 3));
            for (std::size_t b = 0; b < c.bounds.size(); ++b) {
                try {
                    const auto out = evaluate_bound(c.bounds[b], env, d, beh, c.delta, derive_seed(s, 10 + b), c.settings);
                    ResultRow r;
                    r.seed = seed;
                    r.k = env_num_actions(env);
                    r.n = c.n;
                    r.bound_id = c.bounds[b].id;
                    r.label = c.bounds[b].label();
                    r.bound_value = out.report.value;
                    r.expected_reward = out.expected_reward;
                    r.measured_regret = std::numeric_limits<double>::quiet_NaN();
                    r.params = to_json(out.report.params).dump();
                    rows[t].push_back(std::move(r));
                } catch (const std::exception& e) {
                    fails[t].push_back("seed=" + std::to_string(seed) + " K=" + std::to_string(k) +
                                       " bound=" + c.bounds[b].label() + ": " + e.what());
                }
            }
        } catch (const std::exception& e) {
            fails[t].push_back("seed=" + std::to_string(seed) + " K=" + std::to_string(k) + ": " + e.what());
        }
    });
    for (std::size_t t = 0; t < tasks; ++t) {
        res.rows.insert(res.rows.end(), rows[t].begin(), rows[t].end());
        res.failures.insert(res.failures.end(), fails[t].begin(), fails[t].end());
    }
    std::vector<PlotSeries> series;
    PlotSpec spec;
    spec.y_label = "median over seeds";
    if (ks.size() > 1) {
        spec.title = c.name + ": bound (solid) and expected reward (dashed) vs K";
        spec.x_label = "K";
        for (const auto& b : c.bounds) {
            PlotSeries bound{b.label() + " bound", {}, {}}, reward{b.label() + " reward", {}, {}, true};
            for (std::size_t k : ks) {
                std::vector<double> bv, rv;
                for (const auto& r : res.rows)
                    if (r.k == k && r.label == b.label()) bv.push_back(r.bound_value), rv.push_back(r.expected_reward);
                bound.x.push_back(static_cast<double>(k));
                bound.y.push_back(median(bv));
                reward.x.push_back(static_cast<double>(k));
                reward.y.push_back(median(rv));
            }
            series.push_back(std::move(bound));
            series.push_back(std::move(reward));
        }
    } else {
        spec.title = c.name + ": bound value and expected reward";
        spec.x_label = "bound";
        PlotSeries bound{"bound value", {}, {}}, reward{"expected reward", {}, {}, true};
        for (std::size_t b = 0; b < c.bounds.size(); ++b) {
            std::vector<double> bv, rv;
            for (const auto& r : res.rows)
                if (r.label == c.bounds[b].label()) bv.push_back(r.bound_value), rv.push_back(r.expected_reward);
            spec.x_ticks.push_back(c.bounds[b].label());
            bound.x.push_back(static_cast<double>(b));
            bound.y.push_back(median(bv));
            reward.x.push_back(static_cast<double>(b));
            reward.y.push_back(median(rv));
        }
        series = {bound, reward};
    }
    out.svg = line_plot_svg(spec, series);
    return out;
}

}  // namespace

void write_rows_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
    out << "seed,K,n,bound_id,label,bound_value,expected_reward,measured_regret,params\n";
    for (const auto& r : rows)
        out << r.seed << ',' << r.k << ',' << r.n << ',' << csv_quote(r.bound_id) << ',' << csv_quote(r.label) << ','
            << fmt(r.bound_value) << ',' << fmt(r.expected_reward) << ',' << fmt(r.measured_regret) << ','
            << csv_quote(r.params) << '\n';
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files) {
    config.validate();
    auto run = config.mode == "online" ? run_online_experiment(config) : run_offline_experiment(config);
    auto& res = run.res;
    const std::string& svg = run.svg;
    if (write_files) {
        std::filesystem::create_directories(config.out_dir);
        const auto csv_path = config.out_dir / (config.name + ".csv");
        const auto svg_path = config.out_dir / (config.name + ".svg");
        std::ofstream csv(csv_path);
        if (!csv) throw Error(ErrorKind::Io, "cannot write " + csv_path.string());
        write_rows_csv(res.rows, csv);
        std::ofstream s(svg_path);
        if (!s) throw Error(ErrorKind::Io, "cannot write " + svg_path.string());
        s << svg;
        res.files = {csv_path, svg_path};
    }
    return res;
}

}  // namespace pacbandit
