#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "pacbandit/environments.hpp"
#include "pacbandit/errors.hpp"
#include "pacbandit/learners.hpp"
#include "pacbandit/numeric.hpp"

using namespace pacbandit;
using namespace testing_helpers;

namespace {

std::vector<double> random_simplex(std::size_t k, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w(k);
    double s = 0.0;
    for (auto& x : w) s += (x = e(rng) + 1e-3);
    for (auto& x : w) x /= s;
    return w;
}

void check_gradient(const CategoricalObjective& obj, const std::vector<double>& rho) {
    std::vector<double> g;
    obj.eval(rho, &g);
    for (std::size_t a = 0; a < rho.size(); ++a) {
        const double fd = central_diff(
            [&](double x) {
                auto r = rho;
                r[a] = x;
                return obj.eval(r, nullptr);
            },
            rho[a], 1e-6);
        CHECK(std::abs(g[a] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
}

}  // namespace

TEST_CASE("gibbs_posterior_finite") {
    const auto mu = CategoricalDistribution({0.2, 0.3, 0.5});
    const std::vector<double> s{0.4, 0.9, 0.1};
    CHECK(gibbs_posterior_finite(mu, s, 0.0).weights() == mu.weights());
    const auto big = gibbs_posterior_finite(mu, s, kInfinity);
    CHECK(big[1] == 1.0);
    const auto tie = gibbs_posterior_finite(CategoricalDistribution::uniform(3), std::vector<double>{1, 1, 0}, kInfinity);
    CHECK(tie[0] == 1.0);
    const auto p = gibbs_posterior_finite(CategoricalDistribution::uniform(2), std::vector<double>{1, 0}, std::log(3.0));
    CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(gibbs_posterior_finite(mu, std::vector<double>{1e4, 0, 0}, 10.0)[0] == doctest::Approx(1.0));
}

TEST_CASE("Gibbs posterior beats random simplex points on the linear objective") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        const auto mu = CategoricalDistribution::from_unnormalized(random_simplex(8, rng));
        std::vector<double> s(8);
        for (auto& x : s) x = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
        const double lambda = 3.0 + trial;
        const auto obj = categorical_objective(BoundForm::linear(1.0 / lambda, 0.0), s, mu);
        const double g = obj.eval(gibbs_posterior_finite(mu, s, lambda).weights(), nullptr);
        for (int i = 0; i < 1000; ++i) CHECK(obj.eval(random_simplex(8, rng), nullptr) <= g + 1e-12);
    }
}

TEST_CASE("BoundForm derivatives vs finite differences") {
    const std::vector<BoundForm> forms{BoundForm::linear(0.1, 0.2), BoundForm::sqrt_penalty(0.3, 1.5),
                                       BoundForm::pinsker(0.1, 1000, 7.0), BoundForm::kl_inverse(0.1, 1000, 7.0)};
    for (const auto& f : forms)
        for (double r : {1.5, 4.0, 7.5})
            for (double kl : {0.1, 1.0, 4.0}) {
                CHECK(rel_err(f.d_r(r, kl), central_diff([&](double x) { return f.value(x, kl); }, r)) <= 1e-4);
                CHECK(rel_err(f.d_kl(r, kl), central_diff([&](double x) { return f.value(r, x); }, kl)) <= 1e-4);
            }
}

TEST_CASE("categorical objective gradients vs finite differences") {
    std::mt19937_64 rng(2);
    const std::vector<double> s{2.0, 5.5, 0.3, 7.0, 1.0};
    const auto mu = CategoricalDistribution::uniform(5);
    for (const auto& f : {BoundForm::kl_inverse(0.1, 1000, 7.0), BoundForm::pinsker(0.1, 1000, 7.0),
                          BoundForm::linear(0.05, 0.1)}) {
        const auto obj = categorical_objective(f, s, mu);
        for (int i = 0; i < 10; ++i) check_gradient(obj, random_simplex(5, rng));
    }
    const std::vector<double> w{0.3, 0.8, 0.5, 0.1, 0.6}, v{0.01, 0.004, 0.02, 0.05, 0.003};
    for (auto y : {std::optional<double>{}, std::optional<double>{0.01}}) {
        const auto obj = efron_stein_objective(w, v, mu, y, 0.05);
        for (int i = 0; i < 10; ++i) check_gradient(obj, random_simplex(5, rng));
    }
}

TEST_CASE("maximize_bound_categorical") {
    const std::vector<double> s{0.2, 0.9, 0.5, 0.85};
    const auto mu = CategoricalDistribution::uniform(4);
    const double lambda = 10.0;
    const auto obj = categorical_objective(BoundForm::linear(1.0 / lambda, 0.0), s, mu);
    LearnerConfig cfg{2000, 0.5, 1, 0, 1, 0};
    const auto rho = maximize_bound_categorical(obj, mu, cfg);
    const double best = obj.eval(gibbs_posterior_finite(mu, s, lambda).weights(), nullptr);
    CHECK(best - obj.eval(rho.weights(), nullptr) <= 1e-6);
    cfg.steps = 0;
    const auto init = CategoricalDistribution({0.1, 0.2, 0.3, 0.4});
    CHECK(maximize_bound_categorical(obj, init, cfg).weights() == init.weights());
    cfg.steps = 100;
    const auto masked = maximize_bound_categorical(obj, CategoricalDistribution({0.5, 0.0, 0.5, 0.0}), cfg);
    CHECK(masked[1] == 0.0);
    CHECK(masked[3] == 0.0);
}

TEST_CASE("Gaussian surrogate gradient vs finite differences") {
    const auto env = gen_cb_binary_linear(3, 4, 1);
    const auto d = collect_log(env, BehaviourPolicy::uniform(4), 300, 2);
    std::vector<std::size_t> idx(64);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = 3 * i;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    std::vector<double> noise(idx.size() * 4);
    for (auto& x : noise) x = nd(rng);
    GaussianParams p{Eigen::VectorXd(12), Eigen::VectorXd(12)};
    for (int i = 0; i < 12; ++i) p.mean(i) = 0.3 * nd(rng), p.log_var(i) = -0.5 + 0.2 * nd(rng);
    Eigen::VectorXd pm(12);
    for (int i = 0; i < 12; ++i) pm(i) = 0.1 * i - 0.5;
    const DiagonalGaussian mu(pm, Eigen::VectorXd::Constant(12, 0.7));
    const std::vector<std::pair<BoundForm, EstimatorKind>> cases{
        {BoundForm::kl_inverse(0.25, 64, 5.0), EstimatorKind::is()},
        {BoundForm::kl_inverse(0.5, 64, 5.0), EstimatorKind::cis(0.5)},
        {BoundForm::linear(0.05, 0.0), EstimatorKind::is()}};
    for (const auto& [form, kind] : cases) {
        GaussianParams g;
        gaussian_surrogate(form, kind, d, idx, p, mu, noise, &g);
        for (int i = 0; i < 12; ++i) {
            auto f_mean = [&](double x) {
                auto q = p;
                q.mean(i) = x;
                return gaussian_surrogate(form, kind, d, idx, q, mu, noise, nullptr);
            };
            auto f_lv = [&](double x) {
                auto q = p;
                q.log_var(i) = x;
                return gaussian_surrogate(form, kind, d, idx, q, mu, noise, nullptr);
            };
            const double fm = central_diff(f_mean, p.mean(i)), fl = central_diff(f_lv, p.log_var(i));
            CHECK(std::abs(g.mean(i) - fm) <= 1e-4 * std::max(1.0, std::abs(fm)));
            CHECK(std::abs(g.log_var(i) - fl) <= 1e-4 * std::max(1.0, std::abs(fl)));
        }
    }
}

TEST_CASE("Gaussian KL pull and best-iterate improvement") {
    const auto env = gen_cb_binary_linear(10, 10, 3);
    const auto d = collect_log(env, BehaviourPolicy::uniform(10), 10000, 4);
    const auto mu = DiagonalGaussian::standard(100);
    LearnerConfig cfg{300, 0.05, 50, 7, 256, 100};
    const auto form = BoundForm::kl_inverse(0.1, 10000, std::log(2.0 * 100.0 / 0.05));
    const auto res = maximize_bound_gaussian(form, EstimatorKind::is(), d, mu, mu, cfg);
    CHECK(res.objective >= res.initial_objective);
    const auto again = maximize_bound_gaussian(form, EstimatorKind::is(), d, mu, mu, cfg);
    CHECK(again.posterior.mean() == res.posterior.mean());

    Eigen::VectorXd var = Eigen::VectorXd::Constant(100, 4.0);
    const DiagonalGaussian init(Eigen::VectorXd::Zero(100), var);
    cfg.steps = 200;
    const auto pulled = maximize_bound_gaussian(BoundForm::linear(100.0, 0.0), EstimatorKind::is(), d, mu, init, cfg);
    CHECK(pulled.posterior.variance().mean() < 2.0);
}

TEST_CASE("baseline validation bounds") {
    CHECK(tl2_validation_bound(0.5, 200, 0.1, 0.05) ==
          doctest::Approx(0.5 - 10.0 * std::sqrt(std::log(120.0) / 400.0)));
    CHECK(tpoem_validation_bound(0.5, 0.2, 200, 0.1, 0.01) < tpoem_validation_bound(0.5, 0.2, 200, 0.1, 0.05));
    const auto env = gen_cb_binary_linear(3, 4, 6);
    const auto d = collect_log(env, BehaviourPolicy::uniform(4), 500, 7);
    const auto zero = d.with_rewards(std::vector<double>(500, 0.0));
    BaselineConfig cfg;
    cfg.learner.steps = 50;
    const auto c = tpoem_select(zero, 0.05, 0.25, cfg);
    CHECK(*c.bound.params.beta == 1.0);
    const auto tl2 = tl2_select(d, 0.05, 0.25, cfg);
    CHECK(tl2.bound.term("confidence_term") == doctest::Approx(4.0 * std::sqrt(std::log(120.0) / 200.0)));
    // Objective gradients.
    WeightMatrix th(3, 4);
    th << 0.1, -0.2, 0.3, 0.0, 0.5, 0.4, -0.1, 0.2, -0.3, 0.2, 0.1, -0.4;
    for (int which = 0; which < 2; ++which) {
        auto f = [&](const WeightMatrix& t, WeightMatrix* g) {
            return which == 0 ? tpoem_objective(d, t, 0.1, 0.5, g) : tl2_objective(d, t, 0.01, 0.5, g);
        };
        WeightMatrix g;
        f(th, &g);
        for (Eigen::Index i = 0; i < th.size(); ++i) {
            const double fd = central_diff(
                [&](double x) {
                    WeightMatrix t = th;
                    t.data()[i] = x;
                    return f(t, nullptr);
                },
                th.data()[i]);
            CHECK(std::abs(g.data()[i] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("offline pipeline respects its data partition") {
    const auto env = gen_cb_binary_linear(4, 4, 9);
    const auto d = collect_log(env, BehaviourPolicy::uniform(4), 2000, 10);
    PipelineConfig cfg;
    cfg.prior_learner.steps = 200;
    cfg.posterior_learner.steps = 200;
    cfg.tau_grid = 10;
    const auto a = offline_cb_pipeline(d, 0.05, cfg);
    CHECK(a.bound_begin == 1000);
    CHECK(a.bound_end == 2000);
    CHECK(a.prior_end <= 1000);
    std::vector<double> r = d.rewards();
    for (std::size_t i = 0; i < 1000; ++i) r[i] = 1.0 - r[i];
    const auto flipped = d.with_rewards(r);
    CHECK(flipped.slice(1000, 2000) == d.slice(1000, 2000));
    const auto b = offline_cb_pipeline(flipped, 0.05, cfg);
    CHECK(b.bound_begin == 1000);
    CHECK(a.prior->gaussian().mean() != b.prior->gaussian().mean());
    const auto j = to_json(a);
    CHECK(j.contains("data_partition"));
    CHECK(j["bound"]["value"].get<double>() == a.bound.value);
}
