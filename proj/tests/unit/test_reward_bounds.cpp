#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pacbandit/environments.hpp"
#include "pacbandit/errors.hpp"
#include "pacbandit/experiment.hpp"
#include "pacbandit/numeric.hpp"
#include "pacbandit/reward_bounds.hpp"

using namespace pacbandit;
using namespace testing_helpers;

TEST_CASE("unified_bound") {
    CHECK(unified_bound(0.0, 0.0, 1.0, 1.0) == 0.0);
    CHECK(unified_bound(1.0, 0.0, 2.0, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(unified_bound(1.0, 0.0, 0.0, 0.5), Error);
    // Convex in lambda: second differences nonnegative on a grid.
    for (int i = 1; i < 50; ++i) {
        const double l = 0.1 * i, h = 0.05;
        const double f0 = unified_bound(0.3, 1.2, l - h, 0.05), f1 = unified_bound(0.3, 1.2, l, 0.05),
                     f2 = unified_bound(0.3, 1.2, l + h, 0.05);
        CHECK(f0 + f2 - 2.0 * f1 >= -1e-12);
    }
}

TEST_CASE("Hoeffding-Azuma from stats") {
    const auto r = ha_from_stats(1.0, 1000, 0.1, 100, 0.0, 1.0);
    CHECK(r.value == doctest::Approx(-0.25));
    CHECK(r.value == doctest::Approx(recompute_value(r)).epsilon(1e-12));
    CHECK(ha_from_stats(0.5, 1000, 0.1, 1e8, 1.0, 0.05).value < -1e4);
    CHECK(ha_from_stats(0.5, 1000, 0.1, 1e-8, 1.0, 0.05).value < -1e4);
    CHECK_THROWS_AS(ha_from_stats(0.5, 1000, 0.1, 0.0, 1.0, 0.05), Error);
}

TEST_CASE("kl family from stats") {
    // B = 0 requires KL = 0 and ln(2 sqrt(n)/delta) = 0, i.e. 2 sqrt(n) = delta:
    // checked through the budget form instead.
    CHECK(kl_inverse_from_budget(0.6, 0.5, 0.0, 0.0).value == doctest::Approx(0.6));
    CHECK(pinsker_from_budget(0.6, 0.5, 0.0, 0.0).value == doctest::Approx(0.6));
    const auto r = kl_inverse_from_budget(8.0, 0.1, 0.05, 0.0);
    CHECK(r.value == doctest::Approx(10.0 * kl_inverse_lower(0.8, 0.05)).epsilon(1e-12));
    CHECK(r.value == doctest::Approx(10.0 * 0.6564642965139055).epsilon(1e-9));
    for (double kappa : {0.02, 0.1, 0.5, 1.0})
        for (double rh = 0.0; rh <= 1.0 / kappa; rh += 0.07 / kappa)
            for (double kl : {0.0, 0.3, 2.3, 20.0}) {
                const auto inv = kl_family_from_stats(rh, 1000, kappa, kl, 0.05, KlMode::Inverse);
                const auto pin = kl_family_from_stats(rh, 1000, kappa, kl, 0.05, KlMode::Pinsker);
                CHECK(inv.value >= pin.value - 1e-9);
                CHECK(inv.value >= 0.0);
                CHECK(inv.value <= rh + 1e-12);
                CHECK(inv.value == doctest::Approx(recompute_value(inv)).epsilon(1e-12));
                CHECK(pin.value == doctest::Approx(recompute_value(pin)).epsilon(1e-12));
            }
}

TEST_CASE("Bernstein from stats") {
    const auto r = bernstein_from_stats(0.8, 1000, 0.1, 20.42, VarianceMode::worst(), std::log(10.0), 0.05);
    const double oracle = 0.8 - 20.42 * kEMinus2 / 100.0 - (std::log(10.0) + std::log(20.0)) / 20.42;
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(r.value == doctest::Approx(0.394).epsilon(2e-3));
    CHECK(bernstein_from_stats(0.8, 1000, 0.1, 1e-9, VarianceMode::worst(), 0.0, 1.0).value ==
          doctest::Approx(0.8).epsilon(1e-9));
    CHECK(bernstein_from_stats(0.8, 1000, 0.1, 5.0, VarianceMode::supplied(0.0), 1.0, 0.05).value ==
          doctest::Approx(0.8 - (1.0 + std::log(20.0)) / 5.0));
    CHECK_THROWS_AS(bernstein_from_stats(0.8, 1000, 0.1, 101.0, VarianceMode::worst(), 0.0, 0.05), Error);
    // Unique interior maximizer over (0, n kappa].
    std::vector<double> v;
    for (int i = 1; i <= 400; ++i)
        v.push_back(bernstein_from_stats(0.5, 1000, 0.1, 100.0 * i / 400.0, VarianceMode::worst(), 1.0, 0.05).value);
    const auto best = std::max_element(v.begin(), v.end()) - v.begin();
    CHECK(best > 0);
    CHECK(best < 399);
    for (long i = 1; i <= best; ++i) CHECK(v[static_cast<std::size_t>(i)] >= v[static_cast<std::size_t>(i - 1)]);
    for (std::size_t i = static_cast<std::size_t>(best) + 1; i < v.size(); ++i) CHECK(v[i] <= v[i - 1]);
}

TEST_CASE("London-Sandler risk bound from stats") {
    const double n = 100, tau = 0.5, r = 0.5, delta = 0.05, kl = 0.4;
    const double g = kl + std::log(2.0 * std::sqrt(n) / delta);
    const double oracle = (1.0 - r) + std::sqrt(2.0 * (1.0 / tau - r) * g / (tau * n)) + 2.0 * g / (tau * n);
    const auto rep = london_sandler_from_stats(r, n, tau, kl, delta);
    CHECK(rep.value == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(rep.term("reward_lower_bound") == doctest::Approx(1.0 - oracle).epsilon(1e-12));
    // Spot value for G = 1 through the same formula.
    CHECK(0.5 + std::sqrt(2.0 * 1.5 / 50.0) + 2.0 / 50.0 == doctest::Approx(0.785).epsilon(1e-3));
    const auto top = london_sandler_from_stats(2.0, n, 0.5, kl, delta);
    CHECK(top.value == doctest::Approx(-1.0 + 2.0 * g / (0.5 * n)).epsilon(1e-12));
}

TEST_CASE("Efron-Stein from stats") {
    const auto r = efron_stein_from_stats(0.8, 0.01, 0.01, 2.3026, 0.05);
    const double oracle = 0.8 - std::sqrt(0.06) * std::sqrt(2.3026 + 0.5 * std::log(3.0) + std::log(20.0));
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(r.value == doctest::Approx(0.208).epsilon(3e-3));
    CHECK(efron_stein_from_stats(0.7, 0.0, 0.3, 0.0, 1.0).value == doctest::Approx(0.7));
    CHECK(efron_stein_from_stats(0.7, 0.01, 1e8, 1.0, 0.05).value < -1e3);
    CHECK(r.value == doctest::Approx(recompute_value(r)).epsilon(1e-12));
}

TEST_CASE("posterior-level bounds on a logged dataset") {
    const auto env = gen_mab_binary(10, 4);
    const auto d = collect_log(env, BehaviourPolicy::uniform(10), 1000, 5);
    const auto cls = PolicyClass::finite_actions(10);
    const auto mu = Posterior::categorical(cls, CategoricalDistribution::uniform(10));
    const auto rho = Posterior::categorical(cls, CategoricalDistribution({.05, .05, .3, .1, .1, .1, .1, .05, .05, .1}));
    const double kl = posterior_kl(rho, mu);
    const double rh = posterior_estimate(EstimatorKind::is(), rho, d);
    const auto ha = hoeffding_azuma_bound(EstimatorKind::is(), rho, mu, d, 50.0, 0.05);
    CHECK(ha.value == doctest::Approx(ha_from_stats(rh, 1000, 0.1, 50.0, kl, 0.05).value).epsilon(1e-12));
    CHECK(ha.value <= rh);
    // CIS at tau = eps_n matches IS when clipping is inactive.
    for (auto mode : {KlMode::Inverse, KlMode::Pinsker}) {
        const auto a = kl_family_bound(EstimatorKind::is(), rho, mu, d, 0.05, mode);
        const auto b = kl_family_bound(EstimatorKind::cis(0.1), rho, mu, d, 0.05, mode);
        CHECK(std::abs(a.value - b.value) <= 1e-12);
        CHECK(a.value <= rh);
    }
    const auto bh = hoeffding_azuma_bound(EstimatorKind::cis(0.1), rho, mu, d, 50.0, 0.05);
    CHECK(std::abs(bh.value - ha.value) <= 1e-12);
    const auto bern = bernstein_bound(EstimatorKind::is(), rho, mu, d, std::nullopt, 0.05);
    CHECK(*bern.params.lambda == doctest::Approx(std::sqrt(100.0 * std::log(20.0) / kEMinus2)));
    CHECK(bern.value <= rh);
    const auto json = to_json(bern);
    const auto back = bound_report_from_json(json);
    CHECK(back.value == bern.value);
    CHECK(back.bound_id == bern.bound_id);
    CHECK(json.contains("terms"));
    CHECK(json["terms"].contains("empirical_estimate"));

    const auto nd = mab_data(d.actions(), d.rewards(), d.propensities(), 10.0, 10, false);
    CHECK_THROWS_AS(kl_family_bound(EstimatorKind::cis(0.2), rho, mu, nd, 0.05, KlMode::Inverse), Error);
    CHECK_NOTHROW(kl_family_bound(EstimatorKind::is(), rho, mu, nd, 0.05, KlMode::Inverse));
    CHECK_THROWS_AS(london_sandler_risk_bound(rho, mu, nd, 0.2, 0.05), Error);
    CHECK_THROWS_AS(efron_stein_wis_bound(rho, mu, d, BehaviourPolicy::uniform(10), std::nullopt, 0.05, 10, 1, false),
                    Error);
    const auto es =
        efron_stein_wis_bound(rho, mu, d, BehaviourPolicy::uniform(10), std::nullopt, 0.05, 50, 1, true);
    CHECK(es.term("bias_flag") == 1.0);
    CHECK(es.value <= posterior_estimate(EstimatorKind::wis(), rho, d));
}

TEST_CASE("validity_monte_carlo driver") {
    const auto never = validity_monte_carlo([](std::uint64_t) { return ValidityTrial{-1.0, 0.3}; }, 50, 0.05, 1);
    CHECK(never.violations == 0);
    const auto always = validity_monte_carlo([](std::uint64_t) { return ValidityTrial{2.0, 0.3}; }, 50, 1.0, 1);
    CHECK(always.violation_rate() == 1.0);
    CHECK(always.within_tolerance());
    CHECK(never.tolerance() == doctest::Approx(0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 50)));
}

TEST_CASE("klinv-IS validity on MAB Binary") {
    const auto cls = PolicyClass::finite_actions(10);
    LearnerConfig cfg{300, 0.5, 1, 0, 1, 0};
    const auto res = validity_monte_carlo(
        [&](std::uint64_t s) {
            const auto env = gen_mab_binary(10, derive_seed(s, 1));
            const auto d = collect_log(env, BehaviourPolicy::uniform(10), 1000, derive_seed(s, 2));
            const auto mu = CategoricalDistribution::uniform(10);
            const auto rho = maximize_kl_family_posterior(EstimatorKind::is(), d, mu, 0.05, KlMode::Inverse, cfg);
            const auto rep = kl_family_bound(EstimatorKind::is(), Posterior::categorical(cls, rho),
                                             Posterior::categorical(cls, mu), d, 0.05, KlMode::Inverse);
            return ValidityTrial{rep.value, true_reward(env, Posterior::categorical(cls, rho))};
        },
        200, 0.05, 99);
    CHECK(res.within_tolerance());
}
