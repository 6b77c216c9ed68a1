#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <algorithm>
#include <sstream>

#include "pacbandit/errors.hpp"
#include "pacbandit/online.hpp"

using namespace pacbandit;

TEST_CASE("schedules") {
    const ScheduleSpec ha{ScheduleKind::HoeffdingAzuma}, bern{ScheduleKind::Bernstein}, exp3{ScheduleKind::Exp3};
    CHECK(ha.epsilon(10000, 10) == doctest::Approx(0.1 / std::sqrt(10.0)));
    CHECK(bern.epsilon(1000, 8) == doctest::Approx(0.1 * 0.25));
    CHECK(exp3.epsilon(1000, 10) == doctest::Approx(0.01));
    CHECK(ha.epsilon(1, 10) == doctest::Approx(0.1));  // truncated to 1/K
    CHECK(exp3.gamma(1000, 10) == doctest::Approx(std::sqrt(1000 * std::log(10.0) / 10)));
    CHECK(ha.gamma(10000, 10) == doctest::Approx(10.0 / std::sqrt(10.0) * std::sqrt(std::log(10.0))));
    CHECK(ScheduleSpec{ScheduleKind::HaEpsGreedy}.gamma(10, 10) == kInfinity);
    for (const char* s : {"exp3", "ha_exp3", "bern_exp3", "ha_eps_greedy", "bern_eps_greedy", "ucb1"})
        CHECK(ScheduleSpec::parse(s).name() == s);
    CHECK_THROWS_AS(ScheduleSpec::parse("nope"), Error);
}

TEST_CASE("smoothed_gibbs_policy") {
    OnlineState st(2);
    st.record(0, 1.0, 1.0);
    const auto p = smoothed_gibbs_policy(CategoricalDistribution::uniform(2), st, std::log(3.0), 0.1);
    CHECK(p[0] == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(st.is_estimate(0) == 1.0);

    OnlineState s3(3);
    s3.record(2, 1.0, 0.5);
    const auto u = smoothed_gibbs_policy(CategoricalDistribution::uniform(3), s3, 0.0, 0.2);
    for (std::size_t a = 0; a < 3; ++a) CHECK(u[a] == doctest::Approx(1.0 / 3));
    const auto g = smoothed_gibbs_policy(CategoricalDistribution::uniform(3), s3, kInfinity, 0.05);
    CHECK(g[2] == doctest::Approx(0.9));
    CHECK(g[0] == doctest::Approx(0.05));
    CHECK_THROWS_AS(smoothed_gibbs_policy(CategoricalDistribution::uniform(3), s3, 1.0, 0.5), Error);
}

TEST_CASE("ucb1_policy") {
    OnlineState st(3);
    CHECK(ucb1_policy(st) == 0);
    st.record(0, 1.0, 1.0);
    st.record(2, 0.0, 1.0);
    CHECK(ucb1_policy(st) == 1);
    OnlineState eq(2);
    eq.record(0, 1.0, 1.0);
    eq.record(1, 1.0, 1.0);
    CHECK(ucb1_policy(eq) == 0);
    OnlineState m(2);
    for (int i = 0; i < 10; ++i) {
        m.record(0, i < 9 ? 1.0 : 0.0, 1.0);
        m.record(1, i < 1 ? 1.0 : 0.0, 1.0);
    }
    CHECK(ucb1_policy(m) == 0);
}

TEST_CASE("run_online trivial environments") {
    for (const char* name : {"exp3", "ha_exp3", "bern_exp3", "ha_eps_greedy", "bern_eps_greedy", "ucb1"}) {
        const auto sch = ScheduleSpec::parse(name);
        const std::vector<double> one{0.5};
        CHECK(run_online(sch, one, 200, 1).final_regret() == 0.0);
        const std::vector<double> ones(5, 1.0);
        const auto t = run_online(sch, ones, 200, 2);
        CHECK(t.final_regret() == 0.0);
        CHECK(std::all_of(t.reward.begin(), t.reward.end(), [](double r) { return r == 1.0; }));
    }
    CHECK_THROWS_AS(run_online(ScheduleSpec{}, std::vector<double>{0.5, 0.2}, 0, 1), Error);
}

TEST_CASE("run_online traces are deterministic and monotone") {
    const std::vector<double> means{0.8, 0.3, 0.5, 0.1};
    for (const char* name : {"exp3", "ha_eps_greedy", "ucb1"}) {
        const auto a = run_online(ScheduleSpec::parse(name), means, 500, 9);
        const auto b = run_online(ScheduleSpec::parse(name), means, 500, 9);
        CHECK(a.action == b.action);
        CHECK(a.cum_regret == b.cum_regret);
        CHECK(a.rounds() == 500);
        for (std::size_t i = 1; i < a.cum_regret.size(); ++i) CHECK(a.cum_regret[i] >= a.cum_regret[i - 1]);
        std::ostringstream os;
        a.write_csv(os);
        CHECK(os.str().rfind("round,action,reward,regret,cum_regret", 0) == 0);
    }
}

TEST_CASE("IS running estimate is unbiased under a fixed distribution") {
    // Play a fixed distribution by hand and compare with the arm mean.
    const std::vector<double> probs{0.2, 0.5, 0.3};
    const double mean = 0.6;
    std::mt19937_64 rng(3);
    std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
    std::bernoulli_distribution bern(mean);
    OnlineState st(3);
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto a = pick(rng);
        st.record(a, bern(rng) ? 1.0 : 0.0, probs[a]);
    }
    const double sd = std::sqrt(mean / 0.2 - mean * mean) / std::sqrt(double(n));
    CHECK(std::abs(st.is_estimate(0) - mean) <= 3.0 * sd);
    CHECK(std::accumulate(st.counts.begin(), st.counts.end(), std::size_t{0}) == std::size_t(n));
}

TEST_CASE("regret bound curves") {
    const double lb = std::log(10.0) + 2 * std::log(10001.0) + std::log(20.0);
    const double ha = std::pow(1e4, 0.75) * std::sqrt(10.0) * (1 + std::sqrt(std::log(10.0)) + std::sqrt(2 * lb));
    const auto v = regret_bound_curve(RegretCurveKind::HoeffdingAzuma, 1e4, 10, 0.05);
    CHECK(v.value == doctest::Approx(ha).epsilon(1e-12));
    CHECK(v.value == doctest::Approx(29740).epsilon(1e-3));
    CHECK(v.value > regret_bound_curve(RegretCurveKind::Trivial, 1e4, 10, 0.05).value);
    CHECK(regret_bound_curve(RegretCurveKind::HoeffdingAzuma, 1e4, 10, 0.05, true).value ==
          doctest::Approx(ha - std::pow(1e4, 0.75) * std::sqrt(10.0) * std::sqrt(std::log(10.0))));
    const double bern = std::pow(1e4, 2.0 / 3) * std::cbrt(10.0) *
                        (1 + std::sqrt(std::log(10.0)) + 2 * std::sqrt(2 * (std::exp(1.0) - 2) * lb));
    CHECK(regret_bound_curve(RegretCurveKind::Bernstein, 1e4, 10, 0.05).value == doctest::Approx(bern));
    for (auto kind : {RegretCurveKind::HoeffdingAzuma, RegretCurveKind::Bernstein, RegretCurveKind::HypothesizedExp3,
                      RegretCurveKind::Trivial}) {
        double prev = -1.0;
        for (double n = 50; n <= 5000; n += 150) {
            const double x = regret_bound_curve(kind, n, 10, 0.05).value;
            CHECK(x > prev);
            prev = x;
        }
    }
}

TEST_CASE("Bernstein curve sample-size condition") {
    const double e2 = std::exp(1.0) - 2;
    auto ok = [&](double n) {
        const double lb = std::log(10.0) + 2 * std::log(n + 1) + std::log(20.0);
        return n >= 10 * std::pow(lb / (2 * e2), 1.5);
    };
    double first = 1;
    while (!ok(first)) first += 1;
    CHECK(bernstein_curve_min_n(10, 0.05) == first);
    CHECK_FALSE(regret_bound_curve(RegretCurveKind::Bernstein, first - 1, 10, 0.05).condition_met);
    CHECK(regret_bound_curve(RegretCurveKind::Bernstein, first, 10, 0.05).condition_met);
}
