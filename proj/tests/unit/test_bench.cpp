#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pacbandit/environments.hpp"
#include "pacbandit/errors.hpp"
#include "pacbandit/experiment.hpp"

using namespace pacbandit;

namespace {

// Asymptotic Kolmogorov tail probability P(K > x).
double kolmogorov_p(double x) {
    double p = 0.0;
    for (int j = 1; j <= 100; ++j) p += 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * x * x);
    return std::clamp(p, 0.0, 1.0);
}

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.name = "unit";
    c.env.type = "mab_binary";
    c.n = 200;
    c.sweep_k = {2, 3};
    c.seeds = {1, 2};
    c.bounds = {BoundSpec::from_json("ha"), BoundSpec::from_json("kl_inverse")};
    c.settings.categorical.steps = 50;
    return c;
}

}  // namespace

TEST_CASE("gen_mab_binary") {
    const auto a = gen_mab_binary(10, 4), b = gen_mab_binary(10, 4);
    CHECK(a.means == b.means);
    CHECK(std::count(a.means.begin(), a.means.end(), 0.8) == 1);
    CHECK(a.means[a.best_index] == 0.8);
    for (double p : a.means) CHECK((p >= 0.0 && p <= 0.8));
    CHECK_THROWS_AS(gen_mab_binary(1, 0), Error);

    std::vector<double> xs;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto e = gen_mab_binary(10, s);
        for (std::size_t i = 0; i < 10; ++i)
            if (i != e.best_index) xs.push_back(e.means[i] / 0.8);
    }
    std::sort(xs.begin(), xs.end());
    double dmax = 0.0;
    const double m = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        dmax = std::max({dmax, (i + 1) / m - xs[i], xs[i] - i / m});
    CHECK(kolmogorov_p(std::sqrt(m) * dmax) > 0.01);
}

TEST_CASE("gen_cb_binary_linear reward rule") {
    const auto env = gen_cb_binary_linear(5, 4, 3);
    CHECK(env.theta_star == gen_cb_binary_linear(5, 4, 3).theta_star);
    const Environment e = env;
    const auto cls = PolicyClass::linear_softmax(5, 4);
    const double best = true_reward(e, Posterior::point(cls, WeightMatrix(env.theta_star * 1e6)), {2000, 1, 1});
    CHECK(best == doctest::Approx(0.8).epsilon(1e-3));
    const double unif = true_reward(e, Posterior::point(cls, WeightMatrix::Zero(5, 4)), {2000, 1, 1});
    CHECK(unif == doctest::Approx(0.2 + 0.6 / 4).epsilon(1e-12));
}

TEST_CASE("make_behaviour") {
    Environment mab = MabBinaryEnv{{0.8, 0.3}, 0};
    const auto inf = make_behaviour(BehaviourKind::Informative, mab, 0.01, 0).probs();
    const double sm = 1.0 / (1.0 + std::exp(-5.0));
    CHECK(inf[0] == doctest::Approx(0.98 * sm + 0.01).epsilon(1e-12));
    CHECK(inf[0] == doctest::Approx(0.98 * 0.99331 + 0.01).epsilon(1e-5));
    Environment flat = MabBinaryEnv{{0.8, 0.8, 0.8}, 0};
    for (double p : make_behaviour(BehaviourKind::Informative, flat, 0.01, 0).probs())
        CHECK(p == doctest::Approx(1.0 / 3));
    for (double p : make_behaviour(BehaviourKind::Uniform, flat, 0.01, 0).probs()) CHECK(p == 1.0 / 3);
    const auto rnd = make_behaviour(BehaviourKind::Random, flat, 0.01, 5).probs();
    for (double p : rnd) CHECK(p >= 0.01);
    CHECK_THROWS_AS(make_behaviour(BehaviourKind::Informative, flat, 0.5, 0), Error);
    CHECK_THROWS_AS(make_behaviour(BehaviourKind::Informative, flat, 0.0, 0), Error);
    CHECK(parse_behaviour_kind(to_string(BehaviourKind::Random)) == BehaviourKind::Random);
}

TEST_CASE("collect_log") {
    Environment mab = gen_mab_binary(5, 2);
    const auto beh = make_behaviour(BehaviourKind::Random, mab, 0.05, 3);
    const std::size_t n = 100000;
    const auto d = collect_log(mab, beh, n, 4);
    CHECK(d == collect_log(mab, beh, n, 4));
    CHECK(d.iid());
    const auto p = beh.probs();
    std::vector<double> freq(5, 0.0);
    for (auto a : d.actions()) freq[a] += 1.0;
    for (std::size_t a = 0; a < 5; ++a)
        CHECK(std::abs(freq[a] - n * p[a]) <= 3.0 * std::sqrt(n * p[a] * (1 - p[a])));
    for (std::size_t i = 0; i < 100; ++i) CHECK(d.propensity(i) == p[d.action(i)]);

    Environment sure = MabBinaryEnv{{1.0, 1.0}, 0};
    const auto c = collect_log(sure, BehaviourPolicy::uniform(2), 300, 1);
    CHECK(std::all_of(c.rewards().begin(), c.rewards().end(), [](double r) { return r == 1.0; }));
}

TEST_CASE("true_reward on MAB is exact") {
    const auto env = gen_mab_binary(6, 8);
    const auto cls = PolicyClass::finite_actions(6);
    CHECK(true_reward(env, Posterior::categorical(cls, CategoricalDistribution::one_hot(6, env.best_index))) == 0.8);
    double mean = 0.0;
    for (double p : env.means) mean += p / 6;
    CHECK(true_reward(env, Posterior::categorical(cls, CategoricalDistribution::uniform(6))) ==
          doctest::Approx(mean).epsilon(1e-14));
}

TEST_CASE("csv_to_cb_env") {
    const auto dir = std::filesystem::temp_directory_path() / "pacbandit_unit_csv";
    std::filesystem::create_directories(dir);
    const auto path = dir / "cls.csv", perm_path = dir / "perm.csv";
    {
        std::ofstream a(path), b(perm_path);
        a << "x1,x2,label\n";
        b << "x1,x2,label\n";
        for (int i = 0; i < 50; ++i) {
            const int l = i % 3;
            a << i * 0.5 << "," << (i % 7) << "," << l << "\n";
            b << i * 0.5 << "," << (i % 7) << "," << (2 - l) << "\n";
        }
    }
    const auto env = csv_to_cb_env(path, 1);
    CHECK(env.k == 3);
    CHECK(env.train_labels.size() == 40);
    CHECK(env.holdout_labels.size() == 10);
    CHECK(std::abs(env.train_states.col(0).sum() + env.holdout_states.col(0).sum()) < 1e-9);
    Environment e = env;
    const auto d = collect_log(e, BehaviourPolicy::uniform(3), 500, 2);
    const auto pe = csv_to_cb_env(perm_path, 1);
    Environment ep = pe;
    const auto dp = collect_log(ep, BehaviourPolicy::uniform(3), 500, 2);
    CHECK(d.actions() == dp.actions());
    CHECK(pe.train_labels.size() == env.train_labels.size());
    for (std::size_t i = 0; i < env.train_labels.size(); ++i) CHECK(pe.train_labels[i] == 2 - env.train_labels[i]);
    const auto cls = PolicyClass::linear_softmax(2, 3);
    CHECK(true_reward(e, Posterior::point(cls, WeightMatrix::Zero(2, 3))) == doctest::Approx(1.0 / 3));
    {
        std::ofstream bad(dir / "bad.csv");
        bad << "x,label\n1,0\n2,2\n3,0\n";
    }
    CHECK_THROWS_AS(csv_to_cb_env(dir / "bad.csv", 1), Error);
    {
        std::ofstream bad(dir / "junk.csv");
        bad << "x,label\n1,0\nfoo,1\n";
    }
    CHECK_THROWS_AS(csv_to_cb_env(dir / "junk.csv", 1), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("run_experiment determinism and row counts") {
    const auto cfg = small_config();
    const auto a = run_experiment(cfg, false), b = run_experiment(cfg, false);
    CHECK(a.rows.size() == 2 * 2 * 2);
    CHECK(a.failures.empty());
    std::ostringstream sa, sb;
    write_rows_csv(a.rows, sa);
    write_rows_csv(b.rows, sb);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("seed,K,n,bound_id,label,bound_value,expected_reward,measured_regret,params", 0) == 0);
    for (const auto& r : a.rows) CHECK(r.bound_value <= r.expected_reward);

    auto empty = cfg;
    empty.bounds.clear();
    CHECK(run_experiment(empty, false).rows.empty());

    const auto fig3 = ExperimentConfig::preset("fig3", 0, 2);
    CHECK(fig3.seeds.size() == 2);
    CHECK(fig3.sweep_k.size() == 7);
    CHECK(fig3.sweep_k.front() == 2);
    CHECK(fig3.sweep_k.back() == 50);
    const auto round = ExperimentConfig::from_json(fig3.to_json());
    CHECK(round.to_json() == fig3.to_json());
    CHECK_THROWS_AS(ExperimentConfig::preset("nope"), Error);
    auto badc = cfg;
    badc.delta = 1.5;
    CHECK_THROWS_AS(badc.validate(), Error);
    badc = cfg;
    badc.bounds.push_back(BoundSpec::from_json("no_such_bound"));
    CHECK_THROWS_AS(badc.validate(), Error);
}
