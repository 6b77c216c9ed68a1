#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "helpers.hpp"
#include "pacbandit/dataset.hpp"
#include "pacbandit/environments.hpp"
#include "pacbandit/errors.hpp"
#include "pacbandit/policy.hpp"

using namespace pacbandit;
using namespace testing_helpers;

TEST_CASE("softmax_action_probs") {
    const WeightMatrix zero = WeightMatrix::Zero(3, 4);
    Eigen::VectorXd s(3);
    s << 0.3, -1.0, 2.0;
    const auto u = softmax_action_probs(zero, s);
    for (std::size_t a = 0; a < 4; ++a) CHECK(u[a] == doctest::Approx(0.25));

    WeightMatrix t(1, 2);
    t << std::log(3.0), 0.0;
    Eigen::VectorXd one(1);
    one << 1.0;
    const auto p = softmax_action_probs(t, one);
    CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-14));

    // Shift invariance: adding c to every logit through a constant state coordinate.
    WeightMatrix t2(2, 3);
    t2 << 0.1, 2.0, -1.0, 5.0, 5.0, 5.0;
    Eigen::VectorXd s2(2);
    s2 << 1.0, 1.0;
    WeightMatrix t3 = t2;
    t3.row(1).setZero();
    const auto a = softmax_action_probs(t2, s2), b = softmax_action_probs(t3, s2);
    double sum = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(std::abs(a[k] - b[k]) <= 1e-12);
        sum += a[k];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    WeightMatrix big(1, 2);
    big << 800.0, -800.0;
    const auto q = softmax_action_probs(big, one);
    CHECK(q[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(softmax_action_probs(t, s), Error);
}

TEST_CASE("policy_prob") {
    const auto fin = PolicyClass::finite_actions(5);
    CHECK(policy_prob(fin, Policy{std::size_t{3}}, 3) == 1.0);
    CHECK(policy_prob(fin, Policy{std::size_t{3}}, 2) == 0.0);
    CHECK_THROWS_AS(policy_prob(fin, Policy{std::size_t{3}}, 7), Error);
    const auto lin = PolicyClass::linear_softmax(2, 4);
    const std::vector<double> s{0.5, -0.2};
    CHECK(policy_prob(lin, Policy{WeightMatrix::Zero(2, 4)}, 1, s) == doctest::Approx(0.25));
}

TEST_CASE("sample_policies") {
    const auto fin = PolicyClass::finite_actions(4);
    const auto one = Posterior::categorical(fin, CategoricalDistribution::one_hot(4, 2));
    for (const auto& p : sample_policies(one, 50, 1)) CHECK(std::get<std::size_t>(p) == 2);

    const auto lin = PolicyClass::linear_softmax(2, 3);
    Eigen::VectorXd m(6), v = Eigen::VectorXd::Constant(6, 1e-16);
    m << 1, 2, 3, 4, 5, 6;
    const auto g = Posterior::gaussian(lin, DiagonalGaussian(m, v));
    for (const auto& p : sample_policies(g, 20, 5)) {
        const auto& w = std::get<WeightMatrix>(p);
        CHECK((flatten(w) - m).cwiseAbs().maxCoeff() <= 1e-6);
    }
    const auto wide = Posterior::gaussian(lin, DiagonalGaussian::standard(6));
    const auto a = sample_policies(wide, 10, 9), b = sample_policies(wide, 10, 9);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::get<WeightMatrix>(a[i]) == std::get<WeightMatrix>(b[i]));
}

TEST_CASE("flatten is column-major per action") {
    WeightMatrix t(2, 3);
    t << 1, 2, 3, 4, 5, 6;
    const auto v = flatten(t);
    CHECK(v(0) == 1);
    CHECK(v(1) == 4);
    CHECK(v(2) == 2);
    CHECK(unflatten(v, 2, 3) == t);
}

TEST_CASE("weight_bound") {
    CHECK(weight_bound(BehaviourPolicy::uniform(10), PolicyClass::finite_actions(10)) == doctest::Approx(10.0));
    CHECK(weight_bound(BehaviourPolicy::smoothed_softmax(WeightMatrix::Zero(3, 10), 0.01),
                       PolicyClass::linear_softmax(3, 10)) == doctest::Approx(100.0));
    CHECK(weight_bound(BehaviourPolicy::categorical(CategoricalDistribution({0.5, 0.25, 0.25})),
                       PolicyClass::finite_actions(3)) == doctest::Approx(4.0));
    CHECK_THROWS_AS(weight_bound(BehaviourPolicy::from_propensities(), PolicyClass::finite_actions(3)), Error);
}

TEST_CASE("weight_bound covers every policy in the class") {
    const auto beh = BehaviourPolicy::categorical(CategoricalDistribution({0.2, 0.3, 0.5}));
    const double wb = weight_bound(beh, PolicyClass::finite_actions(3));
    const auto p = beh.probs();
    for (std::size_t pol = 0; pol < 3; ++pol)
        for (std::size_t a = 0; a < 3; ++a)
            CHECK(policy_prob(PolicyClass::finite_actions(3), Policy{pol}, a) / p[a] <= wb + 1e-12);
}

TEST_CASE("posterior_kl") {
    const auto fin = PolicyClass::finite_actions(3);
    const auto r = Posterior::categorical(fin, CategoricalDistribution({0.6, 0.2, 0.2}));
    const auto u = Posterior::categorical(fin, CategoricalDistribution::uniform(3));
    CHECK(posterior_kl(r, u) == doctest::Approx(kl_categorical(r.categorical(), u.categorical())));
    const auto lin = PolicyClass::linear_softmax(1, 2);
    CHECK_THROWS_AS(posterior_kl(Posterior::point(lin, WeightMatrix::Zero(1, 2)),
                                 Posterior::gaussian(lin, DiagonalGaussian::standard(2))),
                    Error);
}

TEST_CASE("dataset validation") {
    CHECK_THROWS_AS(mab_data({0, 1}, {1.0, 0.5}, {0.5, 0.0}, 2.0, 2), Error);
    CHECK_THROWS_AS(mab_data({0, 1}, {1.5, 0.5}, {0.5, 0.5}, 2.0, 2), Error);
    CHECK_THROWS_AS(mab_data({0, 1}, {1.0, 0.5}, {0.5, 0.25}, 2.0, 2), Error);  // 1/0.25 > bound
    const auto d = mab_data({0, 1, 1}, {1.0, 0.0, 0.5}, {0.5, 0.5, 0.5}, 2.0, 2);
    CHECK(d.size() == 3);
    CHECK(d.epsilon() == doctest::Approx(0.5));
    const auto s = d.slice(1, 3);
    CHECK(s.size() == 2);
    CHECK(s.reward(1) == 0.5);
}

TEST_CASE("dataset CSV round trip") {
    const auto env = gen_cb_binary_linear(3, 4, 2);
    const auto beh = make_behaviour(BehaviourKind::Informative, env, 0.01, 3);
    const auto d = collect_log(env, beh, 50, 4);
    std::stringstream ss;
    write_csv(d, ss);
    const std::string header = ss.str().substr(0, ss.str().find('\n'));
    CHECK(header == "state_0,state_1,state_2,action,reward,propensity");
    const auto back = read_csv(ss, DatasetMeta{d.weight_bound_inv(), d.iid(), d.num_actions()});
    CHECK(back == d);

    const auto dir = std::filesystem::temp_directory_path() / "pacbandit_unit_ds";
    std::filesystem::create_directories(dir);
    save_dataset(d, dir / "log.csv");
    CHECK(load_dataset(dir / "log.csv") == d);
    std::filesystem::remove_all(dir);

    const auto mab = collect_log(gen_mab_binary(5, 1), BehaviourPolicy::uniform(5), 30, 2);
    std::stringstream s2;
    write_csv(mab, s2);
    CHECK(s2.str().substr(0, s2.str().find('\n')) == "action,reward,propensity");
    CHECK(read_csv(s2, DatasetMeta{mab.weight_bound_inv(), true, 5}) == mab);
}
