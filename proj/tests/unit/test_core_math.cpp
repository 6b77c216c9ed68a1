#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "pacbandit/core_math.hpp"
#include "pacbandit/errors.hpp"

using namespace pacbandit;
using namespace testing_helpers;

TEST_CASE("binary_kl closed forms") {
    CHECK(binary_kl(0.5, 0.5) == doctest::Approx(0.0));
    CHECK(binary_kl(0.0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // Direct evaluation 0.1 ln(0.2) + 0.9 ln(1.8).
    const double frozen = 0.3680642071684971;
    CHECK(binary_kl(0.1, 0.5) == doctest::Approx(frozen).epsilon(1e-12));
    CHECK(binary_kl(0.1, 0.5) == doctest::Approx(static_cast<double>(kl_ref(0.1L, 0.5L))).epsilon(1e-12));
}

TEST_CASE("binary_kl infinite sentinel and domain") {
    CHECK(std::isinf(binary_kl(0.3, 0.0)));
    CHECK(std::isinf(binary_kl(0.3, 1.0)));
    CHECK(binary_kl(0.0, 0.0) == 0.0);
    CHECK(binary_kl(1.0, 1.0) == 0.0);
    CHECK_THROWS_AS(binary_kl(-0.1, 0.5), Error);
    CHECK_THROWS_AS(binary_kl(0.5, 1.2), Error);
}

TEST_CASE("kl_inverse_lower examples") {
    CHECK(kl_inverse_lower(0.37, 0.0) == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(kl_inverse_lower(0.0, 0.4) == 0.0);
    const double frozen = 0.6564642965139055;
    CHECK(kl_inverse_lower(0.8, 0.05) == doctest::Approx(frozen).epsilon(1e-9));
    CHECK(kl_inverse_lower(0.8, 0.05) == doctest::Approx(kl_inverse_ref(0.8, 0.05)).epsilon(1e-9));
}

TEST_CASE("kl_inverse_lower agrees with an independent bisection oracle") {
    for (double p : {0.01, 0.2, 0.5, 0.77, 0.99, 1.0})
        for (double b : {1e-6, 1e-3, 0.05, 0.5, 3.0})
            CHECK(std::abs(kl_inverse_lower(p, b) - kl_inverse_ref(p, b)) <= 1e-10);
}

TEST_CASE("kl_inverse_lower inverts kl and respects Pinsker") {
    for (int i = 0; i <= 40; ++i) {
        const double p = i / 40.0;
        for (int j = 0; j <= 40; ++j) {
            const double b = 2.0 * j / 40.0;
            const double q = kl_inverse_lower(p, b);
            CHECK(q <= p + 1e-15);
            CHECK(binary_kl(p, q) <= b + 1e-9);
            if (p > 0 && q > 0) CHECK(std::abs(binary_kl(p, q) - b) <= 1e-9);
            CHECK(p - q <= std::sqrt(b / 2.0) + 1e-9);
        }
    }
}

TEST_CASE("kl_inverse_lower monotonicity on a grid") {
    for (int i = 1; i < 30; ++i) {
        const double p = i / 30.0;
        double prev = 2.0;
        for (int j = 0; j < 30; ++j) {
            const double q = kl_inverse_lower(p, 0.05 * j);
            CHECK(q <= prev + 1e-15);
            prev = q;
        }
    }
    for (int j = 1; j < 30; ++j) {
        const double b = 0.03 * j;
        double prev = -1.0;
        for (int i = 0; i <= 30; ++i) {
            const double q = kl_inverse_lower(i / 30.0, b);
            CHECK(q >= prev - 1e-15);
            prev = q;
        }
    }
}

TEST_CASE("kl_inverse_derivatives vs finite differences") {
    for (double p : {0.8, 0.3, 0.55}) {
        for (double b : {0.05, 0.01, 0.2}) {
            const auto g = kl_inverse_derivatives(p, b);
            const double fp = central_diff([&](double x) { return kl_inverse_lower(x, b); }, p);
            const double fb = central_diff([&](double x) { return kl_inverse_lower(p, x); }, b);
            CHECK(rel_err(g.d_p, fp) <= 1e-4);
            CHECK(rel_err(g.d_b, fb) <= 1e-4);
            CHECK(g.d_b < 0.0);
            CHECK(g.d_p > 0.0);
        }
    }
    CHECK_THROWS_AS(kl_inverse_derivatives(0.0, 0.1), Error);
    CHECK_THROWS_AS(kl_inverse_derivatives(0.5, 0.0), Error);
}

TEST_CASE("kl_categorical") {
    const auto u10 = CategoricalDistribution::uniform(10);
    CHECK(kl_categorical(u10, u10) == doctest::Approx(0.0));
    CHECK(kl_categorical(CategoricalDistribution::one_hot(10, 4), u10) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    const CategoricalDistribution r({0.7, 0.3});
    const double frozen = 0.08228287850505178;
    CHECK(kl_categorical(r, CategoricalDistribution::uniform(2)) == doctest::Approx(frozen).epsilon(1e-12));
    CHECK(std::isinf(kl_categorical(r, CategoricalDistribution::one_hot(2, 0))));
    CHECK_THROWS_AS(kl_categorical(r, u10), Error);
}

TEST_CASE("kl_categorical against uniform equals lnK minus entropy") {
    std::mt19937_64 rng(3);
    std::gamma_distribution<double> g(0.5, 1.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> w(7);
        for (auto& x : w) x = g(rng);
        const auto rho = CategoricalDistribution::from_unnormalized(w);
        CHECK(std::abs(kl_categorical(rho, CategoricalDistribution::uniform(7)) - (std::log(7.0) - rho.entropy())) <=
              1e-12);
    }
}

TEST_CASE("CategoricalDistribution validation") {
    CHECK_THROWS_AS(CategoricalDistribution({0.5, 0.6}), Error);
    CHECK_THROWS_AS(CategoricalDistribution({-0.1, 1.1}), Error);
    const CategoricalDistribution c({0.5, 0.5 + 1e-10});
    CHECK(c[0] + c[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("kl_diag_gaussian") {
    const auto s = DiagonalGaussian::standard(2);
    CHECK(kl_diag_gaussian(s, s) == doctest::Approx(0.0));
    Eigen::VectorXd m(2), v(2);
    m << 1.5, -2.0;
    v << 1.0, 1.0;
    CHECK(kl_diag_gaussian(DiagonalGaussian(m, v), s) == doctest::Approx(m.squaredNorm() / 2.0).epsilon(1e-12));
    // Per-coordinate closed form 0.5 (v + m^2 - 1 - ln v) with m=(1,0), v=(2,1).
    m << 1.0, 0.0;
    v << 2.0, 1.0;
    const double oracle = 0.5 * (2.0 + 1.0 - 1.0 - std::log(2.0));
    const double frozen = 0.6534264097200273;
    CHECK(oracle == doctest::Approx(frozen).epsilon(1e-14));
    CHECK(kl_diag_gaussian(DiagonalGaussian(m, v), s) == doctest::Approx(frozen).epsilon(1e-12));
    CHECK_THROWS_AS(DiagonalGaussian(m, Eigen::VectorXd::Zero(2)), Error);
    CHECK_THROWS_AS(kl_diag_gaussian(DiagonalGaussian(m, v), DiagonalGaussian::standard(3)), Error);
}

TEST_CASE("Confidence domain") {
    CHECK(Confidence(0.05).log_inv() == doctest::Approx(std::log(20.0)));
    CHECK(Confidence(1.0).log_inv() == 0.0);
    CHECK_THROWS_AS(Confidence(0.0), Error);
    CHECK_THROWS_AS(Confidence(1.5), Error);
}
