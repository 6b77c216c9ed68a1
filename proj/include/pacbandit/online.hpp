#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pacbandit/core_math.hpp"

namespace pacbandit {

struct OnlineState {
    std::size_t n = 0;
    std::vector<double> is_sums;      // sum of r 1{a_i = a} / propensity
    std::vector<std::size_t> counts;  // pulls per action
    std::vector<double> reward_sums;  // observed rewards per action
    double cumulative_reward = 0.0;

    explicit OnlineState(std::size_t k) : is_sums(k, 0.0), counts(k, 0), reward_sums(k, 0.0) {}
    std::size_t num_actions() const { return counts.size(); }
    // r_IS(a, D_n); zero before the first round.
    double is_estimate(std::size_t a) const;
    void record(std::size_t a, double reward, double propensity);
};

enum class ScheduleKind { HoeffdingAzuma, Bernstein, Exp3, HaEpsGreedy, BernEpsGreedy, Ucb1 };

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::Exp3;

    // Smoothing at round index n, truncated to 1/K.
    double epsilon(std::size_t n, std::size_t k) const;
    // Inverse temperature after n rounds; +inf for the eps-greedy variants.
    double gamma(std::size_t n, std::size_t k) const;
    bool uses_gibbs() const { return kind != ScheduleKind::Ucb1; }
    std::string name() const;
    static ScheduleSpec parse(const std::string& name);
};

// (1 - K eps) rho + eps with rho proportional to mu exp(gamma r_IS).
CategoricalDistribution smoothed_gibbs_policy(const CategoricalDistribution& mu, const OnlineState& state,
                                              double gamma, double eps_next);

// Mean + sqrt(2 ln n / n_a); unplayed actions first, ties to the lowest index.
std::size_t ucb1_policy(const OnlineState& state);

struct OnlineTrace {
    std::vector<std::size_t> action;
    std::vector<double> reward;
    std::vector<double> regret;      // expected regret of the played distribution
    std::vector<double> cum_regret;
    std::vector<double> bound;       // optional, aligned with rounds when filled

    std::size_t rounds() const { return action.size(); }
    double final_regret() const { return cum_regret.empty() ? 0.0 : cum_regret.back(); }
    void write_csv(std::ostream& out) const;
};

// Bernoulli arms with the given means.
OnlineTrace run_online(const ScheduleSpec& schedule, std::span<const double> means, std::size_t horizon,
                       std::uint64_t seed);

enum class RegretCurveKind { HoeffdingAzuma, Bernstein, HypothesizedExp3, Trivial };

struct RegretCurveValue {
    double value = 0.0;
    bool condition_met = true;
    std::string note;
};

// eps_greedy drops the sqrt(ln K) term.
RegretCurveValue regret_bound_curve(RegretCurveKind kind, double n, double k, double delta, bool eps_greedy = false);
// Smallest n meeting the Bernstein curve's sample-size condition.
double bernstein_curve_min_n(double k, double delta);

}  // namespace pacbandit
