#include "pacbandit/online.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "pacbandit/errors.hpp"
#include "pacbandit/learners.hpp"
#include "pacbandit/numeric.hpp"
#include "pacbandit/reward_bounds.hpp"

namespace pacbandit {

double OnlineState::is_estimate(std::size_t a) const {
    return n == 0 ? 0.0 : is_sums.at(a) / static_cast<double>(n);
}

void OnlineState::record(std::size_t a, double reward, double propensity) {
    if (!(propensity > 0.0)) throw Error(ErrorKind::Domain, "propensity must be positive");
    is_sums.at(a) += reward / propensity;
    counts[a] += 1;
    reward_sums[a] += reward;
    cumulative_reward += reward;
    ++n;
}

double ScheduleSpec::epsilon(std::size_t n, std::size_t k) const {
    const double kk = static_cast<double>(k);
    const double nn = static_cast<double>(std::max<std::size_t>(n, 1));
    double e = 0.0;
    switch (kind) {
        case ScheduleKind::HoeffdingAzuma:
        case ScheduleKind::HaEpsGreedy: e = std::pow(nn, -0.25) / std::sqrt(kk); break;
        case ScheduleKind::Bernstein:
        case ScheduleKind::BernEpsGreedy: e = std::pow(nn, -1.0 / 3.0) * std::pow(kk, -2.0 / 3.0); break;
        case ScheduleKind::Exp3: e = 1.0 / std::sqrt(nn * kk); break;
        case ScheduleKind::Ucb1: return 0.0;
    }
    return std::min(e, 1.0 / kk);
}

double ScheduleSpec::gamma(std::size_t n, std::size_t k) const {
    const double kk = static_cast<double>(k), nn = static_cast<double>(n);
    const double lk = std::sqrt(std::log(kk));
    switch (kind) {
        case ScheduleKind::HoeffdingAzuma: return std::pow(nn, 0.25) / std::sqrt(kk) * lk;
        case ScheduleKind::Bernstein: return std::pow(nn, 1.0 / 3.0) * std::pow(kk, -1.0 / 3.0) * lk;
        case ScheduleKind::Exp3: return std::sqrt(nn * std::log(kk) / kk);
        case ScheduleKind::HaEpsGreedy:
        case ScheduleKind::BernEpsGreedy: return kInfinity;
        case ScheduleKind::Ucb1: return 0.0;
    }
    return 0.0;
}

std::string ScheduleSpec::name() const {
    switch (kind) {
        case ScheduleKind::HoeffdingAzuma: return "ha_exp3";
        case ScheduleKind::Bernstein: return "bern_exp3";
        case ScheduleKind::Exp3: return "exp3";
        case ScheduleKind::HaEpsGreedy: return "ha_eps_greedy";
        case ScheduleKind::BernEpsGreedy: return "bern_eps_greedy";
        case ScheduleKind::Ucb1: return "ucb1";
    }
    return "";
}

ScheduleSpec ScheduleSpec::parse(const std::string& name) {
    for (auto k : {ScheduleKind::HoeffdingAzuma, ScheduleKind::Bernstein, ScheduleKind::Exp3,
                   ScheduleKind::HaEpsGreedy, ScheduleKind::BernEpsGreedy, ScheduleKind::Ucb1})
        if (ScheduleSpec{k}.name() == name) return {k};
    throw Error(ErrorKind::Config, "unknown schedule: " + name);
}

CategoricalDistribution smoothed_gibbs_policy(const CategoricalDistribution& mu, const OnlineState& state,
                                              double gamma, double eps_next) {
    const std::size_t k = mu.size();
    if (state.num_actions() != k) throw Error(ErrorKind::DimensionMismatch, "prior and state sizes differ");
    const double kk = static_cast<double>(k);
    if (!(eps_next >= 0.0) || eps_next > 1.0 / kk * (1.0 + 1e-12))
        throw Error(ErrorKind::Domain, "smoothing must lie in [0, 1/K]");
    std::vector<double> s(k);
    for (std::size_t a = 0; a < k; ++a) s[a] = state.is_estimate(a);
    const auto rho = gibbs_posterior_finite(mu, s, gamma);
    std::vector<double> w(k);
    for (std::size_t a = 0; a < k; ++a) w[a] = (1.0 - kk * eps_next) * rho[a] + eps_next;
    return CategoricalDistribution(std::move(w));
}

std::size_t ucb1_policy(const OnlineState& state) {
    const std::size_t k = state.num_actions();
    for (std::size_t a = 0; a < k; ++a)
        if (state.counts[a] == 0) return a;
    const double ln_n = std::log(static_cast<double>(state.n));
    std::size_t best = 0;
    double best_v = -kInfinity;
    for (std::size_t a = 0; a < k; ++a) {
        const double c = static_cast<double>(state.counts[a]);
        const double v = state.reward_sums[a] / c + std::sqrt(2.0 * ln_n / c);
        if (v > best_v) {
            best_v = v;
            best = a;
        }
    }
    return best;
}

void OnlineTrace::write_csv(std::ostream& out) const {
    const bool with_bound = bound.size() == action.size() && !bound.empty();
    out << "round,action,reward,regret,cum_regret" << (with_bound ? ",bound" : "") << '\n';
    for (std::size_t i = 0; i < action.size(); ++i) {
        out << i + 1 << ',' << action[i] << ',' << reward[i] << ',' << regret[i] << ',' << cum_regret[i];
        if (with_bound) out << ',' << bound[i];
        out << '\n';
    }
}

OnlineTrace run_online(const ScheduleSpec& schedule, std::span<const double> means, std::size_t horizon,
                       std::uint64_t seed) {
    if (horizon < 1) throw Error(ErrorKind::Domain, "horizon must be >= 1");
    const std::size_t k = means.size();
    if (k < 1) throw Error(ErrorKind::Domain, "need at least one arm");
    for (double p : means)
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Domain, "arm means must lie in [0,1]");
    const double best = *std::max_element(means.begin(), means.end());
    const auto mu = CategoricalDistribution::uniform(k);
    OnlineState state(k);
    Rng rng(seed);
    OnlineTrace trace;
    trace.action.reserve(horizon);
    trace.reward.reserve(horizon);
    trace.regret.reserve(horizon);
    trace.cum_regret.reserve(horizon);
    KahanSum cum;
    for (std::size_t i = 1; i <= horizon; ++i) {
        std::size_t a;
        double played_regret = 0.0, prop = 1.0;
        if (schedule.uses_gibbs()) {
            const auto rho = smoothed_gibbs_policy(mu, state, schedule.gamma(i - 1, k), schedule.epsilon(i, k));
            a = sample_index(rho.weights().data(), k, rng);
            prop = rho[a];
            for (std::size_t b = 0; b < k; ++b) played_regret += rho[b] * (best - means[b]);
        } else {
            a = ucb1_policy(state);
            played_regret = best - means[a];
        }
        const double r = uniform01(rng) < means[a] ? 1.0 : 0.0;
        state.record(a, r, prop);
        const double reg = std::max(0.0, played_regret);
        cum.add(reg);
        trace.action.push_back(a);
        trace.reward.push_back(r);
        trace.regret.push_back(reg);
        trace.cum_regret.push_back(cum.value());
    }
    return trace;
}

namespace {

double log_budget(double n, double k, double delta) {
    return std::log(k) + 2.0 * std::log(n + 1.0) + Confidence(delta).log_inv();
}

}  // namespace

double bernstein_curve_min_n(double k, double delta) {
    // Smallest integer n with n >= K (log_budget(n) / (2(e-2)))^{3/2}.
    auto ok = [&](double n) { return n >= k * std::pow(log_budget(n, k, delta) / (2.0 * kEMinus2), 1.5); };
    double lo = 1.0, hi = 2.0;
    if (ok(lo)) return lo;
    while (!ok(hi)) hi *= 2.0;
    while (hi - lo > 1.0) {
        const double mid = std::floor(0.5 * (lo + hi));
        if (ok(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

RegretCurveValue regret_bound_curve(RegretCurveKind kind, double n, double k, double delta, bool eps_greedy) {
    if (!(n >= 1.0) || !(k >= 1.0)) throw Error(ErrorKind::Domain, "need n >= 1 and K >= 1");
    const double lk = eps_greedy ? 0.0 : std::sqrt(std::log(k));
    RegretCurveValue out;
    switch (kind) {
        case RegretCurveKind::HoeffdingAzuma:
            out.value = std::pow(n, 0.75) * std::sqrt(k) * (1.0 + lk + std::sqrt(2.0 * log_budget(n, k, delta)));
            break;
        case RegretCurveKind::Bernstein:
            out.value = std::pow(n, 2.0 / 3.0) * std::cbrt(k) *
                        (1.0 + lk + 2.0 * std::sqrt(2.0 * kEMinus2 * log_budget(n, k, delta)));
            if (n < k * std::pow(log_budget(n, k, delta) / (2.0 * kEMinus2), 1.5)) {
                out.condition_met = false;
                out.note = "condition unmet";
            }
            break;
        case RegretCurveKind::HypothesizedExp3: {
            const ScheduleSpec exp3{ScheduleKind::Exp3};
            const auto kk = static_cast<std::size_t>(k);
            const auto nn = static_cast<std::size_t>(n);
            KahanSum s;
            for (std::size_t i = 1; i <= nn; ++i) {
                const double di = static_cast<double>(i);
                const double lb = log_budget(di, k, delta);
                double term = 2.0 * std::sqrt(2.0 * kEMinus2 * k * lb / di) + k * exp3.epsilon(i + 1, kk);
                if (k > 1.0) term += std::log(k) / exp3.gamma(i, kk);
                s.add(term);
            }
            out.value = s.value();
            out.note = "reconstruction: variance bounded by 2K under the EXP3 schedule";
            break;
        }
        case RegretCurveKind::Trivial: out.value = n; break;
    }
    return out;
}

}  // namespace pacbandit
