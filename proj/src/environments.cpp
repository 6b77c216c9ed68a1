#include "pacbandit/environments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "pacbandit/errors.hpp"
#include "pacbandit/numeric.hpp"

namespace pacbandit {

std::size_t CbBinaryLinearEnv::best_action(std::span<const double> s) const {
    std::vector<double> z(num_actions());
    linear_logits(theta_star, s, z.data());
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::size_t env_num_actions(const Environment& env) {
    return std::visit([](const auto& e) { return e.num_actions(); }, env);
}

std::size_t env_state_dim(const Environment& env) {
    if (std::holds_alternative<MabBinaryEnv>(env)) return 0;
    if (const auto* cb = std::get_if<CbBinaryLinearEnv>(&env)) return cb->state_dim();
    return std::get<ClassificationEnv>(env).state_dim();
}

PolicyClass env_policy_class(const Environment& env) {
    const std::size_t d = env_state_dim(env), k = env_num_actions(env);
    return d == 0 ? PolicyClass::finite_actions(k) : PolicyClass::linear_softmax(d, k);
}

MabBinaryEnv gen_mab_binary(std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorKind::Domain, "MAB Binary needs K >= 2");
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 0.8);
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    MabBinaryEnv env;
    env.best_index = pick(rng);
    env.means.resize(k);
    for (std::size_t a = 0; a < k; ++a) env.means[a] = a == env.best_index ? 0.8 : u(rng);
    return env;
}

CbBinaryLinearEnv gen_cb_binary_linear(std::size_t d, std::size_t k, std::uint64_t seed) {
    if (d < 1 || k < 1) throw Error(ErrorKind::Domain, "CB Binary Linear needs d, K >= 1");
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    CbBinaryLinearEnv env;
    env.theta_star.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
    for (Eigen::Index a = 0; a < env.theta_star.cols(); ++a)
        for (Eigen::Index j = 0; j < env.theta_star.rows(); ++j) env.theta_star(j, a) = z(rng);
    return env;
}

BehaviourKind parse_behaviour_kind(const std::string& name) {
    if (name == "uniform") return BehaviourKind::Uniform;
    if (name == "informative") return BehaviourKind::Informative;
    if (name == "random") return BehaviourKind::Random;
    throw Error(ErrorKind::Config, "unknown behaviour kind: " + name);
}

const char* to_string(BehaviourKind kind) {
    switch (kind) {
        case BehaviourKind::Uniform: return "uniform";
        case BehaviourKind::Informative: return "informative";
        case BehaviourKind::Random: return "random";
    }
    return "";
}

namespace {

CategoricalDistribution smooth(std::vector<double> p, double eps) {
    const double k = static_cast<double>(p.size());
    for (double& x : p) x = (1.0 - k * eps) * x + eps;
    return CategoricalDistribution(std::move(p));
}

}  // namespace

BehaviourPolicy make_behaviour(BehaviourKind kind, const Environment& env, double epsilon, std::uint64_t seed) {
    const std::size_t k = env_num_actions(env);
    if (kind == BehaviourKind::Uniform) return BehaviourPolicy::uniform(k);
    if (!(epsilon > 0.0 && epsilon <= 1.0 / static_cast<double>(k) * (1.0 + 1e-12)))
        throw Error(ErrorKind::Domain, "behaviour smoothing must lie in (0, 1/K]");
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    if (const auto* mab = std::get_if<MabBinaryEnv>(&env)) {
        std::vector<double> p(k);
        if (kind == BehaviourKind::Informative) {
            for (std::size_t a = 0; a < k; ++a) p[a] = 10.0 * mab->means[a];
            softmax_inplace(p.data(), k);
        } else {
            std::gamma_distribution<double> g(1.0, 1.0);
            double total = 0.0;
            for (auto& x : p) total += (x = g(rng));
            for (auto& x : p) x /= total;
        }
        return BehaviourPolicy::categorical(smooth(std::move(p), epsilon));
    }
    const std::size_t d = env_state_dim(env);
    if (kind == BehaviourKind::Informative) {
        const auto* cb = std::get_if<CbBinaryLinearEnv>(&env);
        if (!cb) throw Error(ErrorKind::Config, "informative behaviour needs an environment with known weights");
        return BehaviourPolicy::smoothed_softmax(cb->theta_star, epsilon);
    }
    WeightMatrix theta(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
    for (Eigen::Index a = 0; a < theta.cols(); ++a)
        for (Eigen::Index j = 0; j < theta.rows(); ++j) theta(j, a) = z(rng);
    return BehaviourPolicy::smoothed_softmax(std::move(theta), epsilon);
}

LoggedDataset collect_log(const Environment& env, const BehaviourPolicy& behaviour, std::size_t n,
                          std::uint64_t seed) {
    if (n < 1) throw Error(ErrorKind::Domain, "log size must be >= 1");
    if (!behaviour.samplable()) throw Error(ErrorKind::NotSamplable, "behaviour policy cannot be sampled");
    const std::size_t k = env_num_actions(env), d = env_state_dim(env);
    if (behaviour.num_actions() != k) throw Error(ErrorKind::DimensionMismatch, "behaviour and environment K differ");
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    StateMatrix states(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<std::size_t> actions(n);
    std::vector<double> rewards(n), props(n);
    std::vector<double> probs;
    const auto* mab = std::get_if<MabBinaryEnv>(&env);
    const auto* cb = std::get_if<CbBinaryLinearEnv>(&env);
    const auto* cls = std::get_if<ClassificationEnv>(&env);
    std::vector<std::size_t> rows;
    if (cls) {
        const std::size_t m = cls->train_labels.size();
        if (m == 0) throw Error(ErrorKind::Domain, "classification environment has no training rows");
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = perm[i % m];
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto row = states.row(static_cast<Eigen::Index>(i));
        if (cb)
            for (std::size_t j = 0; j < d; ++j) row[static_cast<Eigen::Index>(j)] = z(rng);
        else if (cls)
            row = cls->train_states.row(static_cast<Eigen::Index>(rows[i]));
        const std::span<const double> s(states.data() + i * d, d);
        behaviour.probs(s, probs);
        const std::size_t a = sample_index(probs.data(), k, rng);
        actions[i] = a;
        props[i] = probs[a];
        double p_reward;
        if (mab)
            p_reward = mab->means[a];
        else if (cb)
            p_reward = a == cb->best_action(s) ? 0.8 : 0.2;
        else
            p_reward = a == cls->train_labels[rows[i]] ? 1.0 : 0.0;
        rewards[i] = uniform01(rng) < p_reward ? 1.0 : 0.0;
    }
    const double wbi = weight_bound(behaviour, env_policy_class(env));
    return LoggedDataset(std::move(states), std::move(actions), std::move(rewards), std::move(props), wbi, true, k);
}

double true_reward(const Environment& env, const Posterior& rho, const TrueRewardOptions& opts) {
    const std::size_t k = env_num_actions(env);
    if (rho.policy_class().num_actions() != k) throw Error(ErrorKind::DimensionMismatch, "posterior and env K differ");
    if (const auto* mab = std::get_if<MabBinaryEnv>(&env)) {
        if (!rho.is_categorical()) throw Error(ErrorKind::Domain, "MAB rewards need a categorical posterior");
        double r = 0.0;
        for (std::size_t a = 0; a < k; ++a) r += rho.categorical()[a] * mab->means[a];
        return r;
    }
    if (rho.policy_class().is_finite()) throw Error(ErrorKind::Domain, "contextual rewards need a linear policy class");
    const std::size_t d = env_state_dim(env);
    const std::size_t np = rho.is_gaussian() ? opts.policies : 1;
    const auto pols = sample_policies(rho, np, derive_seed(opts.seed, 1));
    StateMatrix states;
    std::vector<std::size_t> target;
    const auto* cb = std::get_if<CbBinaryLinearEnv>(&env);
    if (cb) {
        Rng rng(derive_seed(opts.seed, 2));
        std::normal_distribution<double> z(0.0, 1.0);
        states.resize(static_cast<Eigen::Index>(opts.states), static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < states.rows(); ++i)
            for (Eigen::Index j = 0; j < states.cols(); ++j) states(i, j) = z(rng);
        target.resize(opts.states);
        for (std::size_t i = 0; i < opts.states; ++i) target[i] = cb->best_action({states.data() + i * d, d});
    } else {
        const auto& c = std::get<ClassificationEnv>(env);
        states = c.holdout_states;
        target = c.holdout_labels;
    }
    const std::size_t m = target.size();
    if (m == 0) throw Error(ErrorKind::Domain, "no states to evaluate on");
    std::vector<double> per_policy(np, 0.0);
    parallel_for(np, [&](std::size_t p) {
        const auto& theta = std::get<WeightMatrix>(pols[p]);
        const Eigen::MatrixXd logits = states * theta;  // m x K
        std::vector<double> z(k);
        KahanSum s;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t a = 0; a < k; ++a) z[a] = logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
            softmax_inplace(z.data(), k);
            const double pi = z[target[i]];
            s.add(cb ? 0.2 + 0.6 * pi : pi);
        }
        per_policy[p] = s.value() / static_cast<double>(m);
    });
    KahanSum total;
    for (double v : per_policy) total.add(v);
    return total.value() / static_cast<double>(np);
}

ClassificationEnv csv_to_cb_env(const std::filesystem::path& path, std::uint64_t seed, double train_fraction) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Io, "empty CSV: " + path.string());
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 2) throw Error(ErrorKind::Io, "CSV needs at least one feature and a label column");
    std::size_t label_col = header.size() - 1;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == "label") label_col = j;
    std::vector<std::vector<double>> feats;
    std::vector<long> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        long label = 0;
        std::size_t j = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                if (j == label_col) {
                    label = std::stol(cell, &used);
                } else {
                    row.push_back(std::stod(cell, &used));
                }
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw Error(ErrorKind::Io, "malformed CSV value on line " + std::to_string(lineno));
            }
            ++j;
        }
        if (j != header.size()) throw Error(ErrorKind::Io, "wrong column count on line " + std::to_string(lineno));
        feats.push_back(std::move(row));
        labels.push_back(label);
    }
    if (feats.size() < 2) throw Error(ErrorKind::Io, "CSV needs at least two rows");
    std::map<long, std::size_t> seen;
    for (long l : labels) seen[l] = 0;
    const long lo = seen.begin()->first;
    const std::size_t k = seen.size();
    if (seen.rbegin()->first - lo + 1 != static_cast<long>(k))
        throw Error(ErrorKind::Domain, "labels must be contiguous integers");
    const std::size_t n = feats.size(), d = header.size() - 1;
    // Column standardization over the whole file.
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (const auto& r : feats)
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& r : feats)
        for (std::size_t j = 0; j < d; ++j) sd[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
    for (auto& s : sd) s = std::sqrt(s / static_cast<double>(n));

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t n_tr =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n))), 1, n - 1);
    ClassificationEnv env;
    env.k = k;
    env.train_states.resize(static_cast<Eigen::Index>(n_tr), static_cast<Eigen::Index>(d));
    env.holdout_states.resize(static_cast<Eigen::Index>(n - n_tr), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = feats[perm[i]];
        auto& dst = i < n_tr ? env.train_states : env.holdout_states;
        const auto row = static_cast<Eigen::Index>(i < n_tr ? i : i - n_tr);
        for (std::size_t j = 0; j < d; ++j)
            dst(row, static_cast<Eigen::Index>(j)) = sd[j] > 0.0 ? (r[j] - mean[j]) / sd[j] : 0.0;
        (i < n_tr ? env.train_labels : env.holdout_labels).push_back(static_cast<std::size_t>(labels[perm[i]] - lo));
    }
    return env;
}

}  // namespace pacbandit
