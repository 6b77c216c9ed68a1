#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "pacbandit/dataset.hpp"
#include "pacbandit/policy.hpp"

namespace pacbandit {

// Bernoulli arms; exactly one mean equals 0.8, the others lie in [0, 0.8].
struct MabBinaryEnv {
    std::vector<double> means;
    std::size_t best_index = 0;
    std::size_t num_actions() const { return means.size(); }
};

// Standard normal states; reward Bernoulli(0.8) when the action is
// argmax_a <s, theta*_a> (lowest index on ties), Bernoulli(0.2) otherwise.
struct CbBinaryLinearEnv {
    WeightMatrix theta_star;  // d x K
    std::size_t state_dim() const { return static_cast<std::size_t>(theta_star.rows()); }
    std::size_t num_actions() const { return static_cast<std::size_t>(theta_star.cols()); }
    std::size_t best_action(std::span<const double> s) const;
};

// Classification data turned into a bandit: reward 1 iff action == label.
struct ClassificationEnv {
    StateMatrix train_states;
    std::vector<std::size_t> train_labels;
    StateMatrix holdout_states;
    std::vector<std::size_t> holdout_labels;
    std::size_t k = 0;
    std::size_t state_dim() const { return static_cast<std::size_t>(train_states.cols()); }
    std::size_t num_actions() const { return k; }
};

using Environment = std::variant<MabBinaryEnv, CbBinaryLinearEnv, ClassificationEnv>;

std::size_t env_num_actions(const Environment& env);
std::size_t env_state_dim(const Environment& env);
PolicyClass env_policy_class(const Environment& env);

MabBinaryEnv gen_mab_binary(std::size_t k, std::uint64_t seed);
CbBinaryLinearEnv gen_cb_binary_linear(std::size_t d, std::size_t k, std::uint64_t seed);

enum class BehaviourKind { Uniform, Informative, Random };
BehaviourKind parse_behaviour_kind(const std::string& name);
const char* to_string(BehaviourKind kind);

// epsilon in (0, 1/K]; ignored by the uniform kind.
BehaviourPolicy make_behaviour(BehaviourKind kind, const Environment& env, double epsilon, std::uint64_t seed);

LoggedDataset collect_log(const Environment& env, const BehaviourPolicy& behaviour, std::size_t n,
                          std::uint64_t seed);

struct TrueRewardOptions {
    std::size_t states = 10000;
    std::size_t policies = 100;
    std::uint64_t seed = 0;
};

// MAB: exact. CB: Monte Carlo over fresh states and sampled policies.
// Classification: holdout average over sampled policies.
double true_reward(const Environment& env, const Posterior& rho, const TrueRewardOptions& opts = {});

// Reads numeric features plus an integer label column ("label", else the
// last column), standardizes features and splits 80:20 with the seed.
ClassificationEnv csv_to_cb_env(const std::filesystem::path& path, std::uint64_t seed, double train_fraction = 0.8);

}  // namespace pacbandit
