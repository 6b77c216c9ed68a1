#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pacbandit/environments.hpp"
#include "pacbandit/learners.hpp"
#include "pacbandit/prior_methods.hpp"
#include "pacbandit/reward_bounds.hpp"

namespace pacbandit {

// One bound to evaluate at its bound-maximizing posterior.
//   ha, pinsker, kl_inverse, bernstein        (estimator IS or CIS)
//   kl_inverse_best_tau                       (CIS, union over tau_grid)
//   efron_stein_wis                           (assumes zero bias)
//   kl_inverse_split, dp_prior                (MAB and CB)
//   lever, oneto, localized_bernstein, ha_empirical_gibbs,
//   bernstein_subset_lambda, bernstein_geometric, bernstein_oracle_lambda (MAB)
//   offline_pipeline, tl2, tpoem              (CB)
struct BoundSpec {
    std::string id;
    std::string estimator = "IS";
    std::optional<double> tau;
    std::optional<double> lambda;
    std::optional<double> c;
    std::vector<double> tau_grid;

    std::string label() const;
    EstimatorKind kind() const;
    static BoundSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct RunSettings {
    LearnerConfig categorical{500, 0.5, 100, 0, 256, 0};
    LearnerConfig gaussian{1000, 0.05, 100, 0, 256, 100};
    PipelineConfig pipeline;
    BaselineConfig baseline;
    SgldConfig sgld;
    std::size_t es_ghost_draws = 100;
    TrueRewardOptions truth;
    EvalOptions eval;
};

struct EvalOutcome {
    BoundReport report;
    Posterior posterior;
    double expected_reward = 0.0;
};

EvalOutcome evaluate_bound(const BoundSpec& spec, const Environment& env, const LoggedDataset& d,
                           const BehaviourPolicy& behaviour, double delta, std::uint64_t seed,
                           const RunSettings& settings = {});

// Bound-maximizing categorical posterior for the kl-family objective.
CategoricalDistribution maximize_kl_family_posterior(const EstimatorKind& kind, const LoggedDataset& d,
                                                     const CategoricalDistribution& mu, double delta, KlMode mode,
                                                     const LearnerConfig& config);

struct EnvSpec {
    std::string type = "mab_binary";  // mab_binary | cb_binary_linear | csv
    std::size_t k = 10;
    std::size_t d = 10;
    std::string path;
};

struct ExperimentConfig {
    int version = 1;
    std::string name = "custom";
    std::string mode = "offline";  // offline | online
    EnvSpec env;
    std::string behaviour = "uniform";
    double behaviour_epsilon = 0.01;
    std::size_t n = 1000;
    double delta = 0.05;
    std::vector<BoundSpec> bounds;
    std::vector<std::size_t> sweep_k;  // empty: env.k only
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> schedules;  // online mode
    std::filesystem::path out_dir = "out";
    RunSettings settings;

    void validate() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    // fig2 | fig3 | fig4 | fig5l | fig7
    static ExperimentConfig preset(const std::string& name, std::uint64_t base_seed = 0, std::size_t num_seeds = 0);
};

struct ResultRow {
    std::uint64_t seed = 0;
    std::size_t k = 0;
    std::size_t n = 0;
    std::string bound_id;
    std::string label;
    double bound_value = 0.0;
    double expected_reward = 0.0;
    double measured_regret = 0.0;
    std::string params;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<std::string> failures;
    std::vector<std::filesystem::path> files;
};

Environment make_environment(const EnvSpec& spec, std::size_t k, std::uint64_t seed);

// Deterministic per config; writes <name>.csv and <name>.svg under out_dir
// when write_files is set.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files = true);

void write_rows_csv(const std::vector<ResultRow>& rows, std::ostream& out);

double median(std::vector<double> v);

}  // namespace pacbandit
