#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "pacbandit/policy.hpp"

namespace pacbandit {

// Logged bandit feedback, stored column-wise. Non-contextual data has
// state_dim() == 0.
class LoggedDataset {
public:
    LoggedDataset() = default;
    LoggedDataset(StateMatrix states, std::vector<std::size_t> actions, std::vector<double> rewards,
                  std::vector<double> propensities, double weight_bound_inv, bool iid,
                  std::size_t num_actions = 0);

    std::size_t size() const { return actions_.size(); }
    std::size_t state_dim() const { return static_cast<std::size_t>(states_.cols()); }
    bool contextual() const { return state_dim() > 0; }
    std::size_t num_actions() const { return k_; }

    std::size_t action(std::size_t i) const { return actions_[i]; }
    double reward(std::size_t i) const { return rewards_[i]; }
    double propensity(std::size_t i) const { return propensities_[i]; }
    std::span<const double> state(std::size_t i) const {
        return {states_.data() + i * state_dim(), state_dim()};
    }

    const StateMatrix& states() const { return states_; }
    const std::vector<std::size_t>& actions() const { return actions_; }
    const std::vector<double>& rewards() const { return rewards_; }
    const std::vector<double>& propensities() const { return propensities_; }

    double weight_bound_inv() const { return weight_bound_inv_; }
    double epsilon() const { return 1.0 / weight_bound_inv_; }
    bool iid() const { return iid_; }

    // Records [begin, end) with the same metadata.
    LoggedDataset slice(std::size_t begin, std::size_t end) const;
    LoggedDataset with_rewards(std::vector<double> rewards) const;

    bool operator==(const LoggedDataset& other) const;

private:
    StateMatrix states_;
    std::vector<std::size_t> actions_;
    std::vector<double> rewards_;
    std::vector<double> propensities_;
    double weight_bound_inv_ = 1.0;
    bool iid_ = true;
    std::size_t k_ = 0;
};

struct DatasetMeta {
    double weight_bound_inv = 0.0;  // 0 means "take the largest 1/propensity"
    bool iid = true;
    std::size_t num_actions = 0;
};

void write_csv(const LoggedDataset& d, std::ostream& out);
LoggedDataset read_csv(std::istream& in, const DatasetMeta& meta);

// CSV plus a "<path>.meta.json" sidecar carrying weight bound, iid flag and K.
void save_dataset(const LoggedDataset& d, const std::filesystem::path& path);
LoggedDataset load_dataset(const std::filesystem::path& path);

}  // namespace pacbandit
