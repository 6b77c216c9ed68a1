#include "pacbandit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pacbandit/errors.hpp"

namespace pacbandit {

LoggedDataset::LoggedDataset(StateMatrix states, std::vector<std::size_t> actions, std::vector<double> rewards,
                             std::vector<double> propensities, double weight_bound_inv, bool iid,
                             std::size_t num_actions)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      rewards_(std::move(rewards)),
      propensities_(std::move(propensities)),
      weight_bound_inv_(weight_bound_inv),
      iid_(iid),
      k_(num_actions) {
    const std::size_t n = actions_.size();
    if (n < 1) throw Error(ErrorKind::Domain, "dataset needs at least one record");
    if (rewards_.size() != n || propensities_.size() != n)
        throw Error(ErrorKind::DimensionMismatch, "dataset columns have different lengths");
    if (states_.cols() > 0 && static_cast<std::size_t>(states_.rows()) != n)
        throw Error(ErrorKind::DimensionMismatch, "state rows do not match record count");
    if (states_.cols() == 0) states_.resize(static_cast<Eigen::Index>(n), 0);
    if (!(weight_bound_inv_ >= 1.0) || !std::isfinite(weight_bound_inv_))
        throw Error(ErrorKind::Domain, "weight bound must be finite and >= 1");
    std::size_t max_action = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(rewards_[i] >= 0.0 && rewards_[i] <= 1.0))
            throw Error(ErrorKind::Domain, "reward outside [0,1] at record " + std::to_string(i));
        if (!(propensities_[i] > 0.0 && propensities_[i] <= 1.0))
            throw Error(ErrorKind::Domain, "propensity outside (0,1] at record " + std::to_string(i));
        if (1.0 / propensities_[i] > weight_bound_inv_ * (1.0 + 1e-9))
            throw Error(ErrorKind::Domain, "propensity below declared floor at record " + std::to_string(i));
        max_action = std::max(max_action, actions_[i]);
    }
    if (k_ == 0) k_ = max_action + 1;
    if (max_action >= k_) throw Error(ErrorKind::Domain, "action index exceeds K");
}

LoggedDataset LoggedDataset::slice(std::size_t begin, std::size_t end) const {
    if (!(begin < end && end <= size())) throw Error(ErrorKind::Domain, "slice out of range");
    const auto b = static_cast<Eigen::Index>(begin), len = static_cast<Eigen::Index>(end - begin);
    StateMatrix s = states_.middleRows(b, len);
    return LoggedDataset(std::move(s), {actions_.begin() + b, actions_.begin() + b + len},
                         {rewards_.begin() + b, rewards_.begin() + b + len},
                         {propensities_.begin() + b, propensities_.begin() + b + len}, weight_bound_inv_, iid_, k_);
}

LoggedDataset LoggedDataset::with_rewards(std::vector<double> rewards) const {
    return LoggedDataset(states_, actions_, std::move(rewards), propensities_, weight_bound_inv_, iid_, k_);
}

bool LoggedDataset::operator==(const LoggedDataset& o) const {
    return states_.rows() == o.states_.rows() && states_.cols() == o.states_.cols() && states_ == o.states_ &&
           actions_ == o.actions_ && rewards_ == o.rewards_ && propensities_ == o.propensities_ &&
           weight_bound_inv_ == o.weight_bound_inv_ && iid_ == o.iid_ && k_ == o.k_;
}

namespace {

// Shortest text that parses back to the same double.
std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok, std::size_t line) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    while (first < last && *first == ' ') ++first;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw Error(ErrorKind::Io, "malformed number '" + tok + "' on line " + std::to_string(line));
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void write_csv(const LoggedDataset& d, std::ostream& out) {
    const std::size_t dim = d.state_dim();
    for (std::size_t j = 0; j < dim; ++j) out << "state_" << j << ',';
    out << "action,reward,propensity\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto s = d.state(i);
        for (std::size_t j = 0; j < dim; ++j) out << format_double(s[j]) << ',';
        out << d.action(i) << ',' << format_double(d.reward(i)) << ',' << format_double(d.propensity(i)) << '\n';
    }
}

LoggedDataset read_csv(std::istream& in, const DatasetMeta& meta) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Io, "empty dataset CSV");
    const auto header = split_csv_line(line);
    if (header.size() < 3) throw Error(ErrorKind::Io, "dataset header needs action,reward,propensity");
    const std::size_t dim = header.size() - 3;
    for (std::size_t j = 0; j < dim; ++j)
        if (header[j] != "state_" + std::to_string(j)) throw Error(ErrorKind::Io, "unexpected column " + header[j]);
    if (header[dim] != "action" || header[dim + 1] != "reward" || header[dim + 2] != "propensity")
        throw Error(ErrorKind::Io, "dataset header must end with action,reward,propensity");

    std::vector<double> flat;
    std::vector<std::size_t> actions;
    std::vector<double> rewards, props;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto tok = split_csv_line(line);
        if (tok.size() != header.size()) throw Error(ErrorKind::Io, "wrong field count on line " + std::to_string(lineno));
        for (std::size_t j = 0; j < dim; ++j) flat.push_back(parse_double(tok[j], lineno));
        const double a = parse_double(tok[dim], lineno);
        if (!(a >= 0.0) || a != std::floor(a)) throw Error(ErrorKind::Io, "bad action on line " + std::to_string(lineno));
        actions.push_back(static_cast<std::size_t>(a));
        rewards.push_back(parse_double(tok[dim + 1], lineno));
        props.push_back(parse_double(tok[dim + 2], lineno));
    }
    if (actions.empty()) throw Error(ErrorKind::Io, "dataset CSV has no records");
    StateMatrix states(static_cast<Eigen::Index>(actions.size()), static_cast<Eigen::Index>(dim));
    if (dim > 0) std::copy(flat.begin(), flat.end(), states.data());
    double wbi = meta.weight_bound_inv;
    if (wbi <= 0.0)
        for (double p : props) wbi = std::max(wbi, 1.0 / p);
    return LoggedDataset(std::move(states), std::move(actions), std::move(rewards), std::move(props), wbi, meta.iid,
                         meta.num_actions);
}

void save_dataset(const LoggedDataset& d, const std::filesystem::path& path) {
    {
        std::ofstream out(path);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
        write_csv(d, out);
    }
    nlohmann::json meta = {{"weight_bound_inv", d.weight_bound_inv()},
                           {"iid", d.iid()},
                           {"num_actions", d.num_actions()}};
    std::ofstream out(path.string() + ".meta.json");
    if (!out) throw Error(ErrorKind::Io, "cannot write metadata for " + path.string());
    out << meta.dump(2) << '\n';
}

LoggedDataset load_dataset(const std::filesystem::path& path) {
    DatasetMeta meta;
    std::ifstream mf(path.string() + ".meta.json");
    if (mf) {
        try {
            const auto j = nlohmann::json::parse(mf);
            meta.weight_bound_inv = j.at("weight_bound_inv").get<double>();
            meta.iid = j.value("iid", true);
            meta.num_actions = j.value("num_actions", std::size_t{0});
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Io, std::string("bad dataset metadata: ") + e.what());
        }
    }
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    return read_csv(in, meta);
}

}  // namespace pacbandit
