// bench: command-line front end for the pacbandit experiment harness.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "pacbandit/errors.hpp"
#include "pacbandit/experiment.hpp"
#include "pacbandit/numeric.hpp"
#include "pacbandit/online.hpp"

using namespace pacbandit;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct Common {
    std::string config;
    std::string preset;
    std::uint64_t seed = 0;
    std::size_t num_seeds = 0;
    std::string out_dir = "out";
    double delta = 0.05;
};

ExperimentConfig load_config(const Common& o, CLI::App* sub) {
    ExperimentConfig c;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw Error(ErrorKind::Config, "cannot open config " + o.config);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
        }
        c = ExperimentConfig::from_json(j);
    } else if (!o.preset.empty()) {
        c = ExperimentConfig::preset(o.preset, o.seed, o.num_seeds);
    } else {
        throw Error(ErrorKind::Config, "need --config or --preset");
    }
    if (sub->get_option("--delta")->count() > 0) c.delta = o.delta;
    if (sub->get_option("--out-dir")->count() > 0 || o.config.empty()) c.out_dir = o.out_dir;
    c.validate();
    return c;
}

int report_run(const ExperimentResult& res) {
    for (const auto& f : res.files) std::cout << "wrote " << f.string() << "\n";
    for (const auto& f : res.failures) std::cerr << "failure: " << f << "\n";
    std::cout << res.rows.size() << " rows, " << res.failures.size() << " failures\n";
    return res.failures.empty() ? 0 : kExitPartial;
}

json env_to_json(const Environment& env) {
    return std::visit(
        [](const auto& e) -> json {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, MabBinaryEnv>) {
                return {{"type", "mab_binary"}, {"means", e.means}, {"best_index", e.best_index}};
            } else if constexpr (std::is_same_v<T, CbBinaryLinearEnv>) {
                json rows = json::array();
                for (Eigen::Index i = 0; i < e.theta_star.rows(); ++i) {
                    std::vector<double> r(static_cast<std::size_t>(e.theta_star.cols()));
                    for (Eigen::Index j = 0; j < e.theta_star.cols(); ++j) r[static_cast<std::size_t>(j)] = e.theta_star(i, j);
                    rows.push_back(r);
                }
                return {{"type", "cb_binary_linear"}, {"theta_star", rows}};
            } else {
                return {{"type", "classification"},
                        {"K", e.k},
                        {"train", e.train_labels.size()},
                        {"holdout", e.holdout_labels.size()}};
            }
        },
        env);
}

// Median bound value and expected reward per (K, label) of a result CSV.
int summarize_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::map<std::pair<std::size_t, std::string>, std::pair<std::vector<double>, std::vector<double>>> groups;
    std::map<std::pair<std::size_t, std::string>, std::vector<double>> regrets;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char ch = line[i];
            if (quoted) {
                if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else if (ch == '"') {
                    quoted = false;
                } else {
                    cur += ch;
                }
            } else if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        cells.push_back(cur);
        if (cells.size() < 8) throw Error(ErrorKind::Io, "bad result row: " + line);
        const auto key = std::make_pair(static_cast<std::size_t>(std::stoul(cells[1])), cells[4]);
        groups[key].first.push_back(std::stod(cells[5]));
        groups[key].second.push_back(std::stod(cells[6]));
        regrets[key].push_back(std::stod(cells[7]));
    }
    std::cout << "K,label,median_bound,median_expected_reward,median_regret,count\n";
    for (const auto& [key, v] : groups)
        std::cout << key.first << ',' << key.second << ',' << median(v.first) << ',' << median(v.second) << ','
                  << median(regrets[key]) << ',' << v.first.size() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PAC-Bayes bandit bound benchmark harness"};
    app.require_subcommand(1);
    Common o;
    auto add_common = [&](CLI::App* s) {
        s->add_option("--config", o.config, "Experiment config (JSON, version 1)");
        s->add_option("--preset", o.preset, "fig2|fig3|fig4|fig5l|fig5l-cb|fig7|offline");
        s->add_option("--seed", o.seed, "Base seed");
        s->add_option("--num-seeds", o.num_seeds, "Number of seeds for presets");
        s->add_option("--out-dir", o.out_dir, "Output directory");
        s->add_option("--delta", o.delta, "Confidence parameter");
    };

    std::string env_type = "mab_binary";
    std::size_t k = 10, dim = 10, n = 1000;
    std::string behaviour = "uniform", data_path, csv_path, schedule = "exp3";
    double behaviour_eps = 0.01;
    std::vector<std::string> bound_ids;

    auto* gen = app.add_subcommand("gen", "Generate a benchmark environment");
    add_common(gen);
    gen->add_option("--env", env_type, "mab_binary|cb_binary_linear|csv");
    gen->add_option("--K", k);
    gen->add_option("--d", dim);
    gen->add_option("--csv", csv_path, "Classification CSV for env csv");

    auto* log = app.add_subcommand("log", "Generate an environment and collect a logged dataset");
    add_common(log);
    log->add_option("--env", env_type);
    log->add_option("--K", k);
    log->add_option("--d", dim);
    log->add_option("--n", n);
    log->add_option("--csv", csv_path);
    log->add_option("--behaviour", behaviour, "uniform|informative|random");
    log->add_option("--epsilon", behaviour_eps, "Behaviour smoothing floor");

    auto* bounds = app.add_subcommand("bounds", "Evaluate bounds on generated logs (config, preset or flags)");
    add_common(bounds);
    bounds->add_option("--env", env_type);
    bounds->add_option("--K", k);
    bounds->add_option("--d", dim);
    bounds->add_option("--n", n);
    bounds->add_option("--csv", csv_path);
    bounds->add_option("--behaviour", behaviour);
    bounds->add_option("--epsilon", behaviour_eps);
    bounds->add_option("--bound", bound_ids, "Bound id (repeatable)");

    auto* learn = app.add_subcommand("learn", "Run the offline certificate pipeline on a saved contextual log");
    add_common(learn);
    learn->add_option("--data", data_path, "Dataset CSV written by `bench log`")->required();

    auto* online = app.add_subcommand("online", "Online regret experiment (fig2 style) or a single trace");
    add_common(online);
    online->add_option("--K", k);
    online->add_option("--n", n);
    online->add_option("--schedule", schedule, "exp3|ha_exp3|bern_exp3|ha_eps_greedy|bern_eps_greedy|ucb1");

    auto* offline = app.add_subcommand("offline", "Offline experiment from a config or preset");
    add_common(offline);

    auto* report = app.add_subcommand("report", "Summarize a result CSV");
    add_common(report);
    report->add_option("--csv", csv_path, "Result CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (gen->parsed() || log->parsed()) {
            EnvSpec spec{env_type, k, dim, csv_path};
            const auto env = make_environment(spec, k, derive_seed(o.seed, 1));
            std::filesystem::create_directories(o.out_dir);
            const auto env_path = std::filesystem::path(o.out_dir) / "env.json";
            std::ofstream(env_path) << env_to_json(env).dump(2) << "\n";
            std::cout << "wrote " << env_path.string() << "\n";
            if (log->parsed()) {
                const auto beh = make_behaviour(parse_behaviour_kind(behaviour), env, behaviour_eps, derive_seed(o.seed, 2));
                const auto d = collect_log(env, beh, n, derive_seed(o.seed, 3));
                const auto path = std::filesystem::path(o.out_dir) / "log.csv";
                save_dataset(d, path);
                std::cout << "wrote " << path.string() << "\n";
            }
            return 0;
        }
        if (bounds->parsed()) {
            ExperimentConfig c;
            if (!o.config.empty() || !o.preset.empty()) {
                c = load_config(o, bounds);
            } else {
                c.name = "bounds";
                c.env = EnvSpec{env_type, k, dim, csv_path};
                c.behaviour = behaviour;
                c.behaviour_epsilon = behaviour_eps;
                c.n = n;
                c.delta = o.delta;
                for (const auto& id : bound_ids) {
                    BoundSpec b;
                    b.id = id;
                    c.bounds.push_back(b);
                }
                const std::size_t seeds = o.num_seeds > 0 ? o.num_seeds : 1;
                for (std::size_t i = 0; i < seeds; ++i) c.seeds.push_back(o.seed + i);
                c.out_dir = o.out_dir;
                c.validate();
            }
            return report_run(run_experiment(c));
        }
        if (learn->parsed()) {
            const auto d = load_dataset(data_path);
            PipelineConfig cfg;
            cfg.seed = o.seed;
            const auto cert = offline_cb_pipeline(d, o.delta, cfg);
            std::cout << to_json(cert).dump(2) << "\n";
            return 0;
        }
        if (online->parsed()) {
            if (!o.config.empty() || !o.preset.empty()) {
                const auto c = load_config(o, online);
                if (c.mode != "online") throw Error(ErrorKind::Config, "config is not an online experiment");
                return report_run(run_experiment(c));
            }
            const auto env = gen_mab_binary(k, derive_seed(o.seed, 1));
            const auto trace = run_online(ScheduleSpec::parse(schedule), env.means, n, derive_seed(o.seed, 2));
            std::filesystem::create_directories(o.out_dir);
            const auto path = std::filesystem::path(o.out_dir) / (schedule + "_trace.csv");
            std::ofstream out(path);
            trace.write_csv(out);
            std::cout << "wrote " << path.string() << "\nfinal regret " << trace.final_regret() << "\n";
            return 0;
        }
        if (offline->parsed()) {
            const auto c = load_config(o, offline);
            if (c.mode != "offline") throw Error(ErrorKind::Config, "config is not an offline experiment");
            return report_run(run_experiment(c));
        }
        if (report->parsed()) return summarize_csv(csv_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::Config ? kExitConfig : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
