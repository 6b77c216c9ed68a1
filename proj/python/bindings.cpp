#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pacbandit/core_math.hpp"
#include "pacbandit/environments.hpp"
#include "pacbandit/errors.hpp"
#include "pacbandit/experiment.hpp"
#include "pacbandit/online.hpp"
#include "pacbandit/reward_bounds.hpp"

namespace py = pybind11;
using namespace pacbandit;

namespace {

// Reports cross the boundary as JSON text; the Python package decodes them.
std::string report_json(const BoundReport& r) { return to_json(r).dump(); }

std::string run_experiment_json(const std::string& config_json, bool write_files) {
    const auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(config_json));
    const auto res = run_experiment(cfg, write_files);
    std::ostringstream csv;
    write_rows_csv(res.rows, csv);
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : res.files) files.push_back(f.string());
    return nlohmann::json{{"csv", csv.str()}, {"failures", res.failures}, {"files", files}}.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "PAC-Bayes bandit bounds (native core)";

    py::register_exception<Error>(m, "PacBanditError");

    m.def("binary_kl", &binary_kl, py::arg("p"), py::arg("q"));
    m.def("kl_inverse_lower", &kl_inverse_lower, py::arg("p"), py::arg("b"));
    m.def("kl_categorical",
          [](const std::vector<double>& rho, const std::vector<double>& mu) {
              return kl_categorical(CategoricalDistribution(rho), CategoricalDistribution(mu));
          },
          py::arg("rho"), py::arg("mu"));

    m.def("ha_from_stats",
          [](double r, double n, double kappa, double lambda, double kl, double delta) {
              return report_json(ha_from_stats(r, n, kappa, lambda, kl, delta));
          },
          py::arg("r_hat"), py::arg("n"), py::arg("kappa"), py::arg("lambda_"), py::arg("kl"), py::arg("delta"));
    m.def("kl_family_from_stats",
          [](double r, double n, double kappa, double kl, double delta, bool pinsker) {
              return report_json(
                  kl_family_from_stats(r, n, kappa, kl, delta, pinsker ? KlMode::Pinsker : KlMode::Inverse));
          },
          py::arg("r_hat"), py::arg("n"), py::arg("kappa"), py::arg("kl"), py::arg("delta"), py::arg("pinsker") = false);
    m.def("bernstein_from_stats",
          [](double r, double n, double kappa, double lambda, double kl, double delta) {
              return report_json(bernstein_from_stats(r, n, kappa, lambda, VarianceMode::worst(), kl, delta));
          },
          py::arg("r_hat"), py::arg("n"), py::arg("kappa"), py::arg("lambda_"), py::arg("kl"), py::arg("delta"));

    m.def("gen_mab_binary", [](std::size_t k, std::uint64_t seed) { return gen_mab_binary(k, seed).means; },
          py::arg("k"), py::arg("seed"));
    m.def("online_regret",
          [](const std::string& schedule, const std::vector<double>& means, std::size_t horizon, std::uint64_t seed) {
              return run_online(ScheduleSpec::parse(schedule), means, horizon, seed).cum_regret;
          },
          py::arg("schedule"), py::arg("means"), py::arg("horizon"), py::arg("seed"));
    m.def("preset_config", [](const std::string& name, std::uint64_t seed, std::size_t num_seeds) {
        return ExperimentConfig::preset(name, seed, num_seeds).to_json().dump();
    }, py::arg("name"), py::arg("seed") = 0, py::arg("num_seeds") = 0);
    m.def("run_experiment_json", &run_experiment_json, py::arg("config_json"), py::arg("write_files") = false,
          py::call_guard<py::gil_scoped_release>());
}
