#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace pacbandit {

struct BoundParams {
    double delta = 0.05;
    std::optional<double> lambda;
    std::optional<double> tau;
    std::optional<double> y;
    std::optional<double> gamma;
    std::optional<double> beta;
    std::optional<double> c;
    std::optional<double> eta;
    std::string estimator;                 // "IS", "CIS", "WIS" or empty
    std::map<std::string, double> extra;   // audit values (split size, winner, ...)

    void validate() const;
};

// How `value` is assembled from `terms`; see recompute_value.
enum class Composition { Additive, KlInverse, Pinsker, EfronStein, Risk };

struct BoundReport {
    std::string bound_id;
    double value = 0.0;
    Composition composition = Composition::Additive;
    // Always present: empirical_estimate, variance_term, kl_term,
    // confidence_term, bias_flag. Compositions may add kappa, kl, bias_term.
    std::map<std::string, double> terms;
    BoundParams params;
    std::vector<std::string> notes;

    double term(const std::string& key) const;
};

const char* to_string(Composition c);

// Value implied by terms and composition:
//   Additive:   r - variance - kl - confidence - bias_term
//   KlInverse:  kl_inverse_lower(kappa r, kl + confidence) / kappa
//   Pinsker:    r - sqrt((kl + confidence)/2) / kappa
//   EfronStein: r - bias_term - variance * sqrt(kl + confidence)
//   Risk:       (1 - r) + variance + kl + confidence   (upper bound on risk)
double recompute_value(const BoundReport& report);

nlohmann::json to_json(const BoundParams& p);
nlohmann::json to_json(const BoundReport& r);
BoundReport bound_report_from_json(const nlohmann::json& j);

}  // namespace pacbandit
