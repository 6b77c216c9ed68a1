#include "pacbandit/bound_report.hpp"

#include <algorithm>
#include <cmath>

#include "pacbandit/core_math.hpp"
#include "pacbandit/errors.hpp"

namespace pacbandit {

void BoundParams::validate() const {
    Confidence check(delta);
    (void)check;
    if (lambda && !(*lambda > 0.0)) throw Error(ErrorKind::Domain, "lambda must be positive");
    if (tau && !(*tau > 0.0 && *tau <= 1.0)) throw Error(ErrorKind::Domain, "tau must lie in (0,1]");
    if (y && !(*y > 0.0)) throw Error(ErrorKind::Domain, "y must be positive");
    if (gamma && !(*gamma >= 0.0)) throw Error(ErrorKind::Domain, "gamma must be nonnegative");
    if (beta && !(*beta >= 0.0)) throw Error(ErrorKind::Domain, "beta must be nonnegative");
    if (c && !(*c > 1.0)) throw Error(ErrorKind::Domain, "grid ratio c must exceed 1");
    if (eta && !(*eta >= 0.0)) throw Error(ErrorKind::Domain, "eta must be nonnegative");
}

double BoundReport::term(const std::string& key) const {
    auto it = terms.find(key);
    return it == terms.end() ? 0.0 : it->second;
}

const char* to_string(Composition c) {
    switch (c) {
        case Composition::Additive: return "additive";
        case Composition::KlInverse: return "kl_inverse";
        case Composition::Pinsker: return "pinsker";
        case Composition::EfronStein: return "efron_stein";
        case Composition::Risk: return "risk";
    }
    return "additive";
}

namespace {

Composition composition_from_string(const std::string& s) {
    for (auto c : {Composition::Additive, Composition::KlInverse, Composition::Pinsker, Composition::EfronStein,
                   Composition::Risk})
        if (s == to_string(c)) return c;
    throw Error(ErrorKind::Io, "unknown composition " + s);
}

}  // namespace

double recompute_value(const BoundReport& r) {
    const double est = r.term("empirical_estimate");
    const double var = r.term("variance_term");
    const double kl = r.term("kl_term");
    const double conf = r.term("confidence_term");
    const double bias = r.term("bias_term");
    switch (r.composition) {
        case Composition::Additive: return est - var - kl - conf - bias;
        case Composition::KlInverse: {
            const double kappa = r.term("kappa");
            return kl_inverse_lower(std::clamp(kappa * est, 0.0, 1.0), kl + conf) / kappa;
        }
        case Composition::Pinsker: return est - std::sqrt((kl + conf) / 2.0) / r.term("kappa");
        case Composition::EfronStein: return est - bias - var * std::sqrt(kl + conf);
        case Composition::Risk: return (1.0 - est) + var + kl + conf;
    }
    return r.value;
}

nlohmann::json to_json(const BoundParams& p) {
    nlohmann::json j;
    j["delta"] = p.delta;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put("lambda", p.lambda);
    put("tau", p.tau);
    put("y", p.y);
    put("gamma", p.gamma);
    put("beta", p.beta);
    put("c", p.c);
    put("eta", p.eta);
    if (!p.estimator.empty()) j["estimator"] = p.estimator;
    for (const auto& [k, v] : p.extra) j[k] = v;
    return j;
}

nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json terms = nlohmann::json::object();
    for (const auto& [k, v] : r.terms) terms[k] = v;
    return {{"bound_id", r.bound_id},
            {"value", r.value},
            {"composition", to_string(r.composition)},
            {"terms", terms},
            {"params", to_json(r.params)},
            {"notes", r.notes}};
}

BoundReport bound_report_from_json(const nlohmann::json& j) {
    BoundReport r;
    try {
        r.bound_id = j.at("bound_id").get<std::string>();
        r.value = j.at("value").get<double>();
        r.composition = composition_from_string(j.value("composition", std::string("additive")));
        for (const auto& [k, v] : j.at("terms").items()) r.terms[k] = v.get<double>();
        const auto& p = j.at("params");
        r.params.delta = p.at("delta").get<double>();
        for (const auto& [k, v] : p.items()) {
            if (k == "delta") continue;
            if (k == "estimator") {
                r.params.estimator = v.get<std::string>();
                continue;
            }
            const double x = v.get<double>();
            if (k == "lambda") r.params.lambda = x;
            else if (k == "tau") r.params.tau = x;
            else if (k == "y") r.params.y = x;
            else if (k == "gamma") r.params.gamma = x;
            else if (k == "beta") r.params.beta = x;
            else if (k == "c") r.params.c = x;
            else if (k == "eta") r.params.eta = x;
            else r.params.extra[k] = x;
        }
        if (j.contains("notes")) r.notes = j.at("notes").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Io, std::string("bad bound report: ") + e.what());
    }
    return r;
}

}  // namespace pacbandit
