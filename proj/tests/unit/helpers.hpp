#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pacbandit/dataset.hpp"

namespace testing_helpers {

// Non-contextual dataset with the given records and a fixed behaviour floor.
inline pacbandit::LoggedDataset mab_data(const std::vector<std::size_t>& actions, const std::vector<double>& rewards,
                                         const std::vector<double>& props, double weight_bound_inv, std::size_t k,
                                         bool iid = true) {
    return pacbandit::LoggedDataset(pacbandit::StateMatrix(static_cast<Eigen::Index>(actions.size()), 0), actions,
                                    rewards, props, weight_bound_inv, iid, k);
}

inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

// Independent kl and bisection, long double throughout.
inline long double kl_ref(long double p, long double q) {
    long double v = 0.0L;
    if (p > 0) v += p * std::log(p / q);
    if (p < 1) v += (1 - p) * std::log((1 - p) / (1 - q));
    return v;
}

inline double kl_inverse_ref(double p, double b) {
    long double lo = 0.0L, hi = p;
    if (p == 0.0 || kl_ref(p, 0.0L + 1e-300L) <= b) return 0.0;
    for (int i = 0; i < 200; ++i) {
        const long double mid = 0.5L * (lo + hi);
        if (kl_ref(p, mid) > b)
            lo = mid;
        else
            hi = mid;
    }
    return static_cast<double>(hi);
}

}  // namespace testing_helpers
