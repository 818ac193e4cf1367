#pragma once

// Gauss-Legendre rules with a run-time number of nodes, built from Boost's
// Legendre zeros and cached.

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

namespace lorentz::detail {

struct GaussRule {
    std::vector<double> x;  // nodes on [-1, 1]
    std::vector<double> w;
};

inline const GaussRule& gauss_rule(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        auto rule = std::make_unique<GaussRule>();
        const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(n);
        for (double z : zeros) {
            const double dp = boost::math::legendre_p_prime(n, z);
            const double w = 2.0 / ((1.0 - z * z) * dp * dp);
            rule->x.push_back(z);
            rule->w.push_back(w);
            if (z != 0.0) {
                rule->x.push_back(-z);
                rule->w.push_back(w);
            }
        }
        slot = std::move(rule);
    }
    return *slot;
}

/// Composite rule: `panels` equal panels of `n` nodes over [a, b].
inline void composite_rule(int n, int panels, double a, double b, std::vector<double>& x, std::vector<double>& w) {
    const GaussRule& g = gauss_rule(n);
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            x.push_back(mid + 0.5 * h * g.x[i]);
            w.push_back(0.5 * h * g.w[i]);
        }
    }
}

}  // namespace lorentz::detail
