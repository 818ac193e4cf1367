#pragma once

// Small statistical helpers used as oracles by the unit tests. They are
// deliberately independent of the analysis module.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace testsupport {

inline double ks_sup(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

/// Upper-tail p-value of Pearson's statistic; bins with expected < 5 are merged
/// into their right neighbour.
inline double chi_square_p(const std::vector<double>& observed, const std::vector<double>& expected) {
    double stat = 0.0;
    int dof = -1;
    double o_acc = 0.0;
    double e_acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o_acc += observed[i];
        e_acc += expected[i];
        if (e_acc >= 5.0 || i + 1 == observed.size()) {
            stat += (o_acc - e_acc) * (o_acc - e_acc) / e_acc;
            ++dof;
            o_acc = e_acc = 0.0;
        }
    }
    boost::math::chi_squared dist(std::max(dof, 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace testsupport
