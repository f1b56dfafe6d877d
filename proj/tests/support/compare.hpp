#ifndef KCRF_TESTS_COMPARE_HPP
#define KCRF_TESTS_COMPARE_HPP

#include <algorithm>
#include <cmath>

#include "kcrf/inference.hpp"

namespace testsupport {

inline double rel_diff(double a, double b) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
    return std::fabs(a - b) / scale;
}

/// Largest relative discrepancy across log-partition, unary and pairwise marginals.
inline double max_marginal_rel_diff(const kcrf::CliqueMarginals& a,
                                    const kcrf::CliqueMarginals& b) {
    double worst = rel_diff(a.log_partition, b.log_partition);
    for (Eigen::Index t = 0; t < a.unary.rows(); ++t)
        for (Eigen::Index y = 0; y < a.unary.cols(); ++y)
            worst = std::max(worst, rel_diff(a.unary(t, y), b.unary(t, y)));
    for (std::size_t t = 0; t < a.pairwise.size(); ++t)
        for (Eigen::Index y = 0; y < a.pairwise[t].rows(); ++y)
            for (Eigen::Index z = 0; z < a.pairwise[t].cols(); ++z)
                worst = std::max(worst, rel_diff(a.pairwise[t](y, z), b.pairwise[t](y, z)));
    return worst;
}

} // namespace testsupport

#endif
