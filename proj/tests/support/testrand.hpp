#ifndef KCRF_TESTS_TESTRAND_HPP
#define KCRF_TESTS_TESTRAND_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

// Deterministic random helpers. std::mt19937_64 output is fixed by the
// standard; the transforms below avoid std::*_distribution, whose results
// vary across standard library implementations.
namespace testsupport {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline double normal(Rng& rng) {
    double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline Eigen::VectorXd normal_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal(rng);
    return v;
}

inline Eigen::MatrixXd normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                     double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * normal(rng);
    return m;
}

inline int uniform_int(Rng& rng, int n) {
    return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

} // namespace testsupport

#endif
