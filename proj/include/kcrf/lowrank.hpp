#ifndef KCRF_LOWRANK_HPP
#define KCRF_LOWRANK_HPP

#include <vector>

#include "kcrf/objective.hpp"
#include "kcrf/types.hpp"

namespace kcrf {

struct CholeskyStep {
    Index pivot = 0;
    double pivot_residual = 0.0; // residual of the pivot when it was chosen
    double trace_after = 0.0;    // residual trace after processing the pivot
};

/// Partial pivoted Cholesky factor of the candidate Gram matrix.
struct CholeskyFactor {
    std::vector<Index> pivots;  // selection order
    Matrix factor;              // n x r lower-trapezoidal
    Vector residual_diag;       // length n, zero at pivot indices
    std::vector<CholeskyStep> steps;
    double initial_trace = 0.0;

    Index rank() const { return static_cast<Index>(pivots.size()); }
    /// Fraction of the initial trace reproduced after `r` pivots.
    double captured_trace_fraction(Index r) const;
};

/// The full dual candidate set: one (window, label) anchor per position and
/// label over the whole training set, exact duplicates collapsed.
std::vector<Anchor> candidate_anchors(const Dataset& data, const KernelSpec& spec);

/// Greedy incomplete Cholesky with max-residual pivoting (ties toward the
/// smallest index). Gram columns are formed on demand; the full matrix is
/// never materialized. Stops at rank_budget or when the largest residual
/// falls below residual_tol (negative residual_tol means the default of
/// 1e-6 times the initial max residual).
CholeskyFactor incomplete_cholesky(const std::vector<Anchor>& candidates, const KernelSpec& spec,
                                   Index rank_budget, double residual_tol = -1.0);

/// Basis whose emission anchors are the pivot candidates in selection order,
/// all coefficients zero. rank_limit < 0 keeps every pivot.
BasisSet basis_from_factor(const CholeskyFactor& factor, const std::vector<Anchor>& candidates,
                           Index label_count, Index rank_limit = -1);

} // namespace kcrf

#endif
