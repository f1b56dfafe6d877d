#ifndef KCRF_INFERENCE_HPP
#define KCRF_INFERENCE_HPP

#include <vector>

#include "kcrf/types.hpp"

namespace kcrf {

/// Local scores of a chain: emission(t, y) plus a position-independent
/// transition(y, y') matrix.
struct ScoreTable {
    Matrix emission;   // T x L
    Matrix transition; // L x L

    Index length() const { return emission.rows(); }
    Index label_count() const { return emission.cols(); }
};

/// Exact inference output for one chain.
struct CliqueMarginals {
    double log_partition = 0.0;
    Matrix unary;                 // T x L, rows sum to 1
    std::vector<Matrix> pairwise; // T-1 slices of L x L, each sums to 1
};

/// log sum exp of a vector, stable for any finite input.
double log_sum_exp(const Vector& v);

/// Exact log-partition and unary/pairwise marginals via the forward-backward
/// recursions, entirely in log space.
CliqueMarginals forward_backward(const ScoreTable& scores);

/// Same contract as forward_backward, computed by enumerating all labelings.
/// Requires |Y|^T <= 10^6.
CliqueMarginals brute_force_marginals(const ScoreTable& scores);

/// A maximum-score labeling; ties resolved toward the lexicographically
/// smallest labeling (smallest label id at the earliest differing position).
std::vector<int> viterbi(const ScoreTable& scores);

/// Total score of `labels` minus the log-partition; never positive.
double sequence_log_prob(const ScoreTable& scores, const std::vector<int>& labels);

} // namespace kcrf

#endif
