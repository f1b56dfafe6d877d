#ifndef KCRF_PRIMAL_HPP
#define KCRF_PRIMAL_HPP

#include <iosfwd>
#include <vector>

#include "kcrf/objective.hpp"

namespace kcrf {

// Explicit-feature counterpart of the degree-1 kernel model. The feature of a
// position is its window with sqrt(offset) appended, so the standard inner
// product reproduces <u,v> + offset exactly.

struct PrimalModel {
    Matrix emission_weights;   // L x (window_dim + 1)
    Matrix transition_weights; // L x L
};

/// T x (window_dim + 1) feature rows of a sequence.
Matrix primal_feature_matrix(const LabeledSequence& seq, const KernelSpec& spec);

ScoreTable primal_score_table(const LabeledSequence& seq, const PrimalModel& model,
                              const KernelSpec& spec);

/// Regularized negative log-likelihood in the explicit parameterization.
double primal_objective(const Dataset& data, const PrimalModel& model, const TrainConfig& config);

/// Materializes dual coefficients as explicit weights. Degree-1 kernels only.
PrimalModel primal_from_basis(const BasisSet& basis, const KernelSpec& spec);

struct PrimalTrainResult {
    PrimalModel model;
    std::vector<double> objective_trace;
    bool converged = false;
    int iterations = 0;
};

/// Damped Newton training in the explicit parameterization, same stopping
/// rule as the dual trainer (summed per-block improvement bounds).
PrimalTrainResult train_primal(const Dataset& data, const TrainConfig& config,
                               std::ostream* iteration_log = nullptr);

} // namespace kcrf

#endif
