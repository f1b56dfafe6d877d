#ifndef KCRF_OPTIMIZER_HPP
#define KCRF_OPTIMIZER_HPP

#include <iosfwd>
#include <vector>

#include "kcrf/objective.hpp"

namespace kcrf {

/// Per-iteration bookkeeping; bounds and gradients are evaluated at the
/// iterate *before* the step.
struct IterationRecord {
    int iteration = 0;
    double objective_before = 0.0;
    double objective_after = 0.0;
    double bound_emission = 0.0;
    double bound_transition = 0.0;
    double grad_norm_emission = 0.0;
    double grad_norm_transition = 0.0;
    double step_emission = 0.0;   // accepted step size, 0 when the block did not move
    double step_transition = 0.0;
    bool accepted = false;
};

struct TrainState {
    int iteration = 0;
    std::vector<double> objective_trace; // initial objective, then one entry per accepted step
    double bound_emission = 0.0;
    double bound_transition = 0.0;
    bool converged = false;
    bool stalled = false;
    BasisSet basis;
    std::vector<IterationRecord> records;
};

/// Maximal objective decrease obtainable from a block whose anchor functions
/// have Gram matrix `block_gram`: the squared norm of the block gradient in
/// the geometry induced by the kernel, scaled by sigma_squared / 2.
double improvement_bound(const Vector& block_grad, const Matrix& block_gram,
                         double sigma_squared);

/// Same bound for a block with orthonormal coordinates (Gram = identity),
/// e.g. the transition block: sigma_squared / 2 * ||g||^2.
double improvement_bound(const Vector& block_grad, double sigma_squared);

/// One damped Newton step on a single tied block with backtracking line
/// search. No-op when the block's improvement bound is already below
/// config.gradient_tolerance.
TrainState newton_step(const Dataset& data, const TrainState& state, const TrainConfig& config,
                       ParameterBlock block);

/// Full training loop from zero coefficients over the given basis. Stops when
/// the summed bounds of the active blocks drop below config.gradient_tolerance,
/// when no block can make progress, or at max_iterations.
/// If `iteration_log` is set, one tab-separated line is written per iteration.
TrainState train(const Dataset& data, const BasisSet& initial_basis, const TrainConfig& config,
                 std::ostream* iteration_log = nullptr, bool emission_active = true,
                 bool transition_active = true);

struct BlockBoundReport {
    ParameterBlock block;
    double bound = 0.0;
    bool retained = false;
};

/// Ranks the tied blocks by their improvement bounds at the current state;
/// blocks below `threshold` are marked for freezing.
std::vector<BlockBoundReport> prune_blocks(const Dataset& data, const TrainState& state,
                                           const TrainConfig& config, double threshold);

} // namespace kcrf

#endif
