#include "kcrf/optimizer.hpp"

#include <cmath>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace kcrf {

namespace {

constexpr int kMaxBacktracks = 20;

Vector flatten(const Matrix& m) {
    Vector v(m.size());
    Index k = 0;
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) v(k++) = m(r, c);
    return v;
}

Matrix unflatten(const Vector& v, Index rows, Index cols) {
    Matrix m(rows, cols);
    Index k = 0;
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = v(k++);
    return m;
}

double bound_from_eig(const Vector& eigenvalues, const Matrix& eigenvectors, const Vector& grad,
                      double sigma_squared) {
    if (grad.size() == 0) return 0.0;
    const double max_eig = eigenvalues.size() > 0 ? eigenvalues.maxCoeff() : 0.0;
    if (max_eig <= 0.0) return 0.0;
    const double floor = 1e-12 * max_eig;
    const Vector projections = eigenvectors.transpose() * grad;
    double bound = 0.0;
    for (Index j = 0; j < eigenvalues.size(); ++j)
        if (eigenvalues(j) > floor)
            bound += projections(j) * projections(j) / eigenvalues(j);
    return 0.5 * sigma_squared * bound;
}

/// Solves (H + ridge I) d = -g with ridge = damping * trace(H)/dim.
Vector damped_newton_direction(const Matrix& hess, const Vector& grad, double damping) {
    const Index dim = hess.rows();
    if (dim == 0) return Vector(0);
    Matrix h = hess;
    if (damping > 0.0) h.diagonal().array() += damping * hess.trace() / static_cast<double>(dim);
    Eigen::LDLT<Matrix> ldlt(h);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("Hessian block factorization failed even after damping");
    const Vector direction = -ldlt.solve(grad);
    if (!direction.allFinite())
        throw NumericalError("Hessian block is numerically singular even after damping");
    return direction;
}

struct BlockBounds {
    double emission = 0.0;
    double transition = 0.0;
    double total(bool em_active, bool tr_active) const {
        return (em_active ? emission : 0.0) + (tr_active ? transition : 0.0);
    }
};

BlockBounds bounds_from_gradient(const TrainingCache& cache, const TrainConfig& config,
                                 const GradientReport& grad) {
    BlockBounds bounds;
    if (cache.anchor_count > 0) {
        cache.ensure_gram_eig();
        bounds.emission = bound_from_eig(cache.gram_eigenvalues, cache.gram_eigenvectors,
                                         grad.emission_grad, config.sigma_squared);
    }
    bounds.transition = improvement_bound(flatten(grad.transition_grad), config.sigma_squared);
    return bounds;
}

/// Proposes a joint damped Newton step over the requested blocks and
/// backtracks until the objective strictly decreases. Returns false when no
/// step size in {1, 1/2, ..., 2^-20} improves the objective.
bool attempt_step(const TrainingCache& cache, const TrainConfig& config, const EvalBundle& at,
                  bool step_emission, bool step_transition, Vector& alpha, Matrix& alpha_tr,
                  double& accepted_step, double& objective_after) {
    const Index n_labels = cache.label_count;
    Vector d_alpha = Vector::Zero(alpha.size());
    Matrix d_tr = Matrix::Zero(n_labels, n_labels);

    if (step_emission && cache.anchor_count > 0) {
        const Matrix hess = cache_hessian_emission(cache, config, at.marginals);
        d_alpha = damped_newton_direction(hess, at.grad.emission_grad, config.damping);
    }
    if (step_transition) {
        const Matrix hess = cache_hessian_transition(cache, config, at.marginals);
        d_tr = unflatten(
            damped_newton_direction(hess, flatten(at.grad.transition_grad), config.damping),
            n_labels, n_labels);
    }
    if (d_alpha.squaredNorm() == 0.0 && d_tr.squaredNorm() == 0.0) return false;

    for (int k = 0; k <= kMaxBacktracks; ++k) {
        const double step = std::ldexp(1.0, -k);
        const Vector trial_alpha = alpha + step * d_alpha;
        const Matrix trial_tr = alpha_tr + step * d_tr;
        const double obj =
            cache_evaluate(cache, config, trial_alpha, trial_tr, false).objective;
        if (obj < at.objective) {
            alpha = trial_alpha;
            alpha_tr = trial_tr;
            accepted_step = step;
            objective_after = obj;
            return true;
        }
    }
    return false;
}

void log_header(std::ostream* log) {
    if (log)
        *log << "# iteration\tobjective\tgrad_norm_emission\tgrad_norm_transition"
                "\tbound_emission\tbound_transition\tstep_emission\tstep_transition\n";
}

void log_record(std::ostream* log, const IterationRecord& rec) {
    if (log)
        *log << rec.iteration << '\t' << rec.objective_after << '\t' << rec.grad_norm_emission
             << '\t' << rec.grad_norm_transition << '\t' << rec.bound_emission << '\t'
             << rec.bound_transition << '\t' << rec.step_emission << '\t' << rec.step_transition
             << '\n';
}

} // namespace

double improvement_bound(const Vector& block_grad, const Matrix& block_gram,
                         double sigma_squared) {
    if (block_gram.rows() != block_grad.size() || block_gram.cols() != block_grad.size())
        throw DimensionError("improvement_bound: Gram shape does not match gradient length");
    if (block_grad.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(block_gram);
    if (eig.info() != Eigen::Success)
        throw NumericalError("improvement_bound: eigendecomposition failed");
    return bound_from_eig(eig.eigenvalues(), eig.eigenvectors(), block_grad, sigma_squared);
}

double improvement_bound(const Vector& block_grad, double sigma_squared) {
    return 0.5 * sigma_squared * block_grad.squaredNorm();
}

TrainState newton_step(const Dataset& data, const TrainState& state, const TrainConfig& config,
                       ParameterBlock block) {
    config.validate();
    const TrainingCache cache = TrainingCache::build(data, state.basis, config.kernel);
    Vector alpha = state.basis.coefficients;
    Matrix alpha_tr = state.basis.transition_coeffs;

    const EvalBundle at = cache_evaluate(cache, config, alpha, alpha_tr, true);
    const BlockBounds bounds = bounds_from_gradient(cache, config, at.grad);

    TrainState next = state;
    next.bound_emission = bounds.emission;
    next.bound_transition = bounds.transition;
    if (next.objective_trace.empty()) next.objective_trace.push_back(at.objective);

    const bool step_em = block == ParameterBlock::Emission;
    const double block_bound = step_em ? bounds.emission : bounds.transition;
    if (block_bound < config.gradient_tolerance) return next; // already optimal on this block

    IterationRecord rec;
    rec.iteration = next.iteration;
    rec.objective_before = at.objective;
    rec.objective_after = at.objective;
    rec.bound_emission = bounds.emission;
    rec.bound_transition = bounds.transition;
    rec.grad_norm_emission = at.grad.emission_norm;
    rec.grad_norm_transition = at.grad.transition_norm;

    double accepted_step = 0.0, objective_after = at.objective;
    if (attempt_step(cache, config, at, step_em, !step_em, alpha, alpha_tr, accepted_step,
                     objective_after)) {
        rec.accepted = true;
        rec.objective_after = objective_after;
        (step_em ? rec.step_emission : rec.step_transition) = accepted_step;
        next.basis.coefficients = alpha;
        next.basis.transition_coeffs = alpha_tr;
        next.objective_trace.push_back(objective_after);
    } else {
        next.stalled = true;
    }
    next.iteration += 1;
    next.records.push_back(rec);
    return next;
}

TrainState train(const Dataset& data, const BasisSet& initial_basis, const TrainConfig& config,
                 std::ostream* iteration_log, bool emission_active, bool transition_active) {
    config.validate();
    if (data.sequences.empty()) throw InputError("train: empty dataset");
    for (const auto& s : data.sequences)
        if (!s.labeled()) throw InputError("train: sequence '" + s.id + "' is unlabeled");
    if (!emission_active && !transition_active)
        throw ConfigError("train: at least one block must be active");

    TrainState state;
    state.basis = initial_basis;
    state.basis.coefficients = Vector::Zero(initial_basis.size());
    state.basis.transition_coeffs =
        Matrix::Zero(initial_basis.label_count(), initial_basis.label_count());

    const TrainingCache cache = TrainingCache::build(data, state.basis, config.kernel);
    Vector alpha = state.basis.coefficients;
    Matrix alpha_tr = state.basis.transition_coeffs;

    log_header(iteration_log);

    EvalBundle at = cache_evaluate(cache, config, alpha, alpha_tr, true);
    state.objective_trace.push_back(at.objective);

    int consecutive_stalls = 0;
    const int active_blocks = (emission_active ? 1 : 0) + (transition_active ? 1 : 0);
    const bool alternating = config.schedule == Schedule::CyclicSubspace && active_blocks == 2;
    // A failed joint step cannot succeed on retry; under the cyclic schedule
    // the other block still gets its turn before the run counts as stalled.
    const int stall_limit = alternating ? 2 : 1;
    bool cyclic_on_emission = emission_active;

    while (state.iteration < config.max_iterations) {
        const BlockBounds bounds = bounds_from_gradient(cache, config, at.grad);
        state.bound_emission = bounds.emission;
        state.bound_transition = bounds.transition;
        if (bounds.total(emission_active, transition_active) < config.gradient_tolerance) {
            state.converged = true;
            break;
        }

        bool step_em = emission_active, step_tr = transition_active;
        if (alternating) {
            step_em = cyclic_on_emission;
            step_tr = !cyclic_on_emission;
            cyclic_on_emission = !cyclic_on_emission;
        }

        IterationRecord rec;
        rec.iteration = state.iteration;
        rec.objective_before = at.objective;
        rec.objective_after = at.objective;
        rec.bound_emission = bounds.emission;
        rec.bound_transition = bounds.transition;
        rec.grad_norm_emission = at.grad.emission_norm;
        rec.grad_norm_transition = at.grad.transition_norm;

        double accepted_step = 0.0, objective_after = at.objective;
        const bool accepted = attempt_step(cache, config, at, step_em, step_tr, alpha, alpha_tr,
                                           accepted_step, objective_after);
        bool exhausted = false;
        if (accepted) {
            consecutive_stalls = 0;
            rec.accepted = true;
            rec.objective_after = objective_after;
            if (step_em) rec.step_emission = accepted_step;
            if (step_tr) rec.step_transition = accepted_step;
            state.objective_trace.push_back(objective_after);
            at = cache_evaluate(cache, config, alpha, alpha_tr, true);
        } else if (++consecutive_stalls >= stall_limit) {
            state.stalled = true;
            exhausted = true;
        }
        state.records.push_back(rec);
        log_record(iteration_log, rec);
        state.iteration += 1;
        if (exhausted) break;
    }

    // Refresh the bounds at the final iterate.
    const BlockBounds final_bounds = bounds_from_gradient(cache, config, at.grad);
    state.bound_emission = final_bounds.emission;
    state.bound_transition = final_bounds.transition;
    if (final_bounds.total(emission_active, transition_active) < config.gradient_tolerance)
        state.converged = true;

    state.basis.coefficients = alpha;
    state.basis.transition_coeffs = alpha_tr;
    return state;
}

std::vector<BlockBoundReport> prune_blocks(const Dataset& data, const TrainState& state,
                                           const TrainConfig& config, double threshold) {
    config.validate();
    const TrainingCache cache = TrainingCache::build(data, state.basis, config.kernel);
    const EvalBundle at = cache_evaluate(cache, config, state.basis.coefficients,
                                         state.basis.transition_coeffs, true);
    const BlockBounds bounds = bounds_from_gradient(cache, config, at.grad);
    return {
        {ParameterBlock::Emission, bounds.emission, bounds.emission >= threshold},
        {ParameterBlock::Transition, bounds.transition, bounds.transition >= threshold},
    };
}

} // namespace kcrf
