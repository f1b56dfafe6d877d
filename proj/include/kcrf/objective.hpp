#ifndef KCRF_OBJECTIVE_HPP
#define KCRF_OBJECTIVE_HPP

#include <limits>
#include <vector>

#include "kcrf/inference.hpp"
#include "kcrf/types.hpp"

namespace kcrf {

/// Dual representation of the model parameters: weighted emission anchors plus
/// the finite-dimensional transition coefficient matrix.
struct BasisSet {
    std::vector<Anchor> anchors;
    Vector coefficients;      // aligned with anchors
    Matrix transition_coeffs; // L x L

    Index size() const { return static_cast<Index>(anchors.size()); }
    Index label_count() const { return transition_coeffs.rows(); }

    /// Builds a basis with zero coefficients; exact duplicate (window, label)
    /// anchors are collapsed to one entry.
    static BasisSet from_anchors(std::vector<Anchor> anchors, Index label_count);

    /// Same, but carrying coefficients; duplicate anchors merge by summing them.
    static BasisSet from_weighted_anchors(const std::vector<Anchor>& anchors,
                                          const Vector& coefficients, Index label_count);

    void validate() const;
};

struct GradientReport {
    Vector emission_grad;    // aligned with the basis anchors
    Matrix transition_grad;  // L x L
    double emission_norm = 0.0;
    double transition_norm = 0.0;
};

enum class Schedule { JointBlockJacobi, CyclicSubspace };
enum class ParameterBlock { Emission, Transition };

struct TrainConfig {
    double sigma_squared = 1.0;     // prior variance; lambda = 1 / sigma_squared
    double damping = 1e-8;          // Newton ridge scale: ridge = damping * trace(H)/dim
    int max_iterations = 100;
    double gradient_tolerance = 1e-6; // on the summed per-block improvement bounds
    Index rank_budget = std::numeric_limits<Index>::max();
    double residual_tolerance = 1e-6; // relative to the initial max Cholesky residual
    KernelSpec kernel;
    Schedule schedule = Schedule::JointBlockJacobi;

    void validate() const {
        if (sigma_squared <= 0.0) throw ConfigError("sigma_squared must be > 0");
        if (damping < 0.0) throw ConfigError("damping must be >= 0");
        if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
        if (gradient_tolerance <= 0.0) throw ConfigError("gradient_tolerance must be > 0");
        if (rank_budget < 1) throw ConfigError("rank_budget must be >= 1");
        if (residual_tolerance < 0.0) throw ConfigError("residual_tolerance must be >= 0");
        kernel.validate();
    }
};

/// Emission and transition scores of one sequence under the current basis,
/// evaluated purely through kernel values.
ScoreTable build_score_table(const LabeledSequence& seq, const BasisSet& basis,
                             const KernelSpec& spec);

/// Regularized negative log-likelihood of the labeled dataset (additive
/// constant dropped).
double negative_log_posterior(const Dataset& data, const BasisSet& basis,
                              const TrainConfig& config);

/// Projected gradient of negative_log_posterior in the dual coordinates.
GradientReport gradient(const Dataset& data, const BasisSet& basis, const TrainConfig& config);

/// Block-Jacobi Hessian approximation for one tied block: prior term plus
/// per-clique covariances; cross-block and cross-position covariances dropped.
Matrix hessian_block(const Dataset& data, const BasisSet& basis, const TrainConfig& config,
                     ParameterBlock block);

// ---------------------------------------------------------------------------
// Training cache: everything that is fixed while coefficients change.
// ---------------------------------------------------------------------------

struct TrainingCache {
    const Dataset* data = nullptr;
    KernelSpec kernel;
    Index label_count = 0;
    Index anchor_count = 0;
    std::vector<int> anchor_labels;
    Matrix anchor_windows;        // n x W
    Matrix gram;                  // n x n emission Gram
    Matrix affinity;              // L x L label affinity
    Matrix anchor_affinity;       // n x L: affinity(anchor_label_b, y)
    std::vector<Matrix> design;   // per sequence: T_i x n base-kernel values
    std::vector<std::vector<Index>> label_groups; // anchor indices per label

    // Eigendecomposition of `gram`, computed on first use by ensure_gram_eig().
    mutable bool eig_ready = false;
    mutable Vector gram_eigenvalues;
    mutable Matrix gram_eigenvectors;

    static TrainingCache build(const Dataset& data, const BasisSet& basis,
                               const KernelSpec& spec);
    void ensure_gram_eig() const;
};

struct EvalBundle {
    double objective = 0.0;
    GradientReport grad;
    std::vector<CliqueMarginals> marginals; // per sequence; filled when gradients requested
};

ScoreTable cache_score_table(const TrainingCache& cache, Index seq_index,
                             const Vector& alpha, const Matrix& alpha_tr);

EvalBundle cache_evaluate(const TrainingCache& cache, const TrainConfig& config,
                          const Vector& alpha, const Matrix& alpha_tr, bool want_gradient);

Matrix cache_hessian_emission(const TrainingCache& cache, const TrainConfig& config,
                              const std::vector<CliqueMarginals>& marginals);

Matrix cache_hessian_transition(const TrainingCache& cache, const TrainConfig& config,
                                const std::vector<CliqueMarginals>& marginals);

} // namespace kcrf

#endif
