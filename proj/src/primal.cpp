#include "kcrf/primal.hpp"

#include <cmath>
#include <ostream>

#include <Eigen/Cholesky>

#include "kcrf/chain.hpp"
#include "kcrf/kernels.hpp"

namespace kcrf {

namespace {

void require_degree_one(const KernelSpec& spec) {
    if (spec.degree != 1)
        throw ConfigError("primal model requires a degree-1 kernel (degree " +
                          std::to_string(spec.degree) + " given)");
}

double observed_score(const ScoreTable& scores, const std::vector<int>& labels) {
    double total = 0.0;
    for (Index t = 0; t < scores.length(); ++t)
        total += scores.emission(t, labels[static_cast<std::size_t>(t)]);
    for (Index t = 0; t + 1 < scores.length(); ++t)
        total += scores.transition(labels[static_cast<std::size_t>(t)],
                                   labels[static_cast<std::size_t>(t + 1)]);
    return total;
}

struct PrimalEval {
    double objective = 0.0;
    Matrix grad_emission;   // L x D
    Matrix grad_transition; // L x L
    std::vector<CliqueMarginals> marginals;
};

PrimalEval evaluate(const std::vector<Matrix>& features, const Dataset& data,
                    const Matrix& w_em, const Matrix& w_tr, const TrainConfig& config,
                    bool want_gradient) {
    const double inv_sigma2 = 1.0 / config.sigma_squared;
    const Index n_labels = w_em.rows();

    PrimalEval out;
    out.objective = 0.5 * inv_sigma2 * (w_em.squaredNorm() + w_tr.squaredNorm());
    if (want_gradient) {
        out.grad_emission = inv_sigma2 * w_em;
        out.grad_transition = inv_sigma2 * w_tr;
    }

    for (Index i = 0; i < data.size(); ++i) {
        const auto& seq = data.sequences[static_cast<std::size_t>(i)];
        const Matrix& feat = features[static_cast<std::size_t>(i)];
        ScoreTable table{feat * w_em.transpose(), w_tr};
        CliqueMarginals marg = forward_backward(table);
        out.objective += marg.log_partition - observed_score(table, seq.labels);

        if (want_gradient) {
            Matrix residual = marg.unary; // T x L
            for (Index t = 0; t < seq.length(); ++t)
                residual(t, seq.labels[static_cast<std::size_t>(t)]) -= 1.0;
            out.grad_emission.noalias() += residual.transpose() * feat;
            for (Index t = 0; t + 1 < seq.length(); ++t) {
                out.grad_transition += marg.pairwise[static_cast<std::size_t>(t)];
                out.grad_transition(seq.labels[static_cast<std::size_t>(t)],
                                    seq.labels[static_cast<std::size_t>(t + 1)]) -= 1.0;
            }
            out.marginals.push_back(std::move(marg));
        }
    }
    return out;
}

Matrix emission_hessian(const std::vector<Matrix>& features, const PrimalEval& at,
                        Index n_labels, Index dim, double inv_sigma2) {
    const Index full = n_labels * dim;
    Matrix hess = inv_sigma2 * Matrix::Identity(full, full);
    for (std::size_t i = 0; i < features.size(); ++i) {
        const Matrix& feat = features[i];
        const Matrix& unary = at.marginals[i].unary;
        for (Index t = 0; t < feat.rows(); ++t) {
            const Matrix outer = feat.row(t).transpose() * feat.row(t);
            for (Index y = 0; y < n_labels; ++y)
                for (Index z = 0; z < n_labels; ++z) {
                    const double cov =
                        unary(t, y) * ((y == z ? 1.0 : 0.0) - unary(t, z));
                    if (cov != 0.0)
                        hess.block(y * dim, z * dim, dim, dim) += cov * outer;
                }
        }
    }
    return hess;
}

Matrix transition_hessian(const PrimalEval& at, Index n_labels, double inv_sigma2) {
    const Index dim = n_labels * n_labels;
    Matrix hess = inv_sigma2 * Matrix::Identity(dim, dim);
    Vector p(dim);
    for (const auto& marg : at.marginals)
        for (const auto& pairwise : marg.pairwise) {
            for (Index a = 0; a < n_labels; ++a)
                for (Index b = 0; b < n_labels; ++b) p(a * n_labels + b) = pairwise(a, b);
            hess += p.asDiagonal();
            hess -= p * p.transpose();
        }
    return hess;
}

Vector solve_damped(const Matrix& hess, const Vector& grad, double damping) {
    Matrix h = hess;
    if (damping > 0.0 && h.rows() > 0)
        h.diagonal().array() += damping * hess.trace() / static_cast<double>(hess.rows());
    Eigen::LDLT<Matrix> ldlt(h);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("primal Hessian factorization failed");
    Vector direction = -ldlt.solve(grad);
    if (!direction.allFinite()) throw NumericalError("primal Hessian numerically singular");
    return direction;
}

Vector flatten_rows(const Matrix& m) {
    Vector v(m.size());
    Index k = 0;
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) v(k++) = m(r, c);
    return v;
}

Matrix unflatten_rows(const Vector& v, Index rows, Index cols) {
    Matrix m(rows, cols);
    Index k = 0;
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = v(k++);
    return m;
}

} // namespace

Matrix primal_feature_matrix(const LabeledSequence& seq, const KernelSpec& spec) {
    require_degree_one(spec);
    const Matrix windows = window_matrix(seq, spec.window_radius);
    Matrix feat(windows.rows(), windows.cols() + 1);
    feat.leftCols(windows.cols()) = windows;
    feat.col(windows.cols()).setConstant(std::sqrt(spec.offset));
    return feat;
}

ScoreTable primal_score_table(const LabeledSequence& seq, const PrimalModel& model,
                              const KernelSpec& spec) {
    const Matrix feat = primal_feature_matrix(seq, spec);
    if (feat.cols() != model.emission_weights.cols())
        throw DimensionError("primal feature dimension does not match model weights");
    return {feat * model.emission_weights.transpose(), model.transition_weights};
}

double primal_objective(const Dataset& data, const PrimalModel& model,
                        const TrainConfig& config) {
    config.validate();
    require_degree_one(config.kernel);
    std::vector<Matrix> features;
    features.reserve(data.sequences.size());
    for (const auto& seq : data.sequences)
        features.push_back(primal_feature_matrix(seq, config.kernel));
    return evaluate(features, data, model.emission_weights, model.transition_weights, config,
                    false)
        .objective;
}

PrimalModel primal_from_basis(const BasisSet& basis, const KernelSpec& spec) {
    require_degree_one(spec);
    const Index n_labels = basis.label_count();
    const Index window_dim = basis.size() > 0 ? basis.anchors.front().window.size() : 0;

    PrimalModel model;
    model.emission_weights = Matrix::Zero(n_labels, window_dim + 1);
    model.transition_weights = basis.transition_coeffs;
    const double root_offset = std::sqrt(spec.offset);
    for (Index b = 0; b < basis.size(); ++b) {
        const Anchor& a = basis.anchors[static_cast<std::size_t>(b)];
        for (Index y = 0; y < n_labels; ++y) {
            const double weight =
                basis.coefficients(b) * label_affinity(static_cast<int>(y), a.label, spec);
            if (weight == 0.0) continue;
            model.emission_weights.row(y).head(window_dim) += weight * a.window.transpose();
            model.emission_weights(y, window_dim) += weight * root_offset;
        }
    }
    return model;
}

PrimalTrainResult train_primal(const Dataset& data, const TrainConfig& config,
                               std::ostream* iteration_log) {
    config.validate();
    require_degree_one(config.kernel);
    if (data.sequences.empty()) throw InputError("train_primal: empty dataset");
    for (const auto& s : data.sequences)
        if (!s.labeled()) throw InputError("train_primal: sequence '" + s.id + "' is unlabeled");

    const Index n_labels = data.alphabet.size();
    const Index dim = config.kernel.window_dim(data.feature_dim) + 1;
    const double inv_sigma2 = 1.0 / config.sigma_squared;

    std::vector<Matrix> features;
    features.reserve(data.sequences.size());
    for (const auto& seq : data.sequences)
        features.push_back(primal_feature_matrix(seq, config.kernel));

    PrimalTrainResult result;
    Matrix w_em = Matrix::Zero(n_labels, dim);
    Matrix w_tr = Matrix::Zero(n_labels, n_labels);

    if (iteration_log)
        *iteration_log << "# iteration\tobjective\tgrad_norm_emission\tgrad_norm_transition\n";

    PrimalEval at = evaluate(features, data, w_em, w_tr, config, true);
    result.objective_trace.push_back(at.objective);

    while (result.iterations < config.max_iterations) {
        const double bound_em =
            0.5 * config.sigma_squared * at.grad_emission.squaredNorm();
        const double bound_tr =
            0.5 * config.sigma_squared * at.grad_transition.squaredNorm();
        if (bound_em + bound_tr < config.gradient_tolerance) {
            result.converged = true;
            break;
        }

        const Matrix hess_em = emission_hessian(features, at, n_labels, dim, inv_sigma2);
        const Matrix hess_tr = transition_hessian(at, n_labels, inv_sigma2);
        const Matrix d_em =
            unflatten_rows(solve_damped(hess_em, flatten_rows(at.grad_emission), config.damping),
                           n_labels, dim);
        const Matrix d_tr = unflatten_rows(
            solve_damped(hess_tr, flatten_rows(at.grad_transition), config.damping), n_labels,
            n_labels);

        bool accepted = false;
        for (int k = 0; k <= 20; ++k) {
            const double step = std::ldexp(1.0, -k);
            const Matrix trial_em = w_em + step * d_em;
            const Matrix trial_tr = w_tr + step * d_tr;
            const double obj =
                evaluate(features, data, trial_em, trial_tr, config, false).objective;
            if (obj < at.objective) {
                w_em = trial_em;
                w_tr = trial_tr;
                result.objective_trace.push_back(obj);
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        at = evaluate(features, data, w_em, w_tr, config, true);
        result.iterations += 1;
        if (iteration_log)
            *iteration_log << result.iterations << '\t' << at.objective << '\t'
                           << at.grad_emission.norm() << '\t' << at.grad_transition.norm()
                           << '\n';
    }

    const double bound_em = 0.5 * config.sigma_squared * at.grad_emission.squaredNorm();
    const double bound_tr = 0.5 * config.sigma_squared * at.grad_transition.squaredNorm();
    if (bound_em + bound_tr < config.gradient_tolerance) result.converged = true;

    result.model.emission_weights = w_em;
    result.model.transition_weights = w_tr;
    return result;
}

} // namespace kcrf
