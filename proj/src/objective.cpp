#include "kcrf/objective.hpp"

#include <map>
#include <utility>

#include <Eigen/Eigenvalues>

#include "kcrf/chain.hpp"
#include "kcrf/kernels.hpp"

namespace kcrf {

namespace {

std::vector<double> window_key(const Anchor& a) {
    return std::vector<double>(a.window.data(), a.window.data() + a.window.size());
}

void check_labeled(const Dataset& data) {
    for (const auto& s : data.sequences)
        if (!s.labeled())
            throw InputError("sequence '" + s.id + "' is unlabeled");
}

void check_basis_against_data(const Dataset& data, const BasisSet& basis,
                              const KernelSpec& spec) {
    if (basis.label_count() != data.alphabet.size())
        throw DimensionError("basis label count " + std::to_string(basis.label_count()) +
                             " does not match alphabet size " +
                             std::to_string(data.alphabet.size()));
    const Index w = spec.window_dim(data.feature_dim);
    for (const auto& a : basis.anchors)
        if (a.window.size() != w)
            throw DimensionError("anchor window length " + std::to_string(a.window.size()) +
                                 " does not match window dimension " + std::to_string(w));
}

Matrix onehot_rows(const LabeledSequence& seq, Index label_count) {
    Matrix m = Matrix::Zero(seq.length(), label_count);
    for (Index t = 0; t < seq.length(); ++t)
        m(t, seq.labels[static_cast<std::size_t>(t)]) = 1.0;
    return m;
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

} // namespace

BasisSet BasisSet::from_anchors(std::vector<Anchor> anchors, Index label_count) {
    const Index n = static_cast<Index>(anchors.size());
    return from_weighted_anchors(anchors, Vector::Zero(n), label_count);
}

BasisSet BasisSet::from_weighted_anchors(const std::vector<Anchor>& anchors,
                                         const Vector& coefficients, Index label_count) {
    if (static_cast<Index>(anchors.size()) != coefficients.size())
        throw DimensionError("anchor and coefficient counts differ");
    BasisSet basis;
    basis.transition_coeffs = Matrix::Zero(label_count, label_count);

    std::map<std::pair<int, std::vector<double>>, Index> seen;
    std::vector<double> merged;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        auto key = std::make_pair(anchors[i].label, window_key(anchors[i]));
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(std::move(key), static_cast<Index>(basis.anchors.size()));
            basis.anchors.push_back(anchors[i]);
            merged.push_back(coefficients(static_cast<Index>(i)));
        } else {
            merged[static_cast<std::size_t>(it->second)] += coefficients(static_cast<Index>(i));
        }
    }
    basis.coefficients = Eigen::Map<const Vector>(merged.data(), static_cast<Index>(merged.size()));
    basis.validate();
    return basis;
}

void BasisSet::validate() const {
    if (coefficients.size() != size())
        throw DimensionError("coefficient count does not match anchor count");
    if (transition_coeffs.rows() != transition_coeffs.cols())
        throw DimensionError("transition coefficient matrix must be square");
    if (!transition_coeffs.allFinite() || (size() > 0 && !coefficients.allFinite()))
        throw InputError("basis has non-finite coefficients");
    const Index n_labels = label_count();
    for (const auto& a : anchors)
        if (a.label < 0 || a.label >= n_labels)
            throw InputError("anchor label outside the alphabet");
    std::map<std::pair<int, std::vector<double>>, int> seen;
    for (const auto& a : anchors)
        if (++seen[{a.label, window_key(a)}] > 1)
            throw InputError("duplicate (window, label) anchor; merge coefficients first");
}

ScoreTable build_score_table(const LabeledSequence& seq, const BasisSet& basis,
                             const KernelSpec& spec) {
    spec.validate();
    const Index n_labels = basis.label_count();
    const Matrix windows = window_matrix(seq, spec.window_radius);

    ScoreTable table;
    table.emission = Matrix::Zero(seq.length(), n_labels);
    table.transition = basis.transition_coeffs;
    if (basis.size() == 0) return table;

    if (basis.anchors.front().window.size() != windows.cols())
        throw DimensionError("anchor window length does not match sequence window dimension");

    for (Index t = 0; t < seq.length(); ++t) {
        for (Index b = 0; b < basis.size(); ++b) {
            const Anchor& anchor = basis.anchors[static_cast<std::size_t>(b)];
            const double base = ipow(windows.row(t).dot(anchor.window.transpose()) + spec.offset,
                                     spec.degree);
            for (Index y = 0; y < n_labels; ++y) {
                const double aff = label_affinity(static_cast<int>(y), anchor.label, spec);
                if (aff != 0.0)
                    table.emission(t, y) += basis.coefficients(b) * aff * base;
            }
        }
    }
    return table;
}

TrainingCache TrainingCache::build(const Dataset& data, const BasisSet& basis,
                                   const KernelSpec& spec) {
    spec.validate();
    basis.validate();
    check_basis_against_data(data, basis, spec);
    if (spec.center_labels && data.alphabet.size() != 2)
        throw ConfigError("center_labels requires a binary alphabet");

    TrainingCache cache;
    cache.data = &data;
    cache.kernel = spec;
    cache.label_count = data.alphabet.size();
    cache.anchor_count = basis.size();
    cache.affinity = label_affinity_matrix(cache.label_count, spec);

    const Index n = cache.anchor_count;
    const Index w = spec.window_dim(data.feature_dim);
    cache.anchor_windows = Matrix::Zero(n, w);
    cache.anchor_affinity = Matrix::Zero(n, cache.label_count);
    cache.anchor_labels.resize(static_cast<std::size_t>(n));
    cache.label_groups.assign(static_cast<std::size_t>(cache.label_count), {});
    for (Index b = 0; b < n; ++b) {
        const Anchor& a = basis.anchors[static_cast<std::size_t>(b)];
        cache.anchor_windows.row(b) = a.window.transpose();
        cache.anchor_labels[static_cast<std::size_t>(b)] = a.label;
        cache.anchor_affinity.row(b) = cache.affinity.row(a.label);
        cache.label_groups[static_cast<std::size_t>(a.label)].push_back(b);
    }
    cache.gram = n > 0 ? gram_matrix(basis.anchors, spec) : Matrix(0, 0);

    cache.design.reserve(data.sequences.size());
    for (const auto& seq : data.sequences) {
        const Matrix windows = window_matrix(seq, spec.window_radius);
        Matrix d(seq.length(), n);
        for (Index t = 0; t < seq.length(); ++t)
            for (Index b = 0; b < n; ++b)
                d(t, b) = ipow(windows.row(t).dot(cache.anchor_windows.row(b)) + spec.offset,
                               spec.degree);
        cache.design.push_back(std::move(d));
    }
    return cache;
}

void TrainingCache::ensure_gram_eig() const {
    if (eig_ready) return;
    if (anchor_count == 0) {
        gram_eigenvalues = Vector(0);
        gram_eigenvectors = Matrix(0, 0);
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
        if (eig.info() != Eigen::Success)
            throw NumericalError("eigendecomposition of the basis Gram matrix failed");
        gram_eigenvalues = eig.eigenvalues();
        gram_eigenvectors = eig.eigenvectors();
    }
    eig_ready = true;
}

ScoreTable cache_score_table(const TrainingCache& cache, Index seq_index,
                             const Vector& alpha, const Matrix& alpha_tr) {
    const auto& seq = cache.data->sequences[static_cast<std::size_t>(seq_index)];
    ScoreTable table;
    table.transition = alpha_tr;
    if (cache.anchor_count == 0) {
        table.emission = Matrix::Zero(seq.length(), cache.label_count);
        return table;
    }
    // emission(t, y) = sum_b alpha_b * affinity(y_b, y) * base(t, b)
    table.emission = cache.design[static_cast<std::size_t>(seq_index)] *
                     (alpha.asDiagonal() * cache.anchor_affinity);
    return table;
}

EvalBundle cache_evaluate(const TrainingCache& cache, const TrainConfig& config,
                          const Vector& alpha, const Matrix& alpha_tr, bool want_gradient) {
    const Dataset& data = *cache.data;
    const double inv_sigma2 = 1.0 / config.sigma_squared;
    const Index n = cache.anchor_count;
    const Index n_labels = cache.label_count;

    EvalBundle out;
    out.objective = 0.5 * inv_sigma2 *
                    ((n > 0 ? alpha.dot(cache.gram * alpha) : 0.0) + alpha_tr.squaredNorm());

    Matrix grad_data = Matrix::Zero(n, n_labels);        // sum_i design_i^T (mu_i - onehot_i)
    Matrix grad_tr = Matrix::Zero(n_labels, n_labels);
    if (want_gradient) out.marginals.reserve(data.sequences.size());

    for (Index i = 0; i < data.size(); ++i) {
        const auto& seq = data.sequences[static_cast<std::size_t>(i)];
        const ScoreTable table = cache_score_table(cache, i, alpha, alpha_tr);
        CliqueMarginals marg = forward_backward(table);
        out.objective += marg.log_partition - observed_score(table, seq.labels);

        if (want_gradient) {
            const Matrix residual = marg.unary - onehot_rows(seq, n_labels);
            if (n > 0)
                grad_data.noalias() +=
                    cache.design[static_cast<std::size_t>(i)].transpose() * residual;
            for (Index t = 0; t + 1 < seq.length(); ++t) {
                grad_tr += marg.pairwise[static_cast<std::size_t>(t)];
                grad_tr(seq.labels[static_cast<std::size_t>(t)],
                        seq.labels[static_cast<std::size_t>(t + 1)]) -= 1.0;
            }
            out.marginals.push_back(std::move(marg));
        }
    }

    if (want_gradient) {
        out.grad.emission_grad = Vector::Zero(n);
        if (n > 0) {
            const Matrix folded = grad_data * cache.affinity; // affinity is symmetric
            for (Index b = 0; b < n; ++b)
                out.grad.emission_grad(b) =
                    folded(b, cache.anchor_labels[static_cast<std::size_t>(b)]);
            out.grad.emission_grad.noalias() += inv_sigma2 * (cache.gram * alpha);
        }
        out.grad.transition_grad = grad_tr + inv_sigma2 * alpha_tr;
        out.grad.emission_norm = out.grad.emission_grad.norm();
        out.grad.transition_norm = out.grad.transition_grad.norm();
    }
    return out;
}

Matrix cache_hessian_emission(const TrainingCache& cache, const TrainConfig& config,
                              const std::vector<CliqueMarginals>& marginals) {
    const Index n = cache.anchor_count;
    const double inv_sigma2 = 1.0 / config.sigma_squared;
    if (n == 0) return Matrix(0, 0);

    if (cache.kernel.center_labels) {
        // Rank-one covariance per position: affinity factors into sign(y)sign(y').
        Vector signs(n);
        for (Index b = 0; b < n; ++b)
            signs(b) = centered_sign(cache.anchor_labels[static_cast<std::size_t>(b)]);
        Matrix hess = Matrix::Zero(n, n);
        Vector label_signs(cache.label_count);
        for (Index y = 0; y < cache.label_count; ++y)
            label_signs(y) = centered_sign(static_cast<int>(y));
        for (std::size_t i = 0; i < marginals.size(); ++i) {
            const Matrix& design = cache.design[i];
            for (Index t = 0; t < design.rows(); ++t) {
                const double mean_sign = marginals[i].unary.row(t).dot(label_signs);
                const double variance = 1.0 - mean_sign * mean_sign;
                const Vector w = design.row(t).transpose().cwiseProduct(signs);
                hess.selfadjointView<Eigen::Lower>().rankUpdate(w, variance);
            }
        }
        hess = hess.selfadjointView<Eigen::Lower>();
        hess += inv_sigma2 * cache.gram;
        return hess;
    }

    // Kronecker-delta affinity: per position the covariance term is
    // blockdiag_y(mu_y u_y u_y^T) - v v^T with v_b = mu(y_b) u_b.
    // Work in label-grouped anchor order so the group updates hit contiguous
    // memory, then scatter back.
    std::vector<Index> grouped;
    grouped.reserve(static_cast<std::size_t>(n));
    std::vector<std::pair<Index, Index>> group_ranges; // [begin, end) per label
    for (const auto& group : cache.label_groups) {
        const Index begin = static_cast<Index>(grouped.size());
        grouped.insert(grouped.end(), group.begin(), group.end());
        group_ranges.emplace_back(begin, static_cast<Index>(grouped.size()));
    }

    Matrix hess_grouped = Matrix::Zero(n, n);
    Vector u(n), v(n);
    for (std::size_t i = 0; i < marginals.size(); ++i) {
        const Matrix& design = cache.design[i];
        const Matrix& unary = marginals[i].unary;
        for (Index t = 0; t < design.rows(); ++t) {
            for (Index k = 0; k < n; ++k) u(k) = design(t, grouped[static_cast<std::size_t>(k)]);
            for (Index y = 0; y < cache.label_count; ++y) {
                const auto [begin, end] = group_ranges[static_cast<std::size_t>(y)];
                const double mu = unary(t, y);
                v.segment(begin, end - begin) = mu * u.segment(begin, end - begin);
                if (mu != 0.0 && end > begin)
                    hess_grouped.block(begin, begin, end - begin, end - begin)
                        .selfadjointView<Eigen::Lower>()
                        .rankUpdate(u.segment(begin, end - begin), mu);
            }
            hess_grouped.selfadjointView<Eigen::Lower>().rankUpdate(v, -1.0);
        }
    }
    hess_grouped = hess_grouped.selfadjointView<Eigen::Lower>();

    Matrix hess(n, n);
    for (Index r = 0; r < n; ++r)
        for (Index c = 0; c < n; ++c)
            hess(grouped[static_cast<std::size_t>(r)], grouped[static_cast<std::size_t>(c)]) =
                hess_grouped(r, c);
    hess += inv_sigma2 * cache.gram;
    return hess;
}

Matrix cache_hessian_transition(const TrainingCache& cache, const TrainConfig& config,
                                const std::vector<CliqueMarginals>& marginals) {
    const Index n_labels = cache.label_count;
    const Index dim = n_labels * n_labels;
    const double inv_sigma2 = 1.0 / config.sigma_squared;

    Matrix hess = inv_sigma2 * Matrix::Identity(dim, dim);
    Vector p(dim);
    for (const auto& marg : marginals) {
        for (const auto& pairwise : marg.pairwise) {
            for (Index a = 0; a < n_labels; ++a)
                for (Index b = 0; b < n_labels; ++b) p(a * n_labels + b) = pairwise(a, b);
            hess += p.asDiagonal();
            hess.selfadjointView<Eigen::Lower>().rankUpdate(p, -1.0);
        }
    }
    return hess.selfadjointView<Eigen::Lower>();
}

double negative_log_posterior(const Dataset& data, const BasisSet& basis,
                              const TrainConfig& config) {
    config.validate();
    check_labeled(data);
    const TrainingCache cache = TrainingCache::build(data, basis, config.kernel);
    return cache_evaluate(cache, config, basis.coefficients, basis.transition_coeffs, false)
        .objective;
}

GradientReport gradient(const Dataset& data, const BasisSet& basis, const TrainConfig& config) {
    config.validate();
    check_labeled(data);
    const TrainingCache cache = TrainingCache::build(data, basis, config.kernel);
    return cache_evaluate(cache, config, basis.coefficients, basis.transition_coeffs, true).grad;
}

Matrix hessian_block(const Dataset& data, const BasisSet& basis, const TrainConfig& config,
                     ParameterBlock block) {
    config.validate();
    check_labeled(data);
    const TrainingCache cache = TrainingCache::build(data, basis, config.kernel);
    const EvalBundle bundle =
        cache_evaluate(cache, config, basis.coefficients, basis.transition_coeffs, true);
    return block == ParameterBlock::Emission
               ? cache_hessian_emission(cache, config, bundle.marginals)
               : cache_hessian_transition(cache, config, bundle.marginals);
}

} // namespace kcrf
