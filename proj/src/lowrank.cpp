#include "kcrf/lowrank.hpp"

#include <cmath>
#include <map>
#include <utility>

#include "kcrf/chain.hpp"
#include "kcrf/kernels.hpp"

namespace kcrf {

double CholeskyFactor::captured_trace_fraction(Index r) const {
    if (initial_trace <= 0.0 || r <= 0) return 0.0;
    if (r > rank()) r = rank();
    return (initial_trace - steps[static_cast<std::size_t>(r - 1)].trace_after) / initial_trace;
}

std::vector<Anchor> candidate_anchors(const Dataset& data, const KernelSpec& spec) {
    spec.validate();
    if (data.sequences.empty()) throw InputError("candidate_anchors: empty dataset");
    const Index n_labels = data.alphabet.size();

    std::vector<Anchor> candidates;
    std::map<std::pair<int, std::vector<double>>, bool> seen;
    for (const auto& seq : data.sequences) {
        const Matrix windows = window_matrix(seq, spec.window_radius);
        for (Index t = 0; t < seq.length(); ++t) {
            const Vector window = windows.row(t).transpose();
            const std::vector<double> key(window.data(), window.data() + window.size());
            for (int y = 0; y < n_labels; ++y) {
                if (seen.emplace(std::make_pair(y, key), true).second)
                    candidates.push_back({window, y});
            }
        }
    }
    return candidates;
}

CholeskyFactor incomplete_cholesky(const std::vector<Anchor>& candidates, const KernelSpec& spec,
                                   Index rank_budget, double residual_tol) {
    spec.validate();
    if (candidates.empty()) throw InputError("incomplete_cholesky: no candidates");
    if (rank_budget < 1) throw ConfigError("incomplete_cholesky: rank_budget must be >= 1");
    const Index n = static_cast<Index>(candidates.size());

    CholeskyFactor out;
    out.residual_diag = Vector(n);
    for (Index i = 0; i < n; ++i)
        out.residual_diag(i) =
            emission_kernel(candidates[static_cast<std::size_t>(i)],
                            candidates[static_cast<std::size_t>(i)], spec);
    out.initial_trace = out.residual_diag.sum();

    const double initial_max = out.residual_diag.maxCoeff();
    if (initial_max <= 0.0)
        throw NumericalError("incomplete_cholesky: degenerate kernel, no positive residual");
    const double tol = residual_tol >= 0.0 ? residual_tol : 1e-6 * initial_max;

    const Index max_rank = std::min(rank_budget, n);
    Matrix factor = Matrix::Zero(n, max_rank);

    Index r = 0;
    while (r < max_rank) {
        Index pivot = 0;
        double best = out.residual_diag(0);
        for (Index i = 1; i < n; ++i)
            if (out.residual_diag(i) > best) {
                best = out.residual_diag(i);
                pivot = i;
            }
        if (best < tol) break;

        // New column: (K(:, pivot) - L L(pivot,:)^T) / sqrt(residual).
        Vector column(n);
        for (Index i = 0; i < n; ++i)
            column(i) = emission_kernel(candidates[static_cast<std::size_t>(i)],
                                        candidates[static_cast<std::size_t>(pivot)], spec);
        if (r > 0)
            column.noalias() -= factor.leftCols(r) * factor.row(pivot).head(r).transpose();
        column /= std::sqrt(best);
        factor.col(r) = column;

        out.residual_diag -= column.cwiseProduct(column);
        out.residual_diag = out.residual_diag.cwiseMax(0.0); // round-off guard
        out.residual_diag(pivot) = 0.0;

        out.pivots.push_back(pivot);
        out.steps.push_back({pivot, best, out.residual_diag.sum()});
        ++r;
    }

    out.factor = factor.leftCols(r);
    return out;
}

BasisSet basis_from_factor(const CholeskyFactor& factor, const std::vector<Anchor>& candidates,
                           Index label_count, Index rank_limit) {
    if (factor.rank() < 1) throw InputError("basis_from_factor: factor has rank 0");
    Index keep = factor.rank();
    if (rank_limit >= 0 && rank_limit < keep) keep = rank_limit;
    if (keep < 1) throw InputError("basis_from_factor: rank limit keeps no pivots");

    std::vector<Anchor> anchors;
    anchors.reserve(static_cast<std::size_t>(keep));
    for (Index k = 0; k < keep; ++k)
        anchors.push_back(candidates[static_cast<std::size_t>(factor.pivots[static_cast<std::size_t>(k)])]);
    return BasisSet::from_anchors(std::move(anchors), label_count);
}

} // namespace kcrf
