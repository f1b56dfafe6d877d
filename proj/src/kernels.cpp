#include "kcrf/kernels.hpp"

#include "kcrf/chain.hpp"

namespace kcrf {

double base_kernel(const Vector& u, const Vector& v, const KernelSpec& spec) {
    spec.validate();
    if (u.size() != v.size())
        throw DimensionError("base_kernel: window lengths differ (" +
                             std::to_string(u.size()) + " vs " + std::to_string(v.size()) + ")");
    return ipow(u.dot(v) + spec.offset, spec.degree);
}

Matrix label_affinity_matrix(Index label_count, const KernelSpec& spec) {
    Matrix lam(label_count, label_count);
    for (Index a = 0; a < label_count; ++a)
        for (Index b = 0; b < label_count; ++b)
            lam(a, b) = label_affinity(static_cast<int>(a), static_cast<int>(b), spec);
    return lam;
}

double emission_kernel(const Anchor& a, const Anchor& b, const KernelSpec& spec) {
    const double aff = label_affinity(a.label, b.label, spec);
    if (aff == 0.0) return 0.0;
    return aff * base_kernel(a.window, b.window, spec);
}

double joint_kernel(const LabeledSequence& s1, const std::vector<int>& y1,
                    const LabeledSequence& s2, const std::vector<int>& y2,
                    const KernelSpec& spec) {
    if (static_cast<Index>(y1.size()) != s1.length() ||
        static_cast<Index>(y2.size()) != s2.length())
        throw InputError("joint_kernel: labeling length does not match sequence length");
    if (s1.feature_dim() != s2.feature_dim())
        throw DimensionError("joint_kernel: feature dimensions differ");

    const Matrix w1 = window_matrix(s1, spec.window_radius);
    const Matrix w2 = window_matrix(s2, spec.window_radius);

    double total = 0.0;
    for (Index t = 0; t < s1.length(); ++t) {
        for (Index s = 0; s < s2.length(); ++s) {
            const double aff = label_affinity(y1[static_cast<std::size_t>(t)],
                                              y2[static_cast<std::size_t>(s)], spec);
            if (aff == 0.0) continue;
            total += aff * ipow(w1.row(t).dot(w2.row(s)) + spec.offset, spec.degree);
        }
    }
    for (Index t = 0; t + 1 < s1.length(); ++t)
        for (Index s = 0; s + 1 < s2.length(); ++s)
            total += transition_kernel(y1[static_cast<std::size_t>(t)],
                                       y1[static_cast<std::size_t>(t + 1)],
                                       y2[static_cast<std::size_t>(s)],
                                       y2[static_cast<std::size_t>(s + 1)]);
    return total;
}

Matrix gram_matrix(const std::vector<Anchor>& anchors, const KernelSpec& spec) {
    if (anchors.empty()) throw InputError("gram_matrix: empty anchor list");
    const Index n = static_cast<Index>(anchors.size());
    Matrix gram(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j <= i; ++j) {
            const double v = emission_kernel(anchors[static_cast<std::size_t>(i)],
                                             anchors[static_cast<std::size_t>(j)], spec);
            gram(i, j) = v;
            gram(j, i) = v;
        }
    }
    return gram;
}

} // namespace kcrf
