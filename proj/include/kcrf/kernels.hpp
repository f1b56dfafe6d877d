#ifndef KCRF_KERNELS_HPP
#define KCRF_KERNELS_HPP

#include <vector>

#include "kcrf/types.hpp"

namespace kcrf {

/// x^e by repeated multiplication, bit-identical wherever it is used.
inline double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

/// Sign code used by the centered binary emission kernel: label 0 -> -1, label 1 -> +1.
inline double centered_sign(int label) {
    if (label != 0 && label != 1)
        throw ConfigError("center_labels requires a binary alphabet (label id " +
                          std::to_string(label) + " seen)");
    return label == 0 ? -1.0 : 1.0;
}

/// Polynomial kernel (<u,v> + offset)^degree between two windows.
double base_kernel(const Vector& u, const Vector& v, const KernelSpec& spec);

/// Label part of the emission kernel: Kronecker delta, or the +-1 sign product
/// when `center_labels` is set (binary alphabets only).
inline double label_affinity(int ya, int yb, const KernelSpec& spec) {
    if (spec.center_labels) return centered_sign(ya) * centered_sign(yb);
    return ya == yb ? 1.0 : 0.0;
}

/// L x L matrix of label_affinity values.
Matrix label_affinity_matrix(Index label_count, const KernelSpec& spec);

/// Emission-clique kernel: label affinity times the window base kernel.
double emission_kernel(const Anchor& a, const Anchor& b, const KernelSpec& spec);

/// Transition-clique kernel: 1 iff both label pairs match componentwise.
inline double transition_kernel(int p_from, int p_to, int q_from, int q_to) {
    return (p_from == q_from && p_to == q_to) ? 1.0 : 0.0;
}

/// Sum of per-clique kernels between two fully labeled sequences:
/// every emission-clique pair plus every transition-clique pair.
double joint_kernel(const LabeledSequence& s1, const std::vector<int>& y1,
                    const LabeledSequence& s2, const std::vector<int>& y2,
                    const KernelSpec& spec);

/// Gram matrix of emission_kernel over an anchor list.
Matrix gram_matrix(const std::vector<Anchor>& anchors, const KernelSpec& spec);

} // namespace kcrf

#endif
