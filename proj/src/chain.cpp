#include "kcrf/chain.hpp"

namespace kcrf {

std::vector<CliqueIndex> enumerate_cliques(const LabeledSequence& seq) {
    const Index t_len = seq.length();
    std::vector<CliqueIndex> cliques;
    cliques.reserve(static_cast<std::size_t>(2 * t_len - 1));
    for (Index t = 0; t < t_len; ++t) cliques.push_back({CliqueKind::Emission, t});
    for (Index t = 0; t + 1 < t_len; ++t) cliques.push_back({CliqueKind::Transition, t});
    return cliques;
}

WindowVector extract_window(const LabeledSequence& seq, Index t, Index radius) {
    const Index t_len = seq.length();
    if (t < 0 || t >= t_len)
        throw InputError("extract_window: position " + std::to_string(t) +
                         " outside [0," + std::to_string(t_len) + ")");
    const Index f = seq.feature_dim();
    WindowVector w;
    w.values = Vector::Zero((2 * radius + 1) * f);
    w.sequence_id = seq.id;
    w.position = t;
    for (Index k = -radius; k <= radius; ++k) {
        const Index src = t + k;
        if (src < 0 || src >= t_len) continue;
        w.values.segment((k + radius) * f, f) = seq.features.row(src).transpose();
    }
    return w;
}

Matrix window_matrix(const LabeledSequence& seq, Index radius) {
    const Index t_len = seq.length();
    const Index f = seq.feature_dim();
    Matrix windows = Matrix::Zero(t_len, (2 * radius + 1) * f);
    for (Index t = 0; t < t_len; ++t)
        for (Index k = -radius; k <= radius; ++k) {
            const Index src = t + k;
            if (src < 0 || src >= t_len) continue;
            windows.block(t, (k + radius) * f, 1, f) = seq.features.row(src);
        }
    return windows;
}

std::vector<TiedBlock> tied_parameter_blocks(const LabelAlphabet& alphabet) {
    const Index label_count = alphabet.size();
    return {
        {CliqueKind::Emission, Eigen::Dynamic},
        {CliqueKind::Transition, label_count * label_count},
    };
}

} // namespace kcrf
