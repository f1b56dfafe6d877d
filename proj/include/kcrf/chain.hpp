#ifndef KCRF_CHAIN_HPP
#define KCRF_CHAIN_HPP

#include <vector>

#include "kcrf/types.hpp"

namespace kcrf {

enum class CliqueKind { Emission, Transition };

/// A clique of the linear chain: (x_t, y_t) or (y_t, y_{t+1}).
struct CliqueIndex {
    CliqueKind kind;
    Index position;
};

/// All cliques of a sequence in position order: T emissions then T-1 transitions.
std::vector<CliqueIndex> enumerate_cliques(const LabeledSequence& seq);

/// Window of feature rows t-r..t+r, zero rows where indices fall outside [0,T).
WindowVector extract_window(const LabeledSequence& seq, Index t, Index radius);

/// All windows of a sequence stacked as rows: T x (2r+1)F.
Matrix window_matrix(const LabeledSequence& seq, Index radius);

/// One tied parameter block per clique kind. The emission block's dual dimension
/// ranges over (window, label) configurations and is data-dependent, flagged by
/// configuration_count = Eigen::Dynamic.
struct TiedBlock {
    CliqueKind kind;
    Index configuration_count;
};

std::vector<TiedBlock> tied_parameter_blocks(const LabelAlphabet& alphabet);

} // namespace kcrf

#endif
