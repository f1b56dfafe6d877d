#include "support/synth.hpp"

#include "kcrf/inference.hpp"
#include "support/testrand.hpp"

namespace testsupport {

using namespace kcrf;

Dataset make_synthetic(const SynthConfig& config) {
    Rng rng(config.seed);
    const Index n_labels = config.label_count;

    Dataset data;
    data.feature_dim = config.feature_dim;
    for (int y = 0; y < config.label_count; ++y)
        data.alphabet.names.push_back(std::string(1, static_cast<char>('A' + y)));

    // Fixed emission truth for the whole dataset.
    Matrix weights = normal_matrix(rng, n_labels, config.feature_dim, config.emission_scale);
    Matrix truth_tr = Matrix::Zero(n_labels, n_labels);
    for (Index a = 0; a < n_labels; ++a)
        for (Index b = 0; b < n_labels; ++b)
            truth_tr(a, b) = config.transition_scale * (a == b ? 1.0 : -1.0);

    for (int s = 0; s < config.num_sequences; ++s) {
        LabeledSequence seq;
        seq.id = "synth-" + std::to_string(s);
        seq.features = normal_matrix(rng, config.length, config.feature_dim);

        ScoreTable table;
        table.transition = truth_tr;
        table.emission = Matrix::Zero(config.length, n_labels);
        if (config.quadratic_truth) {
            for (Index t = 0; t < config.length; ++t) {
                const double q = seq.features(t, 0) * seq.features(t, 0) -
                                 seq.features(t, 1) * seq.features(t, 1);
                table.emission(t, 1) = config.emission_scale * q;
                table.emission(t, 0) = -config.emission_scale * q;
            }
        } else {
            table.emission = seq.features * weights.transpose();
        }

        // Exact chain sampling: y_0 from the unary marginal, then
        // y_{t+1} | y_t from the pairwise conditionals.
        const CliqueMarginals marg = forward_backward(table);
        seq.labels.resize(static_cast<std::size_t>(config.length));
        {
            double u = uniform01(rng), acc = 0.0;
            int pick = static_cast<int>(n_labels) - 1;
            for (Index y = 0; y < n_labels; ++y) {
                acc += marg.unary(0, y);
                if (u <= acc) {
                    pick = static_cast<int>(y);
                    break;
                }
            }
            seq.labels[0] = pick;
        }
        for (Index t = 0; t + 1 < config.length; ++t) {
            const int prev = seq.labels[static_cast<std::size_t>(t)];
            const Matrix& pw = marg.pairwise[static_cast<std::size_t>(t)];
            const double denom = marg.unary(t, prev);
            double u = uniform01(rng), acc = 0.0;
            int pick = static_cast<int>(n_labels) - 1;
            for (Index y = 0; y < n_labels; ++y) {
                acc += pw(prev, y) / denom;
                if (u <= acc) {
                    pick = static_cast<int>(y);
                    break;
                }
            }
            seq.labels[static_cast<std::size_t>(t + 1)] = pick;
        }
        data.sequences.push_back(std::move(seq));
    }
    data.validate();
    return data;
}

} // namespace testsupport
