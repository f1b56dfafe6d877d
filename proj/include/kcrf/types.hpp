#ifndef KCRF_TYPES_HPP
#define KCRF_TYPES_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

#include "kcrf/errors.hpp"

namespace kcrf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Ordered label set; a label's id is its position in `names`.
struct LabelAlphabet {
    std::vector<std::string> names;

    Index size() const { return static_cast<Index>(names.size()); }

    /// Returns the id of `name`, or -1 if absent.
    Index id_of(const std::string& name) const {
        for (Index i = 0; i < size(); ++i)
            if (names[static_cast<std::size_t>(i)] == name) return i;
        return -1;
    }

    void validate() const;
};

/// One sequence instance: per-position feature rows, optional per-position labels.
struct LabeledSequence {
    std::string id;
    Matrix features;         // T x F
    std::vector<int> labels; // length T, or empty when unlabeled

    Index length() const { return features.rows(); }
    Index feature_dim() const { return features.cols(); }
    bool labeled() const { return !labels.empty(); }
};

struct Dataset {
    std::vector<LabeledSequence> sequences;
    LabelAlphabet alphabet;
    Index feature_dim = 0;

    Index size() const { return static_cast<Index>(sequences.size()); }
    Index total_positions() const;
    void validate() const;
};

/// Polynomial kernel and window parameters shared by every kernel evaluation.
struct KernelSpec {
    int degree = 1;           // polynomial degree d
    double offset = 1.0;      // polynomial additive constant c
    Index window_radius = 0;  // half-width of the position window
    bool center_labels = false;

    void validate() const {
        if (degree < 1) throw ConfigError("kernel degree must be >= 1");
        if (offset < 0.0) throw ConfigError("kernel offset must be >= 0");
        if (window_radius < 0) throw ConfigError("window_radius must be >= 0");
    }

    Index window_dim(Index feature_dim) const {
        return (2 * window_radius + 1) * feature_dim;
    }
};

/// Features of positions t-r..t+r concatenated, zero-padded at the boundaries.
struct WindowVector {
    Vector values;
    std::string sequence_id; // origin sequence (informational)
    Index position = -1;     // origin position (informational)
};

/// One basis element of the emission block: a window with its label.
struct Anchor {
    Vector window;
    int label = 0;
};

inline Index Dataset::total_positions() const {
    Index n = 0;
    for (const auto& s : sequences) n += s.length();
    return n;
}

inline void LabelAlphabet::validate() const {
    if (names.empty()) throw InputError("label alphabet is empty");
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j)
            if (names[i] == names[j])
                throw InputError("duplicate label name '" + names[i] + "'");
}

inline void Dataset::validate() const {
    alphabet.validate();
    for (const auto& s : sequences) {
        if (s.length() < 1) throw InputError("sequence '" + s.id + "' is empty");
        if (s.feature_dim() != feature_dim)
            throw InputError("sequence '" + s.id + "' has feature dim " +
                             std::to_string(s.feature_dim()) + ", dataset has " +
                             std::to_string(feature_dim));
        if (s.labeled()) {
            if (static_cast<Index>(s.labels.size()) != s.length())
                throw InputError("sequence '" + s.id + "' label count does not match length");
            for (int y : s.labels)
                if (y < 0 || y >= alphabet.size())
                    throw InputError("sequence '" + s.id + "' has label id outside alphabet");
        }
    }
}

} // namespace kcrf

#endif
