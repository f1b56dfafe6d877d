#include <doctest.h>

#include "kcrf/chain.hpp"
#include "support/testrand.hpp"

using namespace kcrf;

namespace {

LabeledSequence seq_of_length(Index t_len, Index f = 1) {
    LabeledSequence s;
    s.features = Matrix::Zero(t_len, f);
    return s;
}

} // namespace

TEST_CASE("enumerate_cliques counts and order") {
    auto c1 = enumerate_cliques(seq_of_length(1));
    REQUIRE(c1.size() == 1);
    CHECK(c1[0].kind == CliqueKind::Emission);

    auto c5 = enumerate_cliques(seq_of_length(5));
    int emissions = 0, transitions = 0;
    for (const auto& c : c5) (c.kind == CliqueKind::Emission ? emissions : transitions)++;
    CHECK(emissions == 5);
    CHECK(transitions == 4);

    auto c2 = enumerate_cliques(seq_of_length(2));
    REQUIRE(c2.size() == 3);
    CHECK(c2[0].kind == CliqueKind::Emission);
    CHECK(c2[0].position == 0);
    CHECK(c2[1].kind == CliqueKind::Emission);
    CHECK(c2[1].position == 1);
    CHECK(c2[2].kind == CliqueKind::Transition);
    CHECK(c2[2].position == 0);
}

TEST_CASE("clique count invariant 2T-1") {
    for (Index t_len : {1, 2, 3, 7, 20}) {
        auto cliques = enumerate_cliques(seq_of_length(t_len));
        CHECK(static_cast<Index>(cliques.size()) == 2 * t_len - 1);
    }
}

TEST_CASE("extract_window pads with zeros at the boundaries") {
    LabeledSequence s = seq_of_length(1);
    s.features(0, 0) = 7.0;
    auto w = extract_window(s, 0, 2);
    REQUIRE(w.values.size() == 5);
    CHECK(w.values(0) == 0.0);
    CHECK(w.values(1) == 0.0);
    CHECK(w.values(2) == 7.0);
    CHECK(w.values(3) == 0.0);
    CHECK(w.values(4) == 0.0);
}

TEST_CASE("extract_window radius zero is the feature row") {
    testsupport::Rng rng(3);
    LabeledSequence s;
    s.features = testsupport::normal_matrix(rng, 4, 3);
    for (Index t = 0; t < 4; ++t) {
        auto w = extract_window(s, t, 0);
        CHECK(w.values == s.features.row(t).transpose());
    }
}

TEST_CASE("extract_window left edge") {
    LabeledSequence s;
    s.features = Matrix(3, 2);
    s.features << 1, 2, 3, 4, 5, 6;
    auto w = extract_window(s, 0, 1);
    REQUIRE(w.values.size() == 6);
    CHECK(w.values(0) == 0.0);
    CHECK(w.values(1) == 0.0);
    CHECK(w.values(2) == 1.0);
    CHECK(w.values(3) == 2.0);
    CHECK(w.values(4) == 3.0);
    CHECK(w.values(5) == 4.0);
}

TEST_CASE("extract_window rejects out-of-range positions") {
    auto s = seq_of_length(3);
    CHECK_THROWS_AS(extract_window(s, 3, 1), InputError);
    CHECK_THROWS_AS(extract_window(s, -1, 1), InputError);
}

TEST_CASE("window extraction is position-equivariant") {
    testsupport::Rng rng(11);
    const Index t_len = 6, f = 2, shift = 2;
    Matrix base = testsupport::normal_matrix(rng, t_len, f);

    LabeledSequence a;
    a.features = base;
    LabeledSequence b;
    b.features = Matrix::Zero(t_len + shift, f);
    b.features.bottomRows(t_len) = base;

    // Interior windows (no padding in either sequence) coincide after shifting.
    for (Index t = 1; t + 1 < t_len; ++t) {
        auto wa = extract_window(a, t, 1);
        auto wb = extract_window(b, t + shift, 1);
        CHECK(wa.values == wb.values);
    }
}

TEST_CASE("window_matrix rows equal extract_window") {
    testsupport::Rng rng(13);
    LabeledSequence s;
    s.features = testsupport::normal_matrix(rng, 5, 3);
    Matrix wm = window_matrix(s, 2);
    REQUIRE(wm.rows() == 5);
    REQUIRE(wm.cols() == 15);
    for (Index t = 0; t < 5; ++t)
        CHECK(wm.row(t).transpose() == extract_window(s, t, 2).values);
}

TEST_CASE("tied_parameter_blocks yields one emission and one transition block") {
    for (int n_labels : {2, 3, 5}) {
        LabelAlphabet alphabet;
        for (int i = 0; i < n_labels; ++i) alphabet.names.push_back(std::string(1, char('A' + i)));
        auto blocks = tied_parameter_blocks(alphabet);
        REQUIRE(blocks.size() == 2);
        CHECK(blocks[0].kind == CliqueKind::Emission);
        CHECK(blocks[0].configuration_count == Eigen::Dynamic);
        CHECK(blocks[1].kind == CliqueKind::Transition);
        CHECK(blocks[1].configuration_count == n_labels * n_labels);
    }
}
