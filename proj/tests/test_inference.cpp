#include <doctest.h>

#include <cmath>
#include <limits>

#include "kcrf/inference.hpp"
#include "support/compare.hpp"
#include "support/testrand.hpp"

using namespace kcrf;

namespace {

ScoreTable random_table(testsupport::Rng& rng, Index t_len, Index n_lab, double scale = 2.0) {
    ScoreTable s;
    s.emission = testsupport::normal_matrix(rng, t_len, n_lab, scale);
    s.transition = testsupport::normal_matrix(rng, n_lab, n_lab, scale);
    return s;
}

ScoreTable zero_table(Index t_len, Index n_lab) {
    return {Matrix::Zero(t_len, n_lab), Matrix::Zero(n_lab, n_lab)};
}

std::vector<std::vector<int>> all_labelings(Index t_len, Index n_lab) {
    std::vector<std::vector<int>> out;
    std::vector<int> y(static_cast<std::size_t>(t_len), 0);
    for (;;) {
        out.push_back(y);
        Index t = 0;
        while (t < t_len) {
            if (++y[static_cast<std::size_t>(t)] < static_cast<int>(n_lab)) break;
            y[static_cast<std::size_t>(t)] = 0;
            ++t;
        }
        if (t == t_len) break;
    }
    return out;
}

} // namespace

TEST_CASE("uniform scores give the uniform distribution") {
    auto marg = forward_backward(zero_table(2, 2));
    CHECK(marg.log_partition == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    for (Index t = 0; t < 2; ++t)
        for (Index y = 0; y < 2; ++y)
            CHECK(marg.unary(t, y) == doctest::Approx(0.5).epsilon(1e-12));
    for (Index y = 0; y < 2; ++y)
        for (Index z = 0; z < 2; ++z)
            CHECK(marg.pairwise[0](y, z) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("single position reduces to a softmax") {
    ScoreTable s = zero_table(1, 2);
    s.emission << 1.0, 3.0;
    auto marg = forward_backward(s);
    const double z = std::exp(1.0) + std::exp(3.0);
    CHECK(marg.log_partition == doctest::Approx(std::log(z)).epsilon(1e-12));
    CHECK(marg.unary(0, 0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
    CHECK(marg.unary(0, 1) == doctest::Approx(std::exp(3.0) / z).epsilon(1e-12));
    CHECK(marg.pairwise.empty());
}

TEST_CASE("forward_backward matches enumeration") {
    testsupport::Rng rng(101);
    for (int rep = 0; rep < 60; ++rep) {
        const Index t_len = 1 + testsupport::uniform_int(rng, 6);
        const Index n_lab = 2 + testsupport::uniform_int(rng, 2);
        ScoreTable s = random_table(rng, t_len, n_lab);
        auto fb = forward_backward(s);
        auto bf = brute_force_marginals(s);
        CHECK(testsupport::max_marginal_rel_diff(fb, bf) <= 1e-10);
    }
}

TEST_CASE("brute force equals forward_backward exactly at T=1") {
    testsupport::Rng rng(55);
    ScoreTable s = random_table(rng, 1, 3);
    auto fb = forward_backward(s);
    auto bf = brute_force_marginals(s);
    CHECK(testsupport::max_marginal_rel_diff(fb, bf) <= 1e-12);
}

TEST_CASE("brute force rejects oversized state spaces") {
    CHECK_THROWS_AS(brute_force_marginals(zero_table(40, 3)), InputError);
}

TEST_CASE("marginals satisfy simplex and consistency constraints") {
    testsupport::Rng rng(77);
    for (int rep = 0; rep < 20; ++rep) {
        const Index t_len = 2 + testsupport::uniform_int(rng, 30);
        const Index n_lab = 2 + testsupport::uniform_int(rng, 3);
        auto marg = forward_backward(random_table(rng, t_len, n_lab));

        for (Index t = 0; t < t_len; ++t) {
            CHECK(marg.unary.row(t).sum() == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(marg.unary.row(t).minCoeff() >= 0.0);
            CHECK(marg.unary.row(t).maxCoeff() <= 1.0 + 1e-12);
        }
        for (Index t = 0; t + 1 < t_len; ++t) {
            const Matrix& pw = marg.pairwise[static_cast<std::size_t>(t)];
            CHECK(pw.sum() == doctest::Approx(1.0).epsilon(1e-10));
            for (Index y = 0; y < n_lab; ++y) {
                CHECK(pw.row(y).sum() == doctest::Approx(marg.unary(t, y)).epsilon(1e-10));
                CHECK(pw.col(y).sum() == doctest::Approx(marg.unary(t + 1, y)).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("adding a constant to one position shifts only the log partition") {
    testsupport::Rng rng(88);
    ScoreTable s = random_table(rng, 5, 3);
    auto before = forward_backward(s);
    const double c = 1.75;
    s.emission.row(2).array() += c;
    auto after = forward_backward(s);
    CHECK(after.log_partition - before.log_partition == doctest::Approx(c).epsilon(1e-10));
    CHECK((after.unary - before.unary).cwiseAbs().maxCoeff() <= 1e-10);
    for (std::size_t t = 0; t < before.pairwise.size(); ++t)
        CHECK((after.pairwise[t] - before.pairwise[t]).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("non-finite scores are rejected") {
    ScoreTable s = zero_table(2, 2);
    s.emission(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(forward_backward(s), InputError);
    s.emission(1, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(forward_backward(s), InputError);
}

TEST_CASE("viterbi picks the argmax") {
    ScoreTable s = zero_table(1, 2);
    s.emission << 0.0, 5.0;
    CHECK(viterbi(s) == std::vector<int>{1});
}

TEST_CASE("viterbi breaks ties toward the all-zeros labeling") {
    CHECK(viterbi(zero_table(4, 3)) == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("viterbi matches exhaustive argmax with lexicographic ties") {
    testsupport::Rng rng(303);
    for (int rep = 0; rep < 40; ++rep) {
        const Index t_len = 1 + testsupport::uniform_int(rng, 5);
        const Index n_lab = 2 + testsupport::uniform_int(rng, 2);
        ScoreTable s = random_table(rng, t_len, n_lab);

        double best = -std::numeric_limits<double>::infinity();
        std::vector<int> best_y;
        for (const auto& y : all_labelings(t_len, n_lab)) {
            double score = 0.0;
            for (Index t = 0; t < t_len; ++t) score += s.emission(t, y[(std::size_t)t]);
            for (Index t = 0; t + 1 < t_len; ++t)
                score += s.transition(y[(std::size_t)t], y[(std::size_t)t + 1]);
            if (score > best) {
                best = score;
                best_y = y;
            }
        }
        auto got = viterbi(s);
        CHECK(got == best_y);

        // Decoded labeling beats random labelings.
        for (int k = 0; k < 100; ++k) {
            std::vector<int> y;
            for (Index t = 0; t < t_len; ++t)
                y.push_back(testsupport::uniform_int(rng, static_cast<int>(n_lab)));
            double score = 0.0;
            for (Index t = 0; t < t_len; ++t) score += s.emission(t, y[(std::size_t)t]);
            for (Index t = 0; t + 1 < t_len; ++t)
                score += s.transition(y[(std::size_t)t], y[(std::size_t)t + 1]);
            CHECK(best >= score - 1e-12);
        }
    }
}

TEST_CASE("sequence_log_prob values") {
    SUBCASE("uniform scores") {
        ScoreTable s = zero_table(2, 2);
        for (const auto& y : all_labelings(2, 2))
            CHECK(sequence_log_prob(s, y) == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
    }
    SUBCASE("single-position logistic") {
        ScoreTable s = zero_table(1, 2);
        s.emission << 0.0, 5.0;
        CHECK(sequence_log_prob(s, {1}) ==
              doctest::Approx(std::log(std::exp(5.0) / (1.0 + std::exp(5.0)))).epsilon(1e-9));
    }
    SUBCASE("probabilities sum to one") {
        testsupport::Rng rng(404);
        ScoreTable s = random_table(rng, 4, 3);
        double total = 0.0;
        for (const auto& y : all_labelings(4, 3)) total += std::exp(sequence_log_prob(s, y));
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("never positive") {
        testsupport::Rng rng(405);
        for (int rep = 0; rep < 20; ++rep) {
            ScoreTable s = random_table(rng, 3, 2, 5.0);
            for (const auto& y : all_labelings(3, 2)) CHECK(sequence_log_prob(s, y) <= 0.0);
        }
    }
    SUBCASE("label outside alphabet") {
        ScoreTable s = zero_table(2, 2);
        CHECK_THROWS_AS(sequence_log_prob(s, {0, 2}), InputError);
    }
}
