#include "kcrf/inference.hpp"

#include <algorithm>
#include <cmath>

namespace kcrf {

namespace {

void check_scores(const ScoreTable& scores) {
    if (scores.length() < 1) throw InputError("score table has no positions");
    if (scores.label_count() < 1) throw InputError("score table has no labels");
    if (scores.transition.rows() != scores.label_count() ||
        scores.transition.cols() != scores.label_count())
        throw DimensionError("transition table shape does not match label count");
    if (!scores.emission.allFinite() || !scores.transition.allFinite())
        throw InputError("score table contains a non-finite entry");
}

double labeling_score(const ScoreTable& scores, const std::vector<int>& y) {
    double total = 0.0;
    for (Index t = 0; t < scores.length(); ++t)
        total += scores.emission(t, y[static_cast<std::size_t>(t)]);
    for (Index t = 0; t + 1 < scores.length(); ++t)
        total += scores.transition(y[static_cast<std::size_t>(t)],
                                   y[static_cast<std::size_t>(t + 1)]);
    return total;
}

} // namespace

double log_sum_exp(const Vector& v) {
    const double m = v.maxCoeff();
    return m + std::log((v.array() - m).exp().sum());
}

CliqueMarginals forward_backward(const ScoreTable& scores) {
    check_scores(scores);
    const Index t_len = scores.length();
    const Index n_lab = scores.label_count();
    const Matrix& em = scores.emission;
    const Matrix& tr = scores.transition;

    // log alpha(t, y): score of all prefixes ending in y at t.
    Matrix log_alpha(t_len, n_lab);
    log_alpha.row(0) = em.row(0);
    for (Index t = 1; t < t_len; ++t)
        for (Index y = 0; y < n_lab; ++y)
            log_alpha(t, y) = em(t, y) +
                log_sum_exp(log_alpha.row(t - 1).transpose() + tr.col(y));

    // log beta(t, y): score of all suffixes after position t given y.
    Matrix log_beta = Matrix::Zero(t_len, n_lab);
    for (Index t = t_len - 2; t >= 0; --t)
        for (Index y = 0; y < n_lab; ++y)
            log_beta(t, y) = log_sum_exp(
                tr.row(y).transpose() + em.row(t + 1).transpose() + log_beta.row(t + 1).transpose());

    CliqueMarginals out;
    out.log_partition = log_sum_exp(log_alpha.row(t_len - 1).transpose());
    out.unary = (log_alpha + log_beta).array() - out.log_partition;
    out.unary = out.unary.array().exp();

    out.pairwise.reserve(static_cast<std::size_t>(std::max<Index>(t_len - 1, 0)));
    for (Index t = 0; t + 1 < t_len; ++t) {
        Matrix slice(n_lab, n_lab);
        for (Index y = 0; y < n_lab; ++y)
            for (Index z = 0; z < n_lab; ++z)
                slice(y, z) = std::exp(log_alpha(t, y) + tr(y, z) + em(t + 1, z) +
                                       log_beta(t + 1, z) - out.log_partition);
        out.pairwise.push_back(std::move(slice));
    }
    return out;
}

CliqueMarginals brute_force_marginals(const ScoreTable& scores) {
    check_scores(scores);
    const Index t_len = scores.length();
    const Index n_lab = scores.label_count();
    if (static_cast<double>(t_len) * std::log(static_cast<double>(n_lab)) > std::log(1e6))
        throw InputError("brute_force_marginals: |Y|^T exceeds the 10^6 budget");

    std::vector<int> y(static_cast<std::size_t>(t_len), 0);
    std::vector<double> total_scores;
    for (;;) {
        total_scores.push_back(labeling_score(scores, y));
        Index t = 0;
        while (t < t_len) {
            if (++y[static_cast<std::size_t>(t)] < n_lab) break;
            y[static_cast<std::size_t>(t)] = 0;
            ++t;
        }
        if (t == t_len) break;
    }

    const double max_score = *std::max_element(total_scores.begin(), total_scores.end());
    double z = 0.0;
    for (double s : total_scores) z += std::exp(s - max_score);
    const double log_z = max_score + std::log(z);

    CliqueMarginals out;
    out.log_partition = log_z;
    out.unary = Matrix::Zero(t_len, n_lab);
    out.pairwise.assign(static_cast<std::size_t>(std::max<Index>(t_len - 1, 0)),
                        Matrix::Zero(n_lab, n_lab));

    std::fill(y.begin(), y.end(), 0);
    std::size_t idx = 0;
    for (;;) {
        const double p = std::exp(total_scores[idx] - log_z);
        for (Index t = 0; t < t_len; ++t)
            out.unary(t, y[static_cast<std::size_t>(t)]) += p;
        for (Index t = 0; t + 1 < t_len; ++t)
            out.pairwise[static_cast<std::size_t>(t)](y[static_cast<std::size_t>(t)],
                                                      y[static_cast<std::size_t>(t + 1)]) += p;
        ++idx;
        Index t = 0;
        while (t < t_len) {
            if (++y[static_cast<std::size_t>(t)] < n_lab) break;
            y[static_cast<std::size_t>(t)] = 0;
            ++t;
        }
        if (t == t_len) break;
    }
    return out;
}

std::vector<int> viterbi(const ScoreTable& scores) {
    check_scores(scores);
    const Index t_len = scores.length();
    const Index n_lab = scores.label_count();
    const Matrix& em = scores.emission;
    const Matrix& tr = scores.transition;

    // best(t, y): maximal score of a suffix starting at t with y_t = y.
    // Reconstructing forward and taking the smallest maximizing label at each
    // step yields the lexicographically smallest optimal labeling.
    Matrix best(t_len, n_lab);
    best.row(t_len - 1) = em.row(t_len - 1);
    for (Index t = t_len - 2; t >= 0; --t)
        for (Index y = 0; y < n_lab; ++y)
            best(t, y) = em(t, y) +
                (tr.row(y).transpose() + best.row(t + 1).transpose()).maxCoeff();

    std::vector<int> path(static_cast<std::size_t>(t_len), 0);
    Index arg = 0;
    best.row(0).maxCoeff(&arg); // maxCoeff returns the first (smallest) argmax
    path[0] = static_cast<int>(arg);
    for (Index t = 1; t < t_len; ++t) {
        const int prev = path[static_cast<std::size_t>(t - 1)];
        Vector cont = tr.row(prev).transpose() + best.row(t).transpose();
        cont.maxCoeff(&arg);
        path[static_cast<std::size_t>(t)] = static_cast<int>(arg);
    }
    return path;
}

double sequence_log_prob(const ScoreTable& scores, const std::vector<int>& labels) {
    check_scores(scores);
    if (static_cast<Index>(labels.size()) != scores.length())
        throw InputError("sequence_log_prob: labeling length does not match score table");
    for (int y : labels)
        if (y < 0 || y >= scores.label_count())
            throw InputError("sequence_log_prob: label id " + std::to_string(y) +
                             " outside the alphabet");
    const CliqueMarginals fb = forward_backward(scores);
    return std::min(0.0, labeling_score(scores, labels) - fb.log_partition);
}

} // namespace kcrf
