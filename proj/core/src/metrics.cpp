#include "scalewave/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace scalewave {

double accuracy(const Tensor& logits, const std::vector<std::int64_t>& labels) {
    check_shape(logits.rank() == 2, "accuracy expects logits [N, K]");
    const std::int64_t n = logits.dim(0), k = logits.dim(1);
    check_shape(static_cast<std::int64_t>(labels.size()) == n, "labels length mismatch");
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t best = 0;
        for (std::int64_t j = 1; j < k; ++j)
            if (logits[i * k + j] > logits[i * k + best]) best = j;
        if (best == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

double binary_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_shape(scores.size() == labels.size(), "auc inputs must align");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int l : labels) n_pos += l ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    check(n_pos > 0 && n_neg > 0, ErrorCode::undefined_metric, "AUC needs both classes present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks across ties, then the Mann-Whitney identity.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            if (labels[order[t]]) rank_sum_pos += avg_rank;
        }
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_shape(scores.size() == labels.size(), "ap inputs must align");
    std::size_t n_pos = 0;
    for (int l : labels) n_pos += l ? 1 : 0;
    check(n_pos > 0, ErrorCode::undefined_metric, "average precision needs at least one positive");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (labels[order[k]]) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    return ap / static_cast<double>(n_pos);
}

MultilabelMetrics evaluate_multilabel(const Tensor& scores, const Tensor& targets) {
    check_shape(scores.rank() == 2 && scores.same_shape(targets), "multilabel inputs must be matching [N, K]");
    const std::int64_t n = scores.dim(0), k = scores.dim(1);

    MultilabelMetrics m;
    std::int64_t classes_scored = 0;
    for (std::int64_t c = 0; c < k; ++c) {
        std::vector<double> s(static_cast<std::size_t>(n));
        std::vector<int> l(static_cast<std::size_t>(n));
        bool has_pos = false, has_neg = false;
        for (std::int64_t i = 0; i < n; ++i) {
            s[i] = scores[i * k + c];
            l[i] = targets[i * k + c] > 0.5 ? 1 : 0;
            (l[i] ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        m.per_class_auc += binary_auc(s, l);
        m.map += average_precision(s, l);
        ++classes_scored;
    }
    check(classes_scored > 0, ErrorCode::undefined_metric, "no class had both labels present");
    m.per_class_auc /= static_cast<double>(classes_scored);
    m.map /= static_cast<double>(classes_scored);

    std::int64_t clips_scored = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        std::vector<double> s(static_cast<std::size_t>(k));
        std::vector<int> l(static_cast<std::size_t>(k));
        bool has_pos = false, has_neg = false;
        for (std::int64_t c = 0; c < k; ++c) {
            s[c] = scores[i * k + c];
            l[c] = targets[i * k + c] > 0.5 ? 1 : 0;
            (l[c] ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        m.per_clip_auc += binary_auc(s, l);
        ++clips_scored;
    }
    if (clips_scored > 0) m.per_clip_auc /= static_cast<double>(clips_scored);
    return m;
}

}  // namespace scalewave
