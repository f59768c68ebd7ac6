#pragma once

#include <cstdint>
#include <vector>

#include "scalewave/tensor.hpp"

namespace scalewave {

double accuracy(const Tensor& logits, const std::vector<std::int64_t>& labels);

// Rank-based ROC AUC (equivalent to trapezoidal integration of the ROC
// curve), tie-aware via average ranks. Throws undefined_metric when only one
// class is present.
double binary_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Average precision: mean of precision@k over the positive hits.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

struct MultilabelMetrics {
    double per_class_auc = 0.0;
    double per_clip_auc = 0.0;
    double map = 0.0;  // mean over classes of average precision
};

// scores and targets are [N, K]; targets hold 0/1.
MultilabelMetrics evaluate_multilabel(const Tensor& scores, const Tensor& targets);

}  // namespace scalewave
