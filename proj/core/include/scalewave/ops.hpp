#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "scalewave/kernels.hpp"
#include "scalewave/tape.hpp"

namespace scalewave {

// Elementwise / shape ops
Value add(Tape& tape, Value a, Value b);
Value mul(Tape& tape, Value a, Value b);
Value scale(Tape& tape, Value a, double c);
Value relu(Tape& tape, Value a);
Value reshape(Tape& tape, Value a, Shape new_shape);

// Reductions
Value reduce_sum(Tape& tape, Value a);
Value reduce_mean(Tape& tape, Value a);
// Mean over the trailing (time) axis: [..., T] -> [...].
Value mean_over_last(Tape& tape, Value a);

// Dense layer: x [B, in] * w [out, in] + b [out] -> [B, out].
Value dense(Tape& tape, Value x, Value w, Value b);

// Cross-correlation, deep-learning convention. Circular mode uses centered
// taps (offset tau - k/2) so odd kernels align with the time axis.
Value conv1d(Tape& tape, Value input, Value kernel, const Conv1dSpec& spec);

// Max pooling along the trailing axis; argmax routes the gradient.
Value maxpool1d(Tape& tape, Value input, std::int64_t window, std::int64_t stride);

// Scale-axis projection for group feature maps [B, C, S, T] -> [B, C, T].
enum class PoolKind { max, mean };
Value project_scales(Tape& tape, Value input, PoolKind kind);

// Inverted dropout; identity in eval mode.
Value dropout(Tape& tape, Value input, double rate, std::mt19937_64& rng, bool train);

// Batch normalization over batch and all trailing axes per channel
// (axis 1). Running statistics live outside the tape.
struct BatchNormState {
    Tensor running_mean;  // [C]
    Tensor running_var;   // [C]
    std::int64_t steps = 0;
    double momentum = 0.1;
    double epsilon = 1e-5;

    explicit BatchNormState(std::int64_t channels = 0, double momentum_ = 0.1, double epsilon_ = 1e-5)
        : running_mean(Shape{channels}, 0.0),
          running_var(Shape{channels}, 1.0),
          momentum(momentum_),
          epsilon(epsilon_) {}
};
Value batchnorm1d(Tape& tape, Value input, Value gamma, Value beta, BatchNormState& state, bool train);

// Fused softmax + cross-entropy (log-sum-exp stabilized); mean over batch.
Value softmax_cross_entropy(Tape& tape, Value logits, const std::vector<std::int64_t>& labels);

// Fused sigmoid + binary cross-entropy; mean over all logits.
Value sigmoid_binary_cross_entropy(Tape& tape, Value logits, const Tensor& targets);

// Softmax probabilities of a logits tensor [B, K] (plain math, no tape).
Tensor softmax_rows(const Tensor& logits);

}  // namespace scalewave
