#pragma once

#include <cstdint>
#include <vector>

#include "scalewave/tensor.hpp"

namespace scalewave {

enum class Padding { zero, circular };

struct Conv1dSpec {
    std::int64_t stride = 1;
    Padding padding = Padding::zero;
    std::int64_t pad = 0;  // per side, zero padding only
};

// Cross-correlation output length. Circular keeps the input length and is
// restricted to stride 1.
std::int64_t conv1d_out_len(std::int64_t time, std::int64_t k, const Conv1dSpec& spec);

// out[b,o,t] = sum_{c,tau} in[b,c,stride*t+tau-pad] * kernel[o,c,tau]
Tensor conv1d_forward(const Tensor& input, const Tensor& kernel, const Conv1dSpec& spec);
Tensor conv1d_backward_input(const Tensor& grad_out, const Tensor& kernel, const Conv1dSpec& spec,
                             std::int64_t time_in);
Tensor conv1d_backward_kernel(const Tensor& grad_out, const Tensor& input, const Conv1dSpec& spec,
                              std::int64_t k);

// Single-channel circular cross-correlation with a tap vector centered at 0:
// out[t] = sum_z signal[(t+z) mod N] * taps[z + half_width]. Shared by the
// transform suite and layer code.
std::vector<double> circular_correlate_centered(const std::vector<double>& signal,
                                                const std::vector<double>& taps);

// Max pooling along the last axis; rows = numel / time. Saves flat argmax
// offsets (within the last axis) for the backward pass. Ties resolve to the
// earliest index.
struct MaxPoolResult {
    Tensor output;
    std::vector<std::int64_t> argmax;  // one entry per output element
};
MaxPoolResult maxpool1d_forward(const Tensor& input, std::int64_t window, std::int64_t stride);

}  // namespace scalewave
