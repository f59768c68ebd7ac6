#pragma once

// Finite-difference oracle for gradient checks. Lives in test code and stays
// independent of the tape's backward implementations: it only re-evaluates
// forward losses at perturbed inputs.

#include <functional>
#include <vector>

#include "scalewave/tensor.hpp"

namespace swtest {

using scalewave::Tensor;

// f evaluates the scalar loss as a pure function of the input list.
// analytic[i] is the backward-pass gradient for inputs[i]. Central
// differences with the given epsilon; the relative error is normalized by
// the largest gradient magnitude seen for that input.
inline double fd_max_rel_error(const std::function<double(const std::vector<Tensor>&)>& f,
                               std::vector<Tensor> inputs, const std::vector<Tensor>& analytic,
                               double eps = 1e-4) {
    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        Tensor fd(inputs[i].shape());
        for (std::int64_t j = 0; j < inputs[i].numel(); ++j) {
            const double saved = inputs[i][j];
            inputs[i][j] = saved + eps;
            const double up = f(inputs);
            inputs[i][j] = saved - eps;
            const double down = f(inputs);
            inputs[i][j] = saved;
            fd[j] = (up - down) / (2.0 * eps);
        }
        double denom = std::max(fd.max_abs(), analytic[i].max_abs());
        denom = std::max(denom, 1e-10);
        for (std::int64_t j = 0; j < fd.numel(); ++j) {
            worst = std::max(worst, std::fabs(fd[j] - analytic[i][j]) / denom);
        }
    }
    return worst;
}

}  // namespace swtest
