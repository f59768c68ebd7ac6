#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scalewave/tensor.hpp"

namespace scalewave {

struct OptimizerConfig {
    enum class Kind { adam, sgd };
    Kind kind = Kind::adam;
    double lr = 1e-3;
    double weight_decay = 0.0;  // coupled L2
    // adam
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // sgd
    double momentum = 0.9;
    bool nesterov = true;
};

// Bias-corrected Adam and SGD with Nesterov momentum over a fixed parameter
// list. Weight decay is coupled L2 (added to the gradient), matching the
// torch convention of the cited baselines.
class Optimizer {
public:
    Optimizer(OptimizerConfig cfg, std::vector<Tensor*> params);

    // grads must align with the parameter list; missing gradients are zero.
    void step(const std::vector<Tensor>& grads);

    double lr() const { return cfg_.lr; }
    void set_lr(double lr) { cfg_.lr = lr; }
    std::int64_t step_count() const { return steps_; }
    const OptimizerConfig& config() const { return cfg_; }

    std::vector<Tensor>& moments1() { return m1_; }
    std::vector<Tensor>& moments2() { return m2_; }
    void set_step_count(std::int64_t steps) { steps_ = steps; }

private:
    OptimizerConfig cfg_;
    std::vector<Tensor*> params_;
    std::vector<Tensor> m1_;  // adam first moment / sgd velocity
    std::vector<Tensor> m2_;  // adam second moment
    std::int64_t steps_ = 0;
};

}  // namespace scalewave
