#include "scalewave/optim.hpp"

#include <cmath>

#include "scalewave/precision.hpp"

namespace scalewave {

Optimizer::Optimizer(OptimizerConfig cfg, std::vector<Tensor*> params) : cfg_(cfg), params_(std::move(params)) {
    m1_.reserve(params_.size());
    m2_.reserve(params_.size());
    for (Tensor* p : params_) {
        m1_.emplace_back(p->shape());
        if (cfg_.kind == OptimizerConfig::Kind::adam) m2_.emplace_back(p->shape());
    }
}

void Optimizer::step(const std::vector<Tensor>& grads) {
    check_shape(grads.size() == params_.size(), "optimizer gradient list misaligned with parameters");
    ++steps_;
    const Precision prec = default_precision();

    if (cfg_.kind == OptimizerConfig::Kind::adam) {
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor& p = *params_[i];
            const Tensor& g = grads[i];
            if (g.numel() == 0) continue;
            check_shape(g.same_shape(p), "gradient shape mismatch for parameter " + std::to_string(i));
            for (std::int64_t j = 0; j < p.numel(); ++j) {
                double grad = g[j] + cfg_.weight_decay * p[j];
                m1_[i][j] = cfg_.beta1 * m1_[i][j] + (1.0 - cfg_.beta1) * grad;
                m2_[i][j] = cfg_.beta2 * m2_[i][j] + (1.0 - cfg_.beta2) * grad * grad;
                const double mhat = m1_[i][j] / bc1;
                const double vhat = m2_[i][j] / bc2;
                p[j] = round_to_precision(p[j] - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon), prec);
            }
        }
        return;
    }

    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = *params_[i];
        const Tensor& g = grads[i];
        if (g.numel() == 0) continue;
        check_shape(g.same_shape(p), "gradient shape mismatch for parameter " + std::to_string(i));
        for (std::int64_t j = 0; j < p.numel(); ++j) {
            const double grad = g[j] + cfg_.weight_decay * p[j];
            m1_[i][j] = cfg_.momentum * m1_[i][j] + grad;
            const double update = cfg_.nesterov ? grad + cfg_.momentum * m1_[i][j] : m1_[i][j];
            p[j] = round_to_precision(p[j] - cfg_.lr * update, prec);
        }
    }
}

}  // namespace scalewave
