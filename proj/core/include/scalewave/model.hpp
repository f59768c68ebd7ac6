#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scalewave/layers.hpp"
#include "scalewave/ops.hpp"

namespace scalewave {

struct LayerSpec {
    enum class Kind {
        lifting,
        group,
        conv,
        pool,
        dense,
        project,
        global_avg_pool,
        global_max_pool,
        dropout,
        flatten,
        residual,
    };

    Kind kind = Kind::conv;
    std::int64_t channels = 0;      // output channels / dense units
    std::int64_t kernel = 0;        // nominal (odd) kernel width
    std::int64_t scale_extent = 1;  // K_s for group layers
    std::int64_t pool = 0;          // pool window (stride == window)
    double rate = 0.0;              // dropout rate
    bool bn_relu = true;            // conv-type layers: batchnorm + relu after
    bool relu = false;              // dense layers
    std::vector<LayerSpec> block;   // residual sublayers (group specs)

    static LayerSpec Lifting(std::int64_t kernel, std::int64_t channels);
    static LayerSpec Group(std::int64_t kernel, std::int64_t channels, std::int64_t scales);
    static LayerSpec Conv(std::int64_t kernel, std::int64_t channels);
    static LayerSpec Pool(std::int64_t window);
    static LayerSpec Dense(std::int64_t units, bool relu = false);
    static LayerSpec Project(PoolKind kind = PoolKind::max);
    static LayerSpec GlobalAvgPool();
    static LayerSpec GlobalMaxPool();
    static LayerSpec Dropout(double rate);
    static LayerSpec Flatten();
    static LayerSpec Residual(std::vector<LayerSpec> sublayers);

    PoolKind project_kind = PoolKind::max;
};

enum class HeadKind { softmax, sigmoid_multilabel };

struct ArchitectureConfig {
    std::string name = "custom";
    std::int64_t input_channels = 1;
    std::int64_t input_length = 0;  // 0 = flexible (desk presets)
    double grid_base = 2.0;
    int grid_j_min = 0;
    int grid_j_max = 8;
    bool scale_heuristic = true;  // drop top scales as time pooling accumulates
    double lambda = 0.0;          // wavelet penalty weight
    Padding padding = Padding::zero;
    HeadKind head = HeadKind::softmax;
    std::int64_t classes = 10;
    double width_multiplier = 1.0;
    int spline_order = 2;
    double bn_momentum = 0.1;
    double bn_epsilon = 1e-5;
    std::vector<LayerSpec> layers;

    std::int64_t initial_scales() const { return grid_j_max - grid_j_min + 1; }
};

// Throws config_invalid naming the failing field.
void validate_architecture(const ArchitectureConfig& cfg);

struct LayerInfo {
    std::string name;
    std::string detail;
    std::int64_t params = 0;
    std::int64_t out_channels = 0;
    std::int64_t scales = 0;        // scale-axis length after this layer (0 = none)
    std::int64_t kernel_width = 0;  // nominal
};

class Model {
public:
    Model(ArchitectureConfig cfg, std::uint64_t seed);

    // batch [B, C, T] -> logits [B, classes]
    Value forward(Tape& tape, const Tensor& batch, ParamRegistry& params, bool train,
                  std::mt19937_64* dropout_rng = nullptr);

    // Head loss plus lambda * wavelet penalty. With lambda == 0 the penalty
    // branch emits no tape nodes at all.
    Value loss(Tape& tape, Value logits, const std::vector<std::int64_t>& labels, ParamRegistry& params);
    Value loss_multilabel(Tape& tape, Value logits, const Tensor& targets, ParamRegistry& params);

    Tensor predict(const Tensor& batch);  // eval-mode logits
    // Eval-mode input of the final dense head (pooled feature vector).
    Tensor predict_features(const Tensor& batch);

    std::vector<Tensor*> parameters();
    std::vector<std::string> parameter_names() const;
    // Non-learnable state that inference depends on (batchnorm running stats).
    std::vector<std::pair<std::string, Tensor*>> state_tensors();
    std::int64_t count_parameters() const;
    std::vector<LayerInfo> layer_table() const;

    const ArchitectureConfig& config() const { return cfg_; }

    // Mean |filter average| over all spline filters (zero-mean diagnostics).
    double mean_abs_filter_average() const;

    // Stride- and pooling-free stack over the first lifting + group layers,
    // sharing this model's coefficients, circular padding.
    EquivariantStack probe_stack(int max_group_layers = 2) const;

    void invalidate_kernel_caches();

    std::int64_t learnable_layer_count() const;

private:
    struct Built {
        LayerSpec spec;
        std::string name;
        std::unique_ptr<LiftingConv> lifting;
        std::unique_ptr<GroupConv> group;
        std::vector<std::unique_ptr<GroupConv>> res_groups;
        std::vector<Tensor> res_conv;  // plain-conv residual kernels
        Tensor conv_kernel;            // [cout, cin, k]
        Tensor dense_w, dense_b;
        Tensor bn_gamma, bn_beta;
        std::vector<Tensor> res_bn_gamma, res_bn_beta;
        std::vector<BatchNormState> res_bn_state;
        BatchNormState bn_state;
        bool has_bn = false;
        std::int64_t scales_after = 0;
        std::int64_t take_scales_to = 0;  // >0: slice the scale axis before this layer
    };

    Value forward_layer(Tape& tape, Built& built, Value x, ParamRegistry& params, bool train,
                        std::mt19937_64* dropout_rng);
    Value wavelet_penalty(Tape& tape, ParamRegistry& params);

    ArchitectureConfig cfg_;
    ScaleGrid lifting_grid_;
    std::vector<Built> built_;
};

ArchitectureConfig preset_architecture(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace scalewave
