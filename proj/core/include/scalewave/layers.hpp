#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "scalewave/group.hpp"
#include "scalewave/ops.hpp"
#include "scalewave/signal_model.hpp"
#include "scalewave/spline.hpp"
#include "scalewave/tape.hpp"

namespace scalewave {

// Binds persistent parameter tensors to tape leaves, one leaf per tensor per
// tape run. The optimizer harvests gradients through the recorded bindings.
class ParamRegistry {
public:
    explicit ParamRegistry(bool trainable = true) : trainable_(trainable) {}

    Value bind(Tape& tape, Tensor& storage, const std::string& name);

    struct Binding {
        Tensor* storage;
        Value leaf;
        std::string name;
    };
    const std::vector<Binding>& bindings() const { return bindings_; }
    void reset() {
        bindings_.clear();
        by_ptr_.clear();
    }

private:
    bool trainable_;
    std::vector<Binding> bindings_;
    std::unordered_map<const Tensor*, Value> by_ptr_;
};

struct ConvPolicy {
    Padding padding = Padding::zero;  // zero mode pads half the sampled kernel
    std::int64_t stride = 1;
};

// Tape helpers for the scale axis of group maps [B, C, S, T].
Value stack_scales(Tape& tape, const std::vector<Value>& slices);
// Slab of `extent` consecutive scale slots starting at `start`, zero-filled
// past the top of the axis, flattened to [B, C*extent, T].
Value gather_scale_slab(Tape& tape, Value input, std::int64_t start, std::int64_t extent);
// Keeps the lowest `count` scale slots.
Value take_scales(Tape& tape, Value input, std::int64_t count);

// Lifting convolution R -> R x R+: one spatial correlation per grid scale
// with the rescaled, 1/s^d-normalized spline filter. Differentiable
// end-to-end into the spline coefficients.
class LiftingConv {
public:
    LiftingConv(std::int64_t cin, std::int64_t cout, std::int64_t nominal_width, ScaleGrid grid,
                ConvPolicy policy = {}, int spline_order = 2);

    // input [B, Cin, T] -> [B, Cout, S, T']
    Value forward(Tape& tape, Value input, ParamRegistry& params, const std::string& name = "lifting");
    Tensor forward_plain(const Tensor& input) const;

    SplineFilter1D& filter() { return filter_; }
    const SplineFilter1D& filter() const { return filter_; }
    const ScaleGrid& grid() const { return grid_; }
    const ConvPolicy& policy() const { return policy_; }
    void set_policy(const ConvPolicy& p) { policy_ = p; }

    // Thm. 2 normalization contract: 1/s^d with d = 1.
    double applied_front_factor(std::int64_t scale_index) const;
    int front_exponent() const { return d_; }

    std::int64_t max_sampled_width() const;
    Tensor sampled_kernel(std::int64_t scale_index) const;  // version-checked cache
    void invalidate_kernel_cache() { ++params_version_; }
    SplineBasisCache& basis_cache() const { return basis_cache_; }

    std::int64_t param_count() const { return filter_.coefficients.numel(); }

private:
    SplineFilter1D filter_;
    ScaleGrid grid_;
    ConvPolicy policy_;
    int d_ = 1;  // base-space dimension, kept symbolic
    mutable SplineBasisCache basis_cache_;
    mutable std::unordered_map<std::int64_t, std::pair<std::int64_t, Tensor>> kernel_cache_;
    std::int64_t params_version_ = 0;
};

// Group convolution on R x R+ with dyadic (or linear) scale grids. The
// filter's x-axis is dilated by the output scale s_i; its scale-offset axis
// indexes s^{-1} s_bar = base^j upward; out-of-range slots contribute zero.
// Front factor: 1/s^d on exponential grids (the Haar weight cancels against
// the bin width), 1/s^{d+1} with explicit Riemann weights on linear grids.
class GroupConv {
public:
    GroupConv(std::int64_t cin, std::int64_t cout, std::int64_t nominal_width, std::int64_t scale_extent,
              ScaleGrid grid, ConvPolicy policy = {}, int spline_order = 2);

    // input [B, Cin, S, T] -> [B, Cout, S, T']
    Value forward(Tape& tape, Value input, ParamRegistry& params, const std::string& name = "group");
    Tensor forward_plain(const Tensor& input) const;

    SplineFilterGroup& filter() { return filter_; }
    const SplineFilterGroup& filter() const { return filter_; }
    const ScaleGrid& grid() const { return grid_; }
    const ConvPolicy& policy() const { return policy_; }
    void set_policy(const ConvPolicy& p) { policy_ = p; }
    std::int64_t scale_extent() const { return filter_.scale_extent; }

    double applied_front_factor(std::int64_t scale_index) const;
    double offset_weight(std::int64_t scale_index, std::int64_t offset) const;
    int front_exponent() const { return d_; }

    std::int64_t param_count() const { return filter_.coefficients.numel(); }
    void invalidate_kernel_cache() { ++params_version_; }
    SplineBasisCache& basis_cache() const { return basis_cache_; }

private:
    SplineFilterGroup filter_;
    ScaleGrid grid_;
    ConvPolicy policy_;
    int d_ = 1;
    mutable SplineBasisCache basis_cache_;
    std::int64_t params_version_ = 0;
};

// Scale projection R x R+ -> R (pooling over the scale axis).
struct ProjectionLayer {
    PoolKind kind = PoolKind::max;
    Value forward(Tape& tape, Value input) const { return project_scales(tape, input, kind); }
};

// --- Equivariance probes -------------------------------------------------

// Pooling- and stride-free stack: lifting followed by group convolutions,
// with optional pointwise relu between layers (relu commutes with the
// group-map representation entrywise).
class EquivariantStack {
public:
    EquivariantStack(LiftingConv lifting, std::vector<GroupConv> groups, bool relu_between = false);

    // All intermediate maps, one [B, Cout, S, T] tensor per stage.
    std::vector<Tensor> forward_stages(const Tensor& input) const;
    LiftingConv& lifting() { return lifting_; }
    const LiftingConv& lifting() const { return lifting_; }
    std::vector<GroupConv>& groups() { return groups_; }
    const std::vector<GroupConv>& groups() const { return groups_; }
    const ScaleGrid& grid() const { return lifting_.grid(); }
    std::int64_t stages() const { return 1 + static_cast<std::int64_t>(groups_.size()); }
    bool relu_between() const { return relu_between_; }

private:
    LiftingConv lifting_;
    std::vector<GroupConv> groups_;
    bool relu_between_;
};

struct ProbeReport {
    GroupElement g;
    std::vector<double> per_layer_rel_err;  // one entry per stage
    double overall = 0.0;
    std::int64_t compared = 0;
    std::string domain;  // which comparison was run
};

// ||Layer(L_g f) - L_g Layer(f)|| / ||Layer(f)|| over non-truncated slots
// and interior times. Exactness domain: stride-1, circular padding, u
// integer, s a power of the grid base (contract error otherwise).
ProbeReport equivariance_probe(const EquivariantStack& stack, const GroupElement& g, const SignalModel& trial,
                               std::int64_t n);

// Group-layers-only probe on exact group inputs: the input map transforms by
// the discrete Haar-weighted representation, the output is compared on the
// subgrid it maps onto. Exact up to float rounding.
ProbeReport equivariance_probe_group_only(const EquivariantStack& stack, const GroupElement& g,
                                          const Tensor& group_input);

// Subgrid comparison helper shared by the probes: reads
// transformed[..., i, (b^k t' + u) mod T] against reference[..., i - k, t']
// over valid slots [slot_lo, slot_hi) and t' in [t_lo, t_hi).
double scale_action_rel_err(const Tensor& transformed, const Tensor& reference, int k, std::int64_t bk,
                            std::int64_t u, std::int64_t slot_lo, std::int64_t slot_hi, std::int64_t t_lo,
                            std::int64_t t_hi, std::int64_t* compared = nullptr);

}  // namespace scalewave
