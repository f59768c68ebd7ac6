#include "scalewave/layers.hpp"

#include <algorithm>
#include <cmath>

namespace scalewave {

Value ParamRegistry::bind(Tape& tape, Tensor& storage, const std::string& name) {
    auto it = by_ptr_.find(&storage);
    if (it != by_ptr_.end()) return it->second;
    Value v = tape.leaf(storage, trainable_, name);
    by_ptr_.emplace(&storage, v);
    bindings_.push_back(Binding{&storage, v, name});
    return v;
}

Value stack_scales(Tape& tape, const std::vector<Value>& slices) {
    check_contract(!slices.empty(), "stack_scales needs at least one slice");
    const Tensor& first = tape.value(slices.front());
    check_shape(first.rank() == 3, "stack_scales slices must be [B, C, T]");
    const std::int64_t B = first.dim(0), C = first.dim(1), T = first.dim(2);
    const std::int64_t S = static_cast<std::int64_t>(slices.size());
    for (const Value& v : slices) {
        check_shape(tape.value(v).shape() == first.shape(), "stack_scales slices must share a shape");
    }
    Tensor out(Shape{B, C, S, T});
    for (std::int64_t i = 0; i < S; ++i) {
        const Tensor& sl = tape.value(slices[i]);
        for (std::int64_t b = 0; b < B; ++b)
            for (std::int64_t c = 0; c < C; ++c)
                for (std::int64_t t = 0; t < T; ++t) out[((b * C + c) * S + i) * T + t] = sl[(b * C + c) * T + t];
    }
    std::vector<Value> inputs = slices;
    return tape.emit("stack_scales", inputs, std::move(out), [slices, B, C, S, T](Tape& t, const Tape::Node& n) {
        for (std::int64_t i = 0; i < S; ++i) {
            if (!t.node(slices[i]).requires_grad) continue;
            Tensor g(Shape{B, C, T});
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t c = 0; c < C; ++c)
                    for (std::int64_t tt = 0; tt < T; ++tt)
                        g[(b * C + c) * T + tt] = n.grad[((b * C + c) * S + i) * T + tt];
            t.accumulate_grad(slices[i], g);
        }
    });
}

Value gather_scale_slab(Tape& tape, Value input, std::int64_t start, std::int64_t extent) {
    const Tensor& xv = tape.value(input);
    check_shape(xv.rank() == 4, "gather_scale_slab expects [B, C, S, T]");
    const std::int64_t B = xv.dim(0), C = xv.dim(1), S = xv.dim(2), T = xv.dim(3);
    check_contract(start >= 0 && start < S && extent >= 1, "scale slab out of range");
    Tensor out(Shape{B, C * extent, T});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t j = 0; j < extent; ++j) {
                const std::int64_t src = start + j;
                if (src >= S) continue;  // zero scale boundary
                for (std::int64_t t = 0; t < T; ++t)
                    out[(b * C * extent + c * extent + j) * T + t] = xv[((b * C + c) * S + src) * T + t];
            }
    return tape.emit("gather_scale_slab", {input}, std::move(out),
                     [input, start, extent, B, C, S, T](Tape& t, const Tape::Node& n) {
                         Tensor g(Shape{B, C, S, T});
                         for (std::int64_t b = 0; b < B; ++b)
                             for (std::int64_t c = 0; c < C; ++c)
                                 for (std::int64_t j = 0; j < extent; ++j) {
                                     const std::int64_t src = start + j;
                                     if (src >= S) continue;
                                     for (std::int64_t tt = 0; tt < T; ++tt)
                                         g[((b * C + c) * S + src) * T + tt] +=
                                             n.grad[(b * C * extent + c * extent + j) * T + tt];
                                 }
                         t.accumulate_grad(input, g);
                     });
}

Value take_scales(Tape& tape, Value input, std::int64_t count) {
    const Tensor& xv = tape.value(input);
    check_shape(xv.rank() == 4, "take_scales expects [B, C, S, T]");
    const std::int64_t B = xv.dim(0), C = xv.dim(1), S = xv.dim(2), T = xv.dim(3);
    check_contract(count >= 1 && count <= S, "take_scales count out of range");
    if (count == S) return input;
    Tensor out(Shape{B, C, count, T});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t i = 0; i < count; ++i)
                for (std::int64_t t = 0; t < T; ++t)
                    out[((b * C + c) * count + i) * T + t] = xv[((b * C + c) * S + i) * T + t];
    return tape.emit("take_scales", {input}, std::move(out), [input, B, C, S, T, count](Tape& t, const Tape::Node& n) {
        Tensor g(Shape{B, C, S, T});
        for (std::int64_t b = 0; b < B; ++b)
            for (std::int64_t c = 0; c < C; ++c)
                for (std::int64_t i = 0; i < count; ++i)
                    for (std::int64_t tt = 0; tt < T; ++tt)
                        g[((b * C + c) * S + i) * T + tt] = n.grad[((b * C + c) * count + i) * T + tt];
        t.accumulate_grad(input, g);
    });
}

// --- LiftingConv ----------------------------------------------------------

LiftingConv::LiftingConv(std::int64_t cin, std::int64_t cout, std::int64_t nominal_width, ScaleGrid grid,
                         ConvPolicy policy, int spline_order)
    : filter_(cout, cin, nominal_width, spline_order),
      grid_(std::move(grid)),
      policy_(policy),
      basis_cache_(filter_.geometry) {}

double LiftingConv::applied_front_factor(std::int64_t scale_index) const {
    return 1.0 / std::pow(grid_.scale(scale_index), d_);
}

std::int64_t LiftingConv::max_sampled_width() const {
    return 2 * sampled_half_width(grid_.scale(grid_.size() - 1), filter_.geometry.nominal_width) + 1;
}

Tensor LiftingConv::sampled_kernel(std::int64_t scale_index) const {
    auto it = kernel_cache_.find(scale_index);
    if (it != kernel_cache_.end() && it->second.first == params_version_) {
        return it->second.second;  // no stale reads: version-keyed
    }
    Tensor taps = sample_filter(filter_, grid_.scale(scale_index));
    kernel_cache_[scale_index] = {params_version_, taps};
    return taps;
}

Value LiftingConv::forward(Tape& tape, Value input, ParamRegistry& params, const std::string& name) {
    const Tensor& xv = tape.value(input);
    check_shape(xv.rank() == 3, "lifting input must be [B, Cin, T]");
    check_shape(xv.dim(1) == filter_.cin(), "lifting input channels mismatch");
    const std::int64_t T = xv.dim(2);
    const std::int64_t wmax = max_sampled_width();
    if (policy_.padding == Padding::zero) {
        check_contract(wmax <= T + 2 * (wmax / 2),
                       "top-scale kernel wider than padded input; shrink the grid to the sensible-scale interval");
    } else {
        check_contract(policy_.stride == 1, "circular lifting requires stride 1");
    }

    Value coeffs = params.bind(tape, filter_.coefficients, name + ".spline_coeffs");
    std::vector<Value> slices;
    slices.reserve(grid_.size());
    for (std::int64_t i = 0; i < grid_.size(); ++i) {
        const double s = grid_.scale(i);
        Value taps = spline_sample_op(tape, coeffs, basis_cache_.at_scale(s));
        taps = scale(tape, taps, applied_front_factor(i));
        Conv1dSpec spec;
        spec.stride = policy_.stride;
        spec.padding = policy_.padding;
        const std::int64_t w = tape.value(taps).dim(-1);
        spec.pad = policy_.padding == Padding::zero ? w / 2 : 0;
        slices.push_back(conv1d(tape, input, taps, spec));
    }
    return stack_scales(tape, slices);
}

Tensor LiftingConv::forward_plain(const Tensor& input) const {
    Tape tape;
    ParamRegistry params(false);
    Value in = tape.leaf(input, false);
    Value out = const_cast<LiftingConv*>(this)->forward(tape, in, params);
    return tape.value(out);
}

// --- GroupConv ------------------------------------------------------------

GroupConv::GroupConv(std::int64_t cin, std::int64_t cout, std::int64_t nominal_width, std::int64_t scale_extent,
                     ScaleGrid grid, ConvPolicy policy, int spline_order)
    : filter_(cout, cin, nominal_width, scale_extent, spline_order),
      grid_(std::move(grid)),
      policy_(policy),
      basis_cache_(filter_.geometry) {}

double GroupConv::applied_front_factor(std::int64_t scale_index) const {
    const double s = grid_.scale(scale_index);
    // Exponential grid: Haar bin width cancels one power of s.
    return grid_.is_exponential() ? 1.0 / std::pow(s, d_) : 1.0 / std::pow(s, d_ + 1);
}

double GroupConv::offset_weight(std::int64_t scale_index, std::int64_t offset) const {
    const std::int64_t slot = scale_index + offset;
    if (slot < 0 || slot >= grid_.size()) return 0.0;
    return grid_.is_exponential() ? 1.0 : grid_.haar_weights()[slot];
}

Value GroupConv::forward(Tape& tape, Value input, ParamRegistry& params, const std::string& name) {
    const Tensor& xv = tape.value(input);
    check_shape(xv.rank() == 4, "group conv input must be [B, Cin, S, T]");
    check_shape(xv.dim(1) == filter_.cin(), "group conv input channels mismatch");
    check_shape(xv.dim(2) == grid_.size(), "group conv input scale axis does not match the declared grid");
    if (policy_.padding == Padding::circular) {
        check_contract(policy_.stride == 1, "circular group conv requires stride 1");
    }

    const std::int64_t S = grid_.size();
    const std::int64_t Ks = filter_.scale_extent;
    Value coeffs = params.bind(tape, filter_.coefficients, name + ".spline_coeffs");

    std::vector<Value> slices;
    slices.reserve(S);
    for (std::int64_t i = 0; i < S; ++i) {
        const double s = grid_.scale(i);
        Value slab = gather_scale_slab(tape, input, i, Ks);  // [B, Cin*Ks, T]
        Value taps = spline_sample_op(tape, coeffs, basis_cache_.at_scale(s));  // [Cout, Cin, Ks, W]
        const Tensor& tv = tape.value(taps);
        const std::int64_t W = tv.dim(-1);
        taps = reshape(tape, taps, Shape{filter_.cout(), filter_.cin() * Ks, W});
        if (!grid_.is_exponential()) {
            // Linear-grid mode: explicit Riemann weights per scale offset.
            Tensor w(Shape{filter_.cout(), filter_.cin() * Ks, W});
            for (std::int64_t o = 0; o < filter_.cout(); ++o)
                for (std::int64_t c = 0; c < filter_.cin(); ++c)
                    for (std::int64_t j = 0; j < Ks; ++j) {
                        const double wj = offset_weight(i, j);
                        for (std::int64_t z = 0; z < W; ++z)
                            w[(o * filter_.cin() * Ks + c * Ks + j) * W + z] = wj;
                    }
            taps = mul(tape, taps, tape.leaf(std::move(w), false));
        }
        taps = scale(tape, taps, applied_front_factor(i));
        Conv1dSpec spec;
        spec.stride = policy_.stride;
        spec.padding = policy_.padding;
        spec.pad = policy_.padding == Padding::zero ? W / 2 : 0;
        slices.push_back(conv1d(tape, slab, taps, spec));
    }
    return stack_scales(tape, slices);
}

Tensor GroupConv::forward_plain(const Tensor& input) const {
    Tape tape;
    ParamRegistry params(false);
    Value in = tape.leaf(input, false);
    Value out = const_cast<GroupConv*>(this)->forward(tape, in, params);
    return tape.value(out);
}

// --- Probes ----------------------------------------------------------------

EquivariantStack::EquivariantStack(LiftingConv lifting, std::vector<GroupConv> groups, bool relu_between)
    : lifting_(std::move(lifting)), groups_(std::move(groups)), relu_between_(relu_between) {
    for (const auto& g : groups_) {
        check_contract(g.grid() == lifting_.grid(), "stack layers must share one scale grid");
    }
}

std::vector<Tensor> EquivariantStack::forward_stages(const Tensor& input) const {
    std::vector<Tensor> stages;
    Tensor cur = lifting_.forward_plain(input);
    stages.push_back(cur);
    for (const auto& g : groups_) {
        if (relu_between_) {
            Tensor r(cur.shape());
            for (std::int64_t i = 0; i < cur.numel(); ++i) r[i] = cur[i] > 0.0 ? cur[i] : 0.0;
            cur = std::move(r);
        }
        cur = g.forward_plain(cur);
        stages.push_back(cur);
    }
    return stages;
}

double scale_action_rel_err(const Tensor& transformed, const Tensor& reference, int k, std::int64_t bk,
                            std::int64_t u, std::int64_t slot_lo, std::int64_t slot_hi, std::int64_t t_lo,
                            std::int64_t t_hi, std::int64_t* compared) {
    check_shape(transformed.shape() == reference.shape(), "probe maps must share a shape");
    const std::int64_t S = transformed.dim(-2);
    const std::int64_t T = transformed.dim(-1);
    const std::int64_t outer = transformed.numel() / (S * T);
    // || Layer(L_g f) - L_g Layer(f) || / || Layer(f) || over the compared
    // entries (Frobenius norms).
    double diff_sq = 0.0, ref_sq = 0.0;
    std::int64_t count = 0;
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t i = std::max<std::int64_t>(slot_lo, k); i < slot_hi; ++i) {
            if (i - k < 0 || i - k >= S) continue;
            for (std::int64_t tp = t_lo; tp < t_hi; ++tp) {
                std::int64_t t = (bk * tp + u) % T;
                if (t < 0) t += T;
                const double a = transformed[(o * S + i) * T + t];
                const double b = reference[(o * S + i - k) * T + tp];
                diff_sq += (a - b) * (a - b);
                ref_sq += b * b;
                ++count;
            }
        }
    }
    if (compared) *compared = count;
    return count == 0 ? 0.0 : std::sqrt(diff_sq / std::max(ref_sq, 1e-300));
}

namespace {

Tensor rotate_time(const Tensor& x, std::int64_t t0) {
    const std::int64_t T = x.dim(-1);
    const std::int64_t rows = x.numel() / T;
    Tensor out(x.shape());
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t t = 0; t < T; ++t) {
            std::int64_t src = (t - t0) % T;
            if (src < 0) src += T;
            out[r * T + t] = x[r * T + src];
        }
    return out;
}

void check_probe_domain(const EquivariantStack& stack) {
    check_contract(stack.lifting().policy().stride == 1 && stack.lifting().policy().padding == Padding::circular,
                   "equivariance probes are exact only for stride-1 circular stacks (no pooling)");
    for (const auto& g : stack.groups()) {
        check_contract(g.policy().stride == 1 && g.policy().padding == Padding::circular,
                       "equivariance probes are exact only for stride-1 circular stacks (no pooling)");
    }
}

}  // namespace

ProbeReport equivariance_probe(const EquivariantStack& stack, const GroupElement& g, const SignalModel& trial,
                               std::int64_t n) {
    check_probe_domain(stack);
    const double base = stack.grid().base();
    const double u_round = std::round(g.u);
    check_contract(std::fabs(g.u - u_round) <= 1e-9, "probe translation must be integer samples");
    const auto k_opt = stack.grid().log_base_of(g.s);
    check_contract(k_opt.has_value(), "probe scale must be a power of the grid base");
    const int k = *k_opt;
    check_contract(k >= 0, "probe dilations only (s >= 1); compressions fall off the sensible-scale interval");
    const std::int64_t u = static_cast<std::int64_t>(u_round);
    const std::int64_t bk = static_cast<std::int64_t>(std::llround(std::pow(base, k)));

    Signal f = sample_signal(trial, n);
    Tensor input = f.samples.reshaped(Shape{1, 1, n});

    ProbeReport report;
    report.g = g;

    if (k == 0) {
        // Integer translations are exact through the whole stack at once.
        report.domain = "translation (full grid)";
        SignalModel trans_model = left_regular_rep_signal(g, trial);
        Tensor input_g = sample_signal(trans_model, n).samples.reshaped(Shape{1, 1, n});
        std::vector<Tensor> ref = stack.forward_stages(input);
        std::vector<Tensor> got = stack.forward_stages(input_g);
        for (std::size_t stage = 0; stage < ref.size(); ++stage) {
            Tensor expect = rotate_time(ref[stage], u);
            double diff_sq = 0.0, ref_sq = 0.0;
            for (std::int64_t i = 0; i < expect.numel(); ++i) {
                const double d = got[stage][i] - expect[i];
                diff_sq += d * d;
                ref_sq += expect[i] * expect[i];
            }
            report.per_layer_rel_err.push_back(std::sqrt(diff_sq / std::max(ref_sq, 1e-300)));
            report.overall = std::max(report.overall, report.per_layer_rel_err.back());
            report.compared += expect.numel();
        }
        return report;
    }

    // Scale actions: each layer is probed on its own exactness domain. The
    // lifting consumes the analytic dilation of the trial signal and its
    // defect is discretization-limited; each group layer consumes the exact
    // discrete dilation of its reference input and is index-exact. Composed
    // in-between samples are not on any layer's exactness domain, which is
    // why the lifting discretization dominates the report.
    report.domain = "per-stage scale action (subgrid interior)";
    const std::int64_t S = stack.grid().size();
    const std::int64_t M = n / bk;

    {
        SignalModel trans_model = left_regular_rep_signal(g, trial);
        Tensor input_g = sample_signal(trans_model, n).samples.reshaped(Shape{1, 1, n});
        Tensor ref0 = stack.lifting().forward_plain(input);
        Tensor got0 = stack.lifting().forward_plain(input_g);
        const std::int64_t margin = std::max<std::int64_t>(M / 10, 1);
        std::int64_t compared = 0;
        // Outermost scale rows excluded on each end of both maps.
        const double err =
            scale_action_rel_err(got0, ref0, k, bk, u, k + 1, S - 1, margin, M - margin, &compared);
        report.per_layer_rel_err.push_back(err);
        report.overall = std::max(report.overall, err);
        report.compared += compared;

        Tensor ref_in = std::move(ref0);
        for (const auto& gc : stack.groups()) {
            if (stack.relu_between()) {
                for (std::int64_t i = 0; i < ref_in.numel(); ++i) ref_in[i] = ref_in[i] > 0 ? ref_in[i] : 0;
            }
            RepResult rep = left_regular_rep_tensor(g, ref_in, stack.grid().base(), RepWeight::haar);
            Tensor ref_out = gc.forward_plain(ref_in);
            Tensor got_out = gc.forward_plain(rep.data);
            const std::int64_t Ks = gc.scale_extent();
            const std::int64_t reach = sampled_half_width(gc.grid().scale(gc.grid().size() - 1),
                                                          gc.filter().geometry.nominal_width) /
                                           bk +
                                       2;
            std::int64_t c2 = 0;
            const double gerr = scale_action_rel_err(got_out, ref_out, k, bk, u, k,
                                                     std::max<std::int64_t>(S - (Ks - 1) - k, k + 1), reach,
                                                     std::max<std::int64_t>(M - reach, reach + 1), &c2);
            report.per_layer_rel_err.push_back(gerr);
            report.overall = std::max(report.overall, gerr);
            report.compared += c2;
            ref_in = std::move(ref_out);
        }
    }
    return report;
}

ProbeReport equivariance_probe_group_only(const EquivariantStack& stack, const GroupElement& g,
                                          const Tensor& group_input) {
    check_probe_domain(stack);
    const double base = stack.grid().base();
    const auto k_opt = stack.grid().log_base_of(g.s);
    check_contract(k_opt.has_value(), "probe scale must be a power of the grid base");
    const int k = *k_opt;
    check_contract(k >= 0, "probe dilations only (s >= 1)");
    const double u_round = std::round(g.u);
    check_contract(std::fabs(g.u - u_round) <= 1e-9, "probe translation must be integer samples");
    const std::int64_t u = static_cast<std::int64_t>(u_round);
    const std::int64_t bk = static_cast<std::int64_t>(std::llround(std::pow(base, k)));

    ProbeReport report;
    report.g = g;
    report.domain = "group layers on exact group inputs (subgrid, per layer)";
    const std::int64_t S = group_input.dim(-2);
    const std::int64_t T = group_input.dim(-1);
    const std::int64_t M = T / bk;

    // Zero-stuffed dilation only survives one dense-kernel layer, so every
    // layer is probed on its own exact input: the reference activation of
    // the previous stage.
    Tensor ref_in = group_input;
    for (const auto& gc : stack.groups()) {
        RepResult rep = left_regular_rep_tensor(g, ref_in, base, RepWeight::haar);
        Tensor ref_out = gc.forward_plain(ref_in);
        Tensor got_out = gc.forward_plain(rep.data);

        const std::int64_t Ks = gc.scale_extent();
        const std::int64_t reach = sampled_half_width(gc.grid().scale(gc.grid().size() - 1),
                                                      gc.filter().geometry.nominal_width) /
                                       std::max<std::int64_t>(bk, 1) +
                                   2;
        const std::int64_t slot_hi = S - (Ks - 1) - k;
        std::int64_t compared = 0;
        const double err =
            scale_action_rel_err(got_out, ref_out, k, bk, u, k, std::max<std::int64_t>(slot_hi, k + 1), reach,
                                 std::max<std::int64_t>(M - reach, reach + 1), &compared);
        report.per_layer_rel_err.push_back(err);
        report.overall = std::max(report.overall, err);
        report.compared += compared;
        ref_in = std::move(ref_out);
    }
    return report;
}

}  // namespace scalewave
