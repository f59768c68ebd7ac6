#include "scalewave/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace scalewave {

LayerSpec LayerSpec::Lifting(std::int64_t kernel, std::int64_t channels) {
    LayerSpec s;
    s.kind = Kind::lifting;
    s.kernel = kernel;
    s.channels = channels;
    return s;
}
LayerSpec LayerSpec::Group(std::int64_t kernel, std::int64_t channels, std::int64_t scales) {
    LayerSpec s;
    s.kind = Kind::group;
    s.kernel = kernel;
    s.channels = channels;
    s.scale_extent = scales;
    return s;
}
LayerSpec LayerSpec::Conv(std::int64_t kernel, std::int64_t channels) {
    LayerSpec s;
    s.kind = Kind::conv;
    s.kernel = kernel;
    s.channels = channels;
    return s;
}
LayerSpec LayerSpec::Pool(std::int64_t window) {
    LayerSpec s;
    s.kind = Kind::pool;
    s.pool = window;
    return s;
}
LayerSpec LayerSpec::Dense(std::int64_t units, bool relu) {
    LayerSpec s;
    s.kind = Kind::dense;
    s.channels = units;
    s.relu = relu;
    return s;
}
LayerSpec LayerSpec::Project(PoolKind kind) {
    LayerSpec s;
    s.kind = Kind::project;
    s.project_kind = kind;
    return s;
}
LayerSpec LayerSpec::GlobalAvgPool() {
    LayerSpec s;
    s.kind = Kind::global_avg_pool;
    return s;
}
LayerSpec LayerSpec::GlobalMaxPool() {
    LayerSpec s;
    s.kind = Kind::global_max_pool;
    return s;
}
LayerSpec LayerSpec::Dropout(double rate) {
    LayerSpec s;
    s.kind = Kind::dropout;
    s.rate = rate;
    return s;
}
LayerSpec LayerSpec::Flatten() {
    LayerSpec s;
    s.kind = Kind::flatten;
    return s;
}
LayerSpec LayerSpec::Residual(std::vector<LayerSpec> sublayers) {
    LayerSpec s;
    s.kind = Kind::residual;
    s.block = std::move(sublayers);
    return s;
}

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
    fail(ErrorCode::config_invalid, "architecture field '" + field + "': " + why);
}

bool is_learnable_kind(LayerSpec::Kind k) {
    return k == LayerSpec::Kind::lifting || k == LayerSpec::Kind::group || k == LayerSpec::Kind::conv ||
           k == LayerSpec::Kind::dense;
}

}  // namespace

void validate_architecture(const ArchitectureConfig& cfg) {
    if (cfg.width_multiplier <= 0.0) invalid("width_multiplier", "must be > 0");
    if (cfg.grid_base <= 1.0) invalid("grid_base", "must be > 1");
    if (cfg.grid_j_min > cfg.grid_j_max) invalid("grid_j_min/j_max", "j_min must be <= j_max");
    if (cfg.classes < 1) invalid("classes", "must be >= 1");
    if (cfg.layers.empty()) invalid("layers", "at least one layer required");
    if (cfg.lambda < 0.0) invalid("lambda", "must be >= 0");

    bool seen_learnable = false;
    bool has_lifting = false;
    bool seen_project = false;
    int project_count = 0;

    auto check_kernel = [](const LayerSpec& l, const char* where) {
        if (l.kernel < 1) invalid(where, "kernel width must be >= 1");
        if (l.kernel % 2 == 0) invalid(where, "even kernel widths are rejected, got " + std::to_string(l.kernel));
        if (l.channels < 1) invalid(where, "channels must be >= 1");
    };

    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const LayerSpec& l = cfg.layers[i];
        const std::string where = "layers[" + std::to_string(i) + "]";
        switch (l.kind) {
            case LayerSpec::Kind::lifting:
                check_kernel(l, where.c_str());
                if (seen_learnable) invalid(where, "lifting must be the first learnable layer");
                has_lifting = true;
                seen_learnable = true;
                break;
            case LayerSpec::Kind::conv:
                check_kernel(l, where.c_str());
                if (!seen_learnable && has_lifting) invalid(where, "conv cannot precede lifting");
                if (has_lifting && !seen_project) invalid(where, "plain conv inside the group stage (project first)");
                seen_learnable = true;
                break;
            case LayerSpec::Kind::group:
                check_kernel(l, where.c_str());
                if (!has_lifting) invalid(where, "group conv requires a preceding lifting layer");
                if (seen_project) invalid(where, "group conv after projection");
                if (l.scale_extent < 1) invalid(where, "scale extent must be >= 1");
                seen_learnable = true;
                break;
            case LayerSpec::Kind::residual:
                if (l.block.size() != 2) invalid(where, "residual block needs exactly two sublayers");
                for (const auto& sub : l.block) {
                    if (sub.kind != LayerSpec::Kind::group && sub.kind != LayerSpec::Kind::conv)
                        invalid(where, "residual sublayers must be group or conv");
                    if (sub.kind != l.block[0].kind) invalid(where, "residual sublayers must share a kind");
                    if (sub.kernel % 2 == 0) invalid(where, "even kernel widths are rejected");
                }
                if (l.block[0].channels != l.block[1].channels)
                    invalid(where, "residual sublayers must share a width (identity skip)");
                seen_learnable = true;
                break;
            case LayerSpec::Kind::project:
                if (!has_lifting) invalid(where, "project without a scale axis");
                ++project_count;
                seen_project = true;
                break;
            case LayerSpec::Kind::dense:
                if (l.channels < 1) invalid(where, "dense units must be >= 1");
                if (has_lifting && !seen_project) invalid(where, "dense head before scale projection");
                seen_learnable = true;
                break;
            case LayerSpec::Kind::pool:
                if (l.pool < 2) invalid(where, "pool window must be >= 2");
                break;
            case LayerSpec::Kind::dropout:
                if (l.rate < 0.0 || l.rate >= 1.0) invalid(where, "dropout rate must be in [0, 1)");
                break;
            case LayerSpec::Kind::global_avg_pool:
            case LayerSpec::Kind::global_max_pool:
            case LayerSpec::Kind::flatten:
                break;
        }
    }
    if (has_lifting && project_count != 1) invalid("layers", "W-nets need exactly one projection layer");
    const LayerSpec& last = cfg.layers.back();
    if (last.kind != LayerSpec::Kind::dense || last.channels != cfg.classes)
        invalid("layers", "final layer must be a dense head with units == classes");
}

// --- Build -----------------------------------------------------------------

Model::Model(ArchitectureConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), lifting_grid_(ScaleGrid::exponential(cfg_.grid_base, cfg_.grid_j_min, cfg_.grid_j_max)) {
    // Width multiplier resolves before validation so desk variants stay valid.
    for (auto& l : cfg_.layers) {
        if (l.kind == LayerSpec::Kind::lifting || l.kind == LayerSpec::Kind::group || l.kind == LayerSpec::Kind::conv) {
            l.channels = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(
                                                       static_cast<double>(l.channels) * cfg_.width_multiplier)));
        }
        if (l.kind == LayerSpec::Kind::residual) {
            for (auto& sub : l.block) {
                sub.channels = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(
                                                             static_cast<double>(sub.channels) * cfg_.width_multiplier)));
            }
        }
    }
    validate_architecture(cfg_);

    std::mt19937_64 rng(seed);
    ConvPolicy policy{cfg_.padding, 1};

    std::int64_t ch = cfg_.input_channels;
    const std::int64_t initial_scales = lifting_grid_.size();
    std::int64_t cur_scales = 0;
    ScaleGrid cur_grid = lifting_grid_;
    bool scale_axis = false;
    double pool_product = 1.0;
    double baseline_pool_product = 0.0;  // set when the first group layer is built
    std::int64_t time = cfg_.input_length;  // 0 = flexible

    // With an active zero-mean penalty the filters start on the constraint
    // manifold the penalty maintains.
    const bool zero_mean_init = cfg_.lambda > 0.0;
    auto make_group = [&](const LayerSpec& sub) {
        auto g = std::make_unique<GroupConv>(ch, sub.channels, sub.kernel, sub.scale_extent, cur_grid, policy,
                                             cfg_.spline_order);
        g->filter().init_kaiming(rng);
        if (zero_mean_init) g->filter().project_zero_mean();
        return g;
    };

    for (std::size_t i = 0; i < cfg_.layers.size(); ++i) {
        const LayerSpec& spec = cfg_.layers[i];
        Built b;
        b.spec = spec;
        b.name = "layer" + std::to_string(i);

        switch (spec.kind) {
            case LayerSpec::Kind::lifting: {
                b.lifting = std::make_unique<LiftingConv>(ch, spec.channels, spec.kernel, lifting_grid_, policy,
                                                          cfg_.spline_order);
                b.lifting->filter().init_kaiming(rng);
                if (zero_mean_init) b.lifting->filter().project_zero_mean();
                ch = spec.channels;
                scale_axis = true;
                cur_scales = initial_scales;
                cur_grid = lifting_grid_;
                break;
            }
            case LayerSpec::Kind::group: {
                if (baseline_pool_product == 0.0) baseline_pool_product = std::max(pool_product, 1.0);
                b.group = make_group(spec);
                ch = spec.channels;
                break;
            }
            case LayerSpec::Kind::residual: {
                if (baseline_pool_product == 0.0 && spec.block[0].kind == LayerSpec::Kind::group)
                    baseline_pool_product = std::max(pool_product, 1.0);
                check_contract(spec.block[0].channels == ch,
                               "residual block width must match its input (identity skip)");
                for (const auto& sub : spec.block) {
                    if (sub.kind == LayerSpec::Kind::group) {
                        b.res_groups.push_back(make_group(sub));
                    } else {
                        Tensor k(Shape{sub.channels, ch, sub.kernel});
                        const double bound = std::sqrt(6.0 / static_cast<double>(ch * sub.kernel));
                        k.fill_uniform(rng, -bound, bound);
                        b.res_conv.push_back(std::move(k));
                    }
                }
                for (std::size_t s = 0; s < spec.block.size(); ++s) {
                    b.res_bn_gamma.emplace_back(Shape{spec.block[s].channels}, 1.0);
                    b.res_bn_beta.emplace_back(Shape{spec.block[s].channels}, 0.0);
                    b.res_bn_state.emplace_back(spec.block[s].channels, cfg_.bn_momentum, cfg_.bn_epsilon);
                }
                ch = spec.block.back().channels;
                break;
            }
            case LayerSpec::Kind::conv: {
                Tensor k(Shape{spec.channels, ch, spec.kernel});
                const double bound = std::sqrt(6.0 / static_cast<double>(ch * spec.kernel));
                k.fill_uniform(rng, -bound, bound);
                b.conv_kernel = std::move(k);
                ch = spec.channels;
                break;
            }
            case LayerSpec::Kind::dense: {
                std::int64_t features;
                if (i > 0 && cfg_.layers[i - 1].kind == LayerSpec::Kind::flatten) {
                    check(time > 0, ErrorCode::config_invalid,
                          "dense after flatten needs a fixed input_length to size its weights");
                    features = ch * time;
                    time = 1;
                } else {
                    features = ch;
                }
                b.dense_w = Tensor(Shape{spec.channels, features});
                const double bound = std::sqrt(6.0 / static_cast<double>(features));
                b.dense_w.fill_uniform(rng, -bound, bound);
                b.dense_b = Tensor(Shape{spec.channels}, 0.0);
                ch = spec.channels;
                break;
            }
            case LayerSpec::Kind::pool: {
                if (time > 0) time = (time - spec.pool) / spec.pool + 1;
                pool_product *= static_cast<double>(spec.pool);
                // Scales drop relative to the pooling factor the first group
                // layer was declared at (its grid already accounts for the
                // lifting stride and any leading pools).
                if (scale_axis && cfg_.scale_heuristic && baseline_pool_product > 0.0) {
                    const std::int64_t drop = static_cast<std::int64_t>(
                        std::floor(std::log(pool_product / baseline_pool_product) / std::log(cfg_.grid_base)));
                    const std::int64_t target = std::max<std::int64_t>(1, initial_scales - drop);
                    if (target < cur_scales) {
                        b.take_scales_to = target;
                        cur_grid = lifting_grid_.dropped_top(initial_scales - target);
                    }
                }
                break;
            }
            case LayerSpec::Kind::project: {
                scale_axis = false;
                break;
            }
            case LayerSpec::Kind::global_avg_pool:
            case LayerSpec::Kind::global_max_pool: {
                time = 1;
                break;
            }
            case LayerSpec::Kind::flatten:
            case LayerSpec::Kind::dropout:
                break;
        }

        if ((spec.kind == LayerSpec::Kind::lifting || spec.kind == LayerSpec::Kind::group ||
             spec.kind == LayerSpec::Kind::conv) &&
            spec.bn_relu) {
            b.has_bn = true;
            b.bn_gamma = Tensor(Shape{ch}, 1.0);
            b.bn_beta = Tensor(Shape{ch}, 0.0);
            b.bn_state = BatchNormState(ch, cfg_.bn_momentum, cfg_.bn_epsilon);
        }
        if (b.take_scales_to > 0) {
            cur_scales = b.take_scales_to;
        }
        b.scales_after = scale_axis ? cur_scales : 0;
        built_.push_back(std::move(b));
    }
}

Value Model::forward_layer(Tape& tape, Built& b, Value x, ParamRegistry& params, bool train,
                           std::mt19937_64* dropout_rng) {
    const LayerSpec& spec = b.spec;
    switch (spec.kind) {
        case LayerSpec::Kind::lifting:
            x = b.lifting->forward(tape, x, params, b.name);
            break;
        case LayerSpec::Kind::group:
            x = b.group->forward(tape, x, params, b.name);
            break;
        case LayerSpec::Kind::residual: {
            Value skip = x;
            for (std::size_t s = 0; s < spec.block.size(); ++s) {
                if (!b.res_groups.empty()) {
                    x = b.res_groups[s]->forward(tape, x, params, b.name + ".g" + std::to_string(s));
                } else {
                    Conv1dSpec cs;
                    cs.stride = 1;
                    cs.padding = cfg_.padding;
                    cs.pad = cfg_.padding == Padding::zero ? b.res_conv[s].dim(2) / 2 : 0;
                    Value k = params.bind(tape, b.res_conv[s], b.name + ".conv" + std::to_string(s));
                    x = conv1d(tape, x, k, cs);
                }
                Value gamma = params.bind(tape, b.res_bn_gamma[s], b.name + ".bn_gamma" + std::to_string(s));
                Value beta = params.bind(tape, b.res_bn_beta[s], b.name + ".bn_beta" + std::to_string(s));
                x = batchnorm1d(tape, x, gamma, beta, b.res_bn_state[s], train);
                if (s + 1 < spec.block.size()) x = relu(tape, x);
            }
            x = add(tape, x, skip);
            x = relu(tape, x);
            return x;  // residual handles its own bn/relu
        }
        case LayerSpec::Kind::conv: {
            Conv1dSpec cs;
            cs.stride = 1;
            cs.padding = cfg_.padding;
            cs.pad = cfg_.padding == Padding::zero ? b.conv_kernel.dim(2) / 2 : 0;
            Value k = params.bind(tape, b.conv_kernel, b.name + ".kernel");
            x = conv1d(tape, x, k, cs);
            break;
        }
        case LayerSpec::Kind::pool:
            if (b.take_scales_to > 0) x = take_scales(tape, x, b.take_scales_to);
            x = maxpool1d(tape, x, spec.pool, spec.pool);
            return x;
        case LayerSpec::Kind::project:
            return project_scales(tape, x, spec.project_kind);
        case LayerSpec::Kind::global_avg_pool:
            return mean_over_last(tape, x);
        case LayerSpec::Kind::global_max_pool: {
            const std::int64_t T = tape.value(x).dim(-1);
            Value m = maxpool1d(tape, x, T, T);
            Shape out(tape.value(m).shape().begin(), tape.value(m).shape().end() - 1);
            return reshape(tape, m, out);
        }
        case LayerSpec::Kind::flatten: {
            const Tensor& xv = tape.value(x);
            check_shape(xv.rank() >= 2, "flatten needs rank >= 2");
            std::int64_t feat = xv.numel() / xv.dim(0);
            return reshape(tape, x, Shape{xv.dim(0), feat});
        }
        case LayerSpec::Kind::dropout:
            check(dropout_rng != nullptr || !train, ErrorCode::invalid_argument,
                  "train-mode dropout needs an rng");
            return dropout(tape, x, spec.rate, *dropout_rng, train);
        case LayerSpec::Kind::dense: {
            Value w = params.bind(tape, b.dense_w, b.name + ".w");
            Value bias = params.bind(tape, b.dense_b, b.name + ".b");
            x = dense(tape, x, w, bias);
            if (spec.relu) x = relu(tape, x);
            return x;
        }
    }
    if (b.has_bn) {
        Value gamma = params.bind(tape, b.bn_gamma, b.name + ".bn_gamma");
        Value beta = params.bind(tape, b.bn_beta, b.name + ".bn_beta");
        x = batchnorm1d(tape, x, gamma, beta, b.bn_state, train);
        x = relu(tape, x);
    }
    return x;
}

Value Model::forward(Tape& tape, const Tensor& batch, ParamRegistry& params, bool train,
                     std::mt19937_64* dropout_rng) {
    check_shape(batch.rank() == 3, "model input must be [batch, channels, time]");
    check_shape(batch.dim(1) == cfg_.input_channels, "model input channel axis mismatch");
    if (cfg_.input_length > 0) {
        check_shape(batch.dim(2) == cfg_.input_length,
                    "input length " + std::to_string(batch.dim(2)) + " does not match expected length " +
                        std::to_string(cfg_.input_length));
    }
    Value x = tape.leaf(batch, false, "input");
    for (auto& b : built_) x = forward_layer(tape, b, x, params, train, dropout_rng);
    return x;
}

Value Model::loss(Tape& tape, Value logits, const std::vector<std::int64_t>& labels, ParamRegistry& params) {
    check_contract(cfg_.head == HeadKind::softmax, "model head is not softmax classification");
    Value l = softmax_cross_entropy(tape, logits, labels);
    if (cfg_.lambda != 0.0) {
        Value penalty = wavelet_penalty(tape, params);
        l = add(tape, l, scale(tape, penalty, cfg_.lambda));
    }
    return l;
}

Value Model::loss_multilabel(Tape& tape, Value logits, const Tensor& targets, ParamRegistry& params) {
    check_contract(cfg_.head == HeadKind::sigmoid_multilabel, "model head is not multilabel");
    Value l = sigmoid_binary_cross_entropy(tape, logits, targets);
    if (cfg_.lambda != 0.0) {
        Value penalty = wavelet_penalty(tape, params);
        l = add(tape, l, scale(tape, penalty, cfg_.lambda));
    }
    return l;
}

Tensor Model::predict(const Tensor& batch) {
    Tape tape;
    ParamRegistry params(false);
    Value logits = forward(tape, batch, params, false, nullptr);
    return tape.value(logits);
}

Tensor Model::predict_features(const Tensor& batch) {
    Tape tape;
    ParamRegistry params(false);
    Value x = tape.leaf(batch, false, "input");
    for (std::size_t i = 0; i + 1 < built_.size(); ++i) x = forward_layer(tape, built_[i], x, params, false, nullptr);
    return tape.value(x);
}

std::vector<Tensor*> Model::parameters() {
    std::vector<Tensor*> out;
    for (auto& b : built_) {
        if (b.lifting) out.push_back(&b.lifting->filter().coefficients);
        if (b.group) out.push_back(&b.group->filter().coefficients);
        for (auto& g : b.res_groups)
            if (g) out.push_back(&g->filter().coefficients);
        for (auto& k : b.res_conv) out.push_back(&k);
        if (b.conv_kernel.numel() > 0 && b.spec.kind == LayerSpec::Kind::conv) out.push_back(&b.conv_kernel);
        if (b.dense_w.numel() > 0) {
            out.push_back(&b.dense_w);
            out.push_back(&b.dense_b);
        }
        for (auto& g : b.res_bn_gamma) out.push_back(&g);
        for (auto& g : b.res_bn_beta) out.push_back(&g);
        if (b.has_bn) {
            out.push_back(&b.bn_gamma);
            out.push_back(&b.bn_beta);
        }
    }
    return out;
}

std::vector<std::string> Model::parameter_names() const {
    std::vector<std::string> names;
    for (const auto& b : built_) {
        if (b.lifting) names.push_back(b.name + ".spline_coeffs");
        if (b.group) names.push_back(b.name + ".spline_coeffs");
        for (std::size_t i = 0; i < b.res_groups.size(); ++i)
            if (b.res_groups[i]) names.push_back(b.name + ".g" + std::to_string(i) + ".spline_coeffs");
        for (std::size_t i = 0; i < b.res_conv.size(); ++i) names.push_back(b.name + ".conv" + std::to_string(i));
        if (b.conv_kernel.numel() > 0 && b.spec.kind == LayerSpec::Kind::conv) names.push_back(b.name + ".kernel");
        if (b.dense_w.numel() > 0) {
            names.push_back(b.name + ".w");
            names.push_back(b.name + ".b");
        }
        for (std::size_t i = 0; i < b.res_bn_gamma.size(); ++i) names.push_back(b.name + ".bn_gamma" + std::to_string(i));
        for (std::size_t i = 0; i < b.res_bn_beta.size(); ++i) names.push_back(b.name + ".bn_beta" + std::to_string(i));
        if (b.has_bn) {
            names.push_back(b.name + ".bn_gamma");
            names.push_back(b.name + ".bn_beta");
        }
    }
    return names;
}

std::vector<std::pair<std::string, Tensor*>> Model::state_tensors() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (auto& b : built_) {
        for (std::size_t i = 0; i < b.res_bn_state.size(); ++i) {
            out.emplace_back(b.name + ".bn" + std::to_string(i) + ".running_mean", &b.res_bn_state[i].running_mean);
            out.emplace_back(b.name + ".bn" + std::to_string(i) + ".running_var", &b.res_bn_state[i].running_var);
        }
        if (b.has_bn) {
            out.emplace_back(b.name + ".bn.running_mean", &b.bn_state.running_mean);
            out.emplace_back(b.name + ".bn.running_var", &b.bn_state.running_var);
        }
    }
    return out;
}

std::int64_t Model::count_parameters() const {
    std::int64_t n = 0;
    for (const auto& info : layer_table()) n += info.params;
    return n;
}

std::vector<LayerInfo> Model::layer_table() const {
    std::vector<LayerInfo> table;
    for (const auto& b : built_) {
        LayerInfo info;
        info.name = b.name;
        std::int64_t p = 0;
        std::ostringstream detail;
        switch (b.spec.kind) {
            case LayerSpec::Kind::lifting:
                p += b.lifting->param_count();
                detail << "lifting k=" << b.spec.kernel << " ch=" << b.spec.channels
                       << " scales=" << b.lifting->grid().size();
                info.kernel_width = b.spec.kernel;
                break;
            case LayerSpec::Kind::group:
                p += b.group->param_count();
                detail << "group k=" << b.spec.kernel << " ch=" << b.spec.channels << " Ks=" << b.spec.scale_extent
                       << " grid=" << b.group->grid().size();
                info.kernel_width = b.spec.kernel;
                break;
            case LayerSpec::Kind::residual:
                detail << "residual x" << b.spec.block.size();
                for (const auto& g : b.res_groups)
                    if (g) p += g->param_count();
                for (const auto& k : b.res_conv) p += k.numel();
                for (const auto& g : b.res_bn_gamma) p += g.numel();
                for (const auto& g : b.res_bn_beta) p += g.numel();
                break;
            case LayerSpec::Kind::conv:
                p += b.conv_kernel.numel();
                detail << "conv k=" << b.spec.kernel << " ch=" << b.spec.channels;
                info.kernel_width = b.spec.kernel;
                break;
            case LayerSpec::Kind::dense:
                p += b.dense_w.numel() + b.dense_b.numel();
                detail << "dense " << b.dense_w.dim(1) << " -> " << b.dense_w.dim(0);
                break;
            case LayerSpec::Kind::pool:
                detail << "maxpool " << b.spec.pool;
                if (b.take_scales_to > 0) detail << " (scales -> " << b.take_scales_to << ")";
                break;
            case LayerSpec::Kind::project:
                detail << (b.spec.project_kind == PoolKind::max ? "project max" : "project mean");
                break;
            case LayerSpec::Kind::global_avg_pool:
                detail << "global avg pool (time)";
                break;
            case LayerSpec::Kind::global_max_pool:
                detail << "global max pool (time)";
                break;
            case LayerSpec::Kind::dropout:
                detail << "dropout " << b.spec.rate;
                break;
            case LayerSpec::Kind::flatten:
                detail << "flatten";
                break;
        }
        if (b.has_bn) p += b.bn_gamma.numel() + b.bn_beta.numel();
        info.params = p;
        info.detail = detail.str();
        info.out_channels = b.spec.channels;
        info.scales = b.scales_after;
        table.push_back(std::move(info));
    }
    return table;
}

double Model::mean_abs_filter_average() const {
    double acc = 0.0;
    std::int64_t count = 0;
    auto absorb = [&acc, &count](const Tensor& mean) {
        for (std::int64_t i = 0; i < mean.numel(); ++i) {
            acc += std::fabs(mean[i]);
            ++count;
        }
    };
    for (const auto& b : built_) {
        if (b.lifting) absorb(filter_mean(sample_filter(b.lifting->filter(), 1.0)));
        if (b.group) absorb(filter_mean(sample_filter(b.group->filter(), 1.0)));
        for (const auto& g : b.res_groups)
            if (g) absorb(filter_mean(sample_filter(g->filter(), 1.0)));
    }
    return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

Value Model::wavelet_penalty(Tape& tape, ParamRegistry& params) {
    Value total;
    auto add_term = [&](Tensor& coeffs, SplineBasisCache& cache, const std::string& name) {
        Value leaf = params.bind(tape, coeffs, name);
        Value term = wavelet_penalty_term(tape, leaf, cache);
        total = total.valid() ? add(tape, total, term) : term;
    };
    for (auto& b : built_) {
        if (b.lifting) add_term(b.lifting->filter().coefficients, b.lifting->basis_cache(), b.name + ".spline_coeffs");
        if (b.group) add_term(b.group->filter().coefficients, b.group->basis_cache(), b.name + ".spline_coeffs");
        for (std::size_t i = 0; i < b.res_groups.size(); ++i) {
            if (b.res_groups[i])
                add_term(b.res_groups[i]->filter().coefficients, b.res_groups[i]->basis_cache(),
                         b.name + ".g" + std::to_string(i) + ".spline_coeffs");
        }
    }
    check_contract(total.valid(), "wavelet penalty requested for a model without spline filters");
    return total;
}

EquivariantStack Model::probe_stack(int max_group_layers) const {
    const Built* lift = nullptr;
    std::vector<const GroupConv*> groups;
    for (const auto& b : built_) {
        if (b.spec.kind == LayerSpec::Kind::lifting) lift = &b;
        if (b.spec.kind == LayerSpec::Kind::group && static_cast<int>(groups.size()) < max_group_layers)
            groups.push_back(b.group.get());
        for (const auto& g : b.res_groups) {
            if (g && static_cast<int>(groups.size()) < max_group_layers) groups.push_back(g.get());
        }
    }
    check_contract(lift != nullptr && lift->lifting, "probe mode needs a lifting layer");
    ConvPolicy probe_policy{Padding::circular, 1};
    LiftingConv lc = *lift->lifting;
    lc.set_policy(probe_policy);
    std::vector<GroupConv> gcs;
    for (const GroupConv* g : groups) {
        GroupConv copy = *g;
        copy.set_policy(probe_policy);
        // Probe mode runs pooling-free, so every layer sees the full grid.
        if (!(copy.grid() == lifting_grid_)) {
            GroupConv rebuilt(copy.filter().cin(), copy.filter().cout(), copy.filter().geometry.nominal_width,
                              copy.filter().scale_extent, lifting_grid_, probe_policy, cfg_.spline_order);
            rebuilt.filter().coefficients = copy.filter().coefficients;
            gcs.push_back(std::move(rebuilt));
        } else {
            gcs.push_back(std::move(copy));
        }
    }
    return EquivariantStack(std::move(lc), std::move(gcs), /*relu_between=*/false);
}

void Model::invalidate_kernel_caches() {
    for (auto& b : built_) {
        if (b.lifting) b.lifting->invalidate_kernel_cache();
        if (b.group) b.group->invalidate_kernel_cache();
        for (auto& g : b.res_groups)
            if (g) g->invalidate_kernel_cache();
    }
}

std::int64_t Model::learnable_layer_count() const {
    std::int64_t n = 0;
    for (const auto& b : built_) {
        if (is_learnable_kind(b.spec.kind)) ++n;
        if (b.spec.kind == LayerSpec::Kind::residual) n += static_cast<std::int64_t>(b.spec.block.size());
    }
    return n;
}

// --- Presets ----------------------------------------------------------------

namespace {

struct Level {
    std::int64_t channels;
    std::int64_t layers;    // plain stacked layers, or residual blocks when residual
    bool residual = false;
};

// W-net family. The tables replace strided convolutions by stride-1
// convolutions followed by pooling of the stride size; the first pool after
// the lifting realizes its declared stride. Within each level the first
// convolution carries scale extent 3 and the rest extent 1; level
// transitions with width changes are plain pairs so residual skips stay
// identity.
ArchitectureConfig make_wnet(const std::string& name, std::int64_t lifting_channels,
                             const std::vector<Level>& levels) {
    ArchitectureConfig cfg;
    cfg.name = name;
    cfg.input_length = 80200;
    cfg.grid_j_min = 0;
    cfg.grid_j_max = 8;  // 9 scales at the lifting layer
    cfg.classes = 10;
    cfg.head = HeadKind::softmax;

    cfg.layers.push_back(LayerSpec::Lifting(79, lifting_channels));
    cfg.layers.push_back(LayerSpec::Pool(4));  // lifting stride
    std::int64_t prev = lifting_channels;
    for (std::size_t lv = 0; lv < levels.size(); ++lv) {
        const Level& level = levels[lv];
        cfg.layers.push_back(LayerSpec::Pool(4));
        if (!level.residual) {
            for (std::int64_t i = 0; i < level.layers; ++i) {
                cfg.layers.push_back(LayerSpec::Group(3, level.channels, i == 0 ? 3 : 1));
            }
        } else {
            for (std::int64_t blk = 0; blk < level.layers; ++blk) {
                if (blk == 0 && level.channels != prev) {
                    cfg.layers.push_back(LayerSpec::Group(3, level.channels, 3));
                    cfg.layers.push_back(LayerSpec::Group(3, level.channels, 1));
                } else if (blk == 0) {
                    cfg.layers.push_back(LayerSpec::Residual(
                        {LayerSpec::Group(3, level.channels, 3), LayerSpec::Group(3, level.channels, 1)}));
                } else {
                    cfg.layers.push_back(LayerSpec::Residual(
                        {LayerSpec::Group(3, level.channels, 1), LayerSpec::Group(3, level.channels, 1)}));
                }
            }
        }
        prev = level.channels;
    }
    cfg.layers.push_back(LayerSpec::Project(PoolKind::max));
    cfg.layers.push_back(LayerSpec::GlobalAvgPool());
    cfg.layers.push_back(LayerSpec::Dense(10));
    return cfg;
}

// Plain-CNN baseline of the same shape (dai-style widths).
ArchitectureConfig make_mnet(const std::string& name, std::int64_t first_channels,
                             const std::vector<Level>& levels) {
    ArchitectureConfig cfg;
    cfg.name = name;
    cfg.input_length = 80200;
    cfg.classes = 10;
    cfg.head = HeadKind::softmax;

    cfg.layers.push_back(LayerSpec::Conv(79, first_channels));
    cfg.layers.push_back(LayerSpec::Pool(4));
    std::int64_t prev = first_channels;
    for (const Level& level : levels) {
        cfg.layers.push_back(LayerSpec::Pool(4));
        if (!level.residual) {
            for (std::int64_t i = 0; i < level.layers; ++i) cfg.layers.push_back(LayerSpec::Conv(3, level.channels));
        } else {
            for (std::int64_t blk = 0; blk < level.layers; ++blk) {
                if (blk == 0 && level.channels != prev) {
                    cfg.layers.push_back(LayerSpec::Conv(3, level.channels));
                    cfg.layers.push_back(LayerSpec::Conv(3, level.channels));
                } else {
                    cfg.layers.push_back(LayerSpec::Residual(
                        {LayerSpec::Conv(3, level.channels), LayerSpec::Conv(3, level.channels)}));
                }
            }
        }
        prev = level.channels;
    }
    cfg.layers.push_back(LayerSpec::GlobalAvgPool());
    cfg.layers.push_back(LayerSpec::Dense(10));
    return cfg;
}

ArchitectureConfig make_w1dcnn() {
    ArchitectureConfig cfg;
    cfg.name = "w-1dcnn";
    cfg.input_length = 64000;
    cfg.grid_j_min = 0;
    cfg.grid_j_max = 8;
    cfg.classes = 10;
    cfg.head = HeadKind::softmax;
    auto dense = [](std::int64_t units) {
        LayerSpec d = LayerSpec::Dense(units, true);
        return d;
    };
    cfg.layers = {
        LayerSpec::Lifting(63, 12), LayerSpec::Pool(2), LayerSpec::Pool(8),
        LayerSpec::Group(31, 24, 3), LayerSpec::Pool(2), LayerSpec::Pool(8),
        LayerSpec::Group(15, 48, 3), LayerSpec::Pool(2),
        LayerSpec::Group(7, 96, 3),  LayerSpec::Pool(2),
        LayerSpec::Group(3, 192, 3), LayerSpec::Pool(2), LayerSpec::Pool(5),
        LayerSpec::Project(PoolKind::max),
        LayerSpec::Flatten(),
        dense(96), LayerSpec::Dropout(0.25),
        dense(48), LayerSpec::Dropout(0.25),
        LayerSpec::Dense(10),
    };
    return cfg;
}

ArchitectureConfig make_1dcnn() {
    ArchitectureConfig cfg;
    cfg.name = "1dcnn";
    cfg.input_length = 64000;
    cfg.classes = 10;
    cfg.head = HeadKind::softmax;
    auto dense = [](std::int64_t units) { return LayerSpec::Dense(units, true); };
    cfg.layers = {
        LayerSpec::Conv(63, 16),  LayerSpec::Pool(2), LayerSpec::Pool(8),
        LayerSpec::Conv(31, 32),  LayerSpec::Pool(2), LayerSpec::Pool(8),
        LayerSpec::Conv(15, 64),  LayerSpec::Pool(2),
        LayerSpec::Conv(7, 128),  LayerSpec::Pool(2),
        LayerSpec::Conv(3, 256),  LayerSpec::Pool(2), LayerSpec::Pool(5),
        LayerSpec::Flatten(),
        dense(96), LayerSpec::Dropout(0.25),
        dense(48), LayerSpec::Dropout(0.25),
        LayerSpec::Dense(10),
    };
    return cfg;
}

ArchitectureConfig make_w3pow9() {
    ArchitectureConfig cfg;
    cfg.name = "w3pow9";
    cfg.input_length = 59049;
    cfg.grid_j_min = 0;
    cfg.grid_j_max = 8;
    cfg.classes = 50;
    cfg.head = HeadKind::sigmoid_multilabel;
    const std::vector<std::pair<std::int64_t, std::int64_t>> plan = {
        {90, 3}, {90, 1}, {180, 1}, {180, 3}, {180, 1},
        {180, 1}, {180, 3}, {180, 1}, {360, 1}, {360, 3},
    };
    cfg.layers.push_back(LayerSpec::Lifting(3, 90));
    cfg.layers.push_back(LayerSpec::Pool(3));  // lifting stride
    for (std::size_t i = 0; i < plan.size(); ++i) {
        cfg.layers.push_back(LayerSpec::Group(3, plan[i].first, plan[i].second));
        if (i + 1 < plan.size()) cfg.layers.push_back(LayerSpec::Pool(3));
        if (i == 4 || i == 9) cfg.layers.push_back(LayerSpec::Dropout(0.5));
    }
    cfg.layers.push_back(LayerSpec::Project(PoolKind::max));
    cfg.layers.push_back(LayerSpec::GlobalAvgPool());
    cfg.layers.push_back(LayerSpec::Dense(50));
    return cfg;
}

// Desk-scale presets: 512-sample inputs, grid {1, 2, 4, 8}, all scales kept
// so patterns at the held-out test scale stay representable.
ArchitectureConfig make_w3_desk() {
    ArchitectureConfig cfg;
    cfg.name = "w3-desk";
    cfg.input_length = 0;  // flexible
    cfg.padding = Padding::circular;  // desk task signals are periodized
    cfg.grid_j_min = 0;
    cfg.grid_j_max = 4;  // headroom above the held-out test octave
    cfg.scale_heuristic = false;
    cfg.classes = 4;
    cfg.head = HeadKind::softmax;
    cfg.layers = {
        LayerSpec::Lifting(15, 12),
        LayerSpec::Pool(4),
        LayerSpec::Group(3, 16, 2),
        LayerSpec::Pool(2),
        LayerSpec::Group(3, 16, 2),
        LayerSpec::Project(PoolKind::max),
        // peak pooling over time: the group action preserves peak feature
        // values, while time averages scale with the pattern's support
        LayerSpec::GlobalMaxPool(),
        LayerSpec::Dense(4),
    };
    return cfg;
}

ArchitectureConfig make_cnn_desk() {
    ArchitectureConfig cfg;
    cfg.name = "cnn-desk";
    cfg.input_length = 0;
    cfg.padding = Padding::circular;  // desk task signals are periodized
    cfg.classes = 4;
    cfg.head = HeadKind::softmax;
    cfg.layers = {
        LayerSpec::Conv(15, 16),
        LayerSpec::Pool(4),
        LayerSpec::Conv(3, 22),
        LayerSpec::Pool(2),
        LayerSpec::Conv(3, 22),
        LayerSpec::GlobalMaxPool(),
        LayerSpec::Dense(4),
    };
    return cfg;
}

}  // namespace

ArchitectureConfig preset_architecture(const std::string& name) {
    if (name == "w3") return make_wnet("w3", 150, {{150, 1}});
    if (name == "w5") return make_wnet("w5", 74, {{74, 1}, {148, 1}, {296, 1}});
    if (name == "w11") return make_wnet("w11", 51, {{51, 2}, {102, 2}, {204, 3}, {408, 2}});
    if (name == "w18") return make_wnet("w18", 57, {{57, 4}, {114, 4}, {228, 4}, {456, 4}});
    if (name == "w34")
        return make_wnet("w34", 45,
                         {{45, 3, true}, {90, 4, true}, {180, 6, true}, {360, 3, true}});
    if (name == "m3") return make_mnet("m3", 256, {{256, 1}});
    if (name == "m5") return make_mnet("m5", 128, {{128, 1}, {256, 1}, {512, 1}});
    if (name == "m11") return make_mnet("m11", 64, {{64, 2}, {128, 2}, {256, 3}, {512, 2}});
    if (name == "m18") return make_mnet("m18", 64, {{64, 4}, {128, 4}, {256, 4}, {512, 4}});
    if (name == "m34")
        return make_mnet("m34", 48, {{48, 3, true}, {96, 4, true}, {192, 6, true}, {384, 3, true}});
    if (name == "w-1dcnn") return make_w1dcnn();
    if (name == "1dcnn") return make_1dcnn();
    if (name == "w3pow9") return make_w3pow9();
    if (name == "w3-desk") return make_w3_desk();
    if (name == "cnn-desk") return make_cnn_desk();
    fail(ErrorCode::invalid_argument, "unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
    return {"w3", "w5", "w11", "w18", "w34", "m3", "m5", "m11", "m18", "m34",
            "w-1dcnn", "1dcnn", "w3pow9", "w3-desk", "cnn-desk"};
}

}  // namespace scalewave
