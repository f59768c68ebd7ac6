#include "scalewave/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "scalewave/checkpoint.hpp"

namespace scalewave {

Tensor batch_inputs(const std::vector<Example>& split, const std::vector<std::int64_t>& indices) {
    check_contract(!indices.empty(), "empty batch");
    const std::int64_t c = split[indices[0]].samples.dim(0);
    const std::int64_t t = split[indices[0]].samples.dim(1);
    Tensor batch(Shape{static_cast<std::int64_t>(indices.size()), c, t});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const Tensor& s = split[indices[i]].samples;
        check_shape(s.dim(0) == c && s.dim(1) == t, "examples in one batch must share a shape");
        std::copy(s.raw(), s.raw() + s.numel(), batch.raw() + static_cast<std::int64_t>(i) * c * t);
    }
    return batch;
}

std::vector<std::int64_t> batch_labels(const std::vector<Example>& split, const std::vector<std::int64_t>& indices) {
    std::vector<std::int64_t> labels;
    labels.reserve(indices.size());
    for (auto i : indices) labels.push_back(split[i].label);
    return labels;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void report_nan(const Tape& tape) {
    const std::int32_t id = tape.first_non_finite();
    std::string where = "unknown node";
    if (id >= 0) {
        const auto& n = tape.node_at(static_cast<std::size_t>(id));
        where = n.op;
        // Walk back to the nearest labeled ancestor for a layer name.
        std::int32_t cur = id;
        for (int hops = 0; hops < 64 && cur >= 0; ++hops) {
            const auto& node = tape.node_at(static_cast<std::size_t>(cur));
            if (!node.label.empty()) {
                where += " (near " + node.label + ")";
                break;
            }
            if (node.inputs.empty()) break;
            cur = node.inputs.front();
        }
    }
    fail(ErrorCode::numeric_failure, "NaN loss; first non-finite tape node: " + where);
}

struct GradHarvest {
    std::vector<Tensor> grads;
};

GradHarvest harvest_grads(Tape& tape, const ParamRegistry& registry, const std::vector<Tensor*>& params) {
    GradHarvest h;
    h.grads.resize(params.size());
    for (const auto& binding : registry.bindings()) {
        auto it = std::find(params.begin(), params.end(), binding.storage);
        if (it == params.end()) continue;
        const std::size_t slot = static_cast<std::size_t>(it - params.begin());
        if (tape.has_grad(binding.leaf)) h.grads[slot] = tape.grad(binding.leaf);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (h.grads[i].numel() == 0) h.grads[i] = Tensor(params[i]->shape());
    }
    return h;
}

}  // namespace

double evaluate_accuracy(Model& model, const std::vector<Example>& split, std::int64_t batch_size) {
    check_contract(!split.empty(), "empty evaluation split");
    std::int64_t hits = 0;
    for (std::size_t start = 0; start < split.size(); start += static_cast<std::size_t>(batch_size)) {
        std::vector<std::int64_t> idx;
        for (std::size_t i = start; i < std::min(split.size(), start + static_cast<std::size_t>(batch_size)); ++i)
            idx.push_back(static_cast<std::int64_t>(i));
        Tensor logits = model.predict(batch_inputs(split, idx));
        const std::vector<std::int64_t> labels = batch_labels(split, idx);
        const std::int64_t k = logits.dim(1);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            std::int64_t best = 0;
            for (std::int64_t j = 1; j < k; ++j)
                if (logits[static_cast<std::int64_t>(i) * k + j] > logits[static_cast<std::int64_t>(i) * k + best])
                    best = j;
            if (best == labels[i]) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(split.size());
}

MultilabelMetrics evaluate_multilabel_split(Model& model, const Tensor& inputs, const Tensor& targets) {
    Tensor logits = model.predict(inputs);
    return evaluate_multilabel(logits, targets);
}

std::string metrics_to_csv(const std::vector<EpochMetrics>& history) {
    std::ostringstream os;
    os << "epoch,train_loss,train_acc,val_loss,val_acc,lr,mean_abs_filter_avg\n";
    for (const auto& m : history) {
        os << m.epoch << ',' << format_double(m.train_loss) << ',' << format_double(m.train_acc) << ','
           << format_double(m.val_loss) << ',' << format_double(m.val_acc) << ',' << format_double(m.lr) << ','
           << format_double(m.mean_abs_filter_avg) << '\n';
    }
    return os.str();
}

void save_model_checkpoint(Model& model, Optimizer* optimizer, const std::string& config_json,
                           const std::string& metrics_csv, const std::string& rng_state, const std::string& path) {
    Checkpoint ckpt;
    ckpt.config_json = config_json;
    ckpt.metrics_csv = metrics_csv;
    ckpt.rng_state = rng_state;
    const auto params = model.parameters();
    const auto names = model.parameter_names();
    for (std::size_t i = 0; i < params.size(); ++i) ckpt.tensors.emplace_back(names[i], *params[i]);
    for (const auto& [name, tensor] : model.state_tensors()) ckpt.tensors.emplace_back(name, *tensor);
    if (optimizer) {
        auto& m1 = optimizer->moments1();
        for (std::size_t i = 0; i < m1.size(); ++i) ckpt.tensors.emplace_back("opt.m1." + std::to_string(i), m1[i]);
        auto& m2 = optimizer->moments2();
        for (std::size_t i = 0; i < m2.size(); ++i) ckpt.tensors.emplace_back("opt.m2." + std::to_string(i), m2[i]);
        Tensor steps = Tensor::scalar(static_cast<double>(optimizer->step_count()));
        ckpt.tensors.emplace_back("opt.steps", steps);
    }
    save_checkpoint(ckpt, path);
}

void load_model_checkpoint(Model& model, Optimizer* optimizer, const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    auto find = [&ckpt](const std::string& name) -> const Tensor* {
        for (const auto& [n, t] : ckpt.tensors)
            if (n == name) return &t;
        return nullptr;
    };
    const auto params = model.parameters();
    const auto names = model.parameter_names();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor* t = find(names[i]);
        check(t != nullptr, ErrorCode::io_error, "checkpoint missing tensor " + names[i]);
        check_shape(t->shape() == params[i]->shape(), "checkpoint shape mismatch for " + names[i]);
        *params[i] = *t;
    }
    for (auto& [name, tensor] : model.state_tensors()) {
        const Tensor* t = find(name);
        check(t != nullptr, ErrorCode::io_error, "checkpoint missing tensor " + name);
        *tensor = *t;
    }
    if (optimizer) {
        auto& m1 = optimizer->moments1();
        for (std::size_t i = 0; i < m1.size(); ++i) {
            const Tensor* t = find("opt.m1." + std::to_string(i));
            if (t) m1[i] = *t;
        }
        auto& m2 = optimizer->moments2();
        for (std::size_t i = 0; i < m2.size(); ++i) {
            const Tensor* t = find("opt.m2." + std::to_string(i));
            if (t) m2[i] = *t;
        }
        if (const Tensor* steps = find("opt.steps")) {
            optimizer->set_step_count(static_cast<std::int64_t>((*steps)[0]));
        }
    }
    model.invalidate_kernel_caches();
}

TrainResult train_classifier(Model& model, const TaskData& task, const TrainConfig& cfg) {
    check_contract(!task.train.empty() && !task.val.empty(), "task needs train and val splits");

    std::mt19937_64 rng(cfg.seed);
    Optimizer optimizer(cfg.optimizer, model.parameters());
    const auto params = model.parameters();

    TrainResult result;
    double best_val = -1.0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::int64_t plateau = 0;

    namespace fs = std::filesystem;
    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);

    std::vector<std::int64_t> order(task.train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::int64_t batches = 0;

        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            std::vector<std::int64_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() +
                                              static_cast<std::ptrdiff_t>(std::min(order.size(),
                                                                                    start + static_cast<std::size_t>(
                                                                                                cfg.batch_size))));
            Tensor inputs = batch_inputs(task.train, idx);
            std::vector<std::int64_t> labels = batch_labels(task.train, idx);

            Tape tape;
            ParamRegistry registry(true);
            Value logits = model.forward(tape, inputs, registry, /*train=*/true, &rng);
            Value loss = model.loss(tape, logits, labels, registry);
            const double loss_value = tape.value(loss).scalar_value();
            if (!std::isfinite(loss_value)) report_nan(tape);
            tape.backward(loss);

            GradHarvest h = harvest_grads(tape, registry, params);
            optimizer.step(h.grads);
            model.invalidate_kernel_caches();

            epoch_loss += loss_value;
            ++batches;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = epoch_loss / static_cast<double>(std::max<std::int64_t>(batches, 1));
        m.train_acc = evaluate_accuracy(model, task.train, cfg.batch_size);
        {
            // Validation loss under eval-mode statistics.
            std::vector<std::int64_t> idx(task.val.size());
            std::iota(idx.begin(), idx.end(), 0);
            Tape tape;
            ParamRegistry registry(false);
            Value logits = model.forward(tape, batch_inputs(task.val, idx), registry, false, nullptr);
            Value loss = model.loss(tape, logits, batch_labels(task.val, idx), registry);
            m.val_loss = tape.value(loss).scalar_value();
        }
        m.val_acc = evaluate_accuracy(model, task.val, cfg.batch_size);
        m.lr = optimizer.lr();
        m.mean_abs_filter_avg = model.mean_abs_filter_average();
        result.history.push_back(m);

        if (m.val_acc > best_val) {
            best_val = m.val_acc;
            if (!cfg.out_dir.empty()) {
                result.best_checkpoint_path = (fs::path(cfg.out_dir) / "best.ckpt").string();
                std::ostringstream rng_state;
                rng_state << rng;
                save_model_checkpoint(model, &optimizer, "", metrics_to_csv(result.history), rng_state.str(),
                                      result.best_checkpoint_path);
            }
        }

        // Plateau schedule on validation loss.
        if (m.val_loss < best_val_loss - 1e-12) {
            best_val_loss = m.val_loss;
            plateau = 0;
        } else if (++plateau >= cfg.plateau_patience) {
            optimizer.set_lr(optimizer.lr() * cfg.plateau_factor);
            plateau = 0;
        }
        if (cfg.early_stop && optimizer.lr() < cfg.lr_floor) break;
    }

    result.best_val_acc = best_val;
    result.metrics_csv = metrics_to_csv(result.history);
    if (!cfg.out_dir.empty()) {
        std::ofstream out(fs::path(cfg.out_dir) / "metrics.csv");
        out << result.metrics_csv;
    }
    return result;
}

}  // namespace scalewave
