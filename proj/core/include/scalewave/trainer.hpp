#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scalewave/metrics.hpp"
#include "scalewave/model.hpp"
#include "scalewave/optim.hpp"
#include "scalewave/synthetic.hpp"

namespace scalewave {

struct TrainConfig {
    OptimizerConfig optimizer;  // desk default: Adam, lr 1e-3
    std::int64_t epochs = 30;
    std::int64_t batch_size = 16;
    double plateau_factor = 0.5;
    std::int64_t plateau_patience = 20;
    double lr_floor = 1e-7;  // early stop once the schedule drops below
    bool early_stop = true;
    std::uint64_t seed = 1;
    bool deterministic = true;
    std::string out_dir;  // metrics.csv and best.ckpt land here when set
};

struct EpochMetrics {
    std::int64_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double lr = 0.0;
    double mean_abs_filter_avg = 0.0;
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    double best_val_acc = 0.0;
    std::string best_checkpoint_path;
    std::string metrics_csv;  // full CSV text, one row per epoch
};

// Mini-batch loop with a plateau LR scheduler, best-validation checkpointing
// and a NaN diagnostic that names the first offending tape node. Bitwise
// reproducible for a fixed seed.
TrainResult train_classifier(Model& model, const TaskData& task, const TrainConfig& cfg);

double evaluate_accuracy(Model& model, const std::vector<Example>& split, std::int64_t batch_size = 32);

// Multilabel evaluation (AUC / MAP heads).
MultilabelMetrics evaluate_multilabel_split(Model& model, const Tensor& inputs, const Tensor& targets);

// Assembles [B, C, T] batches from example indices.
Tensor batch_inputs(const std::vector<Example>& split, const std::vector<std::int64_t>& indices);
std::vector<std::int64_t> batch_labels(const std::vector<Example>& split, const std::vector<std::int64_t>& indices);

std::string metrics_to_csv(const std::vector<EpochMetrics>& history);

// Checkpoint glue: every learnable parameter, optimizer moments and
// batchnorm running statistics.
void save_model_checkpoint(Model& model, Optimizer* optimizer, const std::string& config_json,
                           const std::string& metrics_csv, const std::string& rng_state, const std::string& path);
void load_model_checkpoint(Model& model, Optimizer* optimizer, const std::string& path);

}  // namespace scalewave
