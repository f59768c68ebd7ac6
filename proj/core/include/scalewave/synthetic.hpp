#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scalewave/signal_model.hpp"
#include "scalewave/tensor.hpp"

namespace scalewave {

// Scaled/translated-pattern classification task. Class templates are
// scale-orbit-distinct (component counts, frequency ratios and
// separation-times-frequency products tell them apart, absolute scale does
// not), so a scale-equivariant model can generalize across disjoint
// train/test scale sets.
struct SyntheticTaskSpec {
    std::int64_t num_classes = 4;
    std::int64_t signal_length = 512;
    std::int64_t train_per_class = 40;
    std::int64_t val_per_class = 8;
    std::int64_t test_per_class = 16;
    std::vector<double> train_scales{1.0, 2.0};
    std::vector<double> val_scales{1.0, 2.0};
    std::vector<double> test_scales{4.0};
    double snr_db = 20.0;  // infinity = noiseless
    double sample_rate = 1.0;
    std::vector<SignalModel> templates;  // empty = default_class_templates()
};

struct Example {
    Tensor samples;  // [1, T]
    std::int64_t label = 0;
    double t0 = 0.0;
    double s0 = 1.0;
    std::string split;
};

struct TaskData {
    std::vector<Example> train, val, test;
    SyntheticTaskSpec spec;
};

std::vector<SignalModel> default_class_templates();

// Deterministic given the seed; per-example seeds are derived so examples
// are independent of generation order.
TaskData generate_task(const SyntheticTaskSpec& spec, std::uint64_t seed);

// Dataset manifest: one JSON record per example {label, t0, s0, split,
// samples inline or a wav path when export_wav is set}.
void write_task_manifest(const TaskData& task, const std::string& directory, bool export_wav);

}  // namespace scalewave
