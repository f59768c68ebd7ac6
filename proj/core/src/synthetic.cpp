#include "scalewave/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "scalewave/wav.hpp"

namespace scalewave {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t split, std::uint64_t index) {
    // splitmix64 step keeps per-example streams decorrelated.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (split * 1000003ull + index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

GaborAtom atom(double amplitude, double center, double width, double frequency, double phase = 0.0) {
    GaborAtom a;
    a.amplitude = amplitude;
    a.center = center;
    a.width = width;
    a.frequency = frequency;
    a.phase = phase;
    return a;
}

}  // namespace

std::vector<SignalModel> default_class_templates() {
    // Scale-free discriminators: component count, frequency ratio, and
    // separation measured in envelope widths.
    // Templates live one octave above the finest grid scale so that both
    // train (s0 in {1,2}) and held-out (s0 = 4) augmentations keep a full
    // scale-response neighborhood inside the grid.
    std::vector<SignalModel> classes;
    // one tone burst
    classes.push_back(SignalModel({atom(1.0, 0.0, 12.0, 0.15)}));
    // harmonic pair (frequency ratio 2 under one envelope)
    classes.push_back(SignalModel({atom(0.8, 0.0, 12.0, 0.15), atom(0.8, 0.0, 12.0, 0.075)}));
    // double burst
    classes.push_back(SignalModel({atom(1.0, 0.0, 12.0, 0.15), atom(1.0, 42.0, 12.0, 0.15)}));
    // triple burst
    classes.push_back(SignalModel(
        {atom(0.9, 0.0, 10.0, 0.15), atom(0.9, 32.0, 10.0, 0.15), atom(0.9, 64.0, 10.0, 0.15)}));
    return classes;
}

namespace {

Example make_example(const SyntheticTaskSpec& spec, const SignalModel& prototype, std::int64_t label,
                     const std::vector<double>& scales, std::uint64_t seed, const char* split) {
    std::mt19937_64 rng(seed);
    const std::int64_t n = spec.signal_length;
    std::uniform_real_distribution<double> upos(0.0, static_cast<double>(n));
    const double s0 = scales[rng() % scales.size()];
    const double t0 = upos(rng);

    SignalModel transformed = prototype.transformed(GroupElement(t0, s0));
    std::vector<double> x = transformed.sample_periodized(n);

    if (std::isfinite(spec.snr_db)) {
        double signal_power = 0.0;
        for (double v : x) signal_power += v * v;
        signal_power /= static_cast<double>(n);
        const double target_noise_power = signal_power / std::pow(10.0, spec.snr_db / 10.0);

        // Band-limited noise: a bank of harmonics below the band limit,
        // rescaled to the target power exactly.
        const int harmonics = 24;
        std::uniform_real_distribution<double> ufreq(0.01, 0.4 * spec.sample_rate);
        std::uniform_real_distribution<double> uphase(0.0, kTwoPi);
        std::normal_distribution<double> uamp(0.0, 1.0);
        std::vector<double> noise(static_cast<std::size_t>(n), 0.0);
        for (int h = 0; h < harmonics; ++h) {
            const double f = ufreq(rng);
            const double ph = uphase(rng);
            const double a = uamp(rng);
            for (std::int64_t z = 0; z < n; ++z) noise[z] += a * std::cos(kTwoPi * f * static_cast<double>(z) + ph);
        }
        double noise_power = 0.0;
        for (double v : noise) noise_power += v * v;
        noise_power /= static_cast<double>(n);
        const double gain = noise_power > 0.0 ? std::sqrt(target_noise_power / noise_power) : 0.0;
        for (std::int64_t z = 0; z < n; ++z) x[z] += gain * noise[z];
    }

    Example e;
    e.samples = Tensor(Shape{1, n}, std::move(x));
    e.label = label;
    e.t0 = t0;
    e.s0 = s0;
    e.split = split;
    return e;
}

}  // namespace

TaskData generate_task(const SyntheticTaskSpec& spec, std::uint64_t seed) {
    check_contract(spec.num_classes >= 2, "task needs at least two classes");
    check_contract(!spec.train_scales.empty() && !spec.test_scales.empty(), "scale sets must be non-empty");

    std::vector<SignalModel> templates = spec.templates.empty() ? default_class_templates() : spec.templates;
    check_contract(spec.num_classes <= static_cast<std::int64_t>(templates.size()),
                   "not enough class templates for num_classes");

    TaskData task;
    task.spec = spec;
    struct SplitPlan {
        const char* name;
        std::vector<Example>* sink;
        std::int64_t per_class;
        const std::vector<double>* scales;
        std::uint64_t id;
    };
    SplitPlan plans[] = {
        {"train", &task.train, spec.train_per_class, &spec.train_scales, 0},
        {"val", &task.val, spec.val_per_class, &spec.val_scales, 1},
        {"test", &task.test, spec.test_per_class, &spec.test_scales, 2},
    };
    for (const auto& plan : plans) {
        std::int64_t index = 0;
        for (std::int64_t cls = 0; cls < spec.num_classes; ++cls) {
            for (std::int64_t i = 0; i < plan.per_class; ++i, ++index) {
                plan.sink->push_back(make_example(spec, templates[cls], cls, *plan.scales,
                                                  mix_seed(seed, plan.id, static_cast<std::uint64_t>(index)),
                                                  plan.name));
            }
        }
    }
    return task;
}

void write_task_manifest(const TaskData& task, const std::string& directory, bool export_wav) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);

    nlohmann::json manifest;
    manifest["signal_length"] = task.spec.signal_length;
    manifest["num_classes"] = task.spec.num_classes;
    manifest["records"] = nlohmann::json::array();

    std::int64_t index = 0;
    auto emit = [&](const std::vector<Example>& split) {
        for (const auto& e : split) {
            nlohmann::json rec;
            rec["label"] = e.label;
            rec["t0"] = e.t0;
            rec["s0"] = e.s0;
            rec["split"] = e.split;
            if (export_wav) {
                const std::string name = "example_" + std::to_string(index) + ".wav";
                WavClip clip;
                clip.sample_rate = 22050;
                // PCM needs [-1, 1): rescale by the split-wide peak.
                Tensor scaled = e.samples;
                double peak = scaled.max_abs();
                if (peak > 0) {
                    for (std::int64_t i = 0; i < scaled.numel(); ++i) scaled[i] = scaled[i] / (peak * 1.01);
                }
                clip.samples = scaled;
                write_wav_file(clip, (fs::path(directory) / name).string());
                rec["path"] = name;
            } else {
                std::vector<double> samples(e.samples.raw(), e.samples.raw() + e.samples.numel());
                rec["samples"] = samples;
            }
            manifest["records"].push_back(std::move(rec));
            ++index;
        }
    };
    emit(task.train);
    emit(task.val);
    emit(task.test);

    std::ofstream out(fs::path(directory) / "manifest.json");
    check(out.good(), ErrorCode::io_error, "cannot write manifest in " + directory);
    out << manifest.dump(2) << "\n";
}

}  // namespace scalewave
