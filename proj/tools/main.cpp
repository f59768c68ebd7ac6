// scalewave command-line interface: verification, training, evaluation and
// export workflows on top of the core library.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "scalewave/config.hpp"
#include "scalewave/layers.hpp"
#include "scalewave/metrics.hpp"
#include "scalewave/model.hpp"
#include "scalewave/precision.hpp"
#include "scalewave/spline.hpp"
#include "scalewave/synthetic.hpp"
#include "scalewave/trainer.hpp"
#include "scalewave/transforms.hpp"
#include "scalewave/wav.hpp"

namespace fs = std::filesystem;
using namespace scalewave;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssertionFailed = 1;
constexpr int kExitUsage = 2;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    check(out.good(), ErrorCode::io_error, "cannot write " + path);
    out << text;
}

struct GSpec {
    double t0 = 0.0;
    double s0 = 1.0;
};

GSpec parse_g(const std::string& text) {
    // "t0=7,s0=2"
    GSpec g;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto eq = part.find('=');
        check(eq != std::string::npos, ErrorCode::invalid_argument, "bad --g component '" + part + "'");
        const std::string key = part.substr(0, eq);
        const double value = std::stod(part.substr(eq + 1));
        if (key == "t0") g.t0 = value;
        else if (key == "s0") g.s0 = value;
        else fail(ErrorCode::invalid_argument, "unknown --g key '" + key + "'");
    }
    return g;
}

RunConfig resolve_config(const std::string& config_path, const std::string& preset) {
    RunConfig cfg;
    if (!config_path.empty()) {
        cfg = run_config_from_file(config_path);
    }
    if (!preset.empty()) {
        cfg.arch = preset_architecture(preset);
    }
    if (cfg.arch.layers.empty()) {
        cfg.arch = preset_architecture("w3-desk");
    }
    return cfg;
}

int cmd_verify_transforms(int trials, std::int64_t n, std::uint64_t seed, const std::string& out_dir) {
    std::ostringstream csv;
    csv << "property,trials,max_rel_err,aux,hard_assert,pass,note\n";
    bool all_pass = true;
    for (TfProperty p : all_tf_properties()) {
        TheoremCheck r = verify_theorem1(p, trials, n, seed);
        std::string note = r.note;
        for (auto& c : note)
            if (c == ',') c = ';';
        csv << tf_property_name(p) << ',' << r.trials << ',' << r.max_rel_err << ',' << r.aux << ','
            << (r.hard_assert ? 1 : 0) << ',' << (r.pass ? 1 : 0) << ',' << note << '\n';
        if (r.hard_assert && !r.pass) all_pass = false;
        std::printf("%-34s %s  max_rel_err=%.3e %s\n", tf_property_name(p), r.pass ? "PASS" : "FAIL",
                    r.max_rel_err, r.note.c_str());
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text((fs::path(out_dir) / "transforms_report.csv").string(), csv.str());
    }
    return all_pass ? kExitOk : kExitAssertionFailed;
}

int cmd_verify_equivariance(const std::string& preset, const std::string& config_path, const std::string& g_text,
                            std::int64_t n, std::uint64_t seed, const std::string& out_dir) {
    RunConfig cfg = resolve_config(config_path, preset);
    Model model(cfg.arch, seed);
    EquivariantStack stack = model.probe_stack(2);
    const GSpec g = parse_g(g_text);
    SignalModel trial = random_band_limited_model(seed + 1, n, 3, 0.05, 0.15, 0.35);
    ProbeReport report = equivariance_probe(stack, GroupElement(g.t0, g.s0), trial, n);

    const bool pure_shift = g.s0 == 1.0;
    std::ostringstream csv;
    csv << "layer,rel_err,threshold,pass\n";
    bool all_pass = true;
    std::printf("g = (t0=%g, s0=%g), domain: %s\n", g.t0, g.s0, report.domain.c_str());
    for (std::size_t i = 0; i < report.per_layer_rel_err.size(); ++i) {
        double threshold;
        if (pure_shift) threshold = 1e-12;
        else if (i == 0) threshold = 2e-2;   // lifting, discretization-limited
        else threshold = 1e-6;               // group layers, exact domain
        const double err = report.per_layer_rel_err[i];
        const bool pass = err <= threshold;
        all_pass = all_pass && pass;
        const std::string name = i == 0 ? "lifting" : ("group" + std::to_string(i));
        csv << name << ',' << err << ',' << threshold << ',' << (pass ? 1 : 0) << '\n';
        std::printf("  %-10s rel_err=%.3e threshold=%.0e %s\n", name.c_str(), err, threshold,
                    pass ? "PASS" : "FAIL");
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text((fs::path(out_dir) / "equivariance_report.csv").string(), csv.str());
    }
    return all_pass ? kExitOk : kExitAssertionFailed;
}

int cmd_train(const std::string& config_path, const std::string& preset, std::uint64_t seed, const std::string& out_dir,
              std::int64_t epochs, double lr, double lambda) {
    RunConfig cfg = resolve_config(config_path, preset);
    if (seed != 0) cfg.train.seed = seed;
    if (!out_dir.empty()) cfg.train.out_dir = out_dir;
    if (epochs > 0) cfg.train.epochs = epochs;
    if (lr > 0) cfg.train.optimizer.lr = lr;
    if (lambda >= 0) cfg.arch.lambda = lambda;

    TaskData task = generate_task(cfg.task, cfg.train.seed);
    Model model(cfg.arch, cfg.train.seed);
    std::printf("training %s (%lld params) on the synthetic task, %lld epochs\n", cfg.arch.name.c_str(),
                (long long)model.count_parameters(), (long long)cfg.train.epochs);
    TrainResult result = train_classifier(model, task, cfg.train);
    const double test_acc = evaluate_accuracy(model, task.test);
    std::printf("final: train_acc=%.4f val_acc=%.4f test_acc=%.4f\n",
                result.history.empty() ? 0.0 : result.history.back().train_acc, result.best_val_acc, test_acc);
    if (!cfg.train.out_dir.empty()) {
        save_model_checkpoint(model, nullptr, run_config_to_json(cfg), result.metrics_csv, "",
                              (fs::path(cfg.train.out_dir) / "final.ckpt").string());
        write_text((fs::path(cfg.train.out_dir) / "config.json").string(), run_config_to_json(cfg));
    }
    return kExitOk;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path, const std::string& preset,
             const std::string& split, std::uint64_t seed) {
    RunConfig cfg = resolve_config(config_path, preset);
    Model model(cfg.arch, seed != 0 ? seed : cfg.train.seed);
    if (!checkpoint_path.empty()) load_model_checkpoint(model, nullptr, checkpoint_path);
    TaskData task = generate_task(cfg.task, seed != 0 ? seed : cfg.train.seed);
    const std::vector<Example>* examples = &task.test;
    if (split == "train") examples = &task.train;
    else if (split == "val") examples = &task.val;
    const double acc = evaluate_accuracy(model, *examples);
    std::printf("%s accuracy: %.4f over %zu examples\n", split.c_str(), acc, examples->size());
    return kExitOk;
}

int cmd_print_arch(const std::string& preset, const std::string& config_path) {
    RunConfig cfg = resolve_config(config_path, preset);
    Model model(cfg.arch, 1);
    std::printf("%s  (input [%lld x %s], grid base %g, j %d..%d, %lld classes)\n", cfg.arch.name.c_str(),
                (long long)cfg.arch.input_channels,
                cfg.arch.input_length > 0 ? std::to_string(cfg.arch.input_length).c_str() : "flexible",
                cfg.arch.grid_base, cfg.arch.grid_j_min, cfg.arch.grid_j_max, (long long)cfg.arch.classes);
    std::printf("%-10s %-28s %10s %8s %7s %7s\n", "layer", "detail", "params", "out_ch", "scales", "kernel");
    for (const auto& info : model.layer_table()) {
        std::printf("%-10s %-28s %10lld %8lld %7lld %7lld\n", info.name.c_str(), info.detail.c_str(),
                    (long long)info.params, (long long)info.out_channels, (long long)info.scales,
                    (long long)info.kernel_width);
    }
    std::printf("total learnable parameters: %lld\n", (long long)model.count_parameters());
    return kExitOk;
}

void export_filter_bank(const Tensor& coeffs, const SplineGeometry& geom, const ScaleGrid& grid,
                        const std::string& base_path) {
    // Sampled taps per grid scale. Header: cout, cin, scale count, widths;
    // payload: 64-bit little-endian floats in header order.
    const std::int64_t cout = coeffs.dim(0), cin = coeffs.dim(1);
    const std::int64_t rows = coeffs.numel() / geom.num_knots;

    std::ofstream bin(base_path + ".bin", std::ios::binary);
    std::ostringstream csv;
    csv << "scale,row,tap,value\n";
    auto put_u32 = [&bin](std::uint32_t v) { bin.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(static_cast<std::uint32_t>(cout));
    put_u32(static_cast<std::uint32_t>(cin));
    put_u32(static_cast<std::uint32_t>(grid.size()));
    std::vector<Tensor> sampled;
    for (std::int64_t i = 0; i < grid.size(); ++i) {
        Tensor basis = spline_basis_matrix(geom, grid.scale(i));
        const std::int64_t width = basis.dim(0);
        put_u32(static_cast<std::uint32_t>(width));
        Tensor taps(Shape{rows, width});
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t z = 0; z < width; ++z) {
                double acc = 0.0;
                for (std::int64_t k = 0; k < geom.num_knots; ++k)
                    acc += coeffs[r * geom.num_knots + k] * basis[z * geom.num_knots + k];
                taps[r * width + z] = acc;
                csv << grid.scale(i) << ',' << r << ',' << z << ',' << acc << '\n';
            }
        sampled.push_back(std::move(taps));
    }
    for (const Tensor& taps : sampled) {
        bin.write(reinterpret_cast<const char*>(taps.raw()),
                  static_cast<std::streamsize>(taps.numel() * sizeof(double)));
    }
    write_text(base_path + ".csv", csv.str());
}

int cmd_export_filters(const std::string& checkpoint_path, const std::string& config_path, const std::string& preset,
                       const std::string& out_dir, std::uint64_t seed) {
    RunConfig cfg = resolve_config(config_path, preset);
    Model model(cfg.arch, seed);
    if (!checkpoint_path.empty()) load_model_checkpoint(model, nullptr, checkpoint_path);
    fs::create_directories(out_dir);

    const auto params = model.parameters();
    const auto names = model.parameter_names();
    const ScaleGrid grid = ScaleGrid::exponential(cfg.arch.grid_base, cfg.arch.grid_j_min, cfg.arch.grid_j_max);
    int exported = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (names[i].find("spline_coeffs") == std::string::npos) continue;
        const Tensor& coeffs = *params[i];
        SplineGeometry geom = make_spline_geometry(coeffs.dim(-1), cfg.arch.spline_order);
        std::string base = names[i];
        for (auto& c : base)
            if (c == '.') c = '_';
        export_filter_bank(coeffs, geom, grid, (fs::path(out_dir) / base).string());
        ++exported;
    }
    std::printf("exported %d spline filter banks to %s\n", exported, out_dir.c_str());
    return kExitOk;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir, std::uint64_t seed, bool wav) {
    RunConfig cfg = resolve_config(config_path, "");
    TaskData task = generate_task(cfg.task, seed);
    write_task_manifest(task, out_dir, wav);
    std::printf("wrote %zu train / %zu val / %zu test examples to %s\n", task.train.size(), task.val.size(),
                task.test.size(), out_dir.c_str());
    return kExitOk;
}

int cmd_selftest() {
    const auto start = std::chrono::steady_clock::now();
    int failures = 0;
    auto report = [&failures](const char* name, bool pass, double value) {
        std::printf("%-46s %s (%.3e)\n", name, pass ? "PASS" : "FAIL", value);
        if (!pass) ++failures;
    };

    {  // group axioms
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(-50.0, 50.0);
        std::uniform_real_distribution<double> logs(-3.0, 3.0);
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            GroupElement g1(u(rng), std::exp(logs(rng))), g2(u(rng), std::exp(logs(rng))), g3(u(rng), std::exp(logs(rng)));
            GroupElement gi = group_product(g1, group_inverse(g1));
            worst = std::max(worst, std::fabs(gi.u) / std::max(1.0, std::fabs(g1.u)));
            worst = std::max(worst, std::fabs(gi.s - 1.0));
            GroupElement a = group_product(group_product(g1, g2), g3);
            GroupElement b = group_product(g1, group_product(g2, g3));
            worst = std::max(worst, std::fabs(a.u - b.u) / std::max(1.0, std::fabs(a.u)));
            worst = std::max(worst, std::fabs(a.s - b.s) / a.s);
        }
        report("group axioms (1e4 random elements)", worst <= 1e-12, worst);
    }

    {  // spline partition of unity
        double worst = 0.0;
        for (int order = 0; order <= 3; ++order)
            for (int i = 0; i < 200; ++i) {
                const double x = -3.0 + 6.0 * i / 199.0;
                double sum = 0.0;
                for (int k = -8; k <= 8; ++k) sum += bspline_basis(x - k, order);
                worst = std::max(worst, std::fabs(sum - 1.0));
            }
        report("B-spline partition of unity", worst <= 1e-12, worst);
    }

    {  // theorem-1 hard assertions (reduced trial count for the time budget)
        bool all = true;
        double worst = 0.0;
        for (TfProperty p : all_tf_properties()) {
            TheoremCheck r = verify_theorem1(p, 5, 1024, 7);
            if (r.hard_assert) {
                all = all && r.pass;
                worst = std::max(worst, r.max_rel_err);
            }
        }
        report("theorem-1 hard assertions", all, worst);
    }

    {  // gradient check on a small conv net
        std::mt19937_64 rng(5);
        Tensor x(Shape{2, 1, 10});
        x.fill_uniform(rng, -1.0, 1.0);
        Tensor k(Shape{2, 1, 3});
        k.fill_uniform(rng, -0.5, 0.5);
        auto loss_of = [&x](const Tensor& kernel) {
            Tape tape;
            Value xv = tape.leaf(x, false);
            Value kv = tape.leaf(kernel, true);
            Conv1dSpec spec;
            spec.pad = 1;
            Value y = conv1d(tape, xv, kv, spec);
            Value l = reduce_sum(tape, mul(tape, y, y));
            return std::make_pair(tape.value(l).scalar_value(), tape);
        };
        Tape tape;
        Value xv = tape.leaf(x, false);
        Value kv = tape.leaf(k, true);
        Conv1dSpec spec;
        spec.pad = 1;
        Value y = conv1d(tape, xv, kv, spec);
        Value l = reduce_sum(tape, mul(tape, y, y));
        tape.backward(l);
        const Tensor& analytic = tape.grad(kv);
        double worst = 0.0;
        const double eps = 1e-4;
        Tensor kk = k;
        for (std::int64_t i = 0; i < kk.numel(); ++i) {
            const double saved = kk[i];
            kk[i] = saved + eps;
            const double up = loss_of(kk).first;
            kk[i] = saved - eps;
            const double down = loss_of(kk).first;
            kk[i] = saved;
            const double fd = (up - down) / (2 * eps);
            worst = std::max(worst, std::fabs(fd - analytic[i]) / std::max(1.0, std::fabs(analytic[i])));
        }
        report("conv1d gradient vs finite differences", worst <= 1e-5, worst);
    }

    {  // equivariance probes on the desk preset
        Model model(preset_architecture("w3-desk"), 3);
        EquivariantStack stack = model.probe_stack(2);
        SignalModel trial = random_band_limited_model(17, 1024, 3, 0.05, 0.15, 0.35);
        ProbeReport shift = equivariance_probe(stack, GroupElement(9, 1), trial, 1024);
        report("translation equivariance (t0=9)", shift.overall <= 1e-12, shift.overall);
        ProbeReport dil = equivariance_probe(stack, GroupElement(0, 2), trial, 1024);
        bool ok = dil.per_layer_rel_err[0] <= 2e-2;
        for (std::size_t i = 1; i < dil.per_layer_rel_err.size(); ++i) ok = ok && dil.per_layer_rel_err[i] <= 1e-6;
        report("scale equivariance probes (s0=2)", ok, dil.overall);
    }

    const auto elapsed =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - start).count();
    std::printf("selftest finished in %llds\n", static_cast<long long>(elapsed));
    return failures == 0 ? kExitOk : kExitAssertionFailed;
}

}  // namespace

int main(int argc, char** argv) {
    init_precision_from_env();

    CLI::App app{"scalewave: translation- and scale-equivariant 1-D networks with a time-frequency oracle suite"};
    app.require_subcommand(1);
    app.footer(config_schema());

    int threads = 1;
    bool deterministic = false;
    app.add_option("--threads", threads, "worker pool size (evaluation and verification trials)");
    app.add_flag("--deterministic", deterministic, "force deterministic reduction ordering");

    // verify-transforms
    auto* vt = app.add_subcommand("verify-transforms", "run the time-frequency theorem suite, emit CSV");
    int vt_trials = 20;
    std::int64_t vt_n = 1024;
    std::uint64_t vt_seed = 7;
    std::string vt_out;
    vt->add_option("--trials", vt_trials, "trials per property");
    vt->add_option("--n", vt_n, "signal length (power of two)");
    vt->add_option("--seed", vt_seed, "rng seed");
    vt->add_option("--out", vt_out, "output directory for the CSV report");

    // verify-equivariance
    auto* ve = app.add_subcommand("verify-equivariance", "per-layer equivariance probe of a preset or config");
    std::string ve_preset, ve_config, ve_g = "t0=7,s0=2", ve_out;
    std::int64_t ve_n = 1024;
    std::uint64_t ve_seed = 3;
    ve->add_option("--preset", ve_preset, "architecture preset name");
    ve->add_option("--config", ve_config, "config file (JSON)");
    ve->add_option("--g", ve_g, "group element, e.g. t0=7,s0=2");
    ve->add_option("--n", ve_n, "probe signal length");
    ve->add_option("--seed", ve_seed, "model/trial seed");
    ve->add_option("--out", ve_out, "output directory for the CSV report");

    // train
    auto* tr = app.add_subcommand("train", "train a model on the synthetic task");
    std::string tr_config, tr_preset, tr_out;
    std::uint64_t tr_seed = 0;
    std::int64_t tr_epochs = 0;
    double tr_lr = 0.0, tr_lambda = -1.0;
    tr->add_option("--config", tr_config, "config file (JSON)");
    tr->add_option("--preset", tr_preset, "architecture preset (overrides config)");
    tr->add_option("--seed", tr_seed, "seed (overrides config)");
    tr->add_option("--out", tr_out, "output directory (metrics.csv, checkpoints)");
    tr->add_option("--epochs", tr_epochs, "epoch count (overrides config)");
    tr->add_option("--lr", tr_lr, "learning rate (overrides config)");
    tr->add_option("--lambda", tr_lambda, "wavelet penalty weight (overrides config)");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a task split");
    std::string ev_ckpt, ev_config, ev_preset, ev_split = "test";
    std::uint64_t ev_seed = 0;
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint path");
    ev->add_option("--config", ev_config, "config file (JSON)");
    ev->add_option("--preset", ev_preset, "architecture preset");
    ev->add_option("--split", ev_split, "train | val | test");
    ev->add_option("--seed", ev_seed, "task seed");

    // print-arch
    auto* pa = app.add_subcommand("print-arch", "dump the resolved layer table");
    std::string pa_preset, pa_config;
    pa->add_option("--preset", pa_preset, "architecture preset name");
    pa->add_option("--config", pa_config, "config file (JSON)");

    // export-filters
    auto* ef = app.add_subcommand("export-filters", "export sampled spline filter banks (CSV + raw binary)");
    std::string ef_ckpt, ef_config, ef_preset, ef_out = "filters";
    std::uint64_t ef_seed = 1;
    ef->add_option("--checkpoint", ef_ckpt, "checkpoint path (optional)");
    ef->add_option("--config", ef_config, "config file (JSON)");
    ef->add_option("--preset", ef_preset, "architecture preset");
    ef->add_option("--out", ef_out, "output directory");
    ef->add_option("--seed", ef_seed, "model seed when no checkpoint is given");

    // gen-data
    auto* gd = app.add_subcommand("gen-data", "generate the synthetic task and write a manifest");
    std::string gd_config, gd_out = "data";
    std::uint64_t gd_seed = 1;
    bool gd_wav = false;
    gd->add_option("--config", gd_config, "config file (JSON)");
    gd->add_option("--out", gd_out, "output directory");
    gd->add_option("--seed", gd_seed, "task seed");
    gd->add_flag("--wav", gd_wav, "export examples as PCM16 wav files");

    // selftest
    auto* st = app.add_subcommand("selftest", "run the full property suite (< 5 minutes, one core)");
    (void)st;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (vt->parsed()) return cmd_verify_transforms(vt_trials, vt_n, vt_seed, vt_out);
        if (ve->parsed()) return cmd_verify_equivariance(ve_preset, ve_config, ve_g, ve_n, ve_seed, ve_out);
        if (tr->parsed()) return cmd_train(tr_config, tr_preset, tr_seed, tr_out, tr_epochs, tr_lr, tr_lambda);
        if (ev->parsed()) return cmd_eval(ev_ckpt, ev_config, ev_preset, ev_split, ev_seed);
        if (pa->parsed()) return cmd_print_arch(pa_preset, pa_config);
        if (ef->parsed()) return cmd_export_filters(ef_ckpt, ef_config, ef_preset, ef_out, ef_seed);
        if (gd->parsed()) return cmd_gen_data(gd_config, gd_out, gd_seed, gd_wav);
        if (st->parsed()) return cmd_selftest();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::invalid_argument || e.code() == ErrorCode::config_invalid ? kExitUsage
                                                                                                : kExitAssertionFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAssertionFailed;
    }
    return kExitUsage;
}
