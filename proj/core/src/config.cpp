#include "scalewave/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace scalewave {

namespace {

using nlohmann::json;

const char* kind_name(LayerSpec::Kind k) {
    switch (k) {
        case LayerSpec::Kind::lifting: return "lifting";
        case LayerSpec::Kind::group: return "group";
        case LayerSpec::Kind::conv: return "conv";
        case LayerSpec::Kind::pool: return "pool";
        case LayerSpec::Kind::dense: return "dense";
        case LayerSpec::Kind::project: return "project";
        case LayerSpec::Kind::global_avg_pool: return "global-avg-pool";
        case LayerSpec::Kind::global_max_pool: return "global-max-pool";
        case LayerSpec::Kind::dropout: return "dropout";
        case LayerSpec::Kind::flatten: return "flatten";
        case LayerSpec::Kind::residual: return "residual-block";
    }
    return "?";
}

LayerSpec::Kind kind_from_name(const std::string& name) {
    for (auto k : {LayerSpec::Kind::lifting, LayerSpec::Kind::group, LayerSpec::Kind::conv, LayerSpec::Kind::pool,
                   LayerSpec::Kind::dense, LayerSpec::Kind::project, LayerSpec::Kind::global_avg_pool,
                   LayerSpec::Kind::global_max_pool, LayerSpec::Kind::dropout, LayerSpec::Kind::flatten,
                   LayerSpec::Kind::residual}) {
        if (name == kind_name(k)) return k;
    }
    fail(ErrorCode::config_invalid, "unknown layer kind '" + name + "'");
}

json layer_to_json(const LayerSpec& l) {
    json j;
    j["kind"] = kind_name(l.kind);
    if (l.channels) j["channels"] = l.channels;
    if (l.kernel) j["kernel"] = l.kernel;
    if (l.kind == LayerSpec::Kind::group) j["scales"] = l.scale_extent;
    if (l.pool) j["window"] = l.pool;
    if (l.rate != 0.0) j["rate"] = l.rate;
    if (l.kind == LayerSpec::Kind::dense && l.relu) j["relu"] = true;
    if (l.kind == LayerSpec::Kind::project) j["pool"] = l.project_kind == PoolKind::max ? "max" : "mean";
    if (!l.block.empty()) {
        j["block"] = json::array();
        for (const auto& sub : l.block) j["block"].push_back(layer_to_json(sub));
    }
    return j;
}

LayerSpec layer_from_json(const json& j) {
    LayerSpec l;
    l.kind = kind_from_name(j.at("kind").get<std::string>());
    l.channels = j.value("channels", static_cast<std::int64_t>(0));
    l.kernel = j.value("kernel", static_cast<std::int64_t>(0));
    l.scale_extent = j.value("scales", static_cast<std::int64_t>(1));
    l.pool = j.value("window", static_cast<std::int64_t>(0));
    l.rate = j.value("rate", 0.0);
    l.relu = j.value("relu", false);
    if (j.contains("pool")) l.project_kind = j["pool"] == "mean" ? PoolKind::mean : PoolKind::max;
    if (j.contains("block")) {
        for (const auto& sub : j["block"]) l.block.push_back(layer_from_json(sub));
    }
    return l;
}

json arch_to_json_obj(const ArchitectureConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["input_channels"] = cfg.input_channels;
    j["input_length"] = cfg.input_length;
    j["grid"] = {{"base", cfg.grid_base}, {"j_min", cfg.grid_j_min}, {"j_max", cfg.grid_j_max}};
    j["scale_heuristic"] = cfg.scale_heuristic;
    j["lambda"] = cfg.lambda;
    j["padding"] = cfg.padding == Padding::zero ? "zero" : "circular";
    j["head"] = cfg.head == HeadKind::softmax ? "softmax" : "sigmoid-multilabel";
    j["classes"] = cfg.classes;
    j["width_multiplier"] = cfg.width_multiplier;
    j["spline_order"] = cfg.spline_order;
    j["layers"] = json::array();
    for (const auto& l : cfg.layers) j["layers"].push_back(layer_to_json(l));
    return j;
}

ArchitectureConfig arch_from_json_obj(const json& j) {
    ArchitectureConfig cfg;
    if (j.contains("preset")) cfg = preset_architecture(j["preset"].get<std::string>());
    cfg.name = j.value("name", cfg.name);
    cfg.input_channels = j.value("input_channels", cfg.input_channels);
    cfg.input_length = j.value("input_length", cfg.input_length);
    if (j.contains("grid")) {
        cfg.grid_base = j["grid"].value("base", cfg.grid_base);
        cfg.grid_j_min = j["grid"].value("j_min", cfg.grid_j_min);
        cfg.grid_j_max = j["grid"].value("j_max", cfg.grid_j_max);
    }
    cfg.scale_heuristic = j.value("scale_heuristic", cfg.scale_heuristic);
    cfg.lambda = j.value("lambda", cfg.lambda);
    if (j.contains("padding")) cfg.padding = j["padding"] == "circular" ? Padding::circular : Padding::zero;
    if (j.contains("head"))
        cfg.head = j["head"] == "sigmoid-multilabel" ? HeadKind::sigmoid_multilabel : HeadKind::softmax;
    cfg.classes = j.value("classes", cfg.classes);
    cfg.width_multiplier = j.value("width_multiplier", cfg.width_multiplier);
    cfg.spline_order = j.value("spline_order", cfg.spline_order);
    if (j.contains("layers")) {
        cfg.layers.clear();
        for (const auto& l : j["layers"]) cfg.layers.push_back(layer_from_json(l));
    }
    return cfg;
}

void train_from_json_obj(const json& j, TrainConfig& cfg) {
    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        if (o.contains("kind"))
            cfg.optimizer.kind = o["kind"] == "sgd" ? OptimizerConfig::Kind::sgd : OptimizerConfig::Kind::adam;
        cfg.optimizer.lr = o.value("lr", cfg.optimizer.lr);
        cfg.optimizer.weight_decay = o.value("weight_decay", cfg.optimizer.weight_decay);
        cfg.optimizer.momentum = o.value("momentum", cfg.optimizer.momentum);
        cfg.optimizer.nesterov = o.value("nesterov", cfg.optimizer.nesterov);
    }
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.plateau_factor = j.value("plateau_factor", cfg.plateau_factor);
    cfg.plateau_patience = j.value("plateau_patience", cfg.plateau_patience);
    cfg.lr_floor = j.value("lr_floor", cfg.lr_floor);
    cfg.early_stop = j.value("early_stop", cfg.early_stop);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.deterministic = j.value("deterministic", cfg.deterministic);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
}

void task_from_json_obj(const json& j, SyntheticTaskSpec& spec) {
    spec.num_classes = j.value("num_classes", spec.num_classes);
    spec.signal_length = j.value("signal_length", spec.signal_length);
    spec.train_per_class = j.value("train_per_class", spec.train_per_class);
    spec.val_per_class = j.value("val_per_class", spec.val_per_class);
    spec.test_per_class = j.value("test_per_class", spec.test_per_class);
    if (j.contains("train_scales")) spec.train_scales = j["train_scales"].get<std::vector<double>>();
    if (j.contains("val_scales")) spec.val_scales = j["val_scales"].get<std::vector<double>>();
    if (j.contains("test_scales")) spec.test_scales = j["test_scales"].get<std::vector<double>>();
    if (j.contains("snr_db")) {
        if (j["snr_db"].is_string())
            spec.snr_db = std::numeric_limits<double>::infinity();
        else
            spec.snr_db = j["snr_db"].get<double>();
    }
}

}  // namespace

std::string architecture_to_json(const ArchitectureConfig& cfg) { return arch_to_json_obj(cfg).dump(2); }

ArchitectureConfig architecture_from_json(const std::string& text) {
    return arch_from_json_obj(json::parse(text));
}

RunConfig run_config_from_json(const std::string& text) {
    json j = json::parse(text);
    RunConfig cfg;
    if (j.contains("arch"))
        cfg.arch = arch_from_json_obj(j["arch"]);
    else if (j.contains("preset"))
        cfg.arch = preset_architecture(j["preset"].get<std::string>());
    if (j.contains("train")) train_from_json_obj(j["train"], cfg.train);
    if (j.contains("task")) task_from_json_obj(j["task"], cfg.task);
    return cfg;
}

RunConfig run_config_from_file(const std::string& path) {
    std::ifstream in(path);
    check(in.good(), ErrorCode::io_error, "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return run_config_from_json(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["arch"] = arch_to_json_obj(cfg.arch);
    j["train"] = {
        {"optimizer",
         {{"kind", cfg.train.optimizer.kind == OptimizerConfig::Kind::sgd ? "sgd" : "adam"},
          {"lr", cfg.train.optimizer.lr},
          {"weight_decay", cfg.train.optimizer.weight_decay},
          {"momentum", cfg.train.optimizer.momentum},
          {"nesterov", cfg.train.optimizer.nesterov}}},
        {"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"plateau_factor", cfg.train.plateau_factor},
        {"plateau_patience", cfg.train.plateau_patience},
        {"lr_floor", cfg.train.lr_floor},
        {"early_stop", cfg.train.early_stop},
        {"seed", cfg.train.seed},
        {"deterministic", cfg.train.deterministic},
        {"out_dir", cfg.train.out_dir},
    };
    j["task"] = {
        {"num_classes", cfg.task.num_classes},
        {"signal_length", cfg.task.signal_length},
        {"train_per_class", cfg.task.train_per_class},
        {"val_per_class", cfg.task.val_per_class},
        {"test_per_class", cfg.task.test_per_class},
        {"train_scales", cfg.task.train_scales},
        {"val_scales", cfg.task.val_scales},
        {"test_scales", cfg.task.test_scales},
        {"snr_db", std::isfinite(cfg.task.snr_db) ? json(cfg.task.snr_db) : json("inf")},
    };
    return j.dump(2);
}

std::string config_schema() {
    return R"(config file (JSON):
{
  "preset": "<name>"            # optional: start from a preset architecture
  "arch": {                     # optional: override / define the architecture
    "name": str, "input_channels": int, "input_length": int (0 = flexible),
    "grid": {"base": float > 1, "j_min": int, "j_max": int},
    "scale_heuristic": bool, "lambda": float, "padding": "zero"|"circular",
    "head": "softmax"|"sigmoid-multilabel", "classes": int,
    "width_multiplier": float > 0, "spline_order": 0..3,
    "layers": [ {"kind": "lifting"|"group"|"conv"|"pool"|"dense"|"project"|
                 "global-avg-pool"|"dropout"|"flatten"|"residual-block",
                 "channels": int, "kernel": odd int, "scales": int,
                 "window": int, "rate": float, "relu": bool,
                 "pool": "max"|"mean", "block": [ ... ]} ]
  },
  "train": { "optimizer": {"kind": "adam"|"sgd", "lr": float,
             "weight_decay": float, "momentum": float, "nesterov": bool},
             "epochs": int, "batch_size": int, "plateau_factor": float,
             "plateau_patience": int, "lr_floor": float, "early_stop": bool,
             "seed": int, "deterministic": bool, "out_dir": str },
  "task": { "num_classes": int, "signal_length": int,
            "train_per_class": int, "val_per_class": int, "test_per_class": int,
            "train_scales": [float], "val_scales": [float], "test_scales": [float],
            "snr_db": float | "inf" }
}
precedence: command-line flags > config file > preset defaults
)";
}

}  // namespace scalewave
