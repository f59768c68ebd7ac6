#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "scalewave/checkpoint.hpp"
#include "scalewave/metrics.hpp"
#include "scalewave/optim.hpp"
#include "scalewave/trainer.hpp"

using namespace scalewave;

TEST_CASE("adam first step moves a zeroed scalar by about lr") {
    Tensor p = Tensor::scalar(0.0);
    OptimizerConfig cfg;
    cfg.kind = OptimizerConfig::Kind::adam;
    cfg.lr = 0.1;
    Optimizer opt(cfg, {&p});
    Tensor g = Tensor::scalar(1.0);
    opt.step({g});
    // bias-corrected first step: lr * 1 / (1 + eps)
    CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-7));
}

TEST_CASE("zero gradient with zero moments leaves parameters unchanged") {
    Tensor p = Tensor::scalar(1.5);
    OptimizerConfig cfg;
    Optimizer opt(cfg, {&p});
    opt.step({Tensor::scalar(0.0)});
    CHECK(p[0] == 1.5);

    Tensor q(Shape{3}, std::vector<double>{1, 2, 3});
    OptimizerConfig sgd;
    sgd.kind = OptimizerConfig::Kind::sgd;
    Optimizer opt2(sgd, {&q});
    opt2.step({Tensor(Shape{3}, 0.0)});
    for (int i = 0; i < 3; ++i) CHECK(q[i] == static_cast<double>(i + 1));
}

TEST_CASE("identical optimizer runs are bitwise identical") {
    auto run = []() {
        std::mt19937_64 rng(3);
        Tensor p(Shape{8});
        p.fill_uniform(rng, -1.0, 1.0);
        OptimizerConfig cfg;
        cfg.lr = 0.05;
        cfg.weight_decay = 1e-4;
        Optimizer opt(cfg, {&p});
        for (int step = 0; step < 20; ++step) {
            Tensor g(Shape{8});
            g.fill_uniform(rng, -1.0, 1.0);
            opt.step({g});
        }
        return p;
    };
    CHECK(max_abs_diff(run(), run()) == 0.0);
}

TEST_CASE("metrics: accuracy, auc, map") {
    SUBCASE("perfect and inverted scores") {
        std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
        std::vector<int> labels{1, 1, 0, 0};
        CHECK(binary_auc(scores, labels) == doctest::Approx(1.0));
        CHECK(average_precision(scores, labels) == doctest::Approx(1.0));
        std::vector<int> inverted{0, 0, 1, 1};
        CHECK(binary_auc(scores, inverted) == doctest::Approx(0.0));
    }

    SUBCASE("random scores on balanced labels sit at 0.5 +- 0.02") {
        std::mt19937_64 rng(5);
        const int n = 10000;
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            scores[i] = u(rng);
            labels[i] = i % 2;
        }
        CHECK(std::fabs(binary_auc(scores, labels) - 0.5) <= 0.02);
    }

    SUBCASE("single-class split is an undefined-metric error") {
        try {
            binary_auc({0.4, 0.6}, {1, 1});
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::undefined_metric);
        }
    }

    SUBCASE("multilabel perfect metrics") {
        Tensor scores(Shape{4, 2}, std::vector<double>{0.9, 0.1, 0.8, 0.3, 0.2, 0.7, 0.1, 0.9});
        Tensor targets(Shape{4, 2}, std::vector<double>{1, 0, 1, 0, 0, 1, 0, 1});
        MultilabelMetrics m = evaluate_multilabel(scores, targets);
        CHECK(m.per_class_auc == doctest::Approx(1.0));
        CHECK(m.per_clip_auc == doctest::Approx(1.0));
        CHECK(m.map == doctest::Approx(1.0));
    }
}

TEST_CASE("checkpoint round trip is bitwise") {
    Checkpoint ckpt;
    ckpt.config_json = "{\"preset\":\"w3-desk\"}";
    ckpt.rng_state = "12345 67890";
    ckpt.metrics_csv = "epoch,loss\n0,1.5\n";
    std::mt19937_64 rng(9);
    Tensor a(Shape{3, 5});
    a.fill_normal(rng, 0.0, 2.0);
    Tensor b(Shape{7});
    b.fill_uniform(rng, -4.0, 4.0);
    ckpt.tensors.emplace_back("layer0.w", a);
    ckpt.tensors.emplace_back("layer1.b", b);

    const std::string path = "/tmp/scalewave_ckpt_test.ckpt";
    save_checkpoint(ckpt, path);
    Checkpoint back = load_checkpoint(path);
    CHECK(back.version == 1);
    CHECK(back.config_json == ckpt.config_json);
    CHECK(back.rng_state == ckpt.rng_state);
    CHECK(back.metrics_csv == ckpt.metrics_csv);
    REQUIRE(back.tensors.size() == 2);
    CHECK(back.tensors[0].first == "layer0.w");
    CHECK(max_abs_diff(back.tensors[0].second, a) == 0.0);
    CHECK(max_abs_diff(back.tensors[1].second, b) == 0.0);
}

namespace {

TaskData tiny_task(std::uint64_t seed) {
    SyntheticTaskSpec spec;
    spec.signal_length = 128;
    spec.train_per_class = 4;
    spec.val_per_class = 2;
    spec.test_per_class = 2;
    return generate_task(spec, seed);
}

ArchitectureConfig tiny_arch() {
    ArchitectureConfig cfg;
    cfg.name = "tiny";
    cfg.classes = 4;
    cfg.grid_j_min = 0;
    cfg.grid_j_max = 2;
    cfg.scale_heuristic = false;
    cfg.layers = {
        LayerSpec::Lifting(7, 4),
        LayerSpec::Pool(4),
        LayerSpec::Group(3, 6, 2),
        LayerSpec::Project(PoolKind::max),
        LayerSpec::GlobalAvgPool(),
        LayerSpec::Dense(4),
    };
    return cfg;
}

}  // namespace

TEST_CASE("lr = 0 keeps metrics constant across epochs") {
    TaskData task = tiny_task(1);
    Model model(tiny_arch(), 2);
    TrainConfig cfg;
    cfg.optimizer.lr = 0.0;
    cfg.epochs = 3;
    cfg.batch_size = 64;  // full batch: per-epoch batchnorm statistics match
    cfg.early_stop = false;  // lr 0 sits below the lr floor by construction
    TrainResult r = train_classifier(model, task, cfg);
    REQUIRE(r.history.size() == 3);
    // batchnorm running stats still settle, so compare the train loss which
    // is computed with batch statistics from frozen parameters
    CHECK(r.history[1].train_loss == doctest::Approx(r.history[2].train_loss).epsilon(1e-9));
}

TEST_CASE("training runs are bitwise reproducible for a fixed seed") {
    auto run = [](std::uint64_t seed) {
        TaskData task = tiny_task(5);
        Model model(tiny_arch(), 7);
        TrainConfig cfg;
        cfg.optimizer.lr = 5e-3;
        cfg.epochs = 2;
        cfg.batch_size = 8;
        cfg.seed = seed;
        TrainResult r = train_classifier(model, task, cfg);
        return r.metrics_csv;
    };
    CHECK(run(11) == run(11));
    CHECK(run(11) != run(12));
}

TEST_CASE("model checkpoint restores inference bitwise") {
    TaskData task = tiny_task(3);
    Model model(tiny_arch(), 4);
    TrainConfig cfg;
    cfg.optimizer.lr = 1e-2;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    train_classifier(model, task, cfg);

    std::vector<std::int64_t> idx{0, 1, 2, 3};
    Tensor batch = batch_inputs(task.test, idx);
    Tensor before = model.predict(batch);

    const std::string path = "/tmp/scalewave_model_ckpt.ckpt";
    save_model_checkpoint(model, nullptr, "{}", "", "", path);

    Model fresh(tiny_arch(), 999);  // different init
    load_model_checkpoint(fresh, nullptr, path);
    Tensor after = fresh.predict(batch);
    CHECK(max_abs_diff(before, after) == 0.0);
}

TEST_CASE("nan loss aborts with a diagnostic naming the first offending node") {
    TaskData task = tiny_task(8);
    // Poison the dense head: NaN there reaches the loss (max pooling would
    // swallow NaN under comparison semantics in earlier layers).
    Model model(tiny_arch(), 9);
    auto params = model.parameters();
    auto names = model.parameter_names();
    std::size_t dense_w = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i].find(".w") != std::string::npos) dense_w = i;
    }
    REQUIRE(dense_w < names.size());
    (*params[dense_w])[0] = std::numeric_limits<double>::quiet_NaN();
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 8;
    CHECK_THROWS_WITH_AS(train_classifier(model, task, cfg), doctest::Contains("non-finite"), Error);
}
