#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scalewave/config.hpp"
#include "scalewave/model.hpp"
#include "support/gradcheck.hpp"

using namespace scalewave;

namespace {

Tensor random_batch(std::int64_t b, std::int64_t c, std::int64_t t, std::uint64_t seed) {
    Tensor x(Shape{b, c, t});
    std::mt19937_64 rng(seed);
    x.fill_uniform(rng, -1.0, 1.0);
    return x;
}

}  // namespace

TEST_CASE("validation rejects malformed architectures") {
    ArchitectureConfig cfg = preset_architecture("w3-desk");

    SUBCASE("zero width multiplier") {
        cfg.width_multiplier = 0.0;
        CHECK_THROWS_WITH_AS(Model(cfg, 1), doctest::Contains("width_multiplier"), Error);
    }
    SUBCASE("even kernel widths") {
        cfg.layers[0].kernel = 16;
        CHECK_THROWS_WITH_AS(Model(cfg, 1), doctest::Contains("even kernel"), Error);
    }
    SUBCASE("group conv without lifting") {
        ArchitectureConfig bad = preset_architecture("cnn-desk");
        bad.layers.insert(bad.layers.begin(), LayerSpec::Group(3, 8, 2));
        CHECK_THROWS_AS(Model(bad, 1), Error);
    }
    SUBCASE("missing projection in a W-net") {
        ArchitectureConfig bad = preset_architecture("w3-desk");
        bad.layers.erase(bad.layers.begin() + 5);  // drop project
        CHECK_THROWS_AS(Model(bad, 1), Error);
    }
    SUBCASE("lifting after another learnable layer") {
        ArchitectureConfig bad = preset_architecture("w3-desk");
        bad.layers.insert(bad.layers.begin(), LayerSpec::Conv(5, 4));
        CHECK_THROWS_AS(Model(bad, 1), Error);
    }
}

TEST_CASE("preset w3 structure: lifting kernel 79, 150 filters, 9 scales, 3 learnable layers") {
    ArchitectureConfig cfg = preset_architecture("w3");
    Model model(cfg, 1);
    CHECK(model.learnable_layer_count() == 3);  // lifting, group, dense head
    const auto table = model.layer_table();
    CHECK(table[0].kernel_width == 79);
    CHECK(table[0].out_channels == 150);
    CHECK(table[0].scales == 9);
    bool has_group = false;
    for (const auto& info : table) {
        if (info.detail.rfind("group", 0) == 0) {
            has_group = true;
            CHECK(info.out_channels == 150);
        }
    }
    CHECK(has_group);
}

TEST_CASE("preset w3pow9 structure: ten group layers, dense [360,50], sigmoid head") {
    ArchitectureConfig cfg = preset_architecture("w3pow9");
    CHECK(cfg.head == HeadKind::sigmoid_multilabel);
    Model model(cfg, 1);
    std::int64_t groups = 0;
    for (const auto& l : cfg.layers)
        if (l.kind == LayerSpec::Kind::group) ++groups;
    CHECK(groups == 10);
    const auto table = model.layer_table();
    bool saw_dense = false;
    for (const auto& info : table) {
        if (info.detail.rfind("dense", 0) == 0) {
            CHECK(info.detail == "dense 360 -> 50");
            saw_dense = true;
        }
    }
    CHECK(saw_dense);
}

TEST_CASE("parameter counts reproduce Table 1 within 5 percent") {
    const struct {
        const char* name;
        double expected;
    } cases[] = {
        {"w3", 219.45e3}, {"w5", 558.03e3}, {"w11", 1.806e6},
        {"w18", 3.759e6}, {"w34", 4.021e6}, {"w3pow9", 2.404e6},
    };
    for (const auto& c : cases) {
        Model model(preset_architecture(c.name), 1);
        const double n = static_cast<double>(model.count_parameters());
        const double rel = std::fabs(n - c.expected) / c.expected;
        INFO(c.name, ": ", n, " vs ", c.expected, " rel ", rel);
        CHECK(rel <= 0.05);
    }
}

TEST_CASE("dense layer parameter oracle: [360,50] with bias = 18050") {
    ArchitectureConfig cfg;
    cfg.name = "tiny";
    cfg.input_length = 0;
    cfg.classes = 50;
    cfg.grid_j_max = 0;
    cfg.layers = {LayerSpec::Conv(3, 360), LayerSpec::GlobalAvgPool(), LayerSpec::Dense(50)};
    cfg.layers[0].bn_relu = false;
    Model model(cfg, 1);
    const auto table = model.layer_table();
    CHECK(table.back().params == 18050);
}

TEST_CASE("parameter count is invariant to the scale-grid length") {
    ArchitectureConfig cfg = preset_architecture("w3-desk");
    Model narrow(cfg, 1);
    cfg.grid_j_max = 6;  // more scales, same spline coefficients
    Model wide(cfg, 1);
    CHECK(narrow.count_parameters() == wide.count_parameters());
}

TEST_CASE("rebuilding with the same seed is bitwise identical; different seed differs") {
    ArchitectureConfig cfg = preset_architecture("w3-desk");
    Model a(cfg, 42), b(cfg, 42), c(cfg, 43);
    auto pa = a.parameters();
    auto pb = b.parameters();
    auto pc = c.parameters();
    REQUIRE(pa.size() == pb.size());
    double diff_ab = 0.0, diff_ac = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        diff_ab = std::max(diff_ab, max_abs_diff(*pa[i], *pb[i]));
        diff_ac = std::max(diff_ac, max_abs_diff(*pa[i], *pc[i]));
    }
    CHECK(diff_ab == 0.0);
    CHECK(diff_ac > 0.0);
}

TEST_CASE("forward shapes, length contract, loss values") {
    ArchitectureConfig cfg = preset_architecture("w3-desk");
    Model model(cfg, 5);
    Tensor batch = random_batch(4, 1, 512, 6);

    Tape tape;
    ParamRegistry params(true);
    Value logits = model.forward(tape, batch, params, true);
    CHECK(tape.value(logits).shape() == Shape{4, 4});

    SUBCASE("wrong channel count is a dimension error") {
        Tensor bad = random_batch(2, 3, 512, 7);
        Tape t2;
        ParamRegistry p2(true);
        CHECK_THROWS_AS(model.forward(t2, bad, p2, false), Error);
    }

    SUBCASE("fixed-length presets name the expected length") {
        Model w3(preset_architecture("w3"), 1);
        Tensor bad = random_batch(1, 1, 1000, 8);
        Tape t3;
        ParamRegistry p3(false);
        CHECK_THROWS_WITH_AS(w3.forward(t3, bad, p3, false), doctest::Contains("80200"), Error);
    }

    SUBCASE("uniform logits cross entropy is ln k") {
        Tape t4;
        Value z = t4.leaf(Tensor(Shape{3, 4}, 0.0), false);
        ParamRegistry p4(false);
        Value loss = model.loss(t4, z, {0, 1, 2}, p4);
        CHECK(t4.value(loss).scalar_value() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    }
}

TEST_CASE("lambda = 0 omits penalty nodes entirely and reproduces the plain loss bitwise") {
    ArchitectureConfig cfg = preset_architecture("w3-desk");
    cfg.lambda = 0.0;
    Model model(cfg, 5);
    Tensor batch = random_batch(4, 1, 256, 6);
    const std::vector<std::int64_t> labels{0, 1, 2, 3};

    Tape t0;
    ParamRegistry p0(true);
    Value logits0 = model.forward(t0, batch, p0, false);
    const std::size_t nodes_before = t0.size();
    Value loss0 = model.loss(t0, logits0, labels, p0);
    // only the head op joins the tape
    CHECK(t0.size() == nodes_before + 1);
    for (std::size_t i = 0; i < t0.size(); ++i) CHECK(t0.node_at(i).op != "spline_sample_penalty");

    cfg.lambda = 0.1;
    Model reg(cfg, 5);
    Tape t1;
    ParamRegistry p1(true);
    Value logits1 = reg.forward(t1, batch, p1, false);
    Value loss1 = reg.loss(t1, logits1, labels, p1);
    CHECK(t1.size() > nodes_before + 1);
    // logits identical (same seed/params), losses differ by the penalty term
    CHECK(max_abs_diff(t0.value(logits0), t1.value(logits1)) == 0.0);
    CHECK(t1.value(loss1).scalar_value() > t0.value(loss0).scalar_value());
}

TEST_CASE("gradient of the total loss vs finite differences on a 2-layer desk model") {
    ArchitectureConfig cfg;
    cfg.name = "fd-desk";
    cfg.classes = 3;
    cfg.grid_j_min = 0;
    cfg.grid_j_max = 1;
    cfg.scale_heuristic = false;
    cfg.lambda = 0.05;
    cfg.padding = Padding::circular;
    cfg.layers = {
        LayerSpec::Lifting(3, 2),
        LayerSpec::Group(3, 2, 2),
        LayerSpec::Project(PoolKind::max),
        LayerSpec::GlobalAvgPool(),
        LayerSpec::Dense(3),
    };
    // batchnorm's running-stat updates would make repeated forwards unequal,
    // so the FD oracle runs with plain conv-relu stacks.
    cfg.layers[0].bn_relu = false;
    cfg.layers[1].bn_relu = false;

    Model model(cfg, 11);
    Tensor batch = random_batch(2, 1, 16, 12);
    const std::vector<std::int64_t> labels{0, 2};

    auto params = model.parameters();
    std::vector<Tensor> initial;
    for (Tensor* p : params) initial.push_back(*p);

    auto eval_loss = [&](const std::vector<Tensor>& values) {
        for (std::size_t i = 0; i < params.size(); ++i) *params[i] = values[i];
        Tape tape;
        ParamRegistry reg(true);
        Value logits = model.forward(tape, batch, reg, false);
        Value loss = model.loss(tape, logits, labels, reg);
        const double v = tape.value(loss).scalar_value();
        for (std::size_t i = 0; i < params.size(); ++i) *params[i] = initial[i];
        return v;
    };

    Tape tape;
    ParamRegistry reg(true);
    Value logits = model.forward(tape, batch, reg, false);
    Value loss = model.loss(tape, logits, labels, reg);
    tape.backward(loss);
    std::vector<Tensor> analytic;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor g(params[i]->shape());
        for (const auto& b : reg.bindings()) {
            if (b.storage == params[i] && tape.has_grad(b.leaf)) g = tape.grad(b.leaf);
        }
        analytic.push_back(std::move(g));
    }
    CHECK(swtest::fd_max_rel_error(eval_loss, initial, analytic) < 1e-5);
}

TEST_CASE("probe mode: first three layers pass the equivariance thresholds") {
    ArchitectureConfig cfg = preset_architecture("w3-desk");
    Model model(cfg, 3);
    EquivariantStack stack = model.probe_stack(2);
    const std::int64_t n = 1024;
    SignalModel trial = random_band_limited_model(17, n, 3, 0.05, 0.15, 0.35);

    ProbeReport shift = equivariance_probe(stack, GroupElement(9, 1), trial, n);
    CHECK(shift.overall <= 1e-12);

    ProbeReport dil = equivariance_probe(stack, GroupElement(0, 2), trial, n);
    REQUIRE(dil.per_layer_rel_err.size() >= 2);
    CHECK(dil.per_layer_rel_err[0] <= 2e-2);
    for (std::size_t i = 1; i < dil.per_layer_rel_err.size(); ++i) CHECK(dil.per_layer_rel_err[i] <= 1e-6);
    CHECK(dil.compared > 0);
}

TEST_CASE("architecture config json round trip") {
    ArchitectureConfig cfg = preset_architecture("w3-desk");
    cfg.lambda = 0.25;
    const std::string text = architecture_to_json(cfg);
    ArchitectureConfig back = architecture_from_json(text);
    CHECK(back.name == cfg.name);
    CHECK(back.lambda == cfg.lambda);
    CHECK(back.layers.size() == cfg.layers.size());
    Model a(cfg, 9), b(back, 9);
    CHECK(a.count_parameters() == b.count_parameters());
}

TEST_CASE("all presets build and count parameters") {
    for (const std::string& name : preset_names()) {
        Model model(preset_architecture(name), 1);
        CHECK(model.count_parameters() > 0);
    }
}
