#include "scalewave/tape.hpp"

#include <cmath>

#include "scalewave/precision.hpp"

namespace scalewave {

Value Tape::leaf(Tensor value, bool requires_grad, std::string label) {
    Node n;
    n.op = "leaf";
    n.label = std::move(label);
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Value{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Value Tape::emit(std::string op, std::vector<Value> inputs, Tensor output,
                 std::function<void(Tape&, const Node&)> backward) {
    Node n;
    n.op = std::move(op);
    n.inputs.reserve(inputs.size());
    bool needs = false;
    for (Value v : inputs) {
        check(v.valid() && static_cast<std::size_t>(v.id) < nodes_.size(), ErrorCode::invalid_argument,
              "emit with foreign or invalid input value");
        needs = needs || nodes_[v.id].requires_grad;
        n.inputs.push_back(v.id);
    }
    const Precision p = default_precision();
    if (p == Precision::f32) {
        for (auto& x : output.data()) x = round_to_precision(x, p);
    }
    debug_check_finite(output, n.op.c_str());
    n.value = std::move(output);
    n.requires_grad = needs;
    n.backward = needs ? std::move(backward) : nullptr;
    nodes_.push_back(std::move(n));
    return Value{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Value v) const {
    check(v.valid() && static_cast<std::size_t>(v.id) < nodes_.size(), ErrorCode::invalid_argument,
          "dangling tape value");
    return nodes_[v.id];
}

Tape::Node& Tape::node(Value v) {
    check(v.valid() && static_cast<std::size_t>(v.id) < nodes_.size(), ErrorCode::invalid_argument,
          "dangling tape value");
    return nodes_[v.id];
}

const Tensor& Tape::grad(Value v) const {
    const Node& n = node(v);
    check(n.grad.numel() > 0, ErrorCode::invalid_argument, "gradient not populated for node " + n.op);
    return n.grad;
}

void Tape::accumulate_grad(Value v, const Tensor& g) {
    Node& n = node(v);
    check_shape(g.shape() == n.value.shape(),
                "gradient shape " + shape_to_string(g.shape()) + " vs value shape " + shape_to_string(n.value.shape()));
    if (n.grad.numel() == 0) {
        n.grad = g;
        return;
    }
    double* dst = n.grad.raw();
    const double* src = g.raw();
    for (std::int64_t i = 0; i < g.numel(); ++i) dst[i] += src[i];
}

void Tape::backward(Value loss) {
    Node& ln = node(loss);
    check_contract(ln.value.numel() == 1, "backward requires a scalar loss, got shape " + shape_to_string(ln.value.shape()));
    if (!ln.requires_grad) return;
    Tensor seed(ln.value.shape(), 1.0);
    accumulate_grad(loss, seed);
    for (std::int32_t id = loss.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.numel() == 0 || !n.backward) continue;
        n.backward(*this, n);
    }
}

std::int32_t Tape::first_non_finite() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].value.all_finite()) return static_cast<std::int32_t>(i);
    }
    return -1;
}

}  // namespace scalewave
