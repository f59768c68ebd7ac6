#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scalewave/tensor.hpp"

namespace scalewave {

class Tape;

// Handle to a node on a tape. Cheap to copy; only meaningful together with
// the tape that produced it.
struct Value {
    std::int32_t id = -1;
    bool valid() const noexcept { return id >= 0; }
};

// Define-by-run reverse-mode tape. Nodes are appended in execution order, so
// reverse id order is a valid (and deterministic) reverse topological order.
// First-order gradients only.
class Tape {
public:
    struct Node {
        std::string op;
        std::string label;  // optional layer tag for diagnostics
        std::vector<std::int32_t> inputs;
        Tensor value;
        Tensor grad;  // lazily allocated, same shape as value
        bool requires_grad = false;
        std::function<void(Tape&, const Node&)> backward;
    };

    Value leaf(Tensor value, bool requires_grad, std::string label = {});

    // Appends an op node. The output is rounded through the global precision
    // mode so f32 runs reproduce single-precision value semantics.
    Value emit(std::string op, std::vector<Value> inputs, Tensor output,
               std::function<void(Tape&, const Node&)> backward);

    const Tensor& value(Value v) const { return node(v).value; }
    const Node& node(Value v) const;
    Node& node(Value v);
    std::size_t size() const noexcept { return nodes_.size(); }
    const Node& node_at(std::size_t i) const { return nodes_[i]; }

    bool has_grad(Value v) const { return node(v).grad.numel() > 0; }
    const Tensor& grad(Value v) const;
    // Adds g into v's gradient buffer, allocating it on first use.
    void accumulate_grad(Value v, const Tensor& g);

    // Reverse pass from a scalar loss; d(loss)/d(loss) = 1. Gradients
    // accumulate in reverse node order, which is deterministic for a fixed
    // graph. Non-scalar loss is a contract error.
    void backward(Value loss);

    // Returns id of the first node (in execution order) with a non-finite
    // value, or -1 if all values are finite.
    std::int32_t first_non_finite() const;

    void clear() { nodes_.clear(); }

private:
    std::vector<Node> nodes_;
};

}  // namespace scalewave
