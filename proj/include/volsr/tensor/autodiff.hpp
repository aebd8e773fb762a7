#pragma once

#include "volsr/tensor/tensor.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace volsr::nn {

/// Engine-wide compute settings. `threads` bounds intra-op parallelism over
/// the batch dimension; strict determinism pins it to one thread so every
/// reduction runs in a fixed order.
struct ComputeSettings {
    unsigned threads = 1;
    bool strict_deterministic = false;

    unsigned effective_threads() const { return strict_deterministic ? 1u : (threads ? threads : 1u); }
};

ComputeSettings& compute_settings();

/// While alive, ops do not record a graph (inference).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    bool has_grad = false;
    bool is_leaf = true;
    std::vector<std::shared_ptr<Node>> inputs;
    /// Propagates this node's grad into its inputs' grads.
    std::function<void(Node&)> backward_fn;

    /// Zero-initialised on first use.
    Tensor<T>& grad_buffer() {
        if (!has_grad) {
            grad = Tensor<T>(value.shape(), T{0});
            has_grad = true;
        }
        return grad;
    }
};

/// Handle to a graph node. Cheap to copy; values are immutable once produced.
template <typename T>
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

    static Var constant(Tensor<T> value);
    static Var leaf(Tensor<T> value, bool requires_grad = true);

    const Tensor<T>& value() const { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }

    /// Gradient accumulated by backward(); zeros if none reached this node.
    const Tensor<T>& grad() const { return node_->grad_buffer(); }
    Tensor<T>& mutable_grad() { return node_->grad_buffer(); }
    Tensor<T>& mutable_value() { return node_->value; }
    void zero_grad();

    Node<T>* node() const { return node_.get(); }
    const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }
    explicit operator bool() const { return static_cast<bool>(node_); }

private:
    std::shared_ptr<Node<T>> node_;
};

/// Builds an op result; records inputs and the backward closure only when
/// grad mode is on and some input requires grad.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> inputs, std::function<void(Node<T>&)> backward_fn);

/// Reverse-mode sweep from a rank-0 loss. Leaf gradients accumulate
/// additively across calls; every node is visited exactly once in reverse
/// topological order.
template <typename T>
void backward(const Var<T>& loss);

extern template class Var<float>;
extern template class Var<double>;

} // namespace volsr::nn
