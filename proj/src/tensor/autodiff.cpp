#include "volsr/tensor/autodiff.hpp"

#include "volsr/util/errors.hpp"

#include <unordered_set>
#include <utility>

namespace volsr::nn {

ComputeSettings& compute_settings() {
    static ComputeSettings settings;
    return settings;
}

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

template <typename T>
Var<T> Var<T>::constant(Tensor<T> value) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    return Var(std::move(node));
}

template <typename T>
Var<T> Var<T>::leaf(Tensor<T> value, bool requires_grad) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    return Var(std::move(node));
}

template <typename T>
void Var<T>::zero_grad() {
    if (node_ && node_->has_grad) node_->grad.fill(T{0});
}

template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> inputs, std::function<void(Node<T>&)> backward_fn) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->is_leaf = false;
    bool needs = false;
    if (grad_enabled())
        for (const auto& in : inputs) needs = needs || in.requires_grad();
    if (needs) {
        node->requires_grad = true;
        node->inputs.reserve(inputs.size());
        for (auto& in : inputs) node->inputs.push_back(in.node_ptr());
        node->backward_fn = std::move(backward_fn);
    }
    return Var<T>(std::move(node));
}

template <typename T>
void backward(const Var<T>& loss) {
    if (!loss) throw ContractError("backward on empty Var");
    if (loss.value().rank() != 0)
        throw ContractError("backward requires a rank-0 loss, got shape " + to_string(loss.shape()));
    if (!loss.requires_grad()) return;

    // Iterative post-order DFS; `order` ends up topologically sorted.
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> visited;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(loss.node(), 0);
    visited.insert(loss.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node<T>* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node<T>* node : order)
        if (!node->is_leaf) {
            node->has_grad = false;
            node->grad = Tensor<T>();
        }

    loss.node()->grad_buffer()[0] += T{1};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* node = *it;
        if (node->is_leaf || !node->has_grad || !node->backward_fn) continue;
        node->backward_fn(*node);
        // Intermediate gradients are not needed once propagated.
        node->grad = Tensor<T>();
        node->has_grad = false;
    }
}

template class Var<float>;
template class Var<double>;
template Var<float> make_result(Tensor<float>, std::vector<Var<float>>, std::function<void(Node<float>&)>);
template Var<double> make_result(Tensor<double>, std::vector<Var<double>>, std::function<void(Node<double>&)>);
template void backward(const Var<float>&);
template void backward(const Var<double>&);

} // namespace volsr::nn
