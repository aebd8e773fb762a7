#pragma once

#include "volsr/tensor/autodiff.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace volsr::nn {

/// Trainable tensor plus its Adam moments. grad lives on the graph leaf.
template <typename T>
struct Parameter {
    std::string name;
    Var<T> var;
    Tensor<T> adam_m;
    Tensor<T> adam_v;
    std::uint64_t step = 0;

    Parameter() = default;
    Parameter(std::string param_name, Tensor<T> init)
        : name(std::move(param_name)),
          var(Var<T>::leaf(std::move(init), true)),
          adam_m(var.shape(), T{0}),
          adam_v(var.shape(), T{0}) {}

    const Tensor<T>& value() const { return var.value(); }
    Tensor<T>& mutable_value() { return var.mutable_value(); }
    const Tensor<T>& grad() const { return var.grad(); }
    void zero_grad() { var.zero_grad(); }
};

enum class Mode { train, infer };

/// Per-channel affine parameters plus running statistics.
/// Running update: r <- momentum * r + (1 - momentum) * batch.
template <typename T>
struct BatchNormState {
    Parameter<T> gamma;
    Parameter<T> beta;
    std::vector<T> running_mean;
    std::vector<T> running_var;
    T momentum = T(0.9);
    T epsilon = T(1e-5);
    Mode mode = Mode::train;

    BatchNormState() = default;
    BatchNormState(const std::string& name, std::size_t channels, T momentum_ = T(0.9), T epsilon_ = T(1e-5))
        : gamma(name + ".gamma", Tensor<T>(Shape{channels}, T{1})),
          beta(name + ".beta", Tensor<T>(Shape{channels}, T{0})),
          running_mean(channels, T{0}),
          running_var(channels, T{1}),
          momentum(momentum_),
          epsilon(epsilon_) {}

    std::size_t channels() const { return running_mean.size(); }
};

} // namespace volsr::nn
