#pragma once

#include "volsr/tensor/autodiff.hpp"
#include "volsr/tensor/parameter.hpp"

namespace volsr::nn {

struct Activation {
    enum class Kind { linear, relu, leaky_relu, tanh, sigmoid };
    Kind kind = Kind::linear;
    double alpha = 0.2;

    friend bool operator==(const Activation&, const Activation&) = default;

    static Activation linear() { return {Kind::linear, 0.0}; }
    static Activation relu() { return {Kind::relu, 0.0}; }
    static Activation leaky_relu(double a = 0.2) { return {Kind::leaky_relu, a}; }
    static Activation tanh() { return {Kind::tanh, 0.0}; }
    static Activation sigmoid() { return {Kind::sigmoid, 0.0}; }
};

std::string to_string(const Activation& a);
/// Parses "linear", "relu", "tanh", "sigmoid", "leaky_relu" or "leaky_relu:0.1".
Activation parse_activation(const std::string& text);

/// Zero padding such that stride 1 preserves extent:
/// total = max((out - 1) * stride + k - in, 0), before = total / 2.
struct SamePadding {
    std::size_t out;
    std::size_t before;
};
SamePadding same_padding(std::size_t in, std::size_t k, std::size_t stride);

namespace ops {

/// x [N,D,H,W,Cin], kernel [k,k,k,Cin,Cout], bias [Cout] -> [N,ceil(D/s),ceil(H/s),ceil(W/s),Cout].
template <typename T>
Var<T> conv3d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, std::size_t stride);

/// x [N,D,H,W,Cin], kernel [k,k,k,Cout,Cin], bias [Cout] -> [N,D*s,H*s,W*s,Cout].
/// Exact adjoint of conv3d sharing the same kernel array (bias zero).
template <typename T>
Var<T> conv3d_transpose(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, std::size_t stride);

/// x [N,F], weight [F,G], bias [G] -> [N,G].
template <typename T>
Var<T> dense(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

/// Normalises over every axis but the last (channel). Train mode uses batch
/// statistics and updates the running ones; infer mode uses running ones only.
template <typename T>
Var<T> batch_norm(const Var<T>& x, BatchNormState<T>& state);

template <typename T>
Var<T> activation(const Var<T>& x, const Activation& kind);

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape);

/// Concatenates along the last axis; leading axes must match.
template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& x, T factor);

/// Rank-0 reductions.
template <typename T>
Var<T> sum(const Var<T>& x);
template <typename T>
Var<T> mean(const Var<T>& x);
template <typename T>
Var<T> mse(const Var<T>& prediction, const Var<T>& target);

/// z = mu + exp(0.5 * clamp(logvar, -20, 20)) * eps. eps is a constant.
template <typename T>
Var<T> reparameterize(const Var<T>& mu, const Var<T>& logvar, const Tensor<T>& eps);

/// -0.5 * sum_j(1 + lv - mu^2 - exp(lv)), averaged over the batch axis.
/// mu, logvar are [N, L].
template <typename T>
Var<T> kl_divergence(const Var<T>& mu, const Var<T>& logvar);

/// Drops the graph: same value, no gradient flow.
template <typename T>
Var<T> detach(const Var<T>& x) {
    return Var<T>::constant(x.value());
}

/// Throws NumericError naming `where` if any value is NaN/Inf.
template <typename T>
void require_finite(const Tensor<T>& t, const char* where);

} // namespace ops
} // namespace volsr::nn
