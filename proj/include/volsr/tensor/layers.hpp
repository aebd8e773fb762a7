#pragma once

#include "volsr/tensor/ops.hpp"
#include "volsr/util/rng.hpp"

#include <string>
#include <vector>

namespace volsr::nn {

/// He-style uniform init: U(-b, b), b = sqrt(6 / fan_in).
template <typename T>
Tensor<T> he_uniform(Shape shape, std::size_t fan_in, Rng& rng);

template <typename T>
struct Conv3dLayer {
    Parameter<T> kernel;  // [k,k,k,Cin,Cout]
    Parameter<T> bias;    // [Cout]
    std::size_t stride = 1;

    Conv3dLayer() = default;
    Conv3dLayer(const std::string& name, std::size_t k, std::size_t cin, std::size_t cout, std::size_t stride_,
                Rng& rng);

    Var<T> operator()(const Var<T>& x) const { return ops::conv3d(x, kernel.var, bias.var, stride); }
    std::size_t out_channels() const { return kernel.value().dim(4); }
    void collect(std::vector<Parameter<T>*>& out) { out.insert(out.end(), {&kernel, &bias}); }
};

template <typename T>
struct ConvTranspose3dLayer {
    Parameter<T> kernel;  // [k,k,k,Cout,Cin]
    Parameter<T> bias;    // [Cout]
    std::size_t stride = 1;

    ConvTranspose3dLayer() = default;
    ConvTranspose3dLayer(const std::string& name, std::size_t k, std::size_t cin, std::size_t cout,
                         std::size_t stride_, Rng& rng);

    Var<T> operator()(const Var<T>& x) const { return ops::conv3d_transpose(x, kernel.var, bias.var, stride); }
    std::size_t out_channels() const { return kernel.value().dim(3); }
    void collect(std::vector<Parameter<T>*>& out) { out.insert(out.end(), {&kernel, &bias}); }
};

template <typename T>
struct DenseLayer {
    Parameter<T> weight;  // [F,G]
    Parameter<T> bias;    // [G]

    DenseLayer() = default;
    DenseLayer(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

    Var<T> operator()(const Var<T>& x) const { return ops::dense(x, weight.var, bias.var); }
    void collect(std::vector<Parameter<T>*>& out) { out.insert(out.end(), {&weight, &bias}); }
};

template <typename T>
void collect(BatchNormState<T>& bn, std::vector<Parameter<T>*>& out) {
    out.push_back(&bn.gamma);
    out.push_back(&bn.beta);
}

extern template struct Conv3dLayer<float>;
extern template struct Conv3dLayer<double>;
extern template struct ConvTranspose3dLayer<float>;
extern template struct ConvTranspose3dLayer<double>;
extern template struct DenseLayer<float>;
extern template struct DenseLayer<double>;

} // namespace volsr::nn
