#include "volsr/tensor/layers.hpp"

#include <cmath>

namespace volsr::nn {

template <typename T>
Tensor<T> he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
    Tensor<T> t(std::move(shape));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (T& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    return t;
}

template <typename T>
Conv3dLayer<T>::Conv3dLayer(const std::string& name, std::size_t k, std::size_t cin, std::size_t cout,
                            std::size_t stride_, Rng& rng)
    : kernel(name + ".kernel", he_uniform<T>(Shape{k, k, k, cin, cout}, k * k * k * cin, rng)),
      bias(name + ".bias", Tensor<T>(Shape{cout}, T{0})),
      stride(stride_) {}

template <typename T>
ConvTranspose3dLayer<T>::ConvTranspose3dLayer(const std::string& name, std::size_t k, std::size_t cin,
                                              std::size_t cout, std::size_t stride_, Rng& rng)
    : kernel(name + ".kernel", he_uniform<T>(Shape{k, k, k, cout, cin}, k * k * k * cin, rng)),
      bias(name + ".bias", Tensor<T>(Shape{cout}, T{0})),
      stride(stride_) {}

template <typename T>
DenseLayer<T>::DenseLayer(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight(name + ".weight", he_uniform<T>(Shape{in, out}, in, rng)),
      bias(name + ".bias", Tensor<T>(Shape{out}, T{0})) {}

template Tensor<float> he_uniform(Shape, std::size_t, Rng&);
template Tensor<double> he_uniform(Shape, std::size_t, Rng&);
template struct Conv3dLayer<float>;
template struct Conv3dLayer<double>;
template struct ConvTranspose3dLayer<float>;
template struct ConvTranspose3dLayer<double>;
template struct DenseLayer<float>;
template struct DenseLayer<double>;

} // namespace volsr::nn
