#include "volsr/tensor/adam.hpp"

#include <cmath>

namespace volsr::nn {

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, const AdamConfig& cfg) {
    for (Parameter<T>* p : params) {
        ++p->step;
        const double t = static_cast<double>(p->step);
        const double c1 = 1.0 - std::pow(cfg.beta1, t);
        const double c2 = 1.0 - std::pow(cfg.beta2, t);
        Tensor<T>& value = p->mutable_value();
        Tensor<T>& grad = p->var.mutable_grad();
        const T b1 = static_cast<T>(cfg.beta1);
        const T b2 = static_cast<T>(cfg.beta2);
        const T step = static_cast<T>(cfg.lr / c1);
        const T inv_c2 = static_cast<T>(1.0 / c2);
        const T eps = static_cast<T>(cfg.eps);
        T* w = value.raw();
        T* g = grad.raw();
        T* m = p->adam_m.raw();
        T* v = p->adam_v.raw();
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = b1 * m[i] + (T{1} - b1) * g[i];
            v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
            w[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
            g[i] = T{0};
        }
    }
}

template void adam_step(std::span<Parameter<float>* const>, const AdamConfig&);
template void adam_step(std::span<Parameter<double>* const>, const AdamConfig&);

} // namespace volsr::nn
