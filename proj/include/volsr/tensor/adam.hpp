#pragma once

#include "volsr/tensor/parameter.hpp"

#include <span>

namespace volsr::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam update; increments each step counter by one and
/// zeroes the gradients afterwards.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, const AdamConfig& cfg);

extern template void adam_step(std::span<Parameter<float>* const>, const AdamConfig&);
extern template void adam_step(std::span<Parameter<double>* const>, const AdamConfig&);

} // namespace volsr::nn
