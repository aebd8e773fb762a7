#pragma once

#include "volsr/io/volume.hpp"
#include "volsr/tensor/tensor.hpp"

#include <span>

namespace volsr::models {

/// Stacks equally sized grids into [N, D=z, H=y, W=x, 1]. The grid's
/// x-fastest order is the tensor's row-major order, so values copy verbatim.
template <typename T>
nn::Tensor<T> stack_cubes(std::span<const io::Grid3* const> cubes);

/// Channel `c` of sample `n` of a [N, D, H, W, C] tensor as a grid.
template <typename T>
io::Grid3 unstack_cube(const nn::Tensor<T>& t, std::size_t n, std::size_t c = 0);

} // namespace volsr::models
