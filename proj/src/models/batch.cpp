#include "volsr/models/batch.hpp"

#include "volsr/util/errors.hpp"

namespace volsr::models {

template <typename T>
nn::Tensor<T> stack_cubes(std::span<const io::Grid3* const> cubes) {
    if (cubes.empty()) throw ContractError("stack_cubes: empty batch");
    const io::Dims d = cubes.front()->dims();
    nn::Tensor<T> out(nn::Shape{cubes.size(), d.z, d.y, d.x, 1});
    T* dst = out.raw();
    for (const auto* g : cubes) {
        if (g->dims() != d) throw ContractError("stack_cubes: cube dims differ within a batch");
        for (double v : g->values()) *dst++ = static_cast<T>(v);
    }
    return out;
}

template <typename T>
io::Grid3 unstack_cube(const nn::Tensor<T>& t, std::size_t n, std::size_t c) {
    if (t.rank() != 5 || n >= t.dim(0) || c >= t.dim(4)) throw ContractError("unstack_cube: bad index or rank");
    const io::Dims d{t.dim(3), t.dim(2), t.dim(1)};
    const std::size_t C = t.dim(4);
    io::Grid3 g(d);
    const T* src = t.raw() + n * d.voxels() * C;
    for (std::size_t i = 0; i < d.voxels(); ++i) g[i] = static_cast<double>(src[i * C + c]);
    return g;
}

template nn::Tensor<float> stack_cubes(std::span<const io::Grid3* const>);
template nn::Tensor<double> stack_cubes(std::span<const io::Grid3* const>);
template io::Grid3 unstack_cube(const nn::Tensor<float>&, std::size_t, std::size_t);
template io::Grid3 unstack_cube(const nn::Tensor<double>&, std::size_t, std::size_t);

} // namespace volsr::models
