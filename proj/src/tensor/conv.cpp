#include "volsr/tensor/ops.hpp"

#include "parallel.hpp"
#include "volsr/util/errors.hpp"

#include <Eigen/Core>

#include <array>
#include <cstring>

namespace volsr::nn {

SamePadding same_padding(std::size_t in, std::size_t k, std::size_t stride) {
    const std::size_t out = (in + stride - 1) / stride;
    const long total = static_cast<long>((out - 1) * stride + k) - static_cast<long>(in);
    return {out, total > 0 ? static_cast<std::size_t>(total) / 2 : 0};
}

namespace ops {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

/// Geometry of a forward convolution `in` -> `out` with `cin` -> `cout`
/// channels. The transpose op reuses it with the roles of in/out swapped.
struct ConvGeometry {
    std::size_t batch = 0;
    std::size_t k = 0;
    std::size_t stride = 1;
    std::size_t cin = 0;
    std::size_t cout = 0;
    std::array<std::size_t, 3> in{};
    std::array<std::size_t, 3> out{};
    std::array<std::size_t, 3> pad{};

    std::size_t in_voxels() const { return in[0] * in[1] * in[2]; }
    std::size_t out_voxels() const { return out[0] * out[1] * out[2]; }
    std::size_t patch_len() const { return k * k * k * cin; }
};

ConvGeometry make_geometry(std::size_t batch, std::array<std::size_t, 3> in, std::size_t k, std::size_t stride,
                           std::size_t cin, std::size_t cout) {
    ConvGeometry g;
    g.batch = batch;
    g.k = k;
    g.stride = stride;
    g.cin = cin;
    g.cout = cout;
    g.in = in;
    for (int a = 0; a < 3; ++a) {
        const auto p = same_padding(in[a], k, stride);
        g.out[a] = p.out;
        g.pad[a] = p.before;
    }
    return g;
}

/// One sample: x [in voxels, cin] -> col [out voxels, k^3 * cin].
template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
    const std::size_t k = g.k;
    const std::size_t cin = g.cin;
    const std::size_t row_len = g.patch_len();
    const long D = static_cast<long>(g.in[0]), H = static_cast<long>(g.in[1]), W = static_cast<long>(g.in[2]);
    T* row = col;
    for (std::size_t od = 0; od < g.out[0]; ++od)
        for (std::size_t oh = 0; oh < g.out[1]; ++oh)
            for (std::size_t ow = 0; ow < g.out[2]; ++ow, row += row_len) {
                T* dst = row;
                for (std::size_t kd = 0; kd < k; ++kd) {
                    const long id = static_cast<long>(od * g.stride + kd) - static_cast<long>(g.pad[0]);
                    if (id < 0 || id >= D) {
                        std::memset(dst, 0, sizeof(T) * k * k * cin);
                        dst += k * k * cin;
                        continue;
                    }
                    for (std::size_t kh = 0; kh < k; ++kh) {
                        const long ih = static_cast<long>(oh * g.stride + kh) - static_cast<long>(g.pad[1]);
                        if (ih < 0 || ih >= H) {
                            std::memset(dst, 0, sizeof(T) * k * cin);
                            dst += k * cin;
                            continue;
                        }
                        for (std::size_t kw = 0; kw < k; ++kw, dst += cin) {
                            const long iw = static_cast<long>(ow * g.stride + kw) - static_cast<long>(g.pad[2]);
                            if (iw < 0 || iw >= W) {
                                std::memset(dst, 0, sizeof(T) * cin);
                            } else {
                                const T* src = x + ((id * H + ih) * W + iw) * static_cast<long>(cin);
                                std::memcpy(dst, src, sizeof(T) * cin);
                            }
                        }
                    }
                }
            }
}

/// Adjoint of im2col: accumulates col into x.
template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* x) {
    const std::size_t k = g.k;
    const std::size_t cin = g.cin;
    const std::size_t row_len = g.patch_len();
    const long D = static_cast<long>(g.in[0]), H = static_cast<long>(g.in[1]), W = static_cast<long>(g.in[2]);
    const T* row = col;
    for (std::size_t od = 0; od < g.out[0]; ++od)
        for (std::size_t oh = 0; oh < g.out[1]; ++oh)
            for (std::size_t ow = 0; ow < g.out[2]; ++ow, row += row_len) {
                const T* src = row;
                for (std::size_t kd = 0; kd < k; ++kd) {
                    const long id = static_cast<long>(od * g.stride + kd) - static_cast<long>(g.pad[0]);
                    if (id < 0 || id >= D) {
                        src += k * k * cin;
                        continue;
                    }
                    for (std::size_t kh = 0; kh < k; ++kh) {
                        const long ih = static_cast<long>(oh * g.stride + kh) - static_cast<long>(g.pad[1]);
                        if (ih < 0 || ih >= H) {
                            src += k * cin;
                            continue;
                        }
                        for (std::size_t kw = 0; kw < k; ++kw, src += cin) {
                            const long iw = static_cast<long>(ow * g.stride + kw) - static_cast<long>(g.pad[2]);
                            if (iw < 0 || iw >= W) continue;
                            T* dst = x + ((id * H + ih) * W + iw) * static_cast<long>(cin);
                            for (std::size_t c = 0; c < cin; ++c) dst[c] += src[c];
                        }
                    }
                }
            }
}

void check_kernel_shape(const Shape& ks, std::size_t kernel_cin, std::size_t x_channels, const char* op) {
    if (ks.size() != 5 || ks[0] != ks[1] || ks[1] != ks[2])
        throw ContractError(std::string(op) + ": kernel must be [k,k,k,a,b], got " + to_string(ks));
    if (ks[0] % 2 == 0) throw ContractError(std::string(op) + ": kernel extent must be odd");
    if (kernel_cin != x_channels)
        throw ContractError(std::string(op) + ": kernel input channels " + std::to_string(kernel_cin) +
                            " do not match input channels " + std::to_string(x_channels));
}

void check_input(const Shape& xs, const char* op) {
    if (xs.size() != 5) throw ContractError(std::string(op) + ": input must be [N,D,H,W,C], got " + to_string(xs));
}

template <typename T>
void accumulate_bias_grad(const Tensor<T>& dy, std::size_t channels, Tensor<T>& db) {
    const std::size_t rows = dy.size() / channels;
    const T* g = dy.raw();
    T* out = db.raw();
    for (std::size_t r = 0; r < rows; ++r, g += channels)
        for (std::size_t c = 0; c < channels; ++c) out[c] += g[c];
}

/// Sums per-chunk partial weight gradients into `dst` in chunk order.
template <typename T>
void merge_partials(const std::vector<std::vector<T>>& parts, Tensor<T>& dst) {
    T* out = dst.raw();
    for (const auto& p : parts)
        for (std::size_t i = 0; i < p.size(); ++i) out[i] += p[i];
}

} // namespace

template <typename T>
Var<T> conv3d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, std::size_t stride) {
    const Shape& xs = x.shape();
    const Shape& ks = kernel.shape();
    check_input(xs, "conv3d");
    if (stride == 0) throw ContractError("conv3d: stride must be positive");
    check_kernel_shape(ks, ks.size() == 5 ? ks[3] : 0, xs[4], "conv3d");
    const std::size_t cout = ks[4];
    if (bias.shape() != Shape{cout}) throw ContractError("conv3d: bias must be [Cout]");
    require_finite(x.value(), "conv3d input");

    const ConvGeometry g = make_geometry(xs[0], {xs[1], xs[2], xs[3]}, ks[0], stride, xs[4], cout);
    Tensor<T> y(Shape{g.batch, g.out[0], g.out[1], g.out[2], cout});

    const T* xp = x.value().raw();
    const T* bp = bias.value().raw();
    CMapMat<T> w(kernel.value().raw(), static_cast<Eigen::Index>(g.patch_len()), static_cast<Eigen::Index>(cout));
    T* yp = y.raw();
    const std::size_t in_stride = g.in_voxels() * g.cin;
    const std::size_t out_stride = g.out_voxels() * cout;
    detail::parallel_chunks(g.batch, [&](std::size_t begin, std::size_t end, std::size_t) {
        std::vector<T> col(g.out_voxels() * g.patch_len());
        for (std::size_t n = begin; n < end; ++n) {
            im2col(xp + n * in_stride, g, col.data());
            MapMat<T> out(yp + n * out_stride, static_cast<Eigen::Index>(g.out_voxels()),
                          static_cast<Eigen::Index>(cout));
            CMapMat<T> colm(col.data(), static_cast<Eigen::Index>(g.out_voxels()),
                            static_cast<Eigen::Index>(g.patch_len()));
            out.noalias() = colm * w;
            for (Eigen::Index r = 0; r < out.rows(); ++r)
                for (std::size_t c = 0; c < cout; ++c) out(r, static_cast<Eigen::Index>(c)) += bp[c];
        }
    });

    return make_result<T>(std::move(y), {x, kernel, bias}, [g](Node<T>& self) {
        Node<T>& xn = *self.inputs[0];
        Node<T>& kn = *self.inputs[1];
        Node<T>& bn = *self.inputs[2];
        const Tensor<T>& dy = self.grad;
        if (bn.requires_grad) accumulate_bias_grad(dy, g.cout, bn.grad_buffer());
        if (!xn.requires_grad && !kn.requires_grad) return;

        const std::size_t chunks = detail::chunk_count(g.batch);
        std::vector<std::vector<T>> dw_parts(kn.requires_grad ? chunks : 0);
        T* dxp = xn.requires_grad ? xn.grad_buffer().raw() : nullptr;
        const T* xp = xn.value.raw();
        const T* dyp = dy.raw();
        CMapMat<T> w(kn.value.raw(), static_cast<Eigen::Index>(g.patch_len()), static_cast<Eigen::Index>(g.cout));
        const std::size_t in_stride = g.in_voxels() * g.cin;
        const std::size_t out_stride = g.out_voxels() * g.cout;
        const auto M = static_cast<Eigen::Index>(g.out_voxels());
        const auto KC = static_cast<Eigen::Index>(g.patch_len());
        const auto CO = static_cast<Eigen::Index>(g.cout);
        detail::parallel_chunks(g.batch, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
            std::vector<T> col(g.out_voxels() * g.patch_len());
            if (kn.requires_grad) dw_parts[chunk].assign(g.patch_len() * g.cout, T{0});
            for (std::size_t n = begin; n < end; ++n) {
                CMapMat<T> dym(dyp + n * out_stride, M, CO);
                if (kn.requires_grad) {
                    im2col(xp + n * in_stride, g, col.data());
                    CMapMat<T> colm(col.data(), M, KC);
                    MapMat<T> dw(dw_parts[chunk].data(), KC, CO);
                    dw.noalias() += colm.transpose() * dym;
                }
                if (dxp) {
                    MapMat<T> dcol(col.data(), M, KC);
                    dcol.noalias() = dym * w.transpose();
                    col2im_add(col.data(), g, dxp + n * in_stride);
                }
            }
        });
        if (kn.requires_grad) merge_partials(dw_parts, kn.grad_buffer());
    });
}

template <typename T>
Var<T> conv3d_transpose(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, std::size_t stride) {
    const Shape& xs = x.shape();
    const Shape& ks = kernel.shape();
    check_input(xs, "conv3d_transpose");
    if (stride == 0) throw ContractError("conv3d_transpose: stride must be positive");
    check_kernel_shape(ks, ks.size() == 5 ? ks[4] : 0, xs[4], "conv3d_transpose");
    const std::size_t cout = ks[3];
    if (bias.shape() != Shape{cout}) throw ContractError("conv3d_transpose: bias must be [Cout]");
    require_finite(x.value(), "conv3d_transpose input");

    // Forward conv view: output grid (x extent * stride, cout channels) -> x grid (xs[4] channels).
    const ConvGeometry g =
        make_geometry(xs[0], {xs[1] * stride, xs[2] * stride, xs[3] * stride}, ks[0], stride, cout, xs[4]);
    if (g.out[0] != xs[1] || g.out[1] != xs[2] || g.out[2] != xs[3])
        throw ContractError("conv3d_transpose: inconsistent geometry");

    Tensor<T> y(Shape{g.batch, g.in[0], g.in[1], g.in[2], cout});
    const T* xp = x.value().raw();
    const T* bp = bias.value().raw();
    T* yp = y.raw();
    const auto M = static_cast<Eigen::Index>(g.out_voxels());
    const auto KC = static_cast<Eigen::Index>(g.patch_len());
    const auto CI = static_cast<Eigen::Index>(g.cout);
    CMapMat<T> w(kernel.value().raw(), KC, CI);
    const std::size_t x_stride = g.out_voxels() * g.cout;
    const std::size_t y_stride = g.in_voxels() * g.cin;
    detail::parallel_chunks(g.batch, [&](std::size_t begin, std::size_t end, std::size_t) {
        std::vector<T> col(g.out_voxels() * g.patch_len());
        for (std::size_t n = begin; n < end; ++n) {
            CMapMat<T> xm(xp + n * x_stride, M, CI);
            MapMat<T> colm(col.data(), M, KC);
            colm.noalias() = xm * w.transpose();
            T* yn = yp + n * y_stride;
            col2im_add(col.data(), g, yn);
            for (std::size_t v = 0; v < g.in_voxels(); ++v)
                for (std::size_t c = 0; c < cout; ++c) yn[v * cout + c] += bp[c];
        }
    });

    return make_result<T>(std::move(y), {x, kernel, bias}, [g](Node<T>& self) {
        Node<T>& xn = *self.inputs[0];
        Node<T>& kn = *self.inputs[1];
        Node<T>& bn = *self.inputs[2];
        const Tensor<T>& dy = self.grad;
        if (bn.requires_grad) accumulate_bias_grad(dy, g.cin, bn.grad_buffer());
        if (!xn.requires_grad && !kn.requires_grad) return;

        const std::size_t chunks = detail::chunk_count(g.batch);
        std::vector<std::vector<T>> dw_parts(kn.requires_grad ? chunks : 0);
        T* dxp = xn.requires_grad ? xn.grad_buffer().raw() : nullptr;
        const T* xp = xn.value.raw();
        const T* dyp = dy.raw();
        const auto M = static_cast<Eigen::Index>(g.out_voxels());
        const auto KC = static_cast<Eigen::Index>(g.patch_len());
        const auto CI = static_cast<Eigen::Index>(g.cout);
        CMapMat<T> w(kn.value.raw(), KC, CI);
        const std::size_t x_stride = g.out_voxels() * g.cout;
        const std::size_t y_stride = g.in_voxels() * g.cin;
        detail::parallel_chunks(g.batch, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
            std::vector<T> col(g.out_voxels() * g.patch_len());
            if (kn.requires_grad) dw_parts[chunk].assign(g.patch_len() * g.cout, T{0});
            for (std::size_t n = begin; n < end; ++n) {
                im2col(dyp + n * y_stride, g, col.data());
                CMapMat<T> colm(col.data(), M, KC);
                if (dxp) {
                    MapMat<T> dx(dxp + n * x_stride, M, CI);
                    dx.noalias() += colm * w;
                }
                if (kn.requires_grad) {
                    CMapMat<T> xm(xp + n * x_stride, M, CI);
                    MapMat<T> dw(dw_parts[chunk].data(), KC, CI);
                    dw.noalias() += colm.transpose() * xm;
                }
            }
        });
        if (kn.requires_grad) merge_partials(dw_parts, kn.grad_buffer());
    });
}

template <typename T>
Var<T> dense(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
    const Shape& xs = x.shape();
    const Shape& ws = weight.shape();
    if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[0])
        throw ContractError("dense: expected x [N,F], weight [F,G]; got " + to_string(xs) + " and " + to_string(ws));
    if (bias.shape() != Shape{ws[1]}) throw ContractError("dense: bias must be [G]");
    require_finite(x.value(), "dense input");
    const auto N = static_cast<Eigen::Index>(xs[0]);
    const auto F = static_cast<Eigen::Index>(xs[1]);
    const auto G = static_cast<Eigen::Index>(ws[1]);
    Tensor<T> y(Shape{xs[0], ws[1]});
    MapMat<T> ym(y.raw(), N, G);
    ym.noalias() = CMapMat<T>(x.value().raw(), N, F) * CMapMat<T>(weight.value().raw(), F, G);
    const T* bp = bias.value().raw();
    for (Eigen::Index r = 0; r < N; ++r)
        for (Eigen::Index c = 0; c < G; ++c) ym(r, c) += bp[c];

    return make_result<T>(std::move(y), {x, weight, bias}, [N, F, G](Node<T>& self) {
        Node<T>& xn = *self.inputs[0];
        Node<T>& wn = *self.inputs[1];
        Node<T>& bn = *self.inputs[2];
        CMapMat<T> dy(self.grad.raw(), N, G);
        if (xn.requires_grad) {
            MapMat<T> dx(xn.grad_buffer().raw(), N, F);
            dx.noalias() += dy * CMapMat<T>(wn.value.raw(), F, G).transpose();
        }
        if (wn.requires_grad) {
            MapMat<T> dw(wn.grad_buffer().raw(), F, G);
            dw.noalias() += CMapMat<T>(xn.value.raw(), N, F).transpose() * dy;
        }
        if (bn.requires_grad) accumulate_bias_grad(self.grad, static_cast<std::size_t>(G), bn.grad_buffer());
    });
}

template Var<float> conv3d(const Var<float>&, const Var<float>&, const Var<float>&, std::size_t);
template Var<double> conv3d(const Var<double>&, const Var<double>&, const Var<double>&, std::size_t);
template Var<float> conv3d_transpose(const Var<float>&, const Var<float>&, const Var<float>&, std::size_t);
template Var<double> conv3d_transpose(const Var<double>&, const Var<double>&, const Var<double>&, std::size_t);
template Var<float> dense(const Var<float>&, const Var<float>&, const Var<float>&);
template Var<double> dense(const Var<double>&, const Var<double>&, const Var<double>&);

} // namespace ops
} // namespace volsr::nn
