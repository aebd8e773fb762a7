#include "volsr/interp/resample.hpp"

#include "volsr/util/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace volsr::interp {

std::string to_string(Kernel k) {
    switch (k) {
    case Kernel::nearest: return "nearest";
    case Kernel::trilinear: return "trilinear";
    case Kernel::cubic_catmull_rom: return "cubic";
    case Kernel::lanczos3: return "lanczos3";
    }
    return "?";
}

Kernel parse_kernel(const std::string& text) {
    if (text == "nearest") return Kernel::nearest;
    if (text == "trilinear" || text == "linear") return Kernel::trilinear;
    if (text == "cubic" || text == "catmull_rom" || text == "cubic_catmull_rom") return Kernel::cubic_catmull_rom;
    if (text == "lanczos" || text == "lanczos3") return Kernel::lanczos3;
    throw ConfigError("unknown interpolation kernel: " + text);
}

int support_radius(Kernel k) {
    switch (k) {
    case Kernel::nearest:
    case Kernel::trilinear: return 1;
    case Kernel::cubic_catmull_rom: return 2;
    case Kernel::lanczos3: return 3;
    }
    return 1;
}

double kernel_value(Kernel kind, double x) {
    const double ax = std::abs(x);
    switch (kind) {
    case Kernel::nearest: return ax < 0.5 ? 1.0 : 0.0;
    case Kernel::trilinear: return ax < 1.0 ? 1.0 - ax : 0.0;
    case Kernel::cubic_catmull_rom: {
        constexpr double a = -0.5;
        if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
        if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
        return 0.0;
    }
    case Kernel::lanczos3: {
        if (ax == 0.0) return 1.0;
        if (ax >= 3.0) return 0.0;
        const double px = std::numbers::pi * ax;
        return 3.0 * std::sin(px) * std::sin(px / 3.0) / (px * px);
    }
    }
    return 0.0;
}

KernelWeights kernel_weights(Kernel kind, double t) {
    if (!(t >= 0.0 && t < 1.0)) throw ContractError("kernel offset must lie in [0, 1), got " + std::to_string(t));
    KernelWeights kw;
    if (kind == Kernel::nearest) {
        kw.first = t < 0.5 ? 0 : 1;
        kw.w = {1.0};
        return kw;
    }
    const int r = support_radius(kind);
    kw.first = 1 - r;
    kw.w.resize(static_cast<std::size_t>(2 * r));
    double sum = 0.0;
    for (int i = 0; i < 2 * r; ++i) {
        kw.w[i] = kernel_value(kind, t - static_cast<double>(kw.first + i));
        sum += kw.w[i];
    }
    for (double& w : kw.w) w /= sum;
    return kw;
}

io::Grid3 resample_axis(const io::Grid3& in, int axis, std::size_t out_n, Kernel kind) {
    if (axis < 0 || axis > 2) throw ContractError("axis must be 0, 1 or 2");
    if (out_n == 0) throw ContractError("resample: output extent must be >= 1");
    const io::Dims d = in.dims();
    io::Dims od = d;
    (axis == 0 ? od.x : axis == 1 ? od.y : od.z) = out_n;
    const std::size_t n_in = d[axis];
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? d.x : d.x * d.y;
    const std::size_t ostride = axis == 0 ? 1 : axis == 1 ? od.x : od.x * od.y;

    // per-output-sample taps, shared by every line along the axis
    std::vector<std::vector<std::pair<std::size_t, double>>> taps(out_n);
    for (std::size_t j = 0; j < out_n; ++j) {
        const double pos = (out_n == 1 || n_in == 1)
                               ? 0.0
                               : static_cast<double>(j) * static_cast<double>(n_in - 1) / static_cast<double>(out_n - 1);
        double base = std::floor(pos);
        double t = pos - base;
        if (t >= 1.0) {
            base += 1.0;
            t = 0.0;
        }
        const auto kw = kernel_weights(kind, t);
        for (std::size_t i = 0; i < kw.w.size(); ++i) {
            const long idx = static_cast<long>(base) + kw.first + static_cast<long>(i);
            const long c = std::clamp(idx, 0L, static_cast<long>(n_in) - 1);
            taps[j].emplace_back(static_cast<std::size_t>(c), kw.w[i]);
        }
    }

    io::Grid3 out(od);
    const auto& src = in.values();
    auto& dst = out.values();
    // iterate over all lines orthogonal to the axis
    const std::size_t n_lines = d.voxels() / n_in;
    for (std::size_t line = 0; line < n_lines; ++line) {
        std::size_t in_base, out_base;
        if (axis == 0) {
            in_base = line * d.x;
            out_base = line * od.x;
        } else if (axis == 1) {
            const std::size_t i = line % d.x, k = line / d.x;
            in_base = i + d.x * d.y * k;
            out_base = i + od.x * od.y * k;
        } else {
            in_base = line;
            out_base = line;
        }
        for (std::size_t j = 0; j < out_n; ++j) {
            double s = 0.0;
            for (const auto& [idx, w] : taps[j]) s += w * src[in_base + idx * stride];
            dst[out_base + j * ostride] = s;
        }
    }
    return out;
}

io::Grid3 resample_to(const io::Grid3& in, io::Dims out, Kernel kind) {
    io::Grid3 g = in.dims().x == out.x ? in : resample_axis(in, 0, out.x, kind);
    if (g.dims().y != out.y) g = resample_axis(g, 1, out.y, kind);
    if (g.dims().z != out.z) g = resample_axis(g, 2, out.z, kind);
    return g;
}

io::Dims scaled_dims(io::Dims in, std::array<double, 3> scale) {
    std::size_t o[3];
    for (int a = 0; a < 3; ++a) {
        if (!(scale[a] > 0.0)) throw ContractError("resample: scales must be > 0");
        const double n = std::round(static_cast<double>(in[a]) * scale[a]);
        if (n < 1.0) throw ContractError("resample: output dim < 1 on axis " + std::to_string(a));
        o[a] = static_cast<std::size_t>(n);
    }
    return {o[0], o[1], o[2]};
}

io::Grid3 resample3d(const io::Grid3& in, std::array<double, 3> scale, Kernel kind) {
    return resample_to(in, scaled_dims(in.dims(), scale), kind);
}

io::VolumeField resample_to(const io::VolumeField& in, io::Dims out, Kernel kind) {
    io::VolumeField f = in;
    f.dims = out;
    f.data.clear();
    for (const auto& g : in.data) f.data.push_back(resample_to(g, out, kind));
    f.quantize();
    return f;
}

io::VolumeField resample3d(const io::VolumeField& in, std::array<double, 3> scale, Kernel kind) {
    return resample_to(in, scaled_dims(in.dims, scale), kind);
}

} // namespace volsr::interp
