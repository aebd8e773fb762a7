#pragma once

#include "volsr/io/volume.hpp"

#include <array>
#include <string>
#include <vector>

namespace volsr::interp {

enum class Kernel { nearest, trilinear, cubic_catmull_rom, lanczos3 };

std::string to_string(Kernel k);
/// Accepts "nearest", "trilinear"/"linear", "cubic"/"catmull_rom", "lanczos"/"lanczos3".
Kernel parse_kernel(const std::string& text);

/// Support radius in taps: 1 for nearest/trilinear, 2 for cubic, 3 for Lanczos-3.
int support_radius(Kernel k);

/// Weights for taps at integer offsets first, first+1, ... relative to
/// floor(position); always renormalized to sum to 1.
struct KernelWeights {
    int first = 0;
    std::vector<double> w;
};

/// `t` is the fractional offset in [0, 1).
KernelWeights kernel_weights(Kernel kind, double t);

/// Unnormalized kernel value at distance x (Keys a = -1/2; Lanczos a = 3).
double kernel_value(Kernel kind, double x);

/// Resamples one axis to `out_n` samples. Sample j sits at input coordinate
/// j*(n_in-1)/(out_n-1) (endpoint aligned); taps outside [0, n_in) are clamped.
io::Grid3 resample_axis(const io::Grid3& in, int axis, std::size_t out_n, Kernel kind);

/// Separable x, then y, then z resample to explicit dims.
io::Grid3 resample_to(const io::Grid3& in, io::Dims out, Kernel kind);

/// Output extent per axis is round(n * scale); each must be >= 1.
io::Dims scaled_dims(io::Dims in, std::array<double, 3> scale);
io::Grid3 resample3d(const io::Grid3& in, std::array<double, 3> scale, Kernel kind);
io::VolumeField resample3d(const io::VolumeField& in, std::array<double, 3> scale, Kernel kind);
io::VolumeField resample_to(const io::VolumeField& in, io::Dims out, Kernel kind);

} // namespace volsr::interp
