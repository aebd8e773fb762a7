#pragma once

#include "volsr/io/plane.hpp"

#include <complex>
#include <span>
#include <vector>

namespace volsr::eval {

using cplx = std::complex<double>;
using io::Plane2D;

/// In-place unnormalized forward DFT. Power-of-two lengths use iterative
/// radix-2; other lengths fall back to the direct sum.
void fft1d(std::span<cplx> data);

/// Direct O(n^2) DFT.
std::vector<cplx> dft1d(std::span<const cplx> data);

/// Unnormalized 2-D DFT, zero frequency shifted to (n0/2, n1/2).
struct Spectrum2D {
    std::size_t n0 = 0;
    std::size_t n1 = 0;
    char axis0 = 'x';
    char axis1 = 'y';
    std::vector<cplx> coeffs;  ///< row-major over (n0, n1), centered

    const cplx& at(std::size_t i0, std::size_t i1) const { return coeffs[i0 * n1 + i1]; }
    /// Coefficient for signed frequency (k0, k1), taken modulo the plane size.
    const cplx& freq(long k0, long k1) const;
};

/// Throws ContractError for planes smaller than 2x2, NumericError for non-finite values.
Spectrum2D fft2d(const Plane2D& plane);

inline constexpr double kAmplitudeFloor = 1e-20;
inline constexpr double kPhaseThreshold = 1e-12;

/// ln(|F| + 1e-20).
Plane2D amplitude_map(const Spectrum2D& spec);
/// atan2(Im, Re) in (-pi, pi]; 0 where |F| < 1e-12.
Plane2D phase_map(const Spectrum2D& spec);

struct ErrorStats {
    double max_abs = 0.0;
    double mean_abs = 0.0;
    friend bool operator==(const ErrorStats&, const ErrorStats&) = default;
};

/// Elementwise |pred - truth| aggregated; throws ContractError on a size mismatch.
ErrorStats abs_error(std::span<const double> pred, std::span<const double> truth);
ErrorStats field_error(const io::Grid3& pred, const io::Grid3& truth);
ErrorStats field_error(const Plane2D& pred, const Plane2D& truth);
/// Same statistic restricted to voxels where mask != 0.
ErrorStats field_error(const io::Grid3& pred, const io::Grid3& truth, const io::Grid3& mask);
ErrorStats spectrum_error(const Plane2D& pred_amp, const Plane2D& truth_amp);

} // namespace volsr::eval
