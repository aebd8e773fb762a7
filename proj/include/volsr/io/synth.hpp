#pragma once

#include "volsr/io/volume.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace volsr::io {

struct SynthParams {
    std::size_t num_modes = 64;
    double spectrum_exponent = -5.0 / 3.0;
    /// Largest wavenumber magnitude in cycles per domain; 0 picks min(D)/8 so
    /// the shortest wavelength spans at least 8 voxels.
    double k_max = 0.0;
    std::string components = "u";
    DType dtype = DType::f64;
    std::int64_t time_tag = 0;
};

/// One cosine term: amplitude * cos(2*pi*(nx*x/Dx + ny*y/(Dy-1) + nz*z/Dz) + phase).
/// nx and nz are integers (periodic in x and z); ny is continuous.
struct FourierMode {
    double nx = 0.0;
    double ny = 0.0;
    double nz = 0.0;
    double k = 0.0;  ///< |(nx, ny, nz)|
    double amplitude = 0.0;
    double phase = 0.0;
};

double resolved_k_max(Dims dims, const SynthParams& params);

/// Mode table of one component. Amplitudes follow |k|^(exponent/2) and are
/// scaled so the unenveloped sum has unit variance.
std::vector<FourierMode> synth_modes(Dims dims, std::uint64_t seed, std::size_t component, const SynthParams& params);

/// Sum of random Fourier modes times sin(pi*y/Ly); exactly zero on both y walls.
VolumeField synth_field(Dims dims, std::array<double, 3> domain, std::uint64_t seed, const SynthParams& params = {});

} // namespace volsr::io
