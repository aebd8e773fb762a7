#include "volsr/io/synth.hpp"

#include "volsr/util/errors.hpp"
#include "volsr/util/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace volsr::io {
namespace {

using cplx = std::complex<double>;

std::vector<cplx> axis_phasors(double cycles, std::size_t n, double period) {
    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * cycles * static_cast<double>(i) / period;
        out[i] = {std::cos(a), std::sin(a)};
    }
    return out;
}

} // namespace

double resolved_k_max(Dims dims, const SynthParams& params) {
    if (params.k_max > 0.0) return std::max(1.0, params.k_max);
    return std::max(1.0, static_cast<double>(std::min({dims.x, dims.y, dims.z})) / 8.0);
}

std::vector<FourierMode> synth_modes(Dims dims, std::uint64_t seed, std::size_t component, const SynthParams& params) {
    if (params.num_modes == 0) throw ContractError("synth: num_modes must be >= 1");
    Rng rng(Rng::mix(seed, component));
    const double kmax = resolved_k_max(dims, params);
    std::vector<FourierMode> modes(params.num_modes);
    double energy = 0.0;
    for (auto& m : modes) {
        const double mag = std::exp(rng.uniform(0.0, std::log(kmax)));
        double dx = rng.normal(), dy = rng.normal(), dz = rng.normal();
        const double norm = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (norm > 0.0) {
            dx /= norm;
            dy /= norm;
            dz /= norm;
        } else {
            dx = 1.0;
        }
        m.nx = std::round(mag * dx);
        m.nz = std::round(mag * dz);
        m.ny = mag * dy;
        m.k = std::sqrt(m.nx * m.nx + m.ny * m.ny + m.nz * m.nz);
        if (m.k < 0.5) {
            // direction rounded away; keep the drawn magnitude along y
            m.ny = std::copysign(mag, dy == 0.0 ? 1.0 : dy);
            m.k = std::sqrt(m.nx * m.nx + m.ny * m.ny + m.nz * m.nz);
        }
        m.amplitude = std::pow(m.k, params.spectrum_exponent / 2.0);
        m.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        energy += 0.5 * m.amplitude * m.amplitude;
    }
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& m : modes) m.amplitude *= scale;
    return modes;
}

VolumeField synth_field(Dims dims, std::array<double, 3> domain, std::uint64_t seed, const SynthParams& params) {
    if (dims.x < 8 || dims.y < 8 || dims.z < 8) throw ContractError("synth: dims must be >= 8^3, got " + to_string(dims));
    if (params.components.empty()) throw ContractError("synth: no components requested");

    VolumeField f;
    f.dims = dims;
    f.components = params.components;
    f.domain = domain;
    f.time_tag = params.time_tag;
    f.dtype = params.dtype;

    std::vector<double> envelope(dims.y, 0.0);
    for (std::size_t j = 1; j + 1 < dims.y; ++j)
        envelope[j] = std::sin(std::numbers::pi * static_cast<double>(j) / static_cast<double>(dims.y - 1));

    const double py = static_cast<double>(dims.y - 1);
    for (std::size_t c = 0; c < params.components.size(); ++c) {
        const auto modes = synth_modes(dims, seed, c, params);
        std::vector<double> acc(dims.voxels(), 0.0);
        std::vector<cplx> xz(dims.x * dims.z);
        for (const auto& m : modes) {
            const auto ex = axis_phasors(m.nx, dims.x, static_cast<double>(dims.x));
            const auto ey = axis_phasors(m.ny, dims.y, py);
            const auto ez = axis_phasors(m.nz, dims.z, static_cast<double>(dims.z));
            const cplx a = std::polar(m.amplitude, m.phase);
            for (std::size_t k = 0; k < dims.z; ++k)
                for (std::size_t i = 0; i < dims.x; ++i) xz[k * dims.x + i] = a * ex[i] * ez[k];
            for (std::size_t k = 0; k < dims.z; ++k)
                for (std::size_t j = 0; j < dims.y; ++j) {
                    double* row = acc.data() + dims.x * (j + dims.y * k);
                    const cplx* src = xz.data() + k * dims.x;
                    const cplx w = ey[j];
                    for (std::size_t i = 0; i < dims.x; ++i) row[i] += (src[i] * w).real();
                }
        }
        for (std::size_t k = 0; k < dims.z; ++k)
            for (std::size_t j = 0; j < dims.y; ++j)
                for (std::size_t i = 0; i < dims.x; ++i) acc[i + dims.x * (j + dims.y * k)] *= envelope[j];
        f.data.emplace_back(dims, std::move(acc));
    }
    f.quantize();
    return f;
}

} // namespace volsr::io
