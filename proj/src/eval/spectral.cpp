#include "volsr/eval/spectral.hpp"

#include "volsr/util/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace volsr::eval {

namespace {

void radix2(std::span<cplx> a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t k = 0; k < half; ++k) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            const cplx w(std::cos(ang), std::sin(ang));
            for (std::size_t i = 0; i < n; i += len) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + half] * w;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

} // namespace

std::vector<cplx> dft1d(std::span<const cplx> data) {
    const std::size_t n = data.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
            s += data[j] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = s;
    }
    return out;
}

void fft1d(std::span<cplx> data) {
    if (data.size() <= 1) return;
    if (std::has_single_bit(data.size())) {
        radix2(data);
        return;
    }
    const auto out = dft1d(data);
    std::copy(out.begin(), out.end(), data.begin());
}

const cplx& Spectrum2D::freq(long k0, long k1) const {
    const long m0 = static_cast<long>(n0), m1 = static_cast<long>(n1);
    const long i0 = ((k0 + m0 / 2) % m0 + m0) % m0;
    const long i1 = ((k1 + m1 / 2) % m1 + m1) % m1;
    return at(static_cast<std::size_t>(i0), static_cast<std::size_t>(i1));
}

Spectrum2D fft2d(const Plane2D& plane) {
    const std::size_t n0 = plane.n0, n1 = plane.n1;
    if (n0 < 2 || n1 < 2) throw ContractError("fft2d: plane must be at least 2x2");
    if (plane.values.size() != n0 * n1) throw ContractError("fft2d: value count does not match plane dims");
    for (double v : plane.values)
        if (!std::isfinite(v)) throw NumericError("fft2d: plane contains non-finite values");

    std::vector<cplx> a(plane.values.begin(), plane.values.end());
    for (std::size_t r = 0; r < n0; ++r) fft1d(std::span<cplx>(a).subspan(r * n1, n1));
    std::vector<cplx> col(n0);
    for (std::size_t c = 0; c < n1; ++c) {
        for (std::size_t r = 0; r < n0; ++r) col[r] = a[r * n1 + c];
        fft1d(col);
        for (std::size_t r = 0; r < n0; ++r) a[r * n1 + c] = col[r];
    }

    Spectrum2D s{n0, n1, plane.axis0, plane.axis1, std::vector<cplx>(n0 * n1)};
    for (std::size_t r = 0; r < n0; ++r)
        for (std::size_t c = 0; c < n1; ++c) s.coeffs[((r + n0 / 2) % n0) * n1 + (c + n1 / 2) % n1] = a[r * n1 + c];
    return s;
}

Plane2D amplitude_map(const Spectrum2D& spec) {
    Plane2D p{spec.n0, spec.n1, spec.axis0, spec.axis1, std::vector<double>(spec.coeffs.size())};
    for (std::size_t i = 0; i < p.values.size(); ++i) p.values[i] = std::log(std::abs(spec.coeffs[i]) + kAmplitudeFloor);
    return p;
}

Plane2D phase_map(const Spectrum2D& spec) {
    Plane2D p{spec.n0, spec.n1, spec.axis0, spec.axis1, std::vector<double>(spec.coeffs.size())};
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        const cplx c = spec.coeffs[i];
        if (std::abs(c) < kPhaseThreshold) continue;
        double ph = std::atan2(c.imag(), c.real());
        if (ph <= -std::numbers::pi) ph = std::numbers::pi;
        p.values[i] = ph;
    }
    return p;
}

ErrorStats abs_error(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size())
        throw ContractError("error stats: size mismatch (" + std::to_string(pred.size()) + " vs " +
                            std::to_string(truth.size()) + ")");
    if (pred.empty()) throw ContractError("error stats: empty input");
    ErrorStats e;
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = std::abs(pred[i] - truth[i]);
        e.max_abs = std::max(e.max_abs, d);
        sum += d;
    }
    e.mean_abs = sum / static_cast<double>(pred.size());
    return e;
}

ErrorStats field_error(const io::Grid3& pred, const io::Grid3& truth) {
    if (pred.dims() != truth.dims())
        throw ContractError("field_error: dims " + io::to_string(pred.dims()) + " vs " + io::to_string(truth.dims()));
    return abs_error(pred.values(), truth.values());
}

ErrorStats field_error(const Plane2D& pred, const Plane2D& truth) {
    if (pred.n0 != truth.n0 || pred.n1 != truth.n1) throw ContractError("field_error: plane dims differ");
    return abs_error(pred.values, truth.values);
}

ErrorStats field_error(const io::Grid3& pred, const io::Grid3& truth, const io::Grid3& mask) {
    if (pred.dims() != truth.dims() || mask.dims() != truth.dims())
        throw ContractError("field_error: prediction, truth and mask dims differ");
    std::vector<double> p, t;
    for (std::size_t i = 0; i < mask.values().size(); ++i)
        if (mask[i] != 0.0) {
            p.push_back(pred[i]);
            t.push_back(truth[i]);
        }
    if (p.empty()) throw ContractError("field_error: mask selects no voxels");
    return abs_error(p, t);
}

ErrorStats spectrum_error(const Plane2D& pred_amp, const Plane2D& truth_amp) { return field_error(pred_amp, truth_amp); }

} // namespace volsr::eval
