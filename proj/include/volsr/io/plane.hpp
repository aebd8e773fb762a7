#pragma once

#include "volsr/io/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace volsr::io {

enum class Axis { x = 0, y = 1, z = 2 };

char axis_label(Axis a);
Axis parse_axis(const std::string& text);

/// 2-D slice. The first axis is the first remaining grid axis (x before y
/// before z); values are row-major over (first, second).
struct Plane2D {
    std::size_t n0 = 0;
    std::size_t n1 = 0;
    char axis0 = 'x';
    char axis1 = 'y';
    std::vector<double> values;

    double at(std::size_t i0, std::size_t i1) const { return values[i0 * n1 + i1]; }
    double& at(std::size_t i0, std::size_t i1) { return values[i0 * n1 + i1]; }
    friend bool operator==(const Plane2D&, const Plane2D&) = default;
};

Plane2D extract_plane(const Grid3& grid, Axis axis, std::size_t index);
Plane2D extract_plane(const VolumeField& field, Axis axis, std::size_t index, char component);

struct PgmScale {
    double min = 0.0;
    double max = 0.0;
};

struct PgmImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;
};

/// 8-bit value of `v` under linear min-max scaling; constant range maps to 128.
std::uint8_t pgm_level(double v, const PgmScale& scale);
/// Inverse of pgm_level (centre of the quantization bin).
double pgm_value(std::uint8_t level, const PgmScale& scale);

/// Binary P5 image with rows = first plane axis, plus `<path>.json` holding the scale.
PgmScale export_pgm(const Plane2D& plane, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm(const Plane2D& plane, PgmScale& scale);
PgmImage read_pgm(const std::filesystem::path& path);
PgmScale read_pgm_scale(const std::filesystem::path& path);

} // namespace volsr::io
