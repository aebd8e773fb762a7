#pragma once

#include "volsr/io/volume.hpp"
#include "volsr/util/bytes.hpp"
#include "volsr/util/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace volsr::io {

/// VOLSR container, all integers little-endian:
///
///   off  size  field
///     0     8  magic "VOLSR\0\0\0"
///     8     4  u32 version (1)
///    12     4  u32 header length in bytes (payload offset)
///    16    24  u64 dims x, y, z
///    40     4  u32 component count
///    44     4  u32 dtype code (1 = f32, 2 = f64)
///    48    24  f64 domain Lx, Ly, Lz
///    72     8  i64 time tag
///    80     n  one label byte per component, zero-padded to a multiple of 8
///   hdr     .  payload: components in label order, each Dx*Dy*Dz values, x fastest
inline constexpr std::uint32_t kVolumeVersion = 1;

class VolumeFormatError : public FormatError {
public:
    enum class Kind { bad_magic, bad_version, bad_header, truncated, length_mismatch };
    VolumeFormatError(Kind kind, const std::string& what) : FormatError(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

void encode_volume(const VolumeField& field, ByteWriter& out);
std::vector<std::uint8_t> encode_volume(const VolumeField& field);

/// Decodes one container starting at the reader position; the reader is
/// left just past the payload.
VolumeField decode_volume(ByteReader& in);

/// Decodes a buffer holding exactly one container.
VolumeField decode_volume(std::span<const std::uint8_t> bytes);

/// Writes the container atomically; with `sidecar`, also writes FieldMeta
/// JSON to `meta_path(path)`.
void write_volume(const VolumeField& field, const std::filesystem::path& path, bool sidecar = true);
VolumeField read_volume(const std::filesystem::path& path);

std::filesystem::path meta_path(const std::filesystem::path& path);
FieldMeta read_field_meta(const std::filesystem::path& path);

/// Several containers back to back in one file.
void write_volume_sequence(std::span<const VolumeField> fields, const std::filesystem::path& path);
std::vector<VolumeField> read_volume_sequence(const std::filesystem::path& path);

/// Converts a headerless x-fastest array (single component) into a field.
VolumeField ingest_raw(std::span<const std::uint8_t> raw, Dims dims, DType dtype, bool big_endian = false,
                       char label = 'u', std::array<double, 3> domain = {1.0, 1.0, 1.0}, std::int64_t time_tag = 0);

} // namespace volsr::io
