#include "volsr/io/container.hpp"

#include "volsr/util/files.hpp"

#include <bit>
#include <cstring>

namespace volsr::io {
namespace {

constexpr char kMagic[8] = {'V', 'O', 'L', 'S', 'R', '\0', '\0', '\0'};
constexpr std::size_t kFixedHeader = 80;

std::size_t label_block(std::size_t ncomp) { return (ncomp + 7) / 8 * 8; }

std::size_t element_size(DType t) { return t == DType::f32 ? 4 : 8; }

using Kind = VolumeFormatError::Kind;

} // namespace

void encode_volume(const VolumeField& field, ByteWriter& out) {
    field.validate();
    out.put_bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 8});
    out.put_u32(kVolumeVersion);
    out.put_u32(static_cast<std::uint32_t>(kFixedHeader + label_block(field.component_count())));
    out.put_u64(field.dims.x);
    out.put_u64(field.dims.y);
    out.put_u64(field.dims.z);
    out.put_u32(static_cast<std::uint32_t>(field.component_count()));
    out.put_u32(static_cast<std::uint32_t>(field.dtype));
    for (double L : field.domain) out.put_f64(L);
    out.put_i64(field.time_tag);
    out.put_text(field.components);
    for (std::size_t i = field.component_count(); i < label_block(field.component_count()); ++i) out.put_u8(0);
    for (const auto& g : field.data) {
        if (field.dtype == DType::f32)
            for (double v : g.values()) out.put_f32(static_cast<float>(v));
        else
            for (double v : g.values()) out.put_f64(v);
    }
}

std::vector<std::uint8_t> encode_volume(const VolumeField& field) {
    ByteWriter w;
    encode_volume(field, w);
    return w.take();
}

VolumeField decode_volume(ByteReader& in) {
    if (in.remaining() < 16) throw VolumeFormatError(Kind::truncated, "truncated container preamble");
    auto magic = in.get_bytes(8);
    if (std::memcmp(magic.data(), kMagic, 8) != 0) throw VolumeFormatError(Kind::bad_magic, "not a VOLSR container");
    const auto version = in.get_u32();
    if (version != kVolumeVersion)
        throw VolumeFormatError(Kind::bad_version, "unsupported VOLSR version " + std::to_string(version));
    const auto header_len = in.get_u32();
    if (header_len < kFixedHeader) throw VolumeFormatError(Kind::bad_header, "header length too small");
    if (in.remaining() < header_len - 16) throw VolumeFormatError(Kind::truncated, "truncated container header");

    VolumeField f;
    f.dims = {in.get_u64(), in.get_u64(), in.get_u64()};
    const auto ncomp = in.get_u32();
    const auto dtype_code = in.get_u32();
    for (double& L : f.domain) L = in.get_f64();
    f.time_tag = in.get_i64();
    if (f.dims.x == 0 || f.dims.y == 0 || f.dims.z == 0)
        throw VolumeFormatError(Kind::bad_header, "zero dimension in header");
    if (dtype_code != 1 && dtype_code != 2)
        throw VolumeFormatError(Kind::bad_header, "unknown dtype code " + std::to_string(dtype_code));
    f.dtype = static_cast<DType>(dtype_code);
    if (ncomp == 0 || header_len != kFixedHeader + label_block(ncomp))
        throw VolumeFormatError(Kind::bad_header, "component count disagrees with header length");
    for (double L : f.domain)
        if (!(L > 0.0)) throw VolumeFormatError(Kind::bad_header, "non-positive domain extent");
    f.components = in.get_text(ncomp);
    in.get_bytes(label_block(ncomp) - ncomp);

    const std::size_t n = f.dims.voxels();
    if (n / f.dims.x / f.dims.y != f.dims.z) throw VolumeFormatError(Kind::bad_header, "dims overflow");
    const std::size_t payload = n * ncomp * element_size(f.dtype);
    if (in.remaining() < payload)
        throw VolumeFormatError(Kind::truncated, "truncated payload: expected " + std::to_string(payload) +
                                                     " bytes, found " + std::to_string(in.remaining()));
    f.data.reserve(ncomp);
    for (std::uint32_t c = 0; c < ncomp; ++c) {
        std::vector<double> vals(n);
        if (f.dtype == DType::f32)
            for (auto& v : vals) v = static_cast<double>(in.get_f32());
        else
            for (auto& v : vals) v = in.get_f64();
        f.data.emplace_back(f.dims, std::move(vals));
    }
    return f;
}

VolumeField decode_volume(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    auto f = decode_volume(in);
    if (in.remaining() != 0)
        throw VolumeFormatError(Kind::length_mismatch, "payload length disagrees with dims: " +
                                                           std::to_string(in.remaining()) + " trailing bytes");
    return f;
}

std::filesystem::path meta_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".meta.json";
    return p;
}

void write_volume(const VolumeField& field, const std::filesystem::path& path, bool sidecar) {
    atomic_write(path, encode_volume(field));
    if (sidecar) atomic_write(meta_path(path), FieldMeta::of(field).to_json());
}

VolumeField read_volume(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    try {
        return decode_volume(bytes);
    } catch (const VolumeFormatError& e) {
        throw VolumeFormatError(e.kind(), path.string() + ": " + e.what());
    }
}

FieldMeta read_field_meta(const std::filesystem::path& path) { return FieldMeta::from_json(read_text(meta_path(path))); }

void write_volume_sequence(std::span<const VolumeField> fields, const std::filesystem::path& path) {
    ByteWriter w;
    for (const auto& f : fields) encode_volume(f, w);
    atomic_write(path, w.bytes());
}

std::vector<VolumeField> read_volume_sequence(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    ByteReader in(bytes);
    std::vector<VolumeField> out;
    while (in.remaining() > 0) out.push_back(decode_volume(in));
    return out;
}

VolumeField ingest_raw(std::span<const std::uint8_t> raw, Dims dims, DType dtype, bool big_endian, char label,
                       std::array<double, 3> domain, std::int64_t time_tag) {
    const std::size_t es = element_size(dtype);
    const std::size_t n = dims.voxels();
    if (n == 0) throw ContractError("ingest: dims must be >= 1");
    if (raw.size() != n * es)
        throw VolumeFormatError(raw.size() < n * es ? Kind::truncated : Kind::length_mismatch,
                                "raw size " + std::to_string(raw.size()) + " bytes does not match dims " +
                                    to_string(dims) + " x " + std::to_string(es) + " bytes");
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (std::size_t b = 0; b < es; ++b) {
            const std::size_t src = big_endian ? es - 1 - b : b;
            bits |= static_cast<std::uint64_t>(raw[i * es + src]) << (8 * b);
        }
        vals[i] = dtype == DType::f32 ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(bits)))
                                      : std::bit_cast<double>(bits);
    }
    VolumeField f = VolumeField::scalar(Grid3(dims, std::move(vals)), label, domain, dtype);
    f.time_tag = time_tag;
    f.validate();
    return f;
}

} // namespace volsr::io
