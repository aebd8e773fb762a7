#pragma once

#include "volsr/io/volume.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace volsr::patch {

using io::Dims;
using io::Grid3;

inline constexpr std::size_t kPatchOut = 16;

struct Origin {
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t z = 0;
    friend bool operator==(const Origin&, const Origin&) = default;
    friend auto operator<=>(const Origin&, const Origin&) = default;
};

enum class Upsample { trilinear, nearest };

std::string to_string(Upsample u);
Upsample parse_upsample(const std::string& text);

/// Window geometry: a q-cube with q = A * s slides with stride s; its A-strided
/// subsample is the LR input and its central 16^3 block the HR target.
/// q is derived, never stored, so q == A * s cannot be violated.
class PatchSpec {
public:
    PatchSpec(std::size_t A, std::size_t s, char component = 'u', Upsample upsample = Upsample::trilinear,
              bool prefilter = false);

    std::size_t A() const { return A_; }
    std::size_t s() const { return s_; }
    std::size_t q() const { return A_ * s_; }
    std::size_t patch_out() const { return kPatchOut; }
    char component() const { return component_; }
    Upsample upsample() const { return upsample_; }
    /// Box-average each A^3 block instead of pure strided subsampling.
    bool prefilter() const { return prefilter_; }
    /// Offset of the HR crop inside the q-cube on every axis.
    std::size_t crop_offset() const { return (q() - kPatchOut) / 2; }

    std::string to_json() const;
    /// Rejects documents whose "q" disagrees with A * s.
    static PatchSpec from_json(const std::string& text);

    friend bool operator==(const PatchSpec&, const PatchSpec&) = default;

private:
    std::size_t A_;
    std::size_t s_;
    char component_;
    Upsample upsample_;
    bool prefilter_;
};

/// Per-axis origin count floor((D - q) / s) + 1; throws when q exceeds an axis.
std::size_t tile_count(Dims dims, std::size_t q, std::size_t s);
/// All origins with o + q <= dims stepping by s, lexicographic in (x, y, z).
std::vector<Origin> tile_origins(Dims dims, std::size_t q, std::size_t s);

Grid3 extract_cube(const Grid3& grid, Origin origin, std::size_t q);
Grid3 coarsen(const Grid3& cube, std::size_t A, bool prefilter = false);
/// Endpoint-aligned upsample of an m^3 cube (m <= target) onto target^3.
Grid3 upsample_lr(const Grid3& cube, std::size_t target = kPatchOut, Upsample method = Upsample::trilinear);
Grid3 center_crop(const Grid3& cube, std::size_t out = kPatchOut);

struct NormStats {
    double mean = 0.0;
    double std = 1.0;
    friend bool operator==(const NormStats&, const NormStats&) = default;
};

NormStats compute_norm_stats(const io::VolumeField& field, char component);
NormStats compute_norm_stats(const Grid3& grid);
Grid3 apply_norm(const Grid3& g, const NormStats& s);
Grid3 invert_norm(const Grid3& g, const NormStats& s);

struct SamplePair {
    Grid3 lr;
    Grid3 hr;
    Origin origin;
};

struct Dataset {
    PatchSpec spec{1, 16};
    NormStats stats;
    std::string source_hash;  ///< sha256 of the source field container
    Dims source_dims;
    std::vector<SamplePair> pairs;
};

/// sha256 of the field's VOLSR encoding.
std::string field_hash(const io::VolumeField& field);

/// LR input for one window: upsample(coarsen(cube)) on an already normalized q-cube.
Grid3 make_lr(const Grid3& normalized_cube, const PatchSpec& spec);

Dataset build_dataset(const io::VolumeField& field, const PatchSpec& spec, const NormStats& stats);

/// JSON manifest (spec, stats, dims, origins, source hash, pairs hash).
std::string manifest_json(const Dataset& ds, const std::string& pairs_hash);

/// Writes `pairs.volsr` (lr_0, hr_0, lr_1, ...) and `manifest.json` into `dir`.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
/// Throws ManifestMismatch if pairs and manifest disagree.
Dataset load_dataset(const std::filesystem::path& dir);
/// sha256 of the manifest file; identifies a dataset in checkpoints.
std::string manifest_hash(const std::filesystem::path& dir);

} // namespace volsr::patch
