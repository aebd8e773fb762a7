#pragma once

// Checkpoint layout (little-endian):
//   0  magic "VOLSRCK\0"
//   8  u32 version
//  12  u32 reserved (0)
//  16  u64 header length H
//  24  JSON header (H bytes): kind, seed, config, train, epoch, history,
//      manifest_sha256, patch_spec, norm_stats, parameter and batch-norm tables
//  .. for each parameter in table order: f32 value[n], f32 adam_m[n], f32 adam_v[n], u64 step
//  .. for each batch norm in table order: f32 running_mean[c], f32 running_var[c]

#include "volsr/models/gan.hpp"
#include "volsr/models/train.hpp"
#include "volsr/models/vae.hpp"
#include "volsr/patch/patch.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace volsr::models {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelKind { vae, gan };
std::string to_string(ModelKind k);

/// Everything besides the weights that a later command needs.
struct TrainingState {
    std::size_t epoch = 0;
    TrainConfig train;
    std::string manifest_hash;
    std::optional<patch::PatchSpec> spec;
    patch::NormStats stats;
    std::vector<VaeEpoch> vae_history;
    std::vector<GanEpoch> gan_history;
};

struct CheckpointHeader {
    ModelKind kind = ModelKind::vae;
    std::uint64_t seed = 0;
    std::string config_json;
    TrainingState state;
};

template <typename Model>
struct LoadedCheckpoint {
    Model model;
    TrainingState state;
};

std::vector<std::uint8_t> encode_checkpoint(VaeModel<float>& model, const TrainingState& state);
std::vector<std::uint8_t> encode_checkpoint(GanModel<float>& model, const TrainingState& state);

/// Throws FormatError on a malformed file, ManifestMismatch when `expected`
/// is given and differs from the stored config, or when the kind is wrong.
LoadedCheckpoint<VaeModel<float>> decode_vae_checkpoint(std::span<const std::uint8_t> bytes,
                                                        const VaeConfig* expected = nullptr);
LoadedCheckpoint<GanModel<float>> decode_gan_checkpoint(std::span<const std::uint8_t> bytes,
                                                        const GanConfig* expected = nullptr);
CheckpointHeader decode_checkpoint_header(std::span<const std::uint8_t> bytes);

void save_checkpoint(VaeModel<float>& model, const TrainingState& state, const std::filesystem::path& path);
void save_checkpoint(GanModel<float>& model, const TrainingState& state, const std::filesystem::path& path);
LoadedCheckpoint<VaeModel<float>> load_vae_checkpoint(const std::filesystem::path& path,
                                                      const VaeConfig* expected = nullptr);
LoadedCheckpoint<GanModel<float>> load_gan_checkpoint(const std::filesystem::path& path,
                                                      const GanConfig* expected = nullptr);
CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

} // namespace volsr::models
