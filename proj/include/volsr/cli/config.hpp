#pragma once

#include "volsr/io/synth.hpp"
#include "volsr/models/gan.hpp"
#include "volsr/models/train.hpp"
#include "volsr/models/vae.hpp"
#include "volsr/patch/patch.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace volsr::cli {

struct PathsConfig {
    std::string workdir = ".";
    std::string fields = "fields";
    std::string datasets = "datasets";
    std::string checkpoints = "checkpoints";
    std::string reports = "reports";
    friend bool operator==(const PathsConfig&, const PathsConfig&) = default;
};

struct SeedsConfig {
    std::uint64_t data = 0;
    std::uint64_t model = 0;
    std::uint64_t train = 0;
    friend bool operator==(const SeedsConfig&, const SeedsConfig&) = default;
};

struct SynthConfig {
    std::size_t num_modes = 64;
    double spectrum_exponent = -5.0 / 3.0;
    double k_max = 0.0;
    friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

struct ComputeConfig {
    unsigned threads = 1;
    bool strict_deterministic = false;
    friend bool operator==(const ComputeConfig&, const ComputeConfig&) = default;
};

/// Everything a pipeline run depends on. Missing keys in a config file keep
/// their defaults; unknown keys are rejected.
struct PipelineConfig {
    PathsConfig paths;
    patch::PatchSpec patch{2, 8};
    models::VaeConfig vae;
    models::GanConfig gan;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    double gan_lr = 5e-5;
    SeedsConfig seeds;
    SynthConfig synth;
    std::string plane = "z=mid";
    ComputeConfig compute;

    models::TrainConfig train_config() const { return {epochs, batch_size, lr, seeds.train}; }
    models::TrainConfig gan_train_config() const { return {epochs, batch_size, gan_lr, seeds.train}; }
    io::SynthParams synth_params() const;

    void validate() const;
    std::string to_json() const;
    /// Overlays the document onto the defaults.
    static PipelineConfig from_json(const std::string& text);
    static PipelineConfig load(const std::filesystem::path& path);

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Resolves `p` against `workdir` unless absolute.
std::filesystem::path resolve_path(const PipelineConfig& cfg, const std::filesystem::path& p);

} // namespace volsr::cli
