#pragma once

#include "volsr/cli/config.hpp"
#include "volsr/io/volume.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace volsr::cli {

namespace fs = std::filesystem;

/// Input/output hashes and the resolved config of one command run.
class Provenance {
public:
    Provenance(std::string command, std::vector<std::string> arguments, const PipelineConfig& config);
    void input(const fs::path& path);
    void output(const fs::path& path);
    std::string to_json() const;
    /// Writes `<file>.run.json` for a file output, `<dir>/run.json` for a directory.
    void write_next_to(const fs::path& output) const;

private:
    std::string command_;
    std::vector<std::string> arguments_;
    std::string config_json_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<std::pair<std::string, std::string>> outputs_;
};

/// Applies thread count and determinism settings to the tensor engine.
void apply_compute(const ComputeConfig& c);

/// Parses "64", "64x48x32" or "64,48,32".
io::Dims parse_dims(const std::string& text);

/// Stride-A subsample keeping both end samples: extent (n - 1) / A + 1.
io::VolumeField subsample_field(const io::VolumeField& field, std::size_t A);

struct SynthOptions {
    io::Dims dims;
    std::uint64_t seed = 0;
    std::string components = "u";
    io::DType dtype = io::DType::f64;
    fs::path out;
};
void run_synth(const PipelineConfig& cfg, const SynthOptions& o, Provenance& prov);

struct IngestOptions {
    fs::path raw;
    io::Dims dims;
    io::DType dtype = io::DType::f64;
    bool big_endian = false;
    char label = 'u';
    fs::path out;
};
void run_ingest(const PipelineConfig& cfg, const IngestOptions& o, Provenance& prov);

struct CoarsenOptions {
    fs::path field;
    std::size_t A = 2;
    fs::path out;
};
void run_coarsen(const PipelineConfig& cfg, const CoarsenOptions& o, Provenance& prov);

struct DatasetOptions {
    fs::path field;
    fs::path out;
};
/// Uses cfg.patch for the window geometry.
void run_dataset(const PipelineConfig& cfg, const DatasetOptions& o, Provenance& prov, std::ostream& log);

struct TrainOptions {
    fs::path dataset;
    fs::path out;
};
void run_train_vae(const PipelineConfig& cfg, const TrainOptions& o, Provenance& prov, std::ostream& log);
void run_train_gan(const PipelineConfig& cfg, const TrainOptions& o, Provenance& prov, std::ostream& log);

struct InferOptions {
    fs::path checkpoint;
    fs::path field;  ///< coarse field
    fs::path out;
    std::optional<io::Dims> fine_dims;
    std::optional<fs::path> expect_dataset;  ///< dataset whose manifest the checkpoint must reference
    bool tapered = false;
    bool zero_fill = false;
    std::uint64_t noise_seed = 0;
    bool check_config = false;  ///< require the checkpoint's model config to equal cfg's
};
/// Writes the reconstruction to `out` and the coverage mask to mask_path(out).
void run_infer(const PipelineConfig& cfg, const InferOptions& o, Provenance& prov, std::ostream& log);
fs::path mask_path(const fs::path& out);

struct BaselineOptions {
    fs::path field;
    std::optional<double> scale;
    std::optional<io::Dims> dims;
    std::optional<fs::path> like;
    std::string kernel = "cubic";
    fs::path out;
};
void run_baseline(const PipelineConfig& cfg, const BaselineOptions& o, Provenance& prov);

struct EvalOptions {
    fs::path truth;
    fs::path coarse;
    std::vector<std::pair<std::string, fs::path>> predictions;
    fs::path out;
};
/// Coarse fields on a smaller grid are brought onto the truth grid with
/// endpoint-aligned nearest-neighbor resampling before comparison.
void run_eval(const PipelineConfig& cfg, const EvalOptions& o, Provenance& prov, std::ostream& log);

} // namespace volsr::cli
