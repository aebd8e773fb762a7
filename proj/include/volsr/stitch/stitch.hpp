#pragma once

#include "volsr/io/volume.hpp"
#include "volsr/models/vae.hpp"
#include "volsr/patch/patch.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace volsr::stitch {

using io::Dims;
using io::Grid3;
using patch::Origin;
using patch::PatchSpec;

enum class Blend { uniform, tapered };

/// Collects 16^3 predictions keyed by window origin. Contributions are summed
/// in origin order at finalize, so the result does not depend on the order
/// patches were placed in.
class StitchAccumulator {
public:
    StitchAccumulator(Dims dims, PatchSpec spec, Blend blend = Blend::uniform);

    /// `window_origin` is the q-window origin; the patch lands at origin + crop_offset.
    /// Throws ContractError if the patch is not 16^3 or falls outside the grid.
    void place_patch(const Grid3& prediction, Origin window_origin);

    Dims dims() const { return dims_; }
    const PatchSpec& spec() const { return spec_; }
    std::size_t placed() const { return placed_; }

    /// Weighted sum and integer contribution count per voxel.
    Grid3 sum() const;
    Grid3 count() const;
    /// Blend-weighted sum, total weight and contribution count in one pass.
    void totals(Grid3& sum, Grid3& weight, Grid3& count) const;

private:
    Dims dims_;
    PatchSpec spec_;
    Blend blend_;
    std::size_t placed_ = 0;
    std::map<Origin, std::vector<Grid3>> patches_;
};

enum class Fill { coarse, zero };

struct StitchResult {
    Grid3 values;
    Grid3 mask;  ///< 1 where at least one patch contributed, 0 elsewhere
    std::size_t covered = 0;

    double coverage() const { return static_cast<double>(covered) / static_cast<double>(mask.values().size()); }
};

/// Divides sums by weights on covered voxels. Uncovered voxels take `fill`
/// (Fill::coarse, required then) or 0 (Fill::zero) and stay 0 in the mask.
/// Throws ContractError on an empty accumulator.
StitchResult finalize(const StitchAccumulator& acc, const Grid3* fill = nullptr, Fill policy = Fill::coarse);

/// Maps a batch of normalized 16^3 LR inputs to 16^3 predictions.
using PatchPredictor = std::function<std::vector<Grid3>(std::span<const Grid3>)>;

PatchPredictor identity_predictor();
/// Posterior-mean VAE inference. The model must outlive the predictor.
PatchPredictor vae_predictor(models::VaeModel<float>& model);

struct ReconstructOptions {
    std::size_t batch_size = 32;
    Blend blend = Blend::uniform;
    Fill fill = Fill::coarse;
};

/// Fine extent recovered from a stride-A subsample: (n - 1) * A + 1 per axis.
Dims fine_dims_for(Dims coarse, std::size_t A);

/// Slides the q-window over the fine grid, builds each LR input from the
/// normalized coarse field exactly as the dataset does, predicts, stitches,
/// fills margins from the trilinear-upsampled coarse field and de-normalizes.
/// Requires s % A == 0 so every window starts on a coarse sample.
StitchResult reconstruct_full(const Grid3& coarse, Dims fine, const PatchSpec& spec, const patch::NormStats& stats,
                              const PatchPredictor& predict, const ReconstructOptions& options = {});

} // namespace volsr::stitch
