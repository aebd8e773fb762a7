#pragma once

#include "volsr/models/gan.hpp"
#include "volsr/models/vae.hpp"
#include "volsr/patch/patch.hpp"

#include <functional>
#include <vector>

namespace volsr::models {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

struct VaeEpoch {
    double total = 0.0;
    double recon = 0.0;
    double kl = 0.0;
    friend bool operator==(const VaeEpoch&, const VaeEpoch&) = default;
};

using VaeEpochCallback = std::function<void(std::size_t epoch, const VaeEpoch&)>;

/// Seeded per-epoch shuffle, Adam updates, epoch-mean losses (weighted by
/// batch size). Throws NumericError naming epoch and batch on a non-finite loss.
std::vector<VaeEpoch> train_vae(VaeModel<float>& model, const patch::Dataset& data, const TrainConfig& cfg,
                                const VaeEpochCallback& on_epoch = {});

struct GanEpoch {
    double critic_loss = 0.0;     ///< mean(C(fake)) - mean(C(real)), averaged over critic steps
    double generator_loss = 0.0;  ///< -mean(C(fake)) + lambda * mse, averaged over generator steps
    double recon_mse = 0.0;
    double max_abs_critic_weight = 0.0;  ///< largest |w| seen after any clip in this epoch
    std::size_t critic_steps = 0;
    std::size_t generator_steps = 0;
    friend bool operator==(const GanEpoch&, const GanEpoch&) = default;
};

/// Called after every critic update with the post-clip max |weight|.
using CriticStepCallback = std::function<void(std::size_t epoch, std::size_t step, double max_abs_weight)>;

/// WGAN training: every batch is a critic step (fake detached, weights
/// clipped to +-clip_limit afterwards); after each n_critic critic steps the
/// generator takes one step on the latest batch.
std::vector<GanEpoch> train_gan(GanModel<float>& model, const patch::Dataset& data, const TrainConfig& cfg,
                                const CriticStepCallback& on_critic_step = {});

} // namespace volsr::models
