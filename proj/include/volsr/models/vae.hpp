#pragma once

#include "volsr/tensor/layers.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace volsr::models {

using nn::Activation;
using nn::Mode;
using nn::Tensor;
using nn::Var;

struct VaeConfig {
    std::size_t input_size = 16;
    std::size_t latent_dim = 16;
    std::vector<std::size_t> encoder_channels{32, 64, 128, 256};
    std::vector<std::size_t> encoder_strides{1, 2, 2, 2};
    std::size_t dense_hidden = 128;
    std::vector<std::size_t> decoder_channels{256, 128, 64, 32};
    std::vector<std::size_t> decoder_strides{2, 2, 2, 1};
    std::size_t kernel = 3;
    double beta = 1e-3;
    Activation output_activation = Activation::linear();
    double bn_momentum = 0.9;
    double bn_epsilon = 1e-5;

    /// Throws ConfigError on inconsistent layer lists or a shape chain that
    /// does not return to input_size.
    void validate() const;
    /// Encoder terminal edge: input_size after ceil-division by each stride.
    std::size_t bottleneck_size() const;

    std::string to_json() const;
    static VaeConfig from_json(const std::string& text);
    friend bool operator==(const VaeConfig&, const VaeConfig&) = default;
};

/// Encoder: conv blocks (BN + ReLU) -> flatten -> Dense-1 (BN + ReLU) -> linear mu / logvar heads.
/// Decoder: dense (BN + ReLU) -> reshape to bottleneck^3 x C0 -> transpose-conv blocks
/// (BN + ReLU) -> transpose-conv to one channel with the configured output activation.
template <typename T>
class VaeModel {
public:
    struct Encoded {
        Var<T> mu;
        Var<T> logvar;
    };
    struct Losses {
        Var<T> total;
        Var<T> recon;
        Var<T> kl;
    };

    VaeModel(const VaeConfig& config, std::uint64_t seed);
    // parameters are graph leaves; a copy would alias them
    VaeModel(const VaeModel&) = delete;
    VaeModel& operator=(const VaeModel&) = delete;
    VaeModel(VaeModel&&) = default;
    VaeModel& operator=(VaeModel&&) = default;

    const VaeConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }

    /// x: [N, S, S, S, 1].
    Encoded encode(const Var<T>& x);
    /// z: [N, latent_dim] -> [N, S, S, S, 1].
    Var<T> decode(const Var<T>& z);
    /// recon = mean squared error over voxels; kl averaged over the batch;
    /// total = recon + beta * kl.
    Losses loss(const Var<T>& x_hat, const Var<T>& target, const Encoded& enc) const;
    /// Encode, sample z with the given standard-normal eps [N, latent_dim], decode, score.
    Losses forward(const Var<T>& input, const Var<T>& target, const Tensor<T>& eps);

    /// Posterior-mean prediction in infer mode; restores the previous mode.
    Tensor<T> superresolve(const Tensor<T>& lr_batch);

    void set_mode(Mode m);
    Mode mode() const { return mode_; }

    std::vector<nn::Parameter<T>*> parameters();
    std::vector<nn::BatchNormState<T>*> batch_norms();

    /// Layer-by-layer activation shapes ("16x16x16x1", ...) for one sample.
    std::vector<std::string> encoder_shape_chain() const;
    std::vector<std::string> decoder_shape_chain() const;

private:
    VaeConfig config_;
    std::uint64_t seed_;
    Mode mode_ = Mode::train;
    std::vector<nn::Conv3dLayer<T>> enc_conv_;
    std::vector<nn::BatchNormState<T>> enc_bn_;
    nn::DenseLayer<T> enc_dense_;
    nn::BatchNormState<T> enc_dense_bn_;
    nn::DenseLayer<T> mu_head_;
    nn::DenseLayer<T> logvar_head_;
    nn::DenseLayer<T> dec_dense_;
    nn::BatchNormState<T> dec_dense_bn_;
    std::vector<nn::ConvTranspose3dLayer<T>> dec_convt_;
    std::vector<nn::BatchNormState<T>> dec_bn_;
    nn::ConvTranspose3dLayer<T> dec_out_;
};

extern template class VaeModel<float>;
extern template class VaeModel<double>;

} // namespace volsr::models
