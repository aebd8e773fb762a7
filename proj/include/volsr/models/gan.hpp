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

struct GanConfig {
    std::size_t input_size = 16;
    std::size_t kernel = 3;
    /// Generator base width g: blocks are g, 2g, 2g, 2g, g, 1 channels.
    std::size_t gen_width = 16;
    Activation gen_output = Activation::linear();
    double leaky_alpha = 0.2;

    std::vector<std::size_t> critic_channels{8, 16, 32, 32, 32};
    std::vector<std::size_t> critic_strides{1, 2, 2, 2, 2};
    std::size_t critic_mid_channels = 32;
    std::vector<std::size_t> critic_deconv_channels{32, 16, 16, 8};
    std::vector<std::size_t> critic_deconv_strides{2, 2, 2, 2};
    Activation critic_output = Activation::linear();
    /// Flatten + dense to one score instead of the transpose-conv tail.
    bool scalar_critic = false;

    double clip_limit = 0.01;
    std::size_t n_critic = 5;
    double lambda_rec = 100.0;
    /// Optional L2 clip of the critic gradient before each update (0 = off).
    double critic_grad_norm_clip = 0.0;
    double bn_momentum = 0.9;
    double bn_epsilon = 1e-5;

    void validate() const;
    std::size_t critic_bottleneck() const;
    std::string to_json() const;
    static GanConfig from_json(const std::string& text);
    friend bool operator==(const GanConfig&, const GanConfig&) = default;
};

template <typename T>
class GanModel {
public:
    GanModel(const GanConfig& config, std::uint64_t seed);
    GanModel(const GanModel&) = delete;
    GanModel& operator=(const GanModel&) = delete;
    GanModel(GanModel&&) = default;
    GanModel& operator=(GanModel&&) = default;

    const GanConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }

    /// lr_up, noise: [N, S, S, S, 1]; concatenated channelwise before the first block.
    Var<T> generate(const Var<T>& lr_up, const Var<T>& noise);
    /// [N, S, S, S, 1] critic map (or [N, 1] with scalar_critic).
    Var<T> critic(const Var<T>& x);

    /// Deterministic inference with seeded noise, infer mode.
    Tensor<T> superresolve(const Tensor<T>& lr_batch, std::uint64_t noise_seed);

    /// Clamps every critic parameter to [-clip_limit, clip_limit]; returns the post-clip max |w|.
    double clip_critic();
    double max_abs_critic_weight();

    void set_mode(Mode m);
    std::vector<nn::Parameter<T>*> generator_parameters();
    std::vector<nn::Parameter<T>*> critic_parameters();
    std::vector<nn::Parameter<T>*> parameters();
    std::vector<nn::BatchNormState<T>*> generator_batch_norms();
    std::vector<nn::BatchNormState<T>*> critic_batch_norms();
    std::vector<nn::BatchNormState<T>*> batch_norms();

    std::size_t generator_input_channels() const { return gen_conv_.front().kernel.value().dim(3); }
    std::vector<std::string> critic_shape_chain() const;

private:
    Activation leaky() const { return Activation::leaky_relu(config_.leaky_alpha); }

    GanConfig config_;
    std::uint64_t seed_;
    std::vector<nn::Conv3dLayer<T>> gen_conv_;        // 6 blocks
    std::vector<nn::BatchNormState<T>> gen_bn_;       // blocks 2..5
    std::vector<nn::Conv3dLayer<T>> critic_conv_;     // strided blocks + one stride-1 conv
    std::vector<nn::BatchNormState<T>> critic_bn_;    // strided blocks
    std::vector<nn::ConvTranspose3dLayer<T>> critic_deconv_;
    std::vector<nn::BatchNormState<T>> critic_deconv_bn_;
    nn::ConvTranspose3dLayer<T> critic_out_;
    nn::DenseLayer<T> critic_dense_;
};

extern template class GanModel<float>;
extern template class GanModel<double>;

} // namespace volsr::models
