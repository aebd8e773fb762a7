#include "volsr/models/gan.hpp"

#include "volsr/util/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace volsr::models {

using nn::Shape;
namespace ops = nn::ops;

std::size_t GanConfig::critic_bottleneck() const {
    std::size_t e = input_size;
    for (std::size_t s : critic_strides) e = (e + s - 1) / s;
    return e;
}

void GanConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("gan config: " + m); };
    if (input_size == 0 || gen_width == 0 || critic_mid_channels == 0) fail("sizes must be >= 1");
    if (kernel % 2 == 0) fail("kernel must be odd");
    if (critic_channels.empty() || critic_channels.size() != critic_strides.size())
        fail("critic_channels and critic_strides must be non-empty and equally long");
    if (critic_deconv_channels.size() != critic_deconv_strides.size())
        fail("critic_deconv_channels and critic_deconv_strides must be equally long");
    for (auto v : critic_strides)
        if (v == 0) fail("zero critic stride");
    for (auto v : critic_channels)
        if (v == 0) fail("zero critic channel count");
    if (!scalar_critic) {
        std::size_t up = critic_bottleneck();
        for (auto v : critic_deconv_strides) {
            if (v == 0) fail("zero critic deconv stride");
            up *= v;
        }
        if (up != input_size) fail("critic transpose-conv tail does not return to the input size");
        for (auto v : critic_deconv_channels)
            if (v == 0) fail("zero critic deconv channel count");
    }
    if (!(clip_limit > 0.0)) fail("clip_limit must be > 0");
    if (n_critic == 0) fail("n_critic must be >= 1");
    if (!(lambda_rec >= 0.0)) fail("lambda_rec must be >= 0");
    if (!(critic_grad_norm_clip >= 0.0)) fail("critic_grad_norm_clip must be >= 0");
    if (!(bn_momentum > 0.0 && bn_momentum < 1.0)) fail("bn_momentum must lie in (0, 1)");
    if (!(bn_epsilon > 0.0)) fail("bn_epsilon must be > 0");
}

std::string GanConfig::to_json() const {
    nlohmann::ordered_json j;
    j["input_size"] = input_size;
    j["kernel"] = kernel;
    j["gen_width"] = gen_width;
    j["gen_output"] = nn::to_string(gen_output);
    j["leaky_alpha"] = leaky_alpha;
    j["critic_channels"] = critic_channels;
    j["critic_strides"] = critic_strides;
    j["critic_mid_channels"] = critic_mid_channels;
    j["critic_deconv_channels"] = critic_deconv_channels;
    j["critic_deconv_strides"] = critic_deconv_strides;
    j["critic_output"] = nn::to_string(critic_output);
    j["scalar_critic"] = scalar_critic;
    j["clip_limit"] = clip_limit;
    j["n_critic"] = n_critic;
    j["lambda_rec"] = lambda_rec;
    j["critic_grad_norm_clip"] = critic_grad_norm_clip;
    j["bn_momentum"] = bn_momentum;
    j["bn_epsilon"] = bn_epsilon;
    return j.dump();
}

GanConfig GanConfig::from_json(const std::string& text) {
    GanConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        c.input_size = j.value("input_size", c.input_size);
        c.kernel = j.value("kernel", c.kernel);
        c.gen_width = j.value("gen_width", c.gen_width);
        if (j.contains("gen_output")) c.gen_output = nn::parse_activation(j["gen_output"].get<std::string>());
        c.leaky_alpha = j.value("leaky_alpha", c.leaky_alpha);
        c.critic_channels = j.value("critic_channels", c.critic_channels);
        c.critic_strides = j.value("critic_strides", c.critic_strides);
        c.critic_mid_channels = j.value("critic_mid_channels", c.critic_mid_channels);
        c.critic_deconv_channels = j.value("critic_deconv_channels", c.critic_deconv_channels);
        c.critic_deconv_strides = j.value("critic_deconv_strides", c.critic_deconv_strides);
        if (j.contains("critic_output"))
            c.critic_output = nn::parse_activation(j["critic_output"].get<std::string>());
        c.scalar_critic = j.value("scalar_critic", c.scalar_critic);
        c.clip_limit = j.value("clip_limit", c.clip_limit);
        c.n_critic = j.value("n_critic", c.n_critic);
        c.lambda_rec = j.value("lambda_rec", c.lambda_rec);
        c.critic_grad_norm_clip = j.value("critic_grad_norm_clip", c.critic_grad_norm_clip);
        c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
        c.bn_epsilon = j.value("bn_epsilon", c.bn_epsilon);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("gan config: ") + e.what());
    }
    c.validate();
    return c;
}

template <typename T>
GanModel<T>::GanModel(const GanConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
    config_.validate();
    Rng rng(Rng::mix(seed, 0));
    const auto& c = config_;
    const std::size_t g = c.gen_width, k = c.kernel;
    const T mom = static_cast<T>(c.bn_momentum), eps = static_cast<T>(c.bn_epsilon);

    // (in, out) per generator block; blocks 5 and 6 take skip concatenations
    const std::size_t io[6][2] = {{2, g}, {g, 2 * g}, {2 * g, 2 * g}, {2 * g, 2 * g}, {4 * g, g}, {2 * g, 1}};
    for (int i = 0; i < 6; ++i) {
        const std::string name = "generator.conv" + std::to_string(i + 1);
        gen_conv_.emplace_back(name, k, io[i][0], io[i][1], 1, rng);
        if (i >= 1 && i <= 4) gen_bn_.emplace_back(name + ".bn", io[i][1], mom, eps);
    }

    std::size_t cin = 1;
    for (std::size_t i = 0; i < c.critic_channels.size(); ++i) {
        const std::string name = "critic.conv" + std::to_string(i + 1);
        critic_conv_.emplace_back(name, k, cin, c.critic_channels[i], c.critic_strides[i], rng);
        critic_bn_.emplace_back(name + ".bn", c.critic_channels[i], mom, eps);
        cin = c.critic_channels[i];
    }
    critic_conv_.emplace_back("critic.conv_mid", k, cin, c.critic_mid_channels, 1, rng);
    cin = c.critic_mid_channels;
    if (c.scalar_critic) {
        const std::size_t b = c.critic_bottleneck();
        critic_dense_ = nn::DenseLayer<T>("critic.dense", b * b * b * cin, 1, rng);
    } else {
        for (std::size_t i = 0; i < c.critic_deconv_channels.size(); ++i) {
            const std::string name = "critic.deconv" + std::to_string(i + 1);
            critic_deconv_.emplace_back(name, k, cin, c.critic_deconv_channels[i], c.critic_deconv_strides[i], rng);
            critic_deconv_bn_.emplace_back(name + ".bn", c.critic_deconv_channels[i], mom, eps);
            cin = c.critic_deconv_channels[i];
        }
        critic_out_ = nn::ConvTranspose3dLayer<T>("critic.out", k, cin, 1, 1, rng);
    }
}

template <typename T>
Var<T> GanModel<T>::generate(const Var<T>& lr_up, const Var<T>& noise) {
    const std::size_t S = config_.input_size;
    for (const auto* v : {&lr_up, &noise}) {
        const auto& s = v->shape();
        if (s.size() != 5 || s[1] != S || s[2] != S || s[3] != S || s[4] != 1)
            throw ContractError("gan generator: inputs must be [N," + std::to_string(S) + "^3,1], got " +
                                nn::to_string(s));
    }
    if (lr_up.shape()[0] != noise.shape()[0]) throw ContractError("gan generator: batch sizes differ");
    const Var<T> x = ops::concat_channels(lr_up, noise);
    const Var<T> e1 = ops::activation(gen_conv_[0](x), leaky());
    const Var<T> e2 = ops::activation(ops::batch_norm(gen_conv_[1](e1), gen_bn_[0]), leaky());
    const Var<T> e3 = ops::activation(ops::batch_norm(gen_conv_[2](e2), gen_bn_[1]), leaky());
    const Var<T> d4 = ops::activation(ops::batch_norm(gen_conv_[3](e3), gen_bn_[2]), leaky());
    const Var<T> d5 =
        ops::activation(ops::batch_norm(gen_conv_[4](ops::concat_channels(d4, e2)), gen_bn_[3]), leaky());
    return ops::activation(gen_conv_[5](ops::concat_channels(d5, e1)), config_.gen_output);
}

template <typename T>
Var<T> GanModel<T>::critic(const Var<T>& x) {
    const std::size_t S = config_.input_size;
    const auto& s = x.shape();
    if (s.size() != 5 || s[1] != S || s[2] != S || s[3] != S || s[4] != 1)
        throw ContractError("gan critic: input must be [N," + std::to_string(S) + "^3,1], got " + nn::to_string(s));
    Var<T> h = x;
    for (std::size_t i = 0; i < critic_bn_.size(); ++i)
        h = ops::activation(ops::batch_norm(critic_conv_[i](h), critic_bn_[i]), leaky());
    h = ops::activation(critic_conv_.back()(h), leaky());
    if (config_.scalar_critic) {
        h = ops::reshape(h, Shape{s[0], h.value().size() / s[0]});
        return ops::activation(critic_dense_(h), config_.critic_output);
    }
    for (std::size_t i = 0; i < critic_deconv_.size(); ++i)
        h = ops::activation(ops::batch_norm(critic_deconv_[i](h), critic_deconv_bn_[i]), leaky());
    return ops::activation(critic_out_(h), config_.critic_output);
}

template <typename T>
Tensor<T> GanModel<T>::superresolve(const Tensor<T>& lr_batch, std::uint64_t noise_seed) {
    nn::NoGradGuard guard;
    set_mode(Mode::infer);
    Rng rng(noise_seed);
    Tensor<T> noise(lr_batch.shape());
    for (T& v : noise.data()) v = static_cast<T>(rng.normal());
    Tensor<T> out = generate(Var<T>::constant(lr_batch), Var<T>::constant(noise)).value();
    set_mode(Mode::train);
    return out;
}

template <typename T>
double GanModel<T>::clip_critic() {
    const T c = static_cast<T>(config_.clip_limit);
    for (auto* p : critic_parameters())
        for (T& v : p->mutable_value().data()) v = std::clamp(v, -c, c);
    return max_abs_critic_weight();
}

template <typename T>
double GanModel<T>::max_abs_critic_weight() {
    double m = 0.0;
    for (auto* p : critic_parameters())
        for (T v : p->value().data()) m = std::max(m, static_cast<double>(std::abs(v)));
    return m;
}

template <typename T>
void GanModel<T>::set_mode(Mode m) {
    for (auto* bn : batch_norms()) bn->mode = m;
}

template <typename T>
std::vector<nn::Parameter<T>*> GanModel<T>::generator_parameters() {
    std::vector<nn::Parameter<T>*> out;
    for (int i = 0; i < 6; ++i) {
        gen_conv_[i].collect(out);
        if (i >= 1 && i <= 4) nn::collect(gen_bn_[i - 1], out);
    }
    return out;
}

template <typename T>
std::vector<nn::Parameter<T>*> GanModel<T>::critic_parameters() {
    std::vector<nn::Parameter<T>*> out;
    for (std::size_t i = 0; i < critic_conv_.size(); ++i) {
        critic_conv_[i].collect(out);
        if (i < critic_bn_.size()) nn::collect(critic_bn_[i], out);
    }
    if (config_.scalar_critic) {
        critic_dense_.collect(out);
    } else {
        for (std::size_t i = 0; i < critic_deconv_.size(); ++i) {
            critic_deconv_[i].collect(out);
            nn::collect(critic_deconv_bn_[i], out);
        }
        critic_out_.collect(out);
    }
    return out;
}

template <typename T>
std::vector<nn::Parameter<T>*> GanModel<T>::parameters() {
    auto out = generator_parameters();
    const auto c = critic_parameters();
    out.insert(out.end(), c.begin(), c.end());
    return out;
}

template <typename T>
std::vector<nn::BatchNormState<T>*> GanModel<T>::generator_batch_norms() {
    std::vector<nn::BatchNormState<T>*> out;
    for (auto& bn : gen_bn_) out.push_back(&bn);
    return out;
}

template <typename T>
std::vector<nn::BatchNormState<T>*> GanModel<T>::critic_batch_norms() {
    std::vector<nn::BatchNormState<T>*> out;
    for (auto& bn : critic_bn_) out.push_back(&bn);
    for (auto& bn : critic_deconv_bn_) out.push_back(&bn);
    return out;
}

template <typename T>
std::vector<nn::BatchNormState<T>*> GanModel<T>::batch_norms() {
    auto out = generator_batch_norms();
    const auto c = critic_batch_norms();
    out.insert(out.end(), c.begin(), c.end());
    return out;
}

template <typename T>
std::vector<std::string> GanModel<T>::critic_shape_chain() const {
    auto shape = [](std::size_t e, std::size_t c) { return std::to_string(e) + "^3x" + std::to_string(c); };
    std::vector<std::string> chain{shape(config_.input_size, 1)};
    std::size_t e = config_.input_size;
    for (std::size_t i = 0; i < config_.critic_channels.size(); ++i) {
        e = (e + config_.critic_strides[i] - 1) / config_.critic_strides[i];
        chain.push_back(shape(e, config_.critic_channels[i]));
    }
    chain.push_back(shape(e, config_.critic_mid_channels));
    if (config_.scalar_critic) {
        chain.push_back("1");
        return chain;
    }
    for (std::size_t i = 0; i < config_.critic_deconv_channels.size(); ++i) {
        e *= config_.critic_deconv_strides[i];
        chain.push_back(shape(e, config_.critic_deconv_channels[i]));
    }
    chain.push_back(shape(e, 1));
    return chain;
}

template class GanModel<float>;
template class GanModel<double>;

} // namespace volsr::models
