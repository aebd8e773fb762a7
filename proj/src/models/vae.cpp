#include "volsr/models/vae.hpp"

#include "volsr/util/errors.hpp"

#include <nlohmann/json.hpp>

namespace volsr::models {

using nn::Shape;
namespace ops = nn::ops;

namespace {

std::string cube_shape(std::size_t edge, std::size_t channels) {
    return std::to_string(edge) + "^3x" + std::to_string(channels);
}

std::size_t cube(std::size_t e) { return e * e * e; }

} // namespace

std::size_t VaeConfig::bottleneck_size() const {
    std::size_t e = input_size;
    for (std::size_t s : encoder_strides) e = (e + s - 1) / s;
    return e;
}

void VaeConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("vae config: " + m); };
    if (input_size == 0) fail("input_size must be >= 1");
    if (latent_dim == 0) fail("latent_dim must be >= 1");
    if (dense_hidden == 0) fail("dense_hidden must be >= 1");
    if (kernel % 2 == 0) fail("kernel must be odd");
    if (encoder_channels.empty() || encoder_channels.size() != encoder_strides.size())
        fail("encoder_channels and encoder_strides must be non-empty and equally long");
    if (decoder_channels.empty() || decoder_channels.size() != decoder_strides.size())
        fail("decoder_channels and decoder_strides must be non-empty and equally long");
    for (auto v : encoder_channels)
        if (v == 0) fail("zero encoder channel count");
    for (auto v : decoder_channels)
        if (v == 0) fail("zero decoder channel count");
    for (auto v : encoder_strides)
        if (v == 0) fail("zero encoder stride");
    std::size_t up = bottleneck_size();
    for (auto v : decoder_strides) {
        if (v == 0) fail("zero decoder stride");
        up *= v;
    }
    if (up != input_size)
        fail("decoder strides take the " + std::to_string(bottleneck_size()) + "^3 bottleneck to " + std::to_string(up) +
             "^3, not the " + std::to_string(input_size) + "^3 input");
    if (!(beta >= 0.0)) fail("beta must be >= 0");
    if (!(bn_momentum > 0.0 && bn_momentum < 1.0)) fail("bn_momentum must lie in (0, 1)");
    if (!(bn_epsilon > 0.0)) fail("bn_epsilon must be > 0");
}

std::string VaeConfig::to_json() const {
    nlohmann::ordered_json j;
    j["input_size"] = input_size;
    j["latent_dim"] = latent_dim;
    j["encoder_channels"] = encoder_channels;
    j["encoder_strides"] = encoder_strides;
    j["dense_hidden"] = dense_hidden;
    j["decoder_channels"] = decoder_channels;
    j["decoder_strides"] = decoder_strides;
    j["kernel"] = kernel;
    j["beta"] = beta;
    j["output_activation"] = nn::to_string(output_activation);
    j["bn_momentum"] = bn_momentum;
    j["bn_epsilon"] = bn_epsilon;
    return j.dump();
}

VaeConfig VaeConfig::from_json(const std::string& text) {
    VaeConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        c.input_size = j.value("input_size", c.input_size);
        c.latent_dim = j.value("latent_dim", c.latent_dim);
        c.encoder_channels = j.value("encoder_channels", c.encoder_channels);
        c.encoder_strides = j.value("encoder_strides", c.encoder_strides);
        c.dense_hidden = j.value("dense_hidden", c.dense_hidden);
        c.decoder_channels = j.value("decoder_channels", c.decoder_channels);
        c.decoder_strides = j.value("decoder_strides", c.decoder_strides);
        c.kernel = j.value("kernel", c.kernel);
        c.beta = j.value("beta", c.beta);
        if (j.contains("output_activation"))
            c.output_activation = nn::parse_activation(j["output_activation"].get<std::string>());
        c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
        c.bn_epsilon = j.value("bn_epsilon", c.bn_epsilon);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("vae config: ") + e.what());
    }
    c.validate();
    return c;
}

template <typename T>
VaeModel<T>::VaeModel(const VaeConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
    config_.validate();
    Rng rng(Rng::mix(seed, 0));
    const auto& c = config_;
    const T mom = static_cast<T>(c.bn_momentum), eps = static_cast<T>(c.bn_epsilon);

    std::size_t cin = 1;
    for (std::size_t i = 0; i < c.encoder_channels.size(); ++i) {
        const std::string name = "encoder.conv" + std::to_string(i + 1);
        enc_conv_.emplace_back(name, c.kernel, cin, c.encoder_channels[i], c.encoder_strides[i], rng);
        enc_bn_.emplace_back(name + ".bn", c.encoder_channels[i], mom, eps);
        cin = c.encoder_channels[i];
    }
    const std::size_t b = c.bottleneck_size();
    const std::size_t flat = cube(b) * cin;
    enc_dense_ = nn::DenseLayer<T>("encoder.dense1", flat, c.dense_hidden, rng);
    enc_dense_bn_ = nn::BatchNormState<T>("encoder.dense1.bn", c.dense_hidden, mom, eps);
    mu_head_ = nn::DenseLayer<T>("encoder.mu", c.dense_hidden, c.latent_dim, rng);
    logvar_head_ = nn::DenseLayer<T>("encoder.logvar", c.dense_hidden, c.latent_dim, rng);

    const std::size_t c0 = c.decoder_channels.front();
    dec_dense_ = nn::DenseLayer<T>("decoder.dense1", c.latent_dim, cube(b) * c0, rng);
    dec_dense_bn_ = nn::BatchNormState<T>("decoder.dense1.bn", cube(b) * c0, mom, eps);
    cin = c0;
    for (std::size_t i = 0; i < c.decoder_channels.size(); ++i) {
        const std::string name = "decoder.convt" + std::to_string(i + 1);
        dec_convt_.emplace_back(name, c.kernel, cin, c.decoder_channels[i], c.decoder_strides[i], rng);
        dec_bn_.emplace_back(name + ".bn", c.decoder_channels[i], mom, eps);
        cin = c.decoder_channels[i];
    }
    dec_out_ = nn::ConvTranspose3dLayer<T>("decoder.out", c.kernel, cin, 1, 1, rng);
}

template <typename T>
typename VaeModel<T>::Encoded VaeModel<T>::encode(const Var<T>& x) {
    const auto& s = x.shape();
    const std::size_t S = config_.input_size;
    if (s.size() != 5 || s[1] != S || s[2] != S || s[3] != S || s[4] != 1)
        throw ContractError("vae encode: expected [N," + std::to_string(S) + "," + std::to_string(S) + "," +
                            std::to_string(S) + ",1], got " + nn::to_string(s));
    Var<T> h = x;
    for (std::size_t i = 0; i < enc_conv_.size(); ++i)
        h = ops::activation(ops::batch_norm(enc_conv_[i](h), enc_bn_[i]), Activation::relu());
    const std::size_t n = s[0];
    h = ops::reshape(h, Shape{n, h.value().size() / n});
    h = ops::activation(ops::batch_norm(enc_dense_(h), enc_dense_bn_), Activation::relu());
    return {mu_head_(h), logvar_head_(h)};
}

template <typename T>
Var<T> VaeModel<T>::decode(const Var<T>& z) {
    const auto& s = z.shape();
    if (s.size() != 2 || s[1] != config_.latent_dim)
        throw ContractError("vae decode: expected [N," + std::to_string(config_.latent_dim) + "], got " +
                            nn::to_string(s));
    const std::size_t b = config_.bottleneck_size();
    Var<T> h = ops::activation(ops::batch_norm(dec_dense_(z), dec_dense_bn_), Activation::relu());
    h = ops::reshape(h, Shape{s[0], b, b, b, config_.decoder_channels.front()});
    for (std::size_t i = 0; i < dec_convt_.size(); ++i)
        h = ops::activation(ops::batch_norm(dec_convt_[i](h), dec_bn_[i]), Activation::relu());
    return ops::activation(dec_out_(h), config_.output_activation);
}

template <typename T>
typename VaeModel<T>::Losses VaeModel<T>::loss(const Var<T>& x_hat, const Var<T>& target, const Encoded& enc) const {
    Losses l;
    l.recon = ops::mse(x_hat, target);
    l.kl = ops::kl_divergence(enc.mu, enc.logvar);
    l.total = ops::add(l.recon, ops::scale(l.kl, static_cast<T>(config_.beta)));
    return l;
}

template <typename T>
typename VaeModel<T>::Losses VaeModel<T>::forward(const Var<T>& input, const Var<T>& target, const Tensor<T>& eps) {
    const Encoded enc = encode(input);
    const Var<T> z = ops::reparameterize(enc.mu, enc.logvar, eps);
    return loss(decode(z), target, enc);
}

template <typename T>
Tensor<T> VaeModel<T>::superresolve(const Tensor<T>& lr_batch) {
    nn::NoGradGuard guard;
    const Mode previous = mode_;
    set_mode(Mode::infer);
    const Encoded enc = encode(Var<T>::constant(lr_batch));
    Tensor<T> out = decode(enc.mu).value();
    set_mode(previous);
    return out;
}

template <typename T>
void VaeModel<T>::set_mode(Mode m) {
    mode_ = m;
    for (auto* bn : batch_norms()) bn->mode = m;
}

template <typename T>
std::vector<nn::Parameter<T>*> VaeModel<T>::parameters() {
    std::vector<nn::Parameter<T>*> out;
    for (std::size_t i = 0; i < enc_conv_.size(); ++i) {
        enc_conv_[i].collect(out);
        nn::collect(enc_bn_[i], out);
    }
    enc_dense_.collect(out);
    nn::collect(enc_dense_bn_, out);
    mu_head_.collect(out);
    logvar_head_.collect(out);
    dec_dense_.collect(out);
    nn::collect(dec_dense_bn_, out);
    for (std::size_t i = 0; i < dec_convt_.size(); ++i) {
        dec_convt_[i].collect(out);
        nn::collect(dec_bn_[i], out);
    }
    dec_out_.collect(out);
    return out;
}

template <typename T>
std::vector<nn::BatchNormState<T>*> VaeModel<T>::batch_norms() {
    std::vector<nn::BatchNormState<T>*> out;
    for (auto& bn : enc_bn_) out.push_back(&bn);
    out.push_back(&enc_dense_bn_);
    out.push_back(&dec_dense_bn_);
    for (auto& bn : dec_bn_) out.push_back(&bn);
    return out;
}

template <typename T>
std::vector<std::string> VaeModel<T>::encoder_shape_chain() const {
    std::vector<std::string> chain{cube_shape(config_.input_size, 1)};
    std::size_t e = config_.input_size;
    for (std::size_t i = 0; i < enc_conv_.size(); ++i) {
        e = (e + enc_conv_[i].stride - 1) / enc_conv_[i].stride;
        chain.push_back(cube_shape(e, enc_conv_[i].out_channels()));
    }
    chain.push_back(std::to_string(enc_dense_.weight.value().dim(0)));
    chain.push_back(std::to_string(enc_dense_.weight.value().dim(1)));
    chain.push_back(std::to_string(mu_head_.weight.value().dim(1)));
    return chain;
}

template <typename T>
std::vector<std::string> VaeModel<T>::decoder_shape_chain() const {
    std::vector<std::string> chain{std::to_string(config_.latent_dim)};
    chain.push_back(std::to_string(dec_dense_.weight.value().dim(1)));
    std::size_t e = config_.bottleneck_size();
    chain.push_back(cube_shape(e, config_.decoder_channels.front()));
    for (const auto& layer : dec_convt_) {
        e *= layer.stride;
        chain.push_back(cube_shape(e, layer.out_channels()));
    }
    chain.push_back(cube_shape(e, dec_out_.out_channels()));
    return chain;
}

template class VaeModel<float>;
template class VaeModel<double>;

} // namespace volsr::models
