#include "volsr/models/train.hpp"

#include "volsr/models/batch.hpp"
#include "volsr/tensor/adam.hpp"
#include "volsr/util/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace volsr::models {

namespace ops = nn::ops;
using Params = std::vector<nn::Parameter<float>*>;

namespace {

struct Batch {
    Tensor<float> lr;
    Tensor<float> hr;
};

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < n; i += batch_size)
        out.emplace_back(order.begin() + i, order.begin() + std::min(n, i + batch_size));
    return out;
}

Batch gather(const patch::Dataset& data, const std::vector<std::size_t>& idx) {
    std::vector<const io::Grid3*> lr, hr;
    for (std::size_t i : idx) {
        lr.push_back(&data.pairs[i].lr);
        hr.push_back(&data.pairs[i].hr);
    }
    return {stack_cubes<float>(lr), stack_cubes<float>(hr)};
}

Tensor<float> normal_tensor(nn::Shape shape, Rng& rng) {
    Tensor<float> t(std::move(shape));
    for (float& v : t.data()) v = static_cast<float>(rng.normal());
    return t;
}

void check_finite(double v, const char* what, std::size_t epoch, std::size_t batch) {
    if (!std::isfinite(v))
        throw NumericError(std::string(what) + " is not finite at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch));
}

void check_config(const patch::Dataset& data, const TrainConfig& cfg) {
    if (cfg.batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be > 0");
    if (cfg.epochs > 0 && data.pairs.empty()) throw ContractError("training on an empty dataset");
}

void clip_grad_norm(const Params& params, double limit) {
    double sq = 0.0;
    for (auto* p : params)
        for (float g : p->grad().data()) sq += static_cast<double>(g) * g;
    const double norm = std::sqrt(sq);
    if (norm <= limit) return;
    const float f = static_cast<float>(limit / norm);
    for (auto* p : params)
        for (float& g : p->var.mutable_grad().data()) g *= f;
}

} // namespace

std::vector<VaeEpoch> train_vae(VaeModel<float>& model, const patch::Dataset& data, const TrainConfig& cfg,
                                const VaeEpochCallback& on_epoch) {
    check_config(data, cfg);
    Rng shuffle_rng(Rng::mix(cfg.seed, 101));
    Rng eps_rng(Rng::mix(cfg.seed, 202));
    const nn::AdamConfig adam{.lr = cfg.lr};
    const Params params = model.parameters();
    const std::size_t latent = model.config().latent_dim;
    model.set_mode(Mode::train);

    std::vector<VaeEpoch> history;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        VaeEpoch sum;
        std::size_t seen = 0, bi = 0;
        for (const auto& idx : epoch_batches(data.pairs.size(), cfg.batch_size, shuffle_rng)) {
            const Batch b = gather(data, idx);
            const Tensor<float> eps = normal_tensor(nn::Shape{idx.size(), latent}, eps_rng);
            const auto l = model.forward(Var<float>::constant(b.lr), Var<float>::constant(b.hr), eps);
            const double total = l.total.value().raw()[0];
            check_finite(total, "vae loss", epoch, bi);
            nn::backward(l.total);
            nn::adam_step<float>(params, adam);
            const double w = static_cast<double>(idx.size());
            sum.total += w * total;
            sum.recon += w * l.recon.value().raw()[0];
            sum.kl += w * l.kl.value().raw()[0];
            seen += idx.size();
            ++bi;
        }
        sum.total /= static_cast<double>(seen);
        sum.recon /= static_cast<double>(seen);
        sum.kl /= static_cast<double>(seen);
        history.push_back(sum);
        if (on_epoch) on_epoch(epoch, sum);
    }
    return history;
}

std::vector<GanEpoch> train_gan(GanModel<float>& model, const patch::Dataset& data, const TrainConfig& cfg,
                                const CriticStepCallback& on_critic_step) {
    check_config(data, cfg);
    const GanConfig& gc = model.config();
    Rng shuffle_rng(Rng::mix(cfg.seed, 101));
    Rng noise_rng(Rng::mix(cfg.seed, 303));
    const nn::AdamConfig adam{.lr = cfg.lr};
    const Params gen = model.generator_parameters();
    const Params crit = model.critic_parameters();
    const float lambda = static_cast<float>(gc.lambda_rec);
    model.set_mode(Mode::train);

    std::vector<GanEpoch> history;
    std::size_t critic_total = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        GanEpoch e;
        std::size_t bi = 0;
        for (const auto& idx : epoch_batches(data.pairs.size(), cfg.batch_size, shuffle_rng)) {
            const Batch b = gather(data, idx);
            const Var<float> lr = Var<float>::constant(b.lr);
            const Var<float> hr = Var<float>::constant(b.hr);

            Var<float> fake;
            {
                nn::NoGradGuard guard;
                fake = model.generate(lr, Var<float>::constant(normal_tensor(b.lr.shape(), noise_rng)));
            }
            const Var<float> c_loss =
                ops::sub(ops::mean(model.critic(ops::detach(fake))), ops::mean(model.critic(hr)));
            const double cl = c_loss.value().raw()[0];
            check_finite(cl, "critic loss", epoch, bi);
            nn::backward(c_loss);
            if (gc.critic_grad_norm_clip > 0.0) clip_grad_norm(crit, gc.critic_grad_norm_clip);
            nn::adam_step<float>(crit, adam);
            const double wmax = model.clip_critic();
            e.critic_loss += cl;
            e.max_abs_critic_weight = std::max(e.max_abs_critic_weight, wmax);
            ++e.critic_steps;
            ++critic_total;
            if (on_critic_step) on_critic_step(epoch, e.critic_steps - 1, wmax);

            if (critic_total % gc.n_critic == 0) {
                const Var<float> g_fake =
                    model.generate(lr, Var<float>::constant(normal_tensor(b.lr.shape(), noise_rng)));
                const Var<float> rec = ops::mse(g_fake, hr);
                const Var<float> g_loss =
                    ops::add(ops::scale(ops::mean(model.critic(g_fake)), -1.0f), ops::scale(rec, lambda));
                const double gl = g_loss.value().raw()[0];
                check_finite(gl, "generator loss", epoch, bi);
                nn::backward(g_loss);
                nn::adam_step<float>(gen, adam);
                for (auto* p : crit) p->zero_grad();
                e.generator_loss += gl;
                e.recon_mse += rec.value().raw()[0];
                ++e.generator_steps;
            }
            ++bi;
        }
        if (e.critic_steps) e.critic_loss /= static_cast<double>(e.critic_steps);
        if (e.generator_steps) {
            e.generator_loss /= static_cast<double>(e.generator_steps);
            e.recon_mse /= static_cast<double>(e.generator_steps);
        }
        history.push_back(e);
    }
    return history;
}

} // namespace volsr::models
