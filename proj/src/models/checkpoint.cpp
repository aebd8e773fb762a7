#include "volsr/models/checkpoint.hpp"

#include "volsr/util/bytes.hpp"
#include "volsr/util/errors.hpp"
#include "volsr/util/files.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstring>

namespace volsr::models {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::uint8_t, 8> kMagic{'V', 'O', 'L', 'S', 'R', 'C', 'K', 0};

std::string bn_name(const nn::BatchNormState<float>& bn) {
    const std::string& g = bn.gamma.name;
    return g.size() > 6 ? g.substr(0, g.size() - 6) : g;  // strip ".gamma"
}

json train_json(const TrainConfig& t) {
    return json{{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"lr", t.lr}, {"seed", t.seed}};
}

TrainConfig train_from(const json& j) {
    TrainConfig t;
    t.epochs = j.at("epochs").get<std::size_t>();
    t.batch_size = j.at("batch_size").get<std::size_t>();
    t.lr = j.at("lr").get<double>();
    t.seed = j.at("seed").get<std::uint64_t>();
    return t;
}

json history_json(ModelKind kind, const TrainingState& s) {
    json h = json::array();
    if (kind == ModelKind::vae) {
        for (const auto& e : s.vae_history) h.push_back({{"total", e.total}, {"recon", e.recon}, {"kl", e.kl}});
    } else {
        for (const auto& e : s.gan_history)
            h.push_back({{"critic_loss", e.critic_loss},
                         {"generator_loss", e.generator_loss},
                         {"recon_mse", e.recon_mse},
                         {"max_abs_critic_weight", e.max_abs_critic_weight},
                         {"critic_steps", e.critic_steps},
                         {"generator_steps", e.generator_steps}});
    }
    return h;
}

void history_from(ModelKind kind, const json& h, TrainingState& s) {
    for (const auto& e : h) {
        if (kind == ModelKind::vae) {
            s.vae_history.push_back({e.at("total").get<double>(), e.at("recon").get<double>(), e.at("kl").get<double>()});
        } else {
            GanEpoch g;
            g.critic_loss = e.at("critic_loss").get<double>();
            g.generator_loss = e.at("generator_loss").get<double>();
            g.recon_mse = e.at("recon_mse").get<double>();
            g.max_abs_critic_weight = e.at("max_abs_critic_weight").get<double>();
            g.critic_steps = e.at("critic_steps").get<std::size_t>();
            g.generator_steps = e.at("generator_steps").get<std::size_t>();
            s.gan_history.push_back(g);
        }
    }
}

template <typename Model>
std::vector<std::uint8_t> encode(Model& model, ModelKind kind, const TrainingState& state) {
    const auto params = model.parameters();
    const auto bns = model.batch_norms();
    json h;
    h["format"] = "volsr-checkpoint";
    h["kind"] = to_string(kind);
    h["seed"] = model.seed();
    h["config"] = json::parse(model.config().to_json());
    h["train"] = train_json(state.train);
    h["epoch"] = state.epoch;
    h["history"] = history_json(kind, state);
    h["manifest_sha256"] = state.manifest_hash;
    h["patch_spec"] = state.spec ? json::parse(state.spec->to_json()) : json(nullptr);
    h["norm_stats"] = {{"mean", state.stats.mean}, {"std", state.stats.std}};
    json ptab = json::array();
    for (const auto* p : params) ptab.push_back({{"name", p->name}, {"shape", p->value().shape()}});
    h["parameters"] = ptab;
    json btab = json::array();
    for (const auto* bn : bns) btab.push_back({{"name", bn_name(*bn)}, {"channels", bn->channels()}});
    h["batch_norms"] = btab;
    const std::string header = h.dump();

    ByteWriter w;
    w.put_bytes(kMagic);
    w.put_u32(kCheckpointVersion);
    w.put_u32(0);
    w.put_u64(header.size());
    w.put_text(header);
    for (const auto* p : params) {
        for (float v : p->value().data()) w.put_f32(v);
        for (float v : p->adam_m.data()) w.put_f32(v);
        for (float v : p->adam_v.data()) w.put_f32(v);
        w.put_u64(p->step);
    }
    for (const auto* bn : bns) {
        for (float v : bn->running_mean) w.put_f32(v);
        for (float v : bn->running_var) w.put_f32(v);
    }
    return w.take();
}

struct Parsed {
    CheckpointHeader header;
    json raw;
    std::size_t payload_offset = 0;
};

Parsed parse(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    Parsed out;
    try {
        const auto magic = r.get_bytes(kMagic.size());
        if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw FormatError("checkpoint: bad magic");
        const std::uint32_t version = r.get_u32();
        if (version != kCheckpointVersion)
            throw FormatError("checkpoint: unsupported version " + std::to_string(version));
        r.get_u32();
        const std::uint64_t len = r.get_u64();
        if (len > r.remaining()) throw FormatError("checkpoint: truncated header");
        out.raw = json::parse(r.get_text(static_cast<std::size_t>(len)));
        out.payload_offset = r.position();

        const json& h = out.raw;
        if (h.at("format").get<std::string>() != "volsr-checkpoint") throw FormatError("checkpoint: bad format tag");
        const std::string kind = h.at("kind").get<std::string>();
        if (kind == "vae")
            out.header.kind = ModelKind::vae;
        else if (kind == "gan")
            out.header.kind = ModelKind::gan;
        else
            throw FormatError("checkpoint: unknown model kind '" + kind + "'");
        out.header.seed = h.at("seed").get<std::uint64_t>();
        out.header.config_json = h.at("config").dump();
        TrainingState& s = out.header.state;
        s.epoch = h.at("epoch").get<std::size_t>();
        s.train = train_from(h.at("train"));
        s.manifest_hash = h.at("manifest_sha256").get<std::string>();
        if (!h.at("patch_spec").is_null()) s.spec = patch::PatchSpec::from_json(h.at("patch_spec").dump());
        s.stats = {h.at("norm_stats").at("mean").get<double>(), h.at("norm_stats").at("std").get<double>()};
        history_from(out.header.kind, h.at("history"), s);
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
    }
    return out;
}

template <typename Model, typename Config>
LoadedCheckpoint<Model> decode(std::span<const std::uint8_t> bytes, ModelKind kind, const Config* expected) {
    Parsed p = parse(bytes);
    if (p.header.kind != kind)
        throw ManifestMismatch("checkpoint holds a " + to_string(p.header.kind) + " model, expected " +
                               to_string(kind));
    const Config config = Config::from_json(p.header.config_json);
    if (expected && !(*expected == config))
        throw ManifestMismatch("checkpoint config differs from the requested config: stored " + config.to_json() +
                               ", requested " + expected->to_json());
    Model model(config, p.header.seed);
    const auto params = model.parameters();
    const auto bns = model.batch_norms();
    try {
        const json& ptab = p.raw.at("parameters");
        const json& btab = p.raw.at("batch_norms");
        if (ptab.size() != params.size() || btab.size() != bns.size())
            throw FormatError("checkpoint: parameter table does not match the model");
        for (std::size_t i = 0; i < params.size(); ++i)
            if (ptab[i].at("name").get<std::string>() != params[i]->name ||
                ptab[i].at("shape").get<nn::Shape>() != params[i]->value().shape())
                throw FormatError("checkpoint: parameter " + std::to_string(i) + " ('" + params[i]->name +
                                  "') does not match the model");
        for (std::size_t i = 0; i < bns.size(); ++i)
            if (btab[i].at("channels").get<std::size_t>() != bns[i]->channels())
                throw FormatError("checkpoint: batch norm " + std::to_string(i) + " does not match the model");
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: malformed tables: ") + e.what());
    }

    ByteReader r(bytes, p.payload_offset);
    for (auto* prm : params) {
        for (float& v : prm->mutable_value().data()) v = r.get_f32();
        for (float& v : prm->adam_m.data()) v = r.get_f32();
        for (float& v : prm->adam_v.data()) v = r.get_f32();
        prm->step = r.get_u64();
    }
    for (auto* bn : bns) {
        for (float& v : bn->running_mean) v = r.get_f32();
        for (float& v : bn->running_var) v = r.get_f32();
    }
    if (r.remaining() != 0) throw FormatError("checkpoint: " + std::to_string(r.remaining()) + " trailing bytes");
    return {std::move(model), std::move(p.header.state)};
}

} // namespace

std::string to_string(ModelKind k) { return k == ModelKind::vae ? "vae" : "gan"; }

std::vector<std::uint8_t> encode_checkpoint(VaeModel<float>& model, const TrainingState& state) {
    return encode(model, ModelKind::vae, state);
}

std::vector<std::uint8_t> encode_checkpoint(GanModel<float>& model, const TrainingState& state) {
    return encode(model, ModelKind::gan, state);
}

LoadedCheckpoint<VaeModel<float>> decode_vae_checkpoint(std::span<const std::uint8_t> bytes,
                                                        const VaeConfig* expected) {
    return decode<VaeModel<float>>(bytes, ModelKind::vae, expected);
}

LoadedCheckpoint<GanModel<float>> decode_gan_checkpoint(std::span<const std::uint8_t> bytes,
                                                        const GanConfig* expected) {
    return decode<GanModel<float>>(bytes, ModelKind::gan, expected);
}

CheckpointHeader decode_checkpoint_header(std::span<const std::uint8_t> bytes) { return parse(bytes).header; }

void save_checkpoint(VaeModel<float>& model, const TrainingState& state, const std::filesystem::path& path) {
    atomic_write(path, encode_checkpoint(model, state));
}

void save_checkpoint(GanModel<float>& model, const TrainingState& state, const std::filesystem::path& path) {
    atomic_write(path, encode_checkpoint(model, state));
}

LoadedCheckpoint<VaeModel<float>> load_vae_checkpoint(const std::filesystem::path& path, const VaeConfig* expected) {
    const auto bytes = read_bytes(path);
    return decode_vae_checkpoint(bytes, expected);
}

LoadedCheckpoint<GanModel<float>> load_gan_checkpoint(const std::filesystem::path& path, const GanConfig* expected) {
    const auto bytes = read_bytes(path);
    return decode_gan_checkpoint(bytes, expected);
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    return decode_checkpoint_header(bytes);
}

} // namespace volsr::models
