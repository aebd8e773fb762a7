#include "volsr/cli/config.hpp"

#include "volsr/eval/report.hpp"
#include "volsr/util/errors.hpp"
#include "volsr/util/files.hpp"

#include <nlohmann/json.hpp>

#include <set>

namespace volsr::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void read_into(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

io::SynthParams PipelineConfig::synth_params() const {
    io::SynthParams p;
    p.num_modes = synth.num_modes;
    p.spectrum_exponent = synth.spectrum_exponent;
    p.k_max = synth.k_max;
    return p;
}

void PipelineConfig::validate() const {
    vae.validate();
    gan.validate();
    if (batch_size == 0) throw ConfigError("config: batch_size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("config: lr must be positive");
    if (!(gan_lr > 0.0)) throw ConfigError("config: gan_lr must be positive");
    if (synth.num_modes == 0) throw ConfigError("config: synth.num_modes must be >= 1");
    if (synth.k_max < 0.0) throw ConfigError("config: synth.k_max must be >= 0");
    if (compute.threads == 0) throw ConfigError("config: compute.threads must be >= 1");
    (void)eval::PlaneSpec::parse(plane);
}

std::string PipelineConfig::to_json() const {
    ordered_json j;
    j["paths"] = {{"workdir", paths.workdir},
                  {"fields", paths.fields},
                  {"datasets", paths.datasets},
                  {"checkpoints", paths.checkpoints},
                  {"reports", paths.reports}};
    j["patch"] = ordered_json::parse(patch.to_json());
    j["vae"] = ordered_json::parse(vae.to_json());
    j["gan"] = ordered_json::parse(gan.to_json());
    j["train"] = {{"epochs", epochs}, {"batch_size", batch_size}, {"lr", lr}, {"gan_lr", gan_lr}};
    j["seeds"] = {{"data", seeds.data}, {"model", seeds.model}, {"train", seeds.train}};
    j["synth"] = {
        {"num_modes", synth.num_modes}, {"spectrum_exponent", synth.spectrum_exponent}, {"k_max", synth.k_max}};
    j["report"] = {{"plane", plane}};
    j["compute"] = {{"threads", compute.threads}, {"strict_deterministic", compute.strict_deterministic}};
    return j.dump(2) + "\n";
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
    PipelineConfig c;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    try {
        reject_unknown(j, {"paths", "patch", "vae", "gan", "train", "seeds", "synth", "report", "compute"}, "config");
        if (j.contains("paths")) {
            const auto& p = j["paths"];
            reject_unknown(p, {"workdir", "fields", "datasets", "checkpoints", "reports"}, "paths");
            read_into(p, "workdir", c.paths.workdir);
            read_into(p, "fields", c.paths.fields);
            read_into(p, "datasets", c.paths.datasets);
            read_into(p, "checkpoints", c.paths.checkpoints);
            read_into(p, "reports", c.paths.reports);
        }
        if (j.contains("patch")) c.patch = patch::PatchSpec::from_json(j["patch"].dump());
        if (j.contains("vae")) c.vae = models::VaeConfig::from_json(j["vae"].dump());
        if (j.contains("gan")) c.gan = models::GanConfig::from_json(j["gan"].dump());
        if (j.contains("train")) {
            const auto& t = j["train"];
            reject_unknown(t, {"epochs", "batch_size", "lr", "gan_lr"}, "train");
            read_into(t, "epochs", c.epochs);
            read_into(t, "batch_size", c.batch_size);
            read_into(t, "lr", c.lr);
            read_into(t, "gan_lr", c.gan_lr);
        }
        if (j.contains("seeds")) {
            const auto& s = j["seeds"];
            reject_unknown(s, {"data", "model", "train"}, "seeds");
            read_into(s, "data", c.seeds.data);
            read_into(s, "model", c.seeds.model);
            read_into(s, "train", c.seeds.train);
        }
        if (j.contains("synth")) {
            const auto& s = j["synth"];
            reject_unknown(s, {"num_modes", "spectrum_exponent", "k_max"}, "synth");
            read_into(s, "num_modes", c.synth.num_modes);
            read_into(s, "spectrum_exponent", c.synth.spectrum_exponent);
            read_into(s, "k_max", c.synth.k_max);
        }
        if (j.contains("report")) {
            reject_unknown(j["report"], {"plane"}, "report");
            read_into(j["report"], "plane", c.plane);
        }
        if (j.contains("compute")) {
            const auto& s = j["compute"];
            reject_unknown(s, {"threads", "strict_deterministic"}, "compute");
            read_into(s, "threads", c.compute.threads);
            read_into(s, "strict_deterministic", c.compute.strict_deterministic);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) { return from_json(read_text(path)); }

std::filesystem::path resolve_path(const PipelineConfig& cfg, const std::filesystem::path& p) {
    if (p.is_absolute() || cfg.paths.workdir.empty() || cfg.paths.workdir == ".") return p;
    return std::filesystem::path(cfg.paths.workdir) / p;
}

} // namespace volsr::cli
