#include "volsr/cli/commands.hpp"
#include "volsr/util/errors.hpp"
#include "volsr/util/files.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

using namespace volsr;
using namespace volsr::cli;

namespace {

enum Exit { ok = 0, internal = 1, usage = 2, format = 3, numeric = 4, manifest = 5 };

int fail(int code, const char* kind, const std::string& message) {
    std::string line = message;
    for (char& c : line)
        if (c == '\n' || c == '\r') c = ' ';
    std::cerr << "volsr: error code=" << code << " kind=" << kind << ": " << line << std::endl;
    return code;
}

struct Overrides {
    std::optional<std::size_t> A, s, epochs, batch_size;
    std::optional<std::string> component, upsample, plane;
    std::optional<bool> prefilter;
    std::optional<double> lr, gan_lr, beta;
    std::optional<std::uint64_t> data_seed, model_seed, train_seed;
    std::optional<std::size_t> modes;
    std::optional<double> exponent, kmax;
    std::optional<unsigned> threads;
    bool strict = false;

    void apply(PipelineConfig& c) const {
        if (A || s || component || upsample || prefilter) {
            const auto& p = c.patch;
            if (component && component->size() != 1) throw ConfigError("--component must be a single label");
            c.patch = patch::PatchSpec(A.value_or(p.A()), s.value_or(p.s()), component ? (*component)[0] : p.component(),
                                       upsample ? patch::parse_upsample(*upsample) : p.upsample(),
                                       prefilter.value_or(p.prefilter()));
        }
        if (epochs) c.epochs = *epochs;
        if (batch_size) c.batch_size = *batch_size;
        if (lr) c.lr = *lr;
        if (gan_lr) c.gan_lr = *gan_lr;
        if (beta) c.vae.beta = *beta;
        if (plane) c.plane = *plane;
        if (data_seed) c.seeds.data = *data_seed;
        if (model_seed) c.seeds.model = *model_seed;
        if (train_seed) c.seeds.train = *train_seed;
        if (modes) c.synth.num_modes = *modes;
        if (exponent) c.synth.spectrum_exponent = *exponent;
        if (kmax) c.synth.k_max = *kmax;
        if (threads) c.compute.threads = *threads;
        if (strict) c.compute.strict_deterministic = true;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"volsr: patch-based volumetric super-resolution pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    Overrides ov;
    app.add_option("--config", config_path, "JSON pipeline config; flags override it")->check(CLI::ExistingFile);
    app.add_option("--threads", ov.threads, "Upper bound on worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--strict-deterministic", ov.strict, "Serial reductions only");

    std::string dims_text, fine_dims_text, out, field, like, kernel = "cubic", dtype = "f64", raw, blend = "uniform",
                                                                  fill = "coarse", truth, coarse, checkpoint, dataset,
                                                                  expect_dataset, components = "u", label = "u";
    std::optional<double> scale;
    std::vector<std::string> preds;
    std::size_t coarsen_A = 2;
    bool big_endian = false;
    std::uint64_t noise_seed = 0;

    auto* config_cmd = app.add_subcommand("config", "Write the resolved config");
    config_cmd->add_option("--out", out, "Output JSON path")->required();
    const std::string default_note = " (default: under the configured paths)";

    auto* synth = app.add_subcommand("synth", "Generate a synthetic turbulence-like field");
    synth->add_option("--dims", dims_text, "Grid extents, e.g. 64 or 64x64x48")->required();
    synth->add_option("--seed", ov.data_seed, "Field seed (default: seeds.data)");
    synth->add_option("--components", components, "Component labels, e.g. u or uvw");
    synth->add_option("--dtype", dtype, "f32 or f64");
    synth->add_option("--modes", ov.modes, "Number of Fourier modes");
    synth->add_option("--exponent", ov.exponent, "Energy spectrum exponent");
    synth->add_option("--kmax", ov.kmax, "Largest wavenumber in cycles per domain (0 = auto)");
    synth->add_option("--out", out, "Output container" + default_note);

    auto* ingest = app.add_subcommand("ingest", "Convert a raw x-fastest array into a container");
    ingest->add_option("--raw", raw, "Raw input file")->required()->check(CLI::ExistingFile);
    ingest->add_option("--dims", dims_text, "Grid extents")->required();
    ingest->add_option("--dtype", dtype, "f32 or f64")->required();
    ingest->add_flag("--big-endian", big_endian, "Input is big-endian");
    ingest->add_option("--label", label, "Component label");
    ingest->add_option("--out", out, "Output container" + default_note);

    auto* coarsen = app.add_subcommand("coarsen", "Stride-A subsample keeping both end samples");
    coarsen->add_option("--field", field, "Input container")->required()->check(CLI::ExistingFile);
    coarsen->add_option("--A", coarsen_A, "Coarsening factor")->check(CLI::PositiveNumber);
    coarsen->add_option("--out", out, "Output container" + default_note);

    auto* ds = app.add_subcommand("dataset", "Build LR/HR training pairs");
    ds->add_option("--field", field, "Source container")->required()->check(CLI::ExistingFile);
    ds->add_option("--A", ov.A, "Coarsening factor")->check(CLI::PositiveNumber);
    ds->add_option("--s", ov.s, "Window stride")->check(CLI::PositiveNumber);
    ds->add_option("--component", ov.component, "Component label");
    ds->add_option("--upsample", ov.upsample, "trilinear or nearest");
    ds->add_option("--prefilter", ov.prefilter, "Box-average before subsampling");
    ds->add_option("--out", out, "Output directory" + default_note);

    auto add_train = [&](CLI::App* cmd, std::optional<double>& lr) {
        cmd->add_option("--dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
        cmd->add_option("--epochs", ov.epochs, "Epoch count");
        cmd->add_option("--seed", ov.train_seed, "Shuffle/noise seed (default: seeds.train)");
        cmd->add_option("--model-seed", ov.model_seed, "Initialization seed (default: seeds.model)");
        cmd->add_option("--lr", lr, "Adam learning rate");
        cmd->add_option("--batch-size", ov.batch_size, "Batch size");
        cmd->add_option("--out", out, "Checkpoint path" + default_note);
    };
    auto* train_vae = app.add_subcommand("train-vae", "Train the variational autoencoder");
    add_train(train_vae, ov.lr);
    train_vae->add_option("--beta", ov.beta, "KL weight");
    auto* train_gan = app.add_subcommand("train-gan", "Train the Wasserstein GAN");
    add_train(train_gan, ov.gan_lr);

    auto* infer = app.add_subcommand("infer", "Super-resolve a coarse field and stitch the patches");
    infer->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    infer->add_option("--field", field, "Coarse input container")->required()->check(CLI::ExistingFile);
    infer->add_option("--fine-dims", fine_dims_text, "Output extents (default (n-1)*A+1)");
    infer->add_option("--expect-dataset", expect_dataset, "Fail unless the checkpoint was trained on this dataset")
        ->check(CLI::ExistingDirectory);
    infer->add_option("--blend", blend, "uniform or tapered");
    infer->add_option("--fill", fill, "coarse or zero for uncovered voxels");
    infer->add_option("--noise-seed", noise_seed, "GAN noise seed");
    infer->add_option("--batch-size", ov.batch_size, "Patches per forward pass");
    infer->add_option("--out", out, "Output container; the mask goes to <stem>.mask<ext>" + default_note);

    auto* baseline = app.add_subcommand("baseline", "Interpolation baseline");
    baseline->add_option("--field", field, "Coarse input container")->required()->check(CLI::ExistingFile);
    baseline->add_option("--scale", scale, "Uniform scale factor (extent round(n*scale))");
    baseline->add_option("--dims", dims_text, "Explicit output extents");
    baseline->add_option("--like", like, "Take output extents from this container")->check(CLI::ExistingFile);
    baseline->add_option("--kernel", kernel, "nearest, trilinear, cubic or lanczos");
    baseline->add_option("--out", out, "Output container" + default_note);

    auto* ev = app.add_subcommand("eval", "Field and spectrum error report");
    ev->add_option("--truth", truth, "Ground-truth container")->required()->check(CLI::ExistingFile);
    ev->add_option("--coarse", coarse, "Coarse input container")->required()->check(CLI::ExistingFile);
    ev->add_option("--pred", preds, "name=path, repeatable")->required();
    ev->add_option("--plane", ov.plane, "Plane, e.g. z=mid or y=12");
    ev->add_option("--component", ov.component, "Component label");
    ev->add_option("--out", out, "Report directory" + default_note);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail(usage, "usage", e.what());
    }

    std::vector<std::string> arguments(argv + 1, argv + argc);
    CLI::App* cmd = app.get_subcommands().front();
    try {
        PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : PipelineConfig::load(config_path);
        ov.apply(cfg);
        cfg.validate();
        apply_compute(cfg.compute);
        Provenance prov(cmd->get_name(), arguments, cfg);
        if (!config_path.empty()) prov.input(config_path);

        auto out_or = [&](const std::string& dir, const std::string& name) {
            return out.empty() ? (std::filesystem::path(dir) / name).string() : out;
        };
        auto stem = [](const std::string& p) { return std::filesystem::path(p).stem().string(); };

        if (cmd == config_cmd) {
            volsr::atomic_write(resolve_path(cfg, out), cfg.to_json());
        } else if (cmd == synth) {
            run_synth(cfg, {parse_dims(dims_text), cfg.seeds.data, components, io::parse_dtype(dtype),
                            out_or(cfg.paths.fields, "synth_" + std::to_string(cfg.seeds.data) + ".volsr")}, prov);
        } else if (cmd == ingest) {
            if (label.size() != 1) throw ConfigError("--label must be a single character");
            run_ingest(cfg, {raw, parse_dims(dims_text), io::parse_dtype(dtype), big_endian, label[0],
                             out_or(cfg.paths.fields, stem(raw) + ".volsr")}, prov);
        } else if (cmd == coarsen) {
            run_coarsen(cfg, {field, coarsen_A, out_or(cfg.paths.fields, stem(field) + "_A" + std::to_string(coarsen_A) + ".volsr")},
                        prov);
        } else if (cmd == ds) {
            const std::string name = stem(field) + "_A" + std::to_string(cfg.patch.A()) + "_s" + std::to_string(cfg.patch.s());
            run_dataset(cfg, {field, out_or(cfg.paths.datasets, name)}, prov, std::cout);
        } else if (cmd == train_vae) {
            run_train_vae(cfg, {dataset, out_or(cfg.paths.checkpoints, "vae.ckpt")}, prov, std::cout);
        } else if (cmd == train_gan) {
            run_train_gan(cfg, {dataset, out_or(cfg.paths.checkpoints, "gan.ckpt")}, prov, std::cout);
        } else if (cmd == infer) {
            InferOptions o;
            o.checkpoint = checkpoint;
            o.field = field;
            o.out = out_or(cfg.paths.fields, stem(checkpoint) + "_" + stem(field) + ".volsr");
            if (!fine_dims_text.empty()) o.fine_dims = parse_dims(fine_dims_text);
            if (!expect_dataset.empty()) o.expect_dataset = expect_dataset;
            if (blend != "uniform" && blend != "tapered") throw ConfigError("--blend must be uniform or tapered");
            if (fill != "coarse" && fill != "zero") throw ConfigError("--fill must be coarse or zero");
            o.tapered = blend == "tapered";
            o.zero_fill = fill == "zero";
            o.noise_seed = noise_seed;
            o.check_config = !config_path.empty();
            run_infer(cfg, o, prov, std::cout);
        } else if (cmd == baseline) {
            BaselineOptions o;
            o.field = field;
            o.scale = scale;
            if (!dims_text.empty()) o.dims = parse_dims(dims_text);
            if (!like.empty()) o.like = like;
            o.kernel = kernel;
            o.out = out_or(cfg.paths.fields, stem(field) + "_" + kernel + ".volsr");
            run_baseline(cfg, o, prov);
        } else if (cmd == ev) {
            EvalOptions o{truth, coarse, {}, out_or(cfg.paths.reports, "eval")};
            for (const auto& p : preds) {
                const auto eq = p.find('=');
                if (eq == std::string::npos || eq == 0 || eq + 1 == p.size())
                    throw ConfigError("--pred expects name=path, got \"" + p + "\"");
                const std::filesystem::path path = p.substr(eq + 1);
                if (!std::filesystem::exists(path)) throw ConfigError("--pred: no such file " + path.string());
                o.predictions.emplace_back(p.substr(0, eq), path);
            }
            run_eval(cfg, o, prov, std::cout);
        }
    } catch (const ManifestMismatch& e) {
        return fail(manifest, "manifest_mismatch", e.what());
    } catch (const NumericError& e) {
        return fail(numeric, "numeric", e.what());
    } catch (const FormatError& e) {
        return fail(format, "format", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(format, "io", e.what());
    } catch (const ConfigError& e) {
        return fail(usage, "config", e.what());
    } catch (const ContractError& e) {
        return fail(usage, "contract", e.what());
    } catch (const std::exception& e) {
        return fail(internal, "internal", e.what());
    }
    return ok;
}
