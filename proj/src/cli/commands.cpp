#include "volsr/cli/commands.hpp"

#include "volsr/eval/report.hpp"
#include "volsr/interp/resample.hpp"
#include "volsr/io/container.hpp"
#include "volsr/io/synth.hpp"
#include "volsr/models/batch.hpp"
#include "volsr/models/checkpoint.hpp"
#include "volsr/models/train.hpp"
#include "volsr/stitch/stitch.hpp"
#include "volsr/tensor/autodiff.hpp"
#include "volsr/util/errors.hpp"
#include "volsr/util/files.hpp"
#include "volsr/util/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace volsr::cli {

using nlohmann::ordered_json;

namespace {

std::vector<fs::path> files_in(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "run.json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

void add_hashes(std::vector<std::pair<std::string, std::string>>& list, const fs::path& path) {
    if (fs::is_directory(path)) {
        for (const auto& f : files_in(path)) list.emplace_back(f.generic_string(), sha256_file(f));
    } else {
        list.emplace_back(path.generic_string(), sha256_file(path));
    }
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

/// The labelled component as a one-component field; a single-component
/// field is relabelled.
io::VolumeField as_component(const io::VolumeField& f, char label, const std::string& what) {
    io::VolumeField out = f;
    if (f.components.find(label) != std::string::npos) {
        out.data = {f.component(label)};
    } else if (f.component_count() == 1) {
        out.data = {f.data[0]};
    } else {
        throw ContractError(what + ": field has components \"" + f.components + "\" but no '" + label + "'");
    }
    out.components = std::string(1, label);
    return out;
}

void prepare_output(const fs::path& out) {
    if (out.empty()) throw ConfigError("an output path is required");
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
}

} // namespace

Provenance::Provenance(std::string command, std::vector<std::string> arguments, const PipelineConfig& config)
    : command_(std::move(command)), arguments_(std::move(arguments)), config_json_(config.to_json()) {}

void Provenance::input(const fs::path& path) { add_hashes(inputs_, path); }
void Provenance::output(const fs::path& path) { add_hashes(outputs_, path); }

std::string Provenance::to_json() const {
    ordered_json j;
    j["command"] = command_;
    j["arguments"] = arguments_;
    j["config"] = ordered_json::parse(config_json_);
    auto list = [](const auto& v) {
        ordered_json a = ordered_json::array();
        for (const auto& [p, h] : v) a.push_back({{"path", p}, {"sha256", h}});
        return a;
    };
    j["inputs"] = list(inputs_);
    j["outputs"] = list(outputs_);
    return j.dump(2) + "\n";
}

void Provenance::write_next_to(const fs::path& output) const {
    const fs::path target = fs::is_directory(output) ? output / "run.json" : fs::path(output.string() + ".run.json");
    atomic_write(target, to_json());
}

void apply_compute(const ComputeConfig& c) {
    nn::compute_settings().threads = c.threads;
    nn::compute_settings().strict_deterministic = c.strict_deterministic;
}

io::Dims parse_dims(const std::string& text) {
    std::vector<std::size_t> v;
    const char* p = text.data();
    const char* end = p + text.size();
    while (p < end) {
        std::size_t n = 0;
        auto [next, ec] = std::from_chars(p, end, n);
        if (ec != std::errc() || n == 0) throw ConfigError("dims: cannot parse \"" + text + "\"");
        v.push_back(n);
        p = next;
        if (p < end) {
            if (*p != 'x' && *p != ',') throw ConfigError("dims: cannot parse \"" + text + "\"");
            ++p;
            if (p == end) throw ConfigError("dims: cannot parse \"" + text + "\"");
        }
    }
    if (v.size() == 1) return {v[0], v[0], v[0]};
    if (v.size() == 3) return {v[0], v[1], v[2]};
    throw ConfigError("dims: expected 1 or 3 extents in \"" + text + "\"");
}

io::VolumeField subsample_field(const io::VolumeField& field, std::size_t A) {
    if (A == 0) throw ConfigError("coarsen: A must be >= 1");
    const io::Dims d = field.dims;
    const io::Dims od{(d.x - 1) / A + 1, (d.y - 1) / A + 1, (d.z - 1) / A + 1};
    io::VolumeField out = field;
    out.dims = od;
    for (std::size_t c = 0; c < field.component_count(); ++c) {
        io::Grid3 g(od);
        for (std::size_t k = 0; k < od.z; ++k)
            for (std::size_t j = 0; j < od.y; ++j)
                for (std::size_t i = 0; i < od.x; ++i) g(i, j, k) = field.data[c](A * i, A * j, A * k);
        out.data[c] = std::move(g);
    }
    return out;
}

void run_synth(const PipelineConfig& cfg, const SynthOptions& o, Provenance& prov) {
    io::SynthParams p = cfg.synth_params();
    p.components = o.components;
    p.dtype = o.dtype;
    const auto field = io::synth_field(o.dims, {1.0, 1.0, 1.0}, o.seed, p);
    const fs::path out = resolve_path(cfg, o.out);
    prepare_output(out);
    io::write_volume(field, out);
    prov.output(out);
    prov.write_next_to(out);
}

void run_ingest(const PipelineConfig& cfg, const IngestOptions& o, Provenance& prov) {
    const auto raw = read_bytes(o.raw);
    prov.input(o.raw);
    const auto field = io::ingest_raw(raw, o.dims, o.dtype, o.big_endian, o.label);
    const fs::path out = resolve_path(cfg, o.out);
    prepare_output(out);
    io::write_volume(field, out);
    prov.output(out);
    prov.write_next_to(out);
}

void run_coarsen(const PipelineConfig& cfg, const CoarsenOptions& o, Provenance& prov) {
    const auto field = io::read_volume(o.field);
    prov.input(o.field);
    const fs::path out = resolve_path(cfg, o.out);
    prepare_output(out);
    io::write_volume(subsample_field(field, o.A), out);
    prov.output(out);
    prov.write_next_to(out);
}

void run_dataset(const PipelineConfig& cfg, const DatasetOptions& o, Provenance& prov, std::ostream& log) {
    const auto field = io::read_volume(o.field);
    prov.input(o.field);
    const auto stats = patch::compute_norm_stats(field, cfg.patch.component());
    const auto ds = patch::build_dataset(field, cfg.patch, stats);
    const fs::path out = resolve_path(cfg, o.out);
    fs::create_directories(out);
    patch::save_dataset(ds, out);
    log << "dataset: " << ds.pairs.size() << " pairs, A=" << cfg.patch.A() << " s=" << cfg.patch.s()
        << " q=" << cfg.patch.q() << ", mean " << fmt("%.6g", stats.mean) << " std " << fmt("%.6g", stats.std)
        << "\n";
    prov.output(out);
    prov.write_next_to(out);
}

void run_train_vae(const PipelineConfig& cfg, const TrainOptions& o, Provenance& prov, std::ostream& log) {
    const auto ds = patch::load_dataset(o.dataset);
    const std::string mh = patch::manifest_hash(o.dataset);
    prov.input(o.dataset);
    models::VaeModel<float> model(cfg.vae, cfg.seeds.model);
    const auto train = cfg.train_config();
    const auto history = models::train_vae(model, ds, train, [&](std::size_t e, const models::VaeEpoch& v) {
        log << "epoch " << e << " total " << fmt("%.6f", v.total) << " recon " << fmt("%.6f", v.recon) << " kl "
            << fmt("%.4f", v.kl) << std::endl;
    });
    models::TrainingState st;
    st.epoch = history.size();
    st.train = train;
    st.manifest_hash = mh;
    st.spec = ds.spec;
    st.stats = ds.stats;
    st.vae_history = history;
    const fs::path out = resolve_path(cfg, o.out);
    prepare_output(out);
    models::save_checkpoint(model, st, out);
    prov.output(out);
    prov.write_next_to(out);
}

void run_train_gan(const PipelineConfig& cfg, const TrainOptions& o, Provenance& prov, std::ostream& log) {
    const auto ds = patch::load_dataset(o.dataset);
    const std::string mh = patch::manifest_hash(o.dataset);
    prov.input(o.dataset);
    models::GanModel<float> model(cfg.gan, cfg.seeds.model);
    const auto train = cfg.gan_train_config();
    std::vector<models::GanEpoch> history;
    history = models::train_gan(model, ds, train);
    for (std::size_t e = 0; e < history.size(); ++e) {
        const auto& h = history[e];
        log << "epoch " << e << " critic " << fmt("%.6g", h.critic_loss) << " generator "
            << fmt("%.6g", h.generator_loss) << " recon " << fmt("%.6f", h.recon_mse) << " max|w| "
            << fmt("%.6g", h.max_abs_critic_weight) << "\n";
    }
    models::TrainingState st;
    st.epoch = history.size();
    st.train = train;
    st.manifest_hash = mh;
    st.spec = ds.spec;
    st.stats = ds.stats;
    st.gan_history = history;
    const fs::path out = resolve_path(cfg, o.out);
    prepare_output(out);
    models::save_checkpoint(model, st, out);
    prov.output(out);
    prov.write_next_to(out);
}

fs::path mask_path(const fs::path& out) {
    fs::path p = out;
    p.replace_extension(".mask" + out.extension().string());
    return p;
}

void run_infer(const PipelineConfig& cfg, const InferOptions& o, Provenance& prov, std::ostream& log) {
    const auto header = models::read_checkpoint_header(o.checkpoint);
    prov.input(o.checkpoint);
    if (!header.state.spec) throw ManifestMismatch("checkpoint records no patch spec");
    if (o.expect_dataset) {
        if (patch::manifest_hash(*o.expect_dataset) != header.state.manifest_hash)
            throw ManifestMismatch("checkpoint was not trained on dataset " + o.expect_dataset->string());
        prov.input(*o.expect_dataset);
    }
    const patch::PatchSpec spec = *header.state.spec;
    const auto coarse_field = io::read_volume(o.field);
    prov.input(o.field);
    const auto coarse = as_component(coarse_field, spec.component(), "infer");
    const io::Dims fine = o.fine_dims ? *o.fine_dims : stitch::fine_dims_for(coarse.dims, spec.A());

    stitch::ReconstructOptions opts;
    opts.batch_size = cfg.batch_size;
    opts.blend = o.tapered ? stitch::Blend::tapered : stitch::Blend::uniform;
    opts.fill = o.zero_fill ? stitch::Fill::zero : stitch::Fill::coarse;

    stitch::StitchResult r;
    if (header.kind == models::ModelKind::vae) {
        auto loaded = models::load_vae_checkpoint(o.checkpoint, o.check_config ? &cfg.vae : nullptr);
        r = stitch::reconstruct_full(coarse.data[0], fine, spec, header.state.stats,
                                     stitch::vae_predictor(loaded.model), opts);
    } else {
        auto loaded = models::load_gan_checkpoint(o.checkpoint, o.check_config ? &cfg.gan : nullptr);
        std::uint64_t call = 0;
        const stitch::PatchPredictor gan = [&](std::span<const io::Grid3> batch) {
            std::vector<const io::Grid3*> ptrs;
            for (const auto& g : batch) ptrs.push_back(&g);
            const auto out = loaded.model.superresolve(models::stack_cubes<float>(ptrs), Rng::mix(o.noise_seed, call++));
            std::vector<io::Grid3> res;
            for (std::size_t n = 0; n < batch.size(); ++n) res.push_back(models::unstack_cube(out, n));
            return res;
        };
        r = stitch::reconstruct_full(coarse.data[0], fine, spec, header.state.stats, gan, opts);
    }

    io::VolumeField result = io::VolumeField::scalar(r.values, spec.component(), coarse.domain);
    result.time_tag = coarse.time_tag;
    io::VolumeField mask = io::VolumeField::scalar(r.mask, 'm', coarse.domain);
    const fs::path out = resolve_path(cfg, o.out);
    prepare_output(out);
    io::write_volume(result, out);
    io::write_volume(mask, mask_path(out));
    log << "infer: " << to_string(header.kind) << " model, fine grid " << io::to_string(fine) << ", coverage "
        << fmt("%.4f", r.coverage()) << "\n";
    prov.output(out);
    prov.output(mask_path(out));
    prov.write_next_to(out);
}

void run_baseline(const PipelineConfig& cfg, const BaselineOptions& o, Provenance& prov) {
    const int given = (o.scale ? 1 : 0) + (o.dims ? 1 : 0) + (o.like ? 1 : 0);
    if (given != 1) throw ConfigError("baseline: give exactly one of --scale, --dims, --like");
    const auto kernel = interp::parse_kernel(o.kernel);
    const auto field = io::read_volume(o.field);
    prov.input(o.field);
    io::VolumeField out_field;
    if (o.scale) {
        out_field = interp::resample3d(field, {*o.scale, *o.scale, *o.scale}, kernel);
    } else {
        io::Dims target = o.dims ? *o.dims : io::read_volume(*o.like).dims;
        if (o.like) prov.input(*o.like);
        out_field = interp::resample_to(field, target, kernel);
    }
    const fs::path out = resolve_path(cfg, o.out);
    prepare_output(out);
    io::write_volume(out_field, out);
    prov.output(out);
    prov.write_next_to(out);
}

void run_eval(const PipelineConfig& cfg, const EvalOptions& o, Provenance& prov, std::ostream& log) {
    const char comp = cfg.patch.component();
    const auto plane = eval::PlaneSpec::parse(cfg.plane, comp);
    const auto truth = as_component(io::read_volume(o.truth), comp, "eval truth");
    prov.input(o.truth);
    auto coarse = as_component(io::read_volume(o.coarse), comp, "eval coarse");
    prov.input(o.coarse);
    if (coarse.dims != truth.dims) coarse = interp::resample_to(coarse, truth.dims, interp::Kernel::nearest);
    std::vector<eval::NamedField> preds;
    for (const auto& [name, path] : o.predictions) {
        auto f = as_component(io::read_volume(path), comp, "eval " + name);
        prov.input(path);
        if (f.dims != truth.dims)
            throw ContractError("eval: prediction '" + name + "' is " + io::to_string(f.dims) + ", truth is " +
                                io::to_string(truth.dims));
        preds.emplace_back(name, std::move(f));
    }
    const auto report = eval::eval_report(truth, coarse, preds, plane);
    const fs::path out = resolve_path(cfg, o.out);
    fs::create_directories(out);
    eval::write_report(report, out);
    log << "plane " << plane.to_string() << " (index " << report.plane_index << ")\n";
    log << "method,max_err,avg_err,spectrum_max_err,spectrum_avg_err\n";
    for (std::size_t i = 0; i < report.field_rows.size(); ++i) {
        const auto& f = report.field_rows[i];
        const auto& s = report.spectrum_rows[i];
        log << f.method << "," << fmt("%.6g", f.max_err) << "," << fmt("%.6g", f.avg_err) << ","
            << fmt("%.6g", s.max_err) << "," << fmt("%.6g", s.avg_err) << "\n";
    }
    prov.output(out);
    prov.write_next_to(out);
}

} // namespace volsr::cli
