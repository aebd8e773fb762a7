#include "volsr/patch/patch.hpp"

#include "volsr/interp/resample.hpp"
#include "volsr/io/container.hpp"
#include "volsr/util/errors.hpp"
#include "volsr/util/files.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace volsr::patch {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Upsample u) { return u == Upsample::nearest ? "nearest" : "trilinear"; }

Upsample parse_upsample(const std::string& text) {
    if (text == "trilinear") return Upsample::trilinear;
    if (text == "nearest") return Upsample::nearest;
    throw ConfigError("unknown upsample method: " + text);
}

PatchSpec::PatchSpec(std::size_t A, std::size_t s, char component, Upsample upsample, bool prefilter)
    : A_(A), s_(s), component_(component), upsample_(upsample), prefilter_(prefilter) {
    if (A == 0 || s == 0) throw ConfigError("patch spec: A and s must be positive");
    if (q() < kPatchOut)
        throw ConfigError("patch spec: q = A*s = " + std::to_string(q()) + " is smaller than the 16^3 crop");
    if (q() / A > kPatchOut)
        throw ConfigError("patch spec: LR cube edge q/A = " + std::to_string(q() / A) + " exceeds 16");
}

std::string PatchSpec::to_json() const {
    ordered_json j;
    j["A"] = A_;
    j["s"] = s_;
    j["q"] = q();
    j["patch_out"] = kPatchOut;
    j["component"] = std::string(1, component_);
    j["upsample"] = to_string(upsample_);
    j["prefilter"] = prefilter_;
    return j.dump();
}

PatchSpec PatchSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("patch spec: ") + e.what());
    }
    try {
        const auto A = j.at("A").get<std::size_t>();
        const auto s = j.at("s").get<std::size_t>();
        if (j.contains("q") && j["q"].get<std::size_t>() != A * s)
            throw ConfigError("patch spec: q = " + std::to_string(j["q"].get<std::size_t>()) + " but A*s = " +
                              std::to_string(A * s));
        if (j.contains("patch_out") && j["patch_out"].get<std::size_t>() != kPatchOut)
            throw ConfigError("patch spec: patch_out must be 16");
        const auto comp = j.value("component", std::string("u"));
        if (comp.size() != 1) throw ConfigError("patch spec: component must be one label");
        return PatchSpec(A, s, comp[0], parse_upsample(j.value("upsample", std::string("trilinear"))),
                         j.value("prefilter", false));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("patch spec: ") + e.what());
    }
}

std::size_t tile_count(Dims dims, std::size_t q, std::size_t s) {
    if (q == 0 || s == 0) throw ContractError("tile: q and s must be positive");
    std::size_t total = 1;
    for (int a = 0; a < 3; ++a) {
        if (q > dims[a])
            throw ContractError("tile: cube edge " + std::to_string(q) + " exceeds axis " + std::to_string(a) +
                                " extent " + std::to_string(dims[a]) + " (empty axis)");
        total *= (dims[a] - q) / s + 1;
    }
    return total;
}

std::vector<Origin> tile_origins(Dims dims, std::size_t q, std::size_t s) {
    std::vector<Origin> out;
    out.reserve(tile_count(dims, q, s));
    for (std::size_t x = 0; x + q <= dims.x; x += s)
        for (std::size_t y = 0; y + q <= dims.y; y += s)
            for (std::size_t z = 0; z + q <= dims.z; z += s) out.push_back({x, y, z});
    return out;
}

Grid3 extract_cube(const Grid3& grid, Origin o, std::size_t q) {
    const Dims& d = grid.dims();
    if (o.x + q > d.x || o.y + q > d.y || o.z + q > d.z) throw ContractError("extract_cube: window outside grid");
    Grid3 out({q, q, q});
    for (std::size_t k = 0; k < q; ++k)
        for (std::size_t j = 0; j < q; ++j)
            for (std::size_t i = 0; i < q; ++i) out(i, j, k) = grid(o.x + i, o.y + j, o.z + k);
    return out;
}

Grid3 coarsen(const Grid3& cube, std::size_t A, bool prefilter) {
    const Dims d = cube.dims();
    if (A == 0 || d.x % A || d.y % A || d.z % A)
        throw ContractError("coarsen: extent " + io::to_string(d) + " not divisible by A = " + std::to_string(A));
    const Dims od{d.x / A, d.y / A, d.z / A};
    Grid3 out(od);
    for (std::size_t k = 0; k < od.z; ++k)
        for (std::size_t j = 0; j < od.y; ++j)
            for (std::size_t i = 0; i < od.x; ++i) {
                if (!prefilter) {
                    out(i, j, k) = cube(A * i, A * j, A * k);
                    continue;
                }
                double s = 0.0;
                for (std::size_t c = 0; c < A; ++c)
                    for (std::size_t b = 0; b < A; ++b)
                        for (std::size_t a = 0; a < A; ++a) s += cube(A * i + a, A * j + b, A * k + c);
                out(i, j, k) = s / static_cast<double>(A * A * A);
            }
    return out;
}

Grid3 upsample_lr(const Grid3& cube, std::size_t target, Upsample method) {
    const Dims d = cube.dims();
    if (d.x > target || d.y > target || d.z > target)
        throw ContractError("upsample_lr: cube " + io::to_string(d) + " larger than target " + std::to_string(target));
    return interp::resample_to(cube, {target, target, target},
                               method == Upsample::nearest ? interp::Kernel::nearest : interp::Kernel::trilinear);
}

Grid3 center_crop(const Grid3& cube, std::size_t out) {
    const Dims d = cube.dims();
    if (d.x < out || d.y < out || d.z < out)
        throw ContractError("center_crop: cube " + io::to_string(d) + " smaller than " + std::to_string(out));
    return extract_cube(cube, {(d.x - out) / 2, (d.y - out) / 2, (d.z - out) / 2}, out);
}

NormStats compute_norm_stats(const Grid3& grid) {
    const auto& v = grid.values();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    if (!(var > 0.0) || !std::isfinite(var)) throw ContractError("norm stats: field has zero or non-finite variance");
    return {mean, std::sqrt(var)};
}

NormStats compute_norm_stats(const io::VolumeField& field, char component) {
    return compute_norm_stats(field.component(component));
}

Grid3 apply_norm(const Grid3& g, const NormStats& s) {
    if (!(s.std > 0.0)) throw ContractError("norm stats: std must be > 0");
    Grid3 out = g;
    for (double& v : out.values()) v = (v - s.mean) / s.std;
    return out;
}

Grid3 invert_norm(const Grid3& g, const NormStats& s) {
    Grid3 out = g;
    for (double& v : out.values()) v = v * s.std + s.mean;
    return out;
}

std::string field_hash(const io::VolumeField& field) { return sha256_hex(io::encode_volume(field)); }

Grid3 make_lr(const Grid3& normalized_cube, const PatchSpec& spec) {
    return upsample_lr(coarsen(normalized_cube, spec.A(), spec.prefilter()), kPatchOut, spec.upsample());
}

Dataset build_dataset(const io::VolumeField& field, const PatchSpec& spec, const NormStats& stats) {
    const Grid3& src = field.component(spec.component());
    Dataset ds{spec, stats, field_hash(field), field.dims, {}};
    const auto origins = tile_origins(field.dims, spec.q(), spec.s());
    ds.pairs.reserve(origins.size());
    for (const auto& o : origins) {
        const Grid3 cube = apply_norm(extract_cube(src, o, spec.q()), stats);
        ds.pairs.push_back({make_lr(cube, spec), center_crop(cube), o});
    }
    return ds;
}

std::string manifest_json(const Dataset& ds, const std::string& pairs_hash) {
    ordered_json j;
    j["format"] = "volsr-dataset";
    j["version"] = 1;
    j["spec"] = ordered_json::parse(ds.spec.to_json());
    j["stats"] = {{"mean", ds.stats.mean}, {"std", ds.stats.std}};
    j["source_dims"] = {ds.source_dims.x, ds.source_dims.y, ds.source_dims.z};
    j["source_sha256"] = ds.source_hash;
    j["pairs_file"] = "pairs.volsr";
    j["pairs_sha256"] = pairs_hash;
    j["count"] = ds.pairs.size();
    auto origins = ordered_json::array();
    for (const auto& p : ds.pairs) origins.push_back({p.origin.x, p.origin.y, p.origin.z});
    j["origins"] = origins;
    return j.dump(1) + "\n";
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    ByteWriter w;
    for (const auto& p : ds.pairs) {
        io::encode_volume(io::VolumeField::scalar(p.lr, ds.spec.component()), w);
        io::encode_volume(io::VolumeField::scalar(p.hr, ds.spec.component()), w);
    }
    const auto hash = sha256_hex(w.bytes());
    atomic_write(dir / "pairs.volsr", w.bytes());
    atomic_write(dir / "manifest.json", manifest_json(ds, hash));
}

Dataset load_dataset(const std::filesystem::path& dir) {
    json m;
    try {
        m = json::parse(read_text(dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw FormatError((dir / "manifest.json").string() + ": " + e.what());
    }
    const auto bytes = read_bytes(dir / m.value("pairs_file", std::string("pairs.volsr")));
    try {
        if (sha256_hex(bytes) != m.at("pairs_sha256").get<std::string>())
            throw ManifestMismatch("dataset pairs file does not match its manifest hash");
        Dataset ds{PatchSpec::from_json(m.at("spec").dump()),
                   {m.at("stats").at("mean").get<double>(), m.at("stats").at("std").get<double>()},
                   m.at("source_sha256").get<std::string>(),
                   {m.at("source_dims").at(0).get<std::size_t>(), m.at("source_dims").at(1).get<std::size_t>(),
                    m.at("source_dims").at(2).get<std::size_t>()},
                   {}};
        const auto& origins = m.at("origins");
        ByteReader in(bytes);
        for (const auto& o : origins) {
            auto lr = io::decode_volume(in);
            auto hr = io::decode_volume(in);
            if (lr.dims != Dims{16, 16, 16} || hr.dims != Dims{16, 16, 16})
                throw ManifestMismatch("dataset pair is not 16^3");
            ds.pairs.push_back({std::move(lr.data[0]), std::move(hr.data[0]),
                                {o.at(0).get<std::size_t>(), o.at(1).get<std::size_t>(), o.at(2).get<std::size_t>()}});
        }
        if (in.remaining() != 0 || ds.pairs.size() != m.at("count").get<std::size_t>())
            throw ManifestMismatch("dataset pair count disagrees with manifest");
        return ds;
    } catch (const json::exception& e) {
        throw FormatError((dir / "manifest.json").string() + ": " + e.what());
    }
}

std::string manifest_hash(const std::filesystem::path& dir) { return sha256_file(dir / "manifest.json"); }

} // namespace volsr::patch
