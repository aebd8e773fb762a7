#include "volsr/io/volume.hpp"

#include "volsr/util/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace volsr::io {

std::string to_string(const Dims& d) {
    return "(" + std::to_string(d.x) + "," + std::to_string(d.y) + "," + std::to_string(d.z) + ")";
}

Grid3::Grid3(Dims dims, double fill) : dims_(dims), values_(dims.voxels(), fill) {
    if (dims.x == 0 || dims.y == 0 || dims.z == 0) throw ContractError("grid dims must be >= 1: " + to_string(dims));
}

Grid3::Grid3(Dims dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
    if (dims.x == 0 || dims.y == 0 || dims.z == 0) throw ContractError("grid dims must be >= 1: " + to_string(dims));
    if (values_.size() != dims.voxels())
        throw ContractError("grid value count " + std::to_string(values_.size()) + " != " +
                            std::to_string(dims.voxels()));
}

bool Grid3::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string to_string(DType t) { return t == DType::f32 ? "f32" : "f64"; }

DType parse_dtype(const std::string& text) {
    if (text == "f32" || text == "float32") return DType::f32;
    if (text == "f64" || text == "float64") return DType::f64;
    throw ConfigError("unknown dtype: " + text);
}

VolumeField VolumeField::scalar(Grid3 grid, char label, std::array<double, 3> domain, DType dtype) {
    VolumeField f;
    f.dims = grid.dims();
    f.components = std::string(1, label);
    f.domain = domain;
    f.dtype = dtype;
    f.data.push_back(std::move(grid));
    return f;
}

std::size_t VolumeField::component_index(char label) const {
    const auto pos = components.find(label);
    if (pos == std::string::npos)
        throw ContractError(std::string("field has no component '") + label + "' (has \"" + components + "\")");
    return pos;
}

void VolumeField::quantize() {
    if (dtype != DType::f32) return;
    for (auto& g : data)
        for (double& v : g.values()) v = static_cast<double>(static_cast<float>(v));
}

void VolumeField::validate() const {
    if (dims.x == 0 || dims.y == 0 || dims.z == 0) throw ContractError("field dims must be >= 1");
    for (double L : domain)
        if (!(L > 0.0)) throw ContractError("domain extents must be > 0");
    if (components.empty() || data.size() != components.size())
        throw ContractError("component labels do not match component data");
    for (const auto& g : data) {
        if (g.dims() != dims) throw ContractError("component grid dims disagree with field dims");
        if (!g.all_finite()) throw NumericError("field contains non-finite values");
    }
}

FieldMeta FieldMeta::of(const VolumeField& f) {
    FieldMeta m;
    m.dims = f.dims;
    m.components = f.components;
    m.domain = f.domain;
    m.time_tag = f.time_tag;
    m.dtype = f.dtype;
    return m;
}

std::string FieldMeta::to_json() const {
    nlohmann::ordered_json j;
    j["dims"] = {dims.x, dims.y, dims.z};
    j["components"] = components;
    j["domain"] = domain;
    j["time_tag"] = time_tag;
    j["dtype"] = to_string(dtype);
    j["endianness"] = endianness;
    if (normalization) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& s : *normalization) arr.push_back({{"mean", s.mean}, {"std", s.std}});
        j["normalization"] = arr;
    }
    return j.dump(2) + "\n";
}

FieldMeta FieldMeta::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        FieldMeta m;
        const auto d = j.at("dims");
        m.dims = {d.at(0).get<std::size_t>(), d.at(1).get<std::size_t>(), d.at(2).get<std::size_t>()};
        m.components = j.at("components").get<std::string>();
        m.domain = j.at("domain").get<std::array<double, 3>>();
        m.time_tag = j.at("time_tag").get<std::int64_t>();
        m.dtype = parse_dtype(j.at("dtype").get<std::string>());
        m.endianness = j.value("endianness", "little");
        if (j.contains("normalization")) {
            std::vector<ComponentStats> stats;
            for (const auto& s : j["normalization"])
                stats.push_back({s.at("mean").get<double>(), s.at("std").get<double>()});
            m.normalization = std::move(stats);
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid field metadata: ") + e.what());
    }
}

} // namespace volsr::io
