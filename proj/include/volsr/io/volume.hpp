#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace volsr::io {

struct Dims {
    std::size_t x = 1;
    std::size_t y = 1;
    std::size_t z = 1;

    std::size_t voxels() const { return x * y * z; }
    std::size_t operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
    friend bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(const Dims& d);

/// Scalar grid, x-fastest: index = i + nx * (j + ny * k).
class Grid3 {
public:
    Grid3() = default;
    explicit Grid3(Dims dims, double fill = 0.0);
    Grid3(Dims dims, std::vector<double> values);

    const Dims& dims() const { return dims_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) { return values_[i + dims_.x * (j + dims_.y * k)]; }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[i + dims_.x * (j + dims_.y * k)];
    }
    double& operator[](std::size_t idx) { return values_[idx]; }
    double operator[](std::size_t idx) const { return values_[idx]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool all_finite() const;
    friend bool operator==(const Grid3&, const Grid3&) = default;

private:
    Dims dims_;
    std::vector<double> values_;
};

enum class DType : std::uint32_t { f32 = 1, f64 = 2 };

std::string to_string(DType t);
DType parse_dtype(const std::string& text);

/// 3-D scalar or multi-component field. Values are held as double; `dtype`
/// is the on-disk precision (f32 fields are kept rounded to float).
struct VolumeField {
    Dims dims;
    std::string components;  ///< one label per component, e.g. "u" or "uvw"; "s" = generic scalar
    std::array<double, 3> domain{1.0, 1.0, 1.0};
    std::int64_t time_tag = 0;
    DType dtype = DType::f64;
    std::vector<Grid3> data;

    static VolumeField scalar(Grid3 grid, char label = 's', std::array<double, 3> domain = {1.0, 1.0, 1.0},
                              DType dtype = DType::f64);

    std::size_t component_count() const { return components.size(); }
    /// Index of `label`; throws ContractError when absent.
    std::size_t component_index(char label) const;
    const Grid3& component(char label) const { return data[component_index(label)]; }
    Grid3& component(char label) { return data[component_index(label)]; }

    /// Rounds values to the declared dtype.
    void quantize();
    /// Throws ContractError if any invariant is broken.
    void validate() const;

    friend bool operator==(const VolumeField&, const VolumeField&) = default;
};

struct ComponentStats {
    double mean = 0.0;
    double std = 1.0;
    friend bool operator==(const ComponentStats&, const ComponentStats&) = default;
};

/// Text sidecar mirroring the binary header.
struct FieldMeta {
    Dims dims;
    std::string components;
    std::array<double, 3> domain{1.0, 1.0, 1.0};
    std::int64_t time_tag = 0;
    DType dtype = DType::f64;
    std::string endianness = "little";
    std::optional<std::vector<ComponentStats>> normalization;

    static FieldMeta of(const VolumeField& f);
    std::string to_json() const;
    static FieldMeta from_json(const std::string& text);
    friend bool operator==(const FieldMeta&, const FieldMeta&) = default;
};

} // namespace volsr::io
