#include "volsr/io/plane.hpp"

#include "volsr/util/errors.hpp"
#include "volsr/util/files.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cctype>

namespace volsr::io {

char axis_label(Axis a) { return "xyz"[static_cast<int>(a)]; }

Axis parse_axis(const std::string& text) {
    if (text == "x") return Axis::x;
    if (text == "y") return Axis::y;
    if (text == "z") return Axis::z;
    throw ConfigError("unknown axis: " + text);
}

Plane2D extract_plane(const Grid3& grid, Axis axis, std::size_t index) {
    const Dims& d = grid.dims();
    const int a = static_cast<int>(axis);
    if (index >= d[a])
        throw ContractError(std::string("plane index ") + std::to_string(index) + " out of range for axis " +
                            axis_label(axis) + " of extent " + std::to_string(d[a]));
    const int a0 = a == 0 ? 1 : 0;
    const int a1 = a == 2 ? 1 : 2;
    Plane2D p;
    p.n0 = d[a0];
    p.n1 = d[a1];
    p.axis0 = "xyz"[a0];
    p.axis1 = "xyz"[a1];
    p.values.resize(p.n0 * p.n1);
    std::size_t ijk[3];
    ijk[a] = index;
    for (std::size_t i0 = 0; i0 < p.n0; ++i0)
        for (std::size_t i1 = 0; i1 < p.n1; ++i1) {
            ijk[a0] = i0;
            ijk[a1] = i1;
            p.at(i0, i1) = grid(ijk[0], ijk[1], ijk[2]);
        }
    return p;
}

Plane2D extract_plane(const VolumeField& field, Axis axis, std::size_t index, char component) {
    return extract_plane(field.component(component), axis, index);
}

std::uint8_t pgm_level(double v, const PgmScale& scale) {
    if (!(scale.max > scale.min)) return 128;
    const double t = (v - scale.min) / (scale.max - scale.min);
    return static_cast<std::uint8_t>(std::clamp(std::lround(t * 255.0), 0L, 255L));
}

double pgm_value(std::uint8_t level, const PgmScale& scale) {
    if (!(scale.max > scale.min)) return scale.min;
    return scale.min + (scale.max - scale.min) * static_cast<double>(level) / 255.0;
}

std::vector<std::uint8_t> encode_pgm(const Plane2D& plane, PgmScale& scale) {
    if (plane.values.empty()) throw ContractError("cannot export an empty plane");
    for (double v : plane.values)
        if (!std::isfinite(v)) throw NumericError("cannot export a plane with non-finite values");
    const auto [lo, hi] = std::minmax_element(plane.values.begin(), plane.values.end());
    scale = {*lo, *hi};
    const std::string header = "P5\n" + std::to_string(plane.n1) + " " + std::to_string(plane.n0) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + plane.values.size());
    for (double v : plane.values) out.push_back(pgm_level(v, scale));
    return out;
}

PgmScale export_pgm(const Plane2D& plane, const std::filesystem::path& path) {
    PgmScale scale;
    const auto bytes = encode_pgm(plane, scale);
    atomic_write(path, bytes);
    nlohmann::ordered_json j;
    j["min"] = scale.min;
    j["max"] = scale.max;
    j["rows"] = plane.n0;
    j["cols"] = plane.n1;
    j["row_axis"] = std::string(1, plane.axis0);
    j["col_axis"] = std::string(1, plane.axis1);
    auto side = path;
    side += ".json";
    atomic_write(side, j.dump(2) + "\n");
    return scale;
}

PgmImage read_pgm(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    // header: "P5" whitespace width whitespace height whitespace maxval single-whitespace
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
        return t;
    };
    if (token() != "P5") throw FormatError(path.string() + ": not a binary PGM");
    PgmImage img;
    try {
        img.width = std::stoul(token());
        img.height = std::stoul(token());
        if (std::stoul(token()) != 255) throw FormatError(path.string() + ": only maxval 255 is supported");
    } catch (const std::logic_error&) {
        throw FormatError(path.string() + ": malformed PGM header");
    }
    ++pos;
    if (bytes.size() - std::min(pos, bytes.size()) != img.width * img.height)
        throw FormatError(path.string() + ": PGM pixel count mismatch");
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
    return img;
}

PgmScale read_pgm_scale(const std::filesystem::path& path) {
    auto side = path;
    side += ".json";
    try {
        const auto j = nlohmann::json::parse(read_text(side));
        return {j.at("min").get<double>(), j.at("max").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(side.string() + ": " + e.what());
    }
}

} // namespace volsr::io
