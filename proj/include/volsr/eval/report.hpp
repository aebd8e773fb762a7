#pragma once

#include "volsr/eval/spectral.hpp"
#include "volsr/io/volume.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace volsr::eval {

/// Plane selection, e.g. "z=mid" or "y=12".
struct PlaneSpec {
    io::Axis axis = io::Axis::z;
    std::optional<std::size_t> index;  ///< empty = middle (extent / 2)
    char component = 'u';

    std::size_t resolve(io::Dims dims) const;
    std::string to_string() const;
    static PlaneSpec parse(const std::string& text, char component = 'u');
};

struct ReportRow {
    std::string method;
    double min = 0.0;
    double max = 0.0;
    double max_err = 0.0;
    double avg_err = 0.0;
    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct Panel {
    std::string method;
    Plane2D field;
    Plane2D error;  ///< |method - truth|
    Plane2D amplitude;
    Plane2D phase;
};

struct EvalReport {
    PlaneSpec plane;
    std::size_t plane_index = 0;
    std::vector<ReportRow> field_rows;     ///< truth, coarse, then one per method
    std::vector<ReportRow> spectrum_rows;  ///< same order, on the amplitude maps
    std::vector<Panel> panels;
};

using NamedField = std::pair<std::string, io::VolumeField>;

/// All fields must share dims and carry the plane's component. `coarse` is
/// the coarse field already brought onto the fine grid.
EvalReport eval_report(const io::VolumeField& truth, const io::VolumeField& coarse,
                       const std::vector<NamedField>& predictions, const PlaneSpec& plane);

/// '#' comment line, header "method,min,max,max_err,avg_err", one row per line, LF endings.
/// Numbers use the shortest representation that reads back to the same double.
std::string to_csv(const std::vector<ReportRow>& rows, const std::string& comment);
/// Throws FormatError on a malformed table.
std::vector<ReportRow> parse_csv(const std::string& text);

/// Writes field.csv, spectrum.csv and per-method PGM panels
/// (<method>_field, _error, _amplitude, _phase) into `dir`.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

} // namespace volsr::eval
