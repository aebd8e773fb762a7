#include "volsr/eval/report.hpp"

#include "volsr/util/errors.hpp"
#include "volsr/util/files.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace volsr::eval {

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_number(const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw FormatError("csv: bad number '" + s + "'");
    return v;
}

ReportRow row_for(const std::string& name, const Plane2D& p, const Plane2D& truth) {
    const auto [lo, hi] = std::minmax_element(p.values.begin(), p.values.end());
    const ErrorStats e = field_error(p, truth);
    return {name, *lo, *hi, e.max_abs, e.mean_abs};
}

Plane2D abs_diff(const Plane2D& a, const Plane2D& b) {
    Plane2D d = a;
    for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = std::abs(a.values[i] - b.values[i]);
    return d;
}

} // namespace

std::size_t PlaneSpec::resolve(io::Dims dims) const {
    const std::size_t extent = dims[static_cast<std::size_t>(axis)];
    const std::size_t i = index.value_or(extent / 2);
    if (i >= extent)
        throw ContractError("plane " + to_string() + " outside extent " + std::to_string(extent));
    return i;
}

std::string PlaneSpec::to_string() const {
    return std::string(1, io::axis_label(axis)) + "=" + (index ? std::to_string(*index) : std::string("mid"));
}

PlaneSpec PlaneSpec::parse(const std::string& text, char component) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("plane spec '" + text + "' must look like z=mid or y=12");
    PlaneSpec p;
    p.axis = io::parse_axis(text.substr(0, eq));
    p.component = component;
    const std::string v = text.substr(eq + 1);
    if (v != "mid") {
        std::size_t i = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), i);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size())
            throw ConfigError("plane spec '" + text + "': index must be an integer or 'mid'");
        p.index = i;
    }
    return p;
}

EvalReport eval_report(const io::VolumeField& truth, const io::VolumeField& coarse,
                       const std::vector<NamedField>& predictions, const PlaneSpec& plane) {
    auto check = [&](const std::string& name, const io::VolumeField& f) {
        if (f.dims != truth.dims)
            throw ContractError("eval: field '" + name + "' has dims " + io::to_string(f.dims) + ", truth has " +
                                io::to_string(truth.dims));
    };
    check("coarse", coarse);
    for (const auto& [name, f] : predictions) {
        check(name, f);
        if (name == "truth" || name == "coarse") throw ConfigError("eval: method name '" + name + "' is reserved");
    }

    EvalReport rep;
    rep.plane = plane;
    rep.plane_index = plane.resolve(truth.dims);
    const Plane2D tp = io::extract_plane(truth, plane.axis, rep.plane_index, plane.component);
    const Spectrum2D ts = fft2d(tp);
    const Plane2D ta = amplitude_map(ts);

    auto add = [&](const std::string& name, const io::VolumeField& f) {
        const Plane2D p = io::extract_plane(f, plane.axis, rep.plane_index, plane.component);
        const Spectrum2D s = fft2d(p);
        Panel panel{name, p, abs_diff(p, tp), amplitude_map(s), phase_map(s)};
        rep.field_rows.push_back(row_for(name, p, tp));
        rep.spectrum_rows.push_back(row_for(name, panel.amplitude, ta));
        rep.panels.push_back(std::move(panel));
    };
    add("truth", truth);
    add("coarse", coarse);
    for (const auto& [name, f] : predictions) add(name, f);
    return rep;
}

std::string to_csv(const std::vector<ReportRow>& rows, const std::string& comment) {
    std::string out = "# " + comment + "\nmethod,min,max,max_err,avg_err\n";
    for (const auto& r : rows) {
        if (r.method.find_first_of(",\n\"") != std::string::npos)
            throw ConfigError("csv: method name '" + r.method + "' contains a separator");
        out += r.method + "," + fmt(r.min) + "," + fmt(r.max) + "," + fmt(r.max_err) + "," + fmt(r.avg_err) + "\n";
    }
    return out;
}

std::vector<ReportRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<ReportRow> rows;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "method,min,max,max_err,avg_err") throw FormatError("csv: unexpected header '" + line + "'");
            header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
            cells.push_back(line.substr(start, pos - start));
        cells.push_back(line.substr(start));
        if (cells.size() != 5) throw FormatError("csv: row '" + line + "' does not have 5 cells");
        rows.push_back({cells[0], parse_number(cells[1]), parse_number(cells[2]), parse_number(cells[3]),
                        parse_number(cells[4])});
    }
    if (!header) throw FormatError("csv: missing header");
    return rows;
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string where = "plane " + report.plane.to_string() + " (index " + std::to_string(report.plane_index) +
                              "), component " + std::string(1, report.plane.component);
    atomic_write(dir / "field.csv", to_csv(report.field_rows, "field values on " + where));
    atomic_write(dir / "spectrum.csv",
                 to_csv(report.spectrum_rows, "amplitude = ln(|F| + 1e-20), natural log, on " + where));
    for (const auto& p : report.panels) {
        io::export_pgm(p.field, dir / (p.method + "_field.pgm"));
        if (p.method != "truth") io::export_pgm(p.error, dir / (p.method + "_error.pgm"));
        io::export_pgm(p.amplitude, dir / (p.method + "_amplitude.pgm"));
        io::export_pgm(p.phase, dir / (p.method + "_phase.pgm"));
    }
}

} // namespace volsr::eval
