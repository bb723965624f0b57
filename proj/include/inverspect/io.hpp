#pragma once

// File formats: spectra / interferogram CSV, JSON instrument profiles, JSON
// serialisation of the core types, and the grid-spec mini-language.
//
// CSV layout (UTF-8, '.' decimal point, no thousands separators):
//   wavenumber_um_inv,s0,s1,...      or      opd_um,i0,i1,...
//   <axis>,<v0>,<v1>,...
// Values are written with 17 significant digits so a save/load cycle is
// lossless. A column header of the form "name@1.25" attaches a nominal
// wavenumber (um^-1) to that column.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "core.hpp"
#include "forward.hpp"
#include "metrics.hpp"

namespace inverspect {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline constexpr const char* kWavenumberHeader = "wavenumber_um_inv";
inline constexpr const char* kOpdHeader = "opd_um";

namespace detail {

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view s, const std::string& where)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError(where + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

inline bool parse_count(std::string_view s, std::size_t& out)
{
    s = trim(s);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

struct Table {
    std::string axis_name;
    std::vector<double> axis;
    std::vector<ColumnLabel> labels;
    Matrix values;
};

inline ColumnLabel parse_label(std::string_view h, const std::string& where)
{
    const auto at = h.find('@');
    if (at == std::string_view::npos) return {std::string(h), std::nullopt};
    return {std::string(trim(h.substr(0, at))), parse_double(h.substr(at + 1), where)};
}

inline Table read_table(std::istream& in, const std::string& expected_axis,
                        const std::string& source)
{
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(source + ": file is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split(line, ',');
    Table t;
    t.axis_name = std::string(header[0]);
    if (t.axis_name != expected_axis)
        throw ConfigError(source + ": first column must be '" + expected_axis + "', got '" +
                          t.axis_name + "' (only um-based units are supported)");
    if (header.size() < 2) throw ConfigError(source + ": no data columns (M = 0)");
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (header[j].empty()) throw ConfigError(source + ": empty column name in header");
        t.labels.push_back(parse_label(header[j], source + " header"));
    }
    const std::size_t m = header.size() - 1;

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        const std::string where = source + ":" + std::to_string(lineno);
        if (cells.size() != m + 1)
            throw ConfigError(where + ": expected " + std::to_string(m + 1) + " fields, got " +
                              std::to_string(cells.size()));
        std::vector<double> row(m + 1);
        for (std::size_t j = 0; j <= m; ++j) row[j] = parse_double(cells[j], where);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError(source + ": no data rows");
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        t.axis.push_back(rows[i][0]);
        if (i > 0 && !(t.axis[i] > t.axis[i - 1]))
            throw ConfigError(source + ": axis column must be strictly increasing (row " +
                              std::to_string(i + 2) + ")");
        for (std::size_t j = 0; j < m; ++j)
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j + 1];
    }
    return t;
}

inline void write_table(std::ostream& out, const char* axis_name,
                        const std::vector<double>& axis, const Matrix& values,
                        const std::vector<ColumnLabel>& labels)
{
    out << axis_name;
    for (const auto& l : labels) {
        out << ',' << l.name;
        if (l.nominal_wavenumber) out << '@' << format_double(*l.nominal_wavenumber);
    }
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        out << format_double(axis[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << format_double(values(i, j));
        out << '\n';
    }
}

inline std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_spectra_csv(std::ostream& out, const SpectrumSet& x)
{
    detail::write_table(out, kWavenumberHeader, x.grid().samples(), x.values(), x.labels());
}

inline SpectrumSet read_spectra_csv(std::istream& in, const std::string& source = "<stream>")
{
    auto t = detail::read_table(in, kWavenumberHeader, source);
    return SpectrumSet(WavenumberGrid::from_samples(std::move(t.axis)), std::move(t.values),
                       std::move(t.labels));
}

inline void write_interferograms_csv(std::ostream& out, const InterferogramSet& y)
{
    detail::write_table(out, kOpdHeader, y.schedule().samples(), y.values(), y.labels());
}

inline InterferogramSet read_interferograms_csv(std::istream& in,
                                                const std::string& source = "<stream>")
{
    auto t = detail::read_table(in, kOpdHeader, source);
    return InterferogramSet(OpdSchedule::from_samples(std::move(t.axis)), std::move(t.values),
                            std::move(t.labels));
}

inline void save_spectra_csv(const std::filesystem::path& path, const SpectrumSet& x)
{
    auto out = detail::open_out(path);
    write_spectra_csv(out, x);
}

inline SpectrumSet load_spectra_csv(const std::filesystem::path& path)
{
    auto in = detail::open_in(path);
    return read_spectra_csv(in, path.string());
}

inline void save_interferograms_csv(const std::filesystem::path& path, const InterferogramSet& y)
{
    auto out = detail::open_out(path);
    write_interferograms_csv(out, y);
}

inline InterferogramSet load_interferograms_csv(const std::filesystem::path& path)
{
    auto in = detail::open_in(path);
    return read_interferograms_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// JSON serialisation of core types
// ---------------------------------------------------------------------------

namespace detail {

inline Json matrix_to_json(const Matrix& m)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& what)
{
    if (!j.is_array()) throw ConfigError(what + " must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError(what + " has ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

/// Typed field access with a readable error naming the key.
template <class T>
T field(const Json& j, const char* key, const std::string& ctx)
{
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(ctx + ": missing required field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(ctx + ": field '" + key + "' has the wrong type");
    }
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> allowed,
                           const std::string& ctx)
{
    if (!j.is_object()) throw ConfigError(ctx + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(ctx + ": unknown field '" + key + "'");
    }
}

} // namespace detail

inline Json to_json(const WavenumberGrid& g)
{
    Json j{{"samples", g.samples()}, {"min", g.min()}, {"max", g.max()}};
    j["step"] = g.step() ? Json(*g.step()) : Json(nullptr);
    return j;
}

inline WavenumberGrid grid_from_json(const Json& j)
{
    std::optional<double> step;
    if (j.contains("step") && !j["step"].is_null()) step = j["step"].get<double>();
    return WavenumberGrid(detail::field<std::vector<double>>(j, "samples", "grid"),
                          detail::field<double>(j, "min", "grid"),
                          detail::field<double>(j, "max", "grid"), step);
}

inline Json to_json(const OpdSchedule& s)
{
    Json j{{"samples", s.samples()}};
    j["step"] = s.step() ? Json(*s.step()) : Json(nullptr);
    return j;
}

inline OpdSchedule schedule_from_json(const Json& j)
{
    std::optional<double> step;
    if (j.contains("step") && !j["step"].is_null()) step = j["step"].get<double>();
    return OpdSchedule(detail::field<std::vector<double>>(j, "samples", "schedule"), step);
}

inline Json to_json(const OpticalCurve& c)
{
    const auto& r = c.representation();
    if (const auto* k = std::get_if<OpticalCurve::Constant>(&r)) return Json{{"constant", k->value}};
    if (const auto* p = std::get_if<OpticalCurve::Polynomial>(&r))
        return Json{{"polynomial", p->coefficients}, {"range", {c.range_min(), c.range_max()}}};
    const auto& t = std::get<OpticalCurve::Tabulated>(r);
    return Json{{"tabulated", {{"sigma", t.sigma}, {"value", t.value}}}};
}

inline OpticalCurve curve_from_json(const Json& j, const std::string& ctx)
{
    if (j.is_number()) return OpticalCurve::constant(j.get<double>());
    if (!j.is_object()) throw ConfigError(ctx + " must be a number or an object");
    if (j.contains("constant")) {
        detail::reject_unknown(j, {"constant"}, ctx);
        return OpticalCurve::constant(detail::field<double>(j, "constant", ctx));
    }
    if (j.contains("polynomial")) {
        detail::reject_unknown(j, {"polynomial", "range"}, ctx);
        const auto range = detail::field<std::vector<double>>(j, "range", ctx);
        if (range.size() != 2) throw ConfigError(ctx + ": range must be [min, max]");
        return OpticalCurve::polynomial(detail::field<std::vector<double>>(j, "polynomial", ctx),
                                        range[0], range[1]);
    }
    if (j.contains("tabulated")) {
        detail::reject_unknown(j, {"tabulated"}, ctx);
        const auto& t = j["tabulated"];
        return OpticalCurve::tabulated(detail::field<std::vector<double>>(t, "sigma", ctx),
                                       detail::field<std::vector<double>>(t, "value", ctx));
    }
    throw ConfigError(ctx + ": expected one of constant, polynomial, tabulated");
}

inline Json to_json(const Geometry& g)
{
    return Json{{"refractive_index", g.refractive_index},
                {"incidence_angle_rad", g.incidence_angle_rad},
                {"thickness_step_um", g.thickness_step_um},
                {"thicknesses_um", g.thicknesses_um}};
}

inline Json to_json(const InstrumentProfile& p)
{
    Json j{{"regime", to_string(p.regime())}, {"transmittance", to_json(p.transmittance())}};
    if (p.reflectivity()) j["reflectivity"] = to_json(*p.reflectivity());
    j["opds"] = to_json(p.opds());
    if (p.geometry()) j["geometry"] = to_json(*p.geometry());
    return j;
}

inline Regime regime_from_string(const std::string& s)
{
    if (s == "tbi" || s == "michelson") return Regime::tbi;
    if (s == "mbi" || s == "fabry-perot") return Regime::mbi;
    throw ConfigError("unknown regime '" + s + "' (expected tbi or mbi)");
}

/// Profile document:
/// {
///   "regime": "tbi" | "mbi",
///   "transmittance": 1.0 | {"constant": v} | {"polynomial": [c0..c5], "range": [lo, hi]}
///                    | {"tabulated": {"sigma": [...], "value": [...]}},
///   "reflectivity": same forms (MBI only),
///   "opds": {"start": 0, "step": 0.175, "count": 319} | {"samples": [...]},
///   "geometry": {"refractive_index": n, "incidence_angle_rad": theta,
///                "thicknesses_um": [...]}  or  {..., "first_thickness_um": d0,
///                "thickness_step_um": dd, "count": L}            (optional),
///   "spectral_grid": "1:2.5:101" | "dct" | "1:2.5:nyquist"     (optional)
/// }
/// "opds" may be omitted when the geometry defines the thicknesses.
inline InstrumentProfile profile_from_json(const Json& j)
{
    const std::string ctx = "instrument profile";
    detail::reject_unknown(j, {"regime", "transmittance", "reflectivity", "opds", "geometry",
                               "spectral_grid", "name", "description"},
                           ctx);
    const Regime regime = regime_from_string(detail::field<std::string>(j, "regime", ctx));
    if (!j.contains("transmittance")) throw ConfigError(ctx + ": missing 'transmittance'");
    auto t = curve_from_json(j["transmittance"], "transmittance");
    std::optional<OpticalCurve> r;
    if (j.contains("reflectivity")) r = curve_from_json(j["reflectivity"], "reflectivity");
    if (regime == Regime::mbi && !r) throw ConfigError(ctx + ": MBI needs 'reflectivity'");

    std::optional<Geometry> geometry;
    if (j.contains("geometry")) {
        const auto& g = j["geometry"];
        const std::string gctx = "geometry";
        detail::reject_unknown(g, {"refractive_index", "incidence_angle_rad", "thicknesses_um",
                                   "first_thickness_um", "thickness_step_um", "count"},
                               gctx);
        Geometry geo;
        geo.refractive_index = g.value("refractive_index", 1.0);
        geo.incidence_angle_rad = g.value("incidence_angle_rad", 0.0);
        if (g.contains("thicknesses_um")) {
            geo.thicknesses_um = detail::field<std::vector<double>>(g, "thicknesses_um", gctx);
            geo.thickness_step_um = g.value("thickness_step_um", 0.0);
        } else {
            const auto d0 = detail::field<double>(g, "first_thickness_um", gctx);
            const auto dd = detail::field<double>(g, "thickness_step_um", gctx);
            const auto n = detail::field<std::size_t>(g, "count", gctx);
            detail::require(n >= 1 && dd > 0.0, gctx + ": need count >= 1 and a positive step");
            geo.thickness_step_um = dd;
            for (std::size_t l = 0; l < n; ++l)
                geo.thicknesses_um.push_back(d0 + static_cast<double>(l) * dd);
        }
        geometry = std::move(geo);
    }

    std::optional<OpdSchedule> opds;
    if (j.contains("opds")) {
        const auto& o = j["opds"];
        if (o.contains("samples")) {
            detail::reject_unknown(o, {"samples", "step"}, "opds");
            if (o.contains("step") && !o["step"].is_null())
                opds = schedule_from_json(o);
            else
                opds = OpdSchedule::from_samples(
                    detail::field<std::vector<double>>(o, "samples", "opds"));
        } else {
            detail::reject_unknown(o, {"start", "step", "count"}, "opds");
            opds = OpdSchedule::regular(o.value("start", 0.0),
                                        detail::field<double>(o, "step", "opds"),
                                        detail::field<std::size_t>(o, "count", "opds"));
        }
    } else if (geometry) {
        std::vector<double> s;
        for (double d : geometry->thicknesses_um) s.push_back(geometry->opd_of(d));
        opds = OpdSchedule::from_samples(std::move(s));
    } else {
        throw ConfigError(ctx + ": missing 'opds' (or a geometry to derive them from)");
    }
    return InstrumentProfile(regime, std::move(t), std::move(r), std::move(*opds),
                             std::move(geometry));
}

namespace detail {

inline Json labels_to_json(const std::vector<ColumnLabel>& labels)
{
    Json out = Json::array();
    for (const auto& l : labels)
        out.push_back(l.nominal_wavenumber
                          ? Json{{"name", l.name}, {"nominal_wavenumber", *l.nominal_wavenumber}}
                          : Json{{"name", l.name}});
    return out;
}

} // namespace detail

inline Json to_json(const SpectrumSet& x)
{
    return Json{{"grid", to_json(x.grid())},
                {"values", detail::matrix_to_json(x.values())},
                {"labels", detail::labels_to_json(x.labels())}};
}

namespace detail {

inline std::vector<ColumnLabel> labels_from_json(const Json& j)
{
    std::vector<ColumnLabel> out;
    for (const auto& l : j) {
        ColumnLabel c{field<std::string>(l, "name", "label"), std::nullopt};
        if (l.contains("nominal_wavenumber")) c.nominal_wavenumber = l["nominal_wavenumber"].get<double>();
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace detail

inline SpectrumSet spectra_from_json(const Json& j)
{
    return SpectrumSet(grid_from_json(j.at("grid")), detail::matrix_from_json(j.at("values"), "values"),
                       detail::labels_from_json(j.at("labels")));
}

inline Json to_json(const InterferogramSet& y)
{
    return Json{{"schedule", to_json(y.schedule())},
                {"values", detail::matrix_to_json(y.values())},
                {"labels", detail::labels_to_json(y.labels())}};
}

inline InterferogramSet interferograms_from_json(const Json& j)
{
    return InterferogramSet(schedule_from_json(j.at("schedule")),
                            detail::matrix_from_json(j.at("values"), "values"),
                            detail::labels_from_json(j.at("labels")));
}

inline Json to_json(const TransferMatrix& a)
{
    return Json{{"provenance", to_string(a.provenance())},
                {"series_terms", a.series_terms()},
                {"schedule", to_json(a.schedule())},
                {"grid", to_json(a.grid())},
                {"entries", detail::matrix_to_json(a.entries())}};
}

inline TransferMatrix transfer_matrix_from_json(const Json& j)
{
    return TransferMatrix(detail::matrix_from_json(j.at("entries"), "entries"),
                          schedule_from_json(j.at("schedule")), grid_from_json(j.at("grid")),
                          provenance_from_string(j.at("provenance").get<std::string>()),
                          j.value("series_terms", 0));
}

inline OrderedJson to_json(const SamplingReport& r)
{
    auto num = [](double v) { return std::isfinite(v) ? OrderedJson(v) : OrderedJson(nullptr); };
    OrderedJson j;
    j["harmonic_order"] = r.harmonic_order;
    j["opd_applicable"] = r.opd_applicable;
    j["wavenumber_applicable"] = r.wavenumber_applicable;
    j["opd_condition_ok"] = r.opd_condition_ok;
    j["harmonic_opd_condition_ok"] = r.harmonic_opd_condition_ok;
    j["wavenumber_condition_ok"] = r.wavenumber_condition_ok;
    j["overlap_condition_ok"] = r.overlap_condition_ok;
    j["opd_step_um"] = num(r.opd_step);
    j["wavenumber_step_um_inv"] = num(r.wavenumber_step);
    j["sigma_nyquist_um_inv"] = num(r.sigma_nyquist);
    j["max_opd_step_um"] = num(r.max_opd_step);
    j["max_opd_step_harmonics_um"] = num(r.max_opd_step_harmonics);
    j["max_wavenumber_step_um_inv"] = num(r.max_wavenumber_step);
    j["alpha"] = r.alpha;
    return j;
}

inline OrderedJson to_json(const SvdAnalysis& s)
{
    OrderedJson j;
    j["rank"] = s.rank;
    j["rank_tolerance"] = s.rank_tolerance;
    j["condition_number"] = std::isfinite(s.condition_number) ? OrderedJson(s.condition_number)
                                                              : OrderedJson("inf");
    j["rank_deficient"] = s.rank_deficient;
    j["full_condition_number"] = s.rank_deficient ? OrderedJson("inf")
                                                  : OrderedJson(s.condition_number);
    j["singular_values"] = std::vector<double>(s.singular_values.begin(), s.singular_values.end());
    return j;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline Json load_json(const std::filesystem::path& path)
{
    auto in = detail::open_in(path);
    try {
        return Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
}

inline void save_json(const std::filesystem::path& path, const OrderedJson& j)
{
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

inline InstrumentProfile load_instrument_profile(const std::filesystem::path& path)
{
    const Json j = load_json(path);
    try {
        return profile_from_json(j);
    } catch (const Json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Grid specs
// ---------------------------------------------------------------------------

/// Value-grid mini-language used for lambda grids and reflectivity sweeps:
///   "v"               single value
///   "a,b,c"           explicit list
///   "lo:hi:count"     count evenly spaced values (integer third field)
///   "lo:hi:step"      lo, lo+step, ... <= hi (third field with a decimal point)
///   "lo:hi:log"       log-spaced, 25 points per decade
///   "lo:hi:count:log" count log-spaced values
inline std::vector<double> parse_value_grid(const std::string& spec)
{
    const std::string where = "grid spec '" + spec + "'";
    if (detail::trim(spec).empty()) throw ConfigError(where + " is empty");
    if (spec.find(':') == std::string::npos) {
        std::vector<double> out;
        for (auto part : detail::split(spec, ',')) out.push_back(detail::parse_double(part, where));
        return out;
    }
    const auto f = detail::split(spec, ':');
    if (f.size() < 3 || f.size() > 4) throw ConfigError(where + " must be lo:hi:count[:log]");
    const double lo = detail::parse_double(f[0], where);
    const double hi = detail::parse_double(f[1], where);
    if (!(lo <= hi)) throw ConfigError(where + " needs lo <= hi");
    if (f.size() == 3 && f[2] == "log") {
        if (!(lo > 0.0)) throw ConfigError(where + ": log grids need lo > 0");
        return log_space(lo, hi);
    }
    std::size_t count = 0;
    const bool integral = detail::parse_count(f[2], count);
    if (f.size() == 4) {
        if (f[3] != "log") throw ConfigError(where + ": fourth field must be 'log'");
        if (!integral || count < 1) throw ConfigError(where + ": log grids need an integer count");
        if (!(lo > 0.0)) throw ConfigError(where + ": log grids need lo > 0");
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i)
            out[i] = count == 1 ? lo
                                : lo * std::pow(hi / lo, static_cast<double>(i) /
                                                             static_cast<double>(count - 1));
        if (count > 1) out.back() = hi;
        return out;
    }
    if (integral) {
        if (count < 1) throw ConfigError(where + ": count must be >= 1");
        if (count == 1) return {lo};
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i)
            out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        out.back() = hi;
        return out;
    }
    const double step = detail::parse_double(f[2], where);
    if (!(step > 0.0)) throw ConfigError(where + ": step must be positive");
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        double v = lo + static_cast<double>(i) * step;
        if (v > hi + 1e-9 * step) break;
        // Clean up accumulated binary error so 0.05:0.95:0.05 yields 0.7, not 0.7000000000000001.
        v = std::round(v * 1e12) / 1e12;
        out.push_back(v);
    }
    return out;
}

/// Wavenumber grid for a profile:
///   "dct"              DCT grids of the (regular, zero-based) OPD schedule
///   "lo:hi:count"      endpoint-inclusive regular grid
///   "lo:hi:nyquist"    regular grid fine enough for the effective harmonic order
inline WavenumberGrid parse_spectral_grid(const std::string& spec, const InstrumentProfile& profile)
{
    const std::string where = "spectral grid '" + spec + "'";
    if (spec == "dct") {
        const auto& s = profile.opds();
        if (!s.regular() || s[0] != 0.0)
            throw ConfigError(where + " needs a regular OPD schedule starting at 0");
        return make_dct_grids(s.size(), *s.step()).wavenumbers;
    }
    const auto f = detail::split(spec, ':');
    if (f.size() != 3) throw ConfigError(where + " must be dct, lo:hi:count or lo:hi:nyquist");
    const double lo = detail::parse_double(f[0], where);
    const double hi = detail::parse_double(f[1], where);
    if (f[2] == "nyquist") {
        const auto probe = make_regular_grid(lo, hi, 2);
        return make_alias_free_grid(lo, hi, profile.opds(),
                                    effective_harmonic_order(profile, probe));
    }
    std::size_t count = 0;
    if (!detail::parse_count(f[2], count)) throw ConfigError(where + ": count must be an integer");
    return make_regular_grid(lo, hi, count);
}

} // namespace inverspect
