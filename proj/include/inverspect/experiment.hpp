#pragma once

// Experiment orchestration: simulate -> noise -> reconstruct over lambda
// grids -> metrics, driven by a JSON configuration.
//
// Configuration document (paths are relative to the config file):
// {
//   "name": "noise-20db",
//   "instrument": "baseline.json" | { inline profile },
//   "spectral_grid": "dct" | "lo:hi:count" | "lo:hi:nyquist",       (default "dct")
//   "spectra": {"surrogate": "smooth-random", "count": 16, "seed": 1}
//            | {"file": "spectra.csv"},
//   "reflectivities": [0.2, 0.4, 0.7],            (optional; one run per value)
//   "noise": {"snr_db": [20, 15], "seed": 7, "signal_power": "variance"},  (optional)
//   "opd_jitter": {"sigma_um": 0.05, "seed": 3},  (optional)
//   "extrapolate_to_zero": false,
//   "rmse": "squared" | "sqrt",
//   "methods": [
//     {"method": "tsvd", "lambdas": "0.01:1:100"},
//     {"method": "lv-dct", "lambdas": "0.001:100:log", "iterations": 3000, "init": "scaled"}
//   ],
//   "output_dir": "out"
// }

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "forward.hpp"
#include "inversion.hpp"
#include "io.hpp"
#include "metrics.hpp"

namespace inverspect {

struct SpectraSource {
    std::optional<std::filesystem::path> file;
    SurrogateKind kind = SurrogateKind::smooth_random;
    std::optional<Eigen::Index> count; ///< defaults to K for dirac-comb, 16 otherwise
    std::uint64_t seed = 0;
};

struct JitterSpec {
    double sigma_um = 0.0;
    std::uint64_t seed = 0;
};

struct MethodSpec {
    Method method = Method::pinv;
    std::vector<double> lambdas;
    LvOptions lv;
};

enum class RmseVariant { squared, sqrt };

struct ExperimentConfig {
    explicit ExperimentConfig(InstrumentProfile p) : profile(std::move(p)) {}

    std::string name = "experiment";
    InstrumentProfile profile;
    std::string spectral_grid = "dct";
    SpectraSource spectra;
    std::vector<double> reflectivities;
    std::vector<double> snr_db;
    std::uint64_t noise_seed = 0;
    SignalPower signal_power = SignalPower::variance;
    std::optional<JitterSpec> jitter;
    bool extrapolate_to_zero = false;
    RmseVariant rmse_variant = RmseVariant::squared;
    std::vector<MethodSpec> methods;
    std::filesystem::path output_dir = "out";
    std::string hash; ///< FNV-1a 64 of the canonical config document
};

struct MethodReport {
    Method method = Method::pinv;
    GridSearchResult search;
    std::size_t iterations = 0; ///< LV only
};

struct RunReport {
    std::optional<double> reflectivity;
    std::optional<double> snr_db;
    SamplingReport sampling;
    std::vector<MethodReport> methods;
};

struct ExperimentReport {
    std::string name;
    std::string config_hash;
    std::uint64_t spectra_seed = 0;
    std::uint64_t noise_seed = 0;
    std::optional<std::uint64_t> jitter_seed;
    Eigen::Index wavenumbers = 0;
    Eigen::Index opds = 0;
    Eigen::Index spectra = 0;
    RmseVariant rmse_variant = RmseVariant::squared;
    bool mcw_applicable = false;
    std::vector<RunReport> runs;
};

namespace detail {

inline std::string fnv1a_hex(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::vector<double> lambdas_from_json(const Json& j, const std::string& ctx)
{
    if (j.is_string()) return parse_value_grid(j.get<std::string>());
    if (j.is_number()) return {j.get<double>()};
    if (j.is_array()) {
        std::vector<double> out;
        for (const auto& v : j) {
            if (!v.is_number()) throw ConfigError(ctx + ": lambda list must hold numbers");
            out.push_back(v.get<double>());
        }
        return out;
    }
    throw ConfigError(ctx + ": lambdas must be a grid spec, a number or a list");
}

inline std::vector<double> default_lambdas(Method m)
{
    switch (m) {
    case Method::idct:
    case Method::pinv: return {0.0};
    case Method::tsvd: return parse_value_grid("0.01:1:100");
    case Method::rr: return log_space(1e-3, 1e3);
    case Method::lv_id:
    case Method::lv_dct: return log_space(1e-3, 1e2);
    }
    return {0.0};
}

inline std::vector<double> number_list(const Json& j, const std::string& ctx)
{
    if (j.is_number()) return {j.get<double>()};
    if (j.is_string()) return parse_value_grid(j.get<std::string>());
    if (!j.is_array()) throw ConfigError(ctx + " must be a number, a list or a grid spec");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(ctx + " must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline std::uint64_t seed_field(const Json& j, const char* key)
{
    if (!j.contains(key)) return 0;
    if (!j[key].is_number_integer() || j[key].get<long long>() < 0) throw ConfigError(std::string(key) + " must be a non-negative integer");
    return j[key].get<std::uint64_t>();
}

} // namespace detail

inline ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir)
{
    const std::string ctx = "experiment config";
    detail::reject_unknown(j, {"name", "instrument", "spectral_grid", "spectra", "reflectivities",
                               "noise", "opd_jitter", "extrapolate_to_zero", "rmse", "methods",
                               "output_dir", "description"},
                           ctx);
    if (!j.contains("instrument")) throw ConfigError(ctx + ": missing 'instrument'");
    Json profile_json;
    if (j["instrument"].is_string()) {
        const auto p = base_dir / j["instrument"].get<std::string>();
        if (!std::filesystem::exists(p))
            throw ConfigError(ctx + ": instrument file '" + p.string() + "' does not exist");
        profile_json = load_json(p);
    } else {
        profile_json = j["instrument"];
    }
    ExperimentConfig c(profile_from_json(profile_json));
    c.name = j.value("name", std::string("experiment"));
    c.spectral_grid = j.value("spectral_grid", profile_json.value("spectral_grid", std::string("dct")));

    if (!j.contains("spectra")) throw ConfigError(ctx + ": missing 'spectra'");
    const auto& s = j["spectra"];
    detail::reject_unknown(s, {"file", "surrogate", "count", "seed"}, "spectra");
    if (s.contains("file")) {
        c.spectra.file = base_dir / s["file"].get<std::string>();
        if (!std::filesystem::exists(*c.spectra.file))
            throw ConfigError(ctx + ": spectra file '" + c.spectra.file->string() +
                              "' does not exist");
    } else {
        c.spectra.kind = surrogate_from_string(detail::field<std::string>(s, "surrogate", "spectra"));
        if (s.contains("count")) {
            const auto n = detail::field<long long>(s, "count", "spectra");
            detail::require(n >= 1, "spectra: count must be >= 1");
            c.spectra.count = static_cast<Eigen::Index>(n);
        }
        c.spectra.seed = detail::seed_field(s, "seed");
    }

    if (j.contains("reflectivities"))
        c.reflectivities = detail::number_list(j["reflectivities"], "reflectivities");
    if (j.contains("noise")) {
        const auto& n = j["noise"];
        detail::reject_unknown(n, {"snr_db", "seed", "signal_power"}, "noise");
        c.snr_db = detail::number_list(n.at("snr_db"), "noise.snr_db");
        c.noise_seed = detail::seed_field(n, "seed");
        const auto power = n.value("signal_power", std::string("variance"));
        if (power == "variance") c.signal_power = SignalPower::variance;
        else if (power == "mean-square") c.signal_power = SignalPower::mean_square;
        else throw ConfigError("noise.signal_power must be variance or mean-square");
    }
    if (j.contains("opd_jitter")) {
        const auto& o = j["opd_jitter"];
        detail::reject_unknown(o, {"sigma_um", "seed"}, "opd_jitter");
        c.jitter = JitterSpec{detail::field<double>(o, "sigma_um", "opd_jitter"),
                              detail::seed_field(o, "seed")};
    }
    c.extrapolate_to_zero = j.value("extrapolate_to_zero", false);
    const auto variant = j.value("rmse", std::string("squared"));
    if (variant == "squared") c.rmse_variant = RmseVariant::squared;
    else if (variant == "sqrt") c.rmse_variant = RmseVariant::sqrt;
    else throw ConfigError("rmse must be squared or sqrt");

    if (!j.contains("methods") || !j["methods"].is_array() || j["methods"].empty())
        throw ConfigError(ctx + ": 'methods' must be a non-empty list");
    for (const auto& m : j["methods"]) {
        MethodSpec spec;
        if (m.is_string()) {
            spec.method = method_from_string(m.get<std::string>());
            spec.lambdas = detail::default_lambdas(spec.method);
        } else {
            detail::reject_unknown(m, {"method", "lambdas", "iterations", "init", "trace_stride"},
                                   "method entry");
            spec.method = method_from_string(detail::field<std::string>(m, "method", "method entry"));
            spec.lambdas = m.contains("lambdas")
                               ? detail::lambdas_from_json(m["lambdas"], to_string(spec.method))
                               : detail::default_lambdas(spec.method);
            spec.lv.iterations = m.value("iterations", spec.lv.iterations);
            spec.lv.trace_stride = m.value("trace_stride", spec.lv.trace_stride);
            if (m.contains("init")) spec.lv.init = lv_init_from_string(m["init"].get<std::string>());
        }
        if (spec.lambdas.empty())
            throw ConfigError(ctx + ": empty lambda grid for " + to_string(spec.method));
        detail::require(spec.lv.iterations >= 1, "iterations must be >= 1");
        c.methods.push_back(std::move(spec));
    }
    c.output_dir = base_dir / j.value("output_dir", std::string("out"));

    Json canonical = j;
    canonical["instrument"] = profile_json;
    c.hash = detail::fnv1a_hex(canonical.dump());
    return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path)
{
    const Json j = load_json(path);
    try {
        return experiment_from_json(j, path.parent_path());
    } catch (const Json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

namespace detail {

/// Re-raises an error with the failing stage prefixed, preserving its kind.
template <class F>
auto stage(const char* name, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("stage '") + name + "': " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(std::string("stage '") + name + "': " + e.what());
    }
}

} // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg)
{
    detail::require(!cfg.methods.empty(), "experiment has no methods");
    ExperimentReport rep;
    rep.name = cfg.name;
    rep.config_hash = cfg.hash;
    rep.spectra_seed = cfg.spectra.seed;
    rep.noise_seed = cfg.noise_seed;
    rep.rmse_variant = cfg.rmse_variant;
    if (cfg.jitter) rep.jitter_seed = cfg.jitter->seed;

    // Nominal instrument (what the reconstruction believes) and true instrument
    // (what generated the data; differs only when the OPDs are jittered).
    InstrumentProfile nominal = cfg.profile;
    if (cfg.extrapolate_to_zero)
        nominal = nominal.with_opds(extrapolate_to_zero(nominal.opds()).schedule);

    const SpectrumSet x = detail::stage("spectra", [&] {
        if (cfg.spectra.file) return load_spectra_csv(*cfg.spectra.file);
        const auto grid = parse_spectral_grid(cfg.spectral_grid, nominal);
        const Eigen::Index count = cfg.spectra.count.value_or(
            cfg.spectra.kind == SurrogateKind::dirac_comb ? static_cast<Eigen::Index>(grid.size())
                                                          : 16);
        return make_surrogate_spectra(cfg.spectra.kind, grid, count, cfg.spectra.seed);
    });
    const auto& grid = x.grid();
    rep.wavenumbers = x.rows();
    rep.spectra = x.cols();
    rep.opds = static_cast<Eigen::Index>(nominal.opds().size());

    std::vector<Eigen::Index> nominal_idx;
    rep.mcw_applicable = std::all_of(x.labels().begin(), x.labels().end(),
                                     [](const ColumnLabel& l) { return l.nominal_wavenumber.has_value(); });
    if (rep.mcw_applicable) nominal_idx = nominal_indices(x);

    std::vector<std::optional<double>> rs;
    if (cfg.reflectivities.empty()) rs.push_back(std::nullopt);
    for (double r : cfg.reflectivities) rs.push_back(r);
    std::vector<std::optional<double>> snrs;
    if (cfg.snr_db.empty()) snrs.push_back(std::nullopt);
    for (double s : cfg.snr_db) snrs.push_back(s);

    for (const auto& r : rs) {
        const InstrumentProfile nominal_r = r ? nominal.with_constant_reflectivity(*r) : nominal;
        const InstrumentProfile truth =
            cfg.jitter ? nominal_r.with_opds(jitter_schedule(nominal_r.opds(), cfg.jitter->sigma_um,
                                                             cfg.jitter->seed))
                       : nominal_r;
        const TransferMatrix a = detail::stage("build", [&] { return build_transfer_matrix(truth, grid); });
        const InterferogramSet clean = detail::stage("simulate", [&] { return simulate_interferograms(a, x); });
        const int order = effective_harmonic_order(nominal_r, grid);
        const SamplingReport sampling = check_opd_sampling(nominal_r.opds(), grid, order);
        Reconstructor rec(a);

        for (const auto& snr : snrs) {
            RunReport run;
            run.reflectivity = r;
            run.snr_db = snr;
            run.sampling = sampling;
            const InterferogramSet y = detail::stage("noise", [&] {
                return snr ? add_gaussian_noise(clean, *snr, cfg.noise_seed, cfg.signal_power) : clean;
            });
            // IDCT assumes the nominal schedule; the data keeps its values.
            const InterferogramSet y_nominal(nominal_r.opds(), y.values(), y.labels());

            for (const auto& spec : cfg.methods) {
                MethodReport mr;
                mr.method = spec.method;
                ReconstructParams params;
                params.lv = spec.lv;
                mr.search = detail::stage("reconstruct", [&] {
                    if (spec.method == Method::idct) {
                        params.idct = idct_weights(nominal_r, grid);
                        return grid_search_lambda(rec, spec.method, y_nominal, x, spec.lambdas,
                                                  params, rep.mcw_applicable ? &nominal_idx : nullptr);
                    }
                    return grid_search_lambda(rec, spec.method, y, x, spec.lambdas, params,
                                              rep.mcw_applicable ? &nominal_idx : nullptr);
                });
                if (cfg.rmse_variant == RmseVariant::sqrt) {
                    mr.search.rmse_opt = std::sqrt(mr.search.rmse_opt);
                    for (auto& e : mr.search.table)
                        if (e.rmse) e.rmse = std::sqrt(*e.rmse);
                }
                if (spec.method == Method::lv_id || spec.method == Method::lv_dct)
                    mr.iterations = static_cast<std::size_t>(spec.lv.iterations);
                run.methods.push_back(std::move(mr));
            }
            rep.runs.push_back(std::move(run));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

inline OrderedJson to_json(const ExperimentReport& rep)
{
    auto opt = [](const std::optional<double>& v) { return v ? OrderedJson(*v) : OrderedJson(nullptr); };
    OrderedJson j;
    j["name"] = rep.name;
    OrderedJson prov;
    prov["config_hash"] = rep.config_hash;
    prov["spectra_seed"] = rep.spectra_seed;
    prov["noise_seed"] = rep.noise_seed;
    prov["jitter_seed"] = rep.jitter_seed ? OrderedJson(*rep.jitter_seed) : OrderedJson(nullptr);
    j["provenance"] = prov;
    j["dimensions"] = OrderedJson{{"opds", rep.opds}, {"wavenumbers", rep.wavenumbers},
                                  {"spectra", rep.spectra}};
    j["rmse"] = rep.rmse_variant == RmseVariant::squared ? "squared-frobenius-ratio"
                                                         : "sqrt-frobenius-ratio";
    j["mcw_applicable"] = rep.mcw_applicable;
    OrderedJson runs = OrderedJson::array();
    for (const auto& run : rep.runs) {
        OrderedJson r;
        r["reflectivity"] = opt(run.reflectivity);
        r["snr_db"] = opt(run.snr_db);
        r["sampling"] = to_json(run.sampling);
        OrderedJson methods = OrderedJson::array();
        for (const auto& m : run.methods) {
            OrderedJson mj;
            mj["method"] = to_string(m.method);
            mj["lambda_opt"] = m.search.lambda_opt;
            mj["rmse"] = m.search.rmse_opt;
            mj["mcw"] = m.search.mcw_opt ? OrderedJson(*m.search.mcw_opt) : OrderedJson(nullptr);
            // Placeholder: the per-diagonal RMSE variant has no agreed definition.
            mj["diagonal_rmse"] = nullptr;
            if (m.iterations) mj["iterations"] = m.iterations;
            OrderedJson table = OrderedJson::array();
            for (const auto& e : m.search.table) {
                OrderedJson t;
                t["lambda"] = e.lambda;
                t["rmse"] = opt(e.rmse);
                if (e.mcw) t["mcw"] = *e.mcw;
                if (e.ties) t["ties"] = *e.ties;
                if (!e.error.empty()) t["error"] = e.error;
                table.push_back(std::move(t));
            }
            mj["table"] = std::move(table);
            methods.push_back(std::move(mj));
        }
        r["methods"] = std::move(methods);
        runs.push_back(std::move(r));
    }
    j["runs"] = std::move(runs);
    return j;
}

/// Long-format table: run,reflectivity,snr_db,method,lambda,rmse,mcw.
inline void write_report_csv(std::ostream& out, const ExperimentReport& rep)
{
    out << "run,reflectivity,snr_db,method,lambda,rmse,mcw\n";
    for (std::size_t i = 0; i < rep.runs.size(); ++i) {
        const auto& run = rep.runs[i];
        for (const auto& m : run.methods)
            for (const auto& e : m.search.table) {
                out << i << ','
                    << (run.reflectivity ? detail::format_double(*run.reflectivity) : "") << ','
                    << (run.snr_db ? detail::format_double(*run.snr_db) : "") << ','
                    << to_string(m.method) << ',' << detail::format_double(e.lambda) << ','
                    << (e.rmse ? detail::format_double(*e.rmse) : "") << ','
                    << (e.mcw ? std::to_string(*e.mcw) : "") << '\n';
            }
    }
}

/// Writes report.json and report.csv into dir (created if missing).
inline void save_report(const std::filesystem::path& dir, const ExperimentReport& rep)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "'");
    save_json(dir / "report.json", to_json(rep));
    auto out = detail::open_out(dir / "report.csv");
    write_report_csv(out, rep);
}

} // namespace inverspect
