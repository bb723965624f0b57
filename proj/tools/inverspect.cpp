// inverspect: simulate, analyse and invert interferometric spectrometer data.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "inverspect/inverspect.hpp"

namespace fs = std::filesystem;
using namespace inverspect;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct LoadedProfile {
    InstrumentProfile profile;
    std::string grid_spec;
};

LoadedProfile load_profile(const std::string& path)
{
    const Json j = load_json(path);
    try {
        auto p = profile_from_json(j);
        return {std::move(p), j.value("spectral_grid", std::string("dct"))};
    } catch (const Json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string fmt(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

OrderedJson diagnostics_json(const ReconstructionResult& r)
{
    OrderedJson j;
    j["method"] = to_string(r.method);
    j["lambda"] = r.lambda;
    OrderedJson cols = OrderedJson::array();
    for (std::size_t m = 0; m < r.diagnostics.size(); ++m) {
        const auto& d = r.diagnostics[m];
        OrderedJson c;
        c["column"] = r.spectra.labels()[m].name;
        c["iterations"] = d.iterations;
        c["tau"] = d.tau;
        c["eta"] = d.eta;
        c["rho"] = d.rho;
        c["final_residual"] = d.final_residual;
        c["trace_iterations"] = d.trace_iterations;
        c["objective_trace"] = d.objective_trace;
        cols.push_back(std::move(c));
    }
    j["columns"] = std::move(cols);
    return j;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string instrument, spectra, out, signal_power = "variance";
    std::optional<double> snr_db;
    std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a)
{
    const auto prof = load_profile(a.instrument);
    const auto x = load_spectra_csv(a.spectra);
    const auto mat = build_transfer_matrix(prof.profile, x.grid());
    auto y = simulate_interferograms(mat, x);
    if (a.snr_db) {
        SignalPower power = SignalPower::variance;
        if (a.signal_power == "mean-square") power = SignalPower::mean_square;
        else if (a.signal_power != "variance")
            throw ConfigError("--signal-power must be variance or mean-square");
        y = add_gaussian_noise(y, *a.snr_db, a.seed, power);
    }
    save_interferograms_csv(a.out, y);
    std::cout << "simulate: L=" << y.rows() << " K=" << x.rows() << " M=" << y.cols()
              << " SNR=" << (a.snr_db ? fmt(*a.snr_db) + " dB" : std::string("none")) << " -> "
              << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string instrument, out;
    std::optional<std::string> grid, sweep;
    double rank_tol = kDefaultRankTolerance;
};

int cmd_analyze(const AnalyzeArgs& a)
{
    const auto prof = load_profile(a.instrument);
    const auto grid = parse_spectral_grid(a.grid.value_or(prof.grid_spec), prof.profile);
    std::optional<std::vector<double>> sweep;
    if (a.sweep) sweep = parse_value_grid(*a.sweep);

    const auto mat = build_transfer_matrix(prof.profile, grid);
    const auto svd = svd_analysis(mat, a.rank_tol);
    const int order = effective_harmonic_order(prof.profile, grid);
    const auto sampling = check_opd_sampling(prof.profile.opds(), grid, order);
    const auto dct = dct_equivalence_check(mat);

    OrderedJson j;
    j["regime"] = to_string(prof.profile.regime());
    j["opds"] = mat.rows();
    j["wavenumbers"] = mat.cols();
    j["sigma_min"] = grid.samples().front();
    j["sigma_max"] = grid.samples().back();
    j["provenance"] = to_string(mat.provenance());
    j["svd"] = to_json(svd);
    j["sampling"] = to_json(sampling);
    j["rank_estimate_alpha_l"] = sampling.alpha * static_cast<double>(mat.rows());
    OrderedJson dj;
    dj["grids_compatible"] = dct.grids_compatible;
    dj["is_dct_compatible"] = dct.is_dct_compatible;
    dj["max_deviation"] = std::isfinite(dct.max_deviation) ? OrderedJson(dct.max_deviation)
                                                           : OrderedJson(nullptr);
    j["dct_equivalence"] = dj;

    std::cout << "analyze: L=" << mat.rows() << " K=" << mat.cols() << " rank=" << svd.rank
              << " c=" << fmt(svd.condition_number)
              << (svd.rank_deficient ? " (rank deficient: unregularised c = inf)" : "") << '\n';

    if (sweep) {
        const auto pts = reflectivity_sweep(prof.profile, grid, *sweep, a.rank_tol);
        OrderedJson table = OrderedJson::array();
        std::size_t best = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            table.push_back(OrderedJson{{"reflectivity", pts[i].reflectivity},
                                        {"condition_number", pts[i].condition_number},
                                        {"rank", pts[i].rank}});
            if (pts[i].condition_number < pts[best].condition_number) best = i;
        }
        j["sweep"] = std::move(table);
        j["sweep_argmin_reflectivity"] = pts[best].reflectivity;
        std::cout << "sweep: " << pts.size() << " values, minimum c=" << fmt(pts[best].condition_number)
                  << " at R=" << fmt(pts[best].reflectivity) << '\n';
    }
    save_json(a.out, j);
    return 0;
}

// ---------------------------------------------------------------------------

struct InvertArgs {
    std::string instrument, interferograms, method, out, lv_init = "adjoint";
    std::optional<std::string> grid, prior, reference;
    double lambda = 0.0;
    int iters = 1000;
};

int cmd_invert(const InvertArgs& a)
{
    const auto prof = load_profile(a.instrument);
    const auto y = load_interferograms_csv(a.interferograms);
    const auto& s = prof.profile.opds();
    if (y.schedule().size() != s.size())
        throw ConfigError("interferogram OPD count differs from the instrument schedule");
    for (std::size_t l = 0; l < s.size(); ++l)
        if (std::abs(y.schedule()[l] - s[l]) > 1e-9 * std::max(1.0, s[l]))
            throw ConfigError("interferogram OPDs differ from the instrument schedule at row " +
                              std::to_string(l));

    Method method;
    if (a.method == "lv") {
        method = prior_from_string(a.prior.value_or("identity")) == PriorKind::identity
                     ? Method::lv_id
                     : Method::lv_dct;
    } else {
        method = method_from_string(a.method);
        if (a.prior) {
            const auto p = prior_from_string(*a.prior);
            if ((method == Method::lv_id && p != PriorKind::identity) ||
                (method == Method::lv_dct && p != PriorKind::orthogonal_dct) ||
                (method != Method::lv_id && method != Method::lv_dct))
                throw ConfigError("--prior conflicts with --method " + a.method);
        }
    }

    std::optional<SpectrumSet> ref;
    if (a.reference) ref = load_spectra_csv(*a.reference);
    const auto grid = ref ? ref->grid()
                          : parse_spectral_grid(a.grid.value_or(prof.grid_spec), prof.profile);
    const auto mat = build_transfer_matrix(prof.profile, grid);

    ReconstructParams p;
    p.lambda = a.lambda;
    p.lv.iterations = a.iters;
    p.lv.init = lv_init_from_string(a.lv_init);
    if (method == Method::idct) p.idct = idct_weights(prof.profile, grid);
    const auto r = reconstruct(method, mat, y, p);
    save_spectra_csv(a.out, r.spectra);

    auto diag = diagnostics_json(r);
    std::cout << "invert: method=" << to_string(method) << " lambda=" << fmt(r.lambda)
              << " K=" << r.spectra.rows() << " M=" << r.spectra.cols();
    if (ref) {
        const double e = rmse(*ref, r.spectra);
        diag["rmse"] = e;
        std::cout << " rmse=" << fmt(e);
    }
    std::cout << " -> " << a.out << '\n';
    fs::path dpath(a.out);
    dpath.replace_extension(".diagnostics.json");
    save_json(dpath, diag);
    return 0;
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
    std::string config;
    std::optional<std::string> out_dir;
};

int cmd_experiment(const ExperimentArgs& a)
{
    auto cfg = load_experiment_config(a.config);
    if (a.out_dir) cfg.output_dir = *a.out_dir;
    const auto rep = run_experiment(cfg);
    save_report(cfg.output_dir, rep);
    for (const auto& run : rep.runs) {
        std::cout << "run";
        if (run.reflectivity) std::cout << " R=" << fmt(*run.reflectivity);
        if (run.snr_db) std::cout << " SNR=" << fmt(*run.snr_db) << "dB";
        std::cout << ':';
        for (const auto& m : run.methods) {
            std::cout << ' ' << to_string(m.method) << "=" << fmt(m.search.rmse_opt);
            if (uses_lambda(m.method)) std::cout << "@" << fmt(m.search.lambda_opt);
            if (m.search.mcw_opt) std::cout << " (mcw " << *m.search.mcw_opt << ")";
        }
        std::cout << '\n';
    }
    std::cout << "experiment: report written to " << (cfg.output_dir / "report.json").string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct SurrogateArgs {
    std::string kind = "smooth-random", out;
    std::optional<std::string> instrument, grid;
    long long count = 0;
    std::uint64_t seed = 0;
};

int cmd_surrogate(const SurrogateArgs& a)
{
    std::optional<WavenumberGrid> grid;
    if (a.instrument) {
        const auto prof = load_profile(*a.instrument);
        grid = parse_spectral_grid(a.grid.value_or(prof.grid_spec), prof.profile);
    } else {
        if (!a.grid) throw ConfigError("surrogate needs --grid lo:hi:count or --instrument");
        const auto v = parse_value_grid(*a.grid);
        grid = WavenumberGrid::from_samples(v);
    }
    const auto kind = surrogate_from_string(a.kind);
    const Eigen::Index count = a.count > 0 ? static_cast<Eigen::Index>(a.count)
                                           : (kind == SurrogateKind::dirac_comb
                                                  ? static_cast<Eigen::Index>(grid->size())
                                                  : 16);
    const auto x = make_surrogate_spectra(kind, *grid, count, a.seed);
    save_spectra_csv(a.out, x);
    std::cout << "surrogate: " << a.kind << " K=" << x.rows() << " M=" << x.cols() << " -> "
              << a.out << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"inverspect: spectrum reconstruction for interferometric spectrometers"};
    app.require_subcommand(1);
    app.footer(
        "Grid specs: lo:hi:count | lo:hi:step | lo:hi:log (25/decade) | lo:hi:count:log | a,b,c\n"
        "Spectral grids: dct | lo:hi:count | lo:hi:nyquist\n"
        "Exit codes: 0 ok, 2 usage/config error, 3 numerical failure");

    std::optional<unsigned> threads;
    app.add_option("--threads", threads, "Maximum worker threads (env INVERSPECT_THREADS)");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Simulate interferograms from spectra");
    s->add_option("--instrument", sim.instrument, "Instrument profile (JSON)")->required();
    s->add_option("--spectra", sim.spectra, "Spectra CSV")->required();
    s->add_option("--out", sim.out, "Output interferogram CSV")->required();
    s->add_option("--snr-db", sim.snr_db, "Add Gaussian noise at this SNR (dB)");
    s->add_option("--seed", sim.seed, "Noise seed");
    s->add_option("--signal-power", sim.signal_power, "SNR reference: variance | mean-square");

    AnalyzeArgs ana;
    auto* an = app.add_subcommand("analyze", "Singular-value analysis of the transfer matrix");
    an->add_option("--instrument", ana.instrument, "Instrument profile (JSON)")->required();
    an->add_option("--grid", ana.grid, "Spectral grid spec");
    an->add_option("--sweep-reflectivity", ana.sweep, "Reflectivity sweep, e.g. 0.05:0.95:0.05");
    an->add_option("--rank-tol", ana.rank_tol, "Relative rank tolerance");
    an->add_option("--out", ana.out, "Output report (JSON)")->required();

    InvertArgs inv;
    auto* iv = app.add_subcommand("invert", "Reconstruct spectra from interferograms");
    iv->add_option("--instrument", inv.instrument, "Instrument profile (JSON)")->required();
    iv->add_option("--interferograms", inv.interferograms, "Interferogram CSV")->required();
    iv->add_option("--method", inv.method, "idct | pinv | tsvd | rr | lv-id | lv-dct | lv")
        ->required();
    iv->add_option("--lambda", inv.lambda, "Regularisation parameter");
    iv->add_option("--iters", inv.iters, "LV iterations");
    iv->add_option("--prior", inv.prior, "LV prior: identity | dct");
    iv->add_option("--lv-init", inv.lv_init, "LV start: adjoint | scaled | zero");
    iv->add_option("--grid", inv.grid, "Spectral grid spec");
    iv->add_option("--reference", inv.reference, "Reference spectra CSV (reports RMSE)");
    iv->add_option("--out", inv.out, "Output spectra CSV")->required();

    ExperimentArgs exp;
    auto* ex = app.add_subcommand("experiment", "Run an experiment configuration");
    ex->add_option("--config", exp.config, "Experiment config (JSON)")->required();
    ex->add_option("--out-dir", exp.out_dir, "Output directory (overrides the config)");

    SurrogateArgs sur;
    auto* su = app.add_subcommand("surrogate", "Write surrogate spectra");
    su->add_option("--kind", sur.kind, "smooth-random | blackbody-like | dirac-comb");
    su->add_option("--instrument", sur.instrument, "Instrument profile for the grid");
    su->add_option("--grid", sur.grid, "Grid spec (lo:hi:count or a spectral grid spec)");
    su->add_option("--count", sur.count, "Number of spectra");
    su->add_option("--seed", sur.seed, "Seed");
    su->add_option("--out", sur.out, "Output spectra CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (threads) {
            set_max_threads(*threads);
        } else if (const char* env = std::getenv("INVERSPECT_THREADS")) {
            try {
                set_max_threads(static_cast<unsigned>(std::stoul(env)));
            } catch (const std::exception&) {
                throw ConfigError("INVERSPECT_THREADS must be a non-negative integer");
            }
        }
        if (*s) return cmd_simulate(sim);
        if (*an) return cmd_analyze(ana);
        if (*iv) return cmd_invert(inv);
        if (*ex) return cmd_experiment(exp);
        if (*su) return cmd_surrogate(sur);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
