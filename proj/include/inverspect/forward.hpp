#pragma once

// Response functions, transfer-matrix construction, interferogram simulation
// and the sampling conditions of the discrete system.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace inverspect {

namespace detail {

/// cos(2 pi delta sigma) with the phase reduced to [-1/2, 1/2] turns first, so
/// products that differ by an integer give bit-identical values.
inline double cos_phase(double delta, double sigma)
{
    const double turns = delta * sigma;
    return std::cos(2.0 * std::numbers::pi * (turns - std::round(turns)));
}

inline void check_unit_interval(double v, const char* name)
{
    if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError(std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
}

inline void check_point(double delta, double sigma)
{
    if (!(delta >= 0.0) || !(sigma > 0.0) || !std::isfinite(delta) || !std::isfinite(sigma))
        throw ConfigError("response needs delta >= 0 and sigma > 0");
}

inline void check_reflectivity(double r)
{
    if (!(r >= 0.0 && r < 1.0))
        throw ConfigError("reflectivity must lie in [0, 1), got " + std::to_string(r));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Response functions
// ---------------------------------------------------------------------------

/// Two-beam response 2 T (1 + cos(2 pi delta sigma)), in [0, 4T].
inline double tbi_response(double delta, double sigma, double transmittance)
{
    detail::check_point(delta, sigma);
    detail::check_unit_interval(transmittance, "transmittance");
    return 2.0 * transmittance * (1.0 + detail::cos_phase(delta, sigma));
}

/// Airy function T^2 / (1 + R^2 - 2 R cos(2 pi delta sigma)).
inline double mbi_airy_response(double delta, double sigma, double reflectivity,
                                double transmittance)
{
    detail::check_point(delta, sigma);
    detail::check_reflectivity(reflectivity);
    detail::check_unit_interval(transmittance, "transmittance");
    const double r = reflectivity;
    return transmittance * transmittance /
           (1.0 + r * r - 2.0 * r * detail::cos_phase(delta, sigma));
}

/// Harmonic weights C_0 = Q, C_n = 2 Q R^n with Q = T^2 / (1 - R^2).
inline double harmonic_coefficient(int n, double reflectivity, double transmittance)
{
    const double q = transmittance * transmittance / (1.0 - reflectivity * reflectivity);
    return n == 0 ? q : 2.0 * q * std::pow(reflectivity, n);
}

/// Airy function truncated to its first N Fourier terms:
/// C_0 + sum_{n=1}^{N-1} C_n cos(2 pi n delta sigma).
inline double mbi_series_response(double delta, double sigma, double reflectivity,
                                  double transmittance, int terms)
{
    detail::check_point(delta, sigma);
    detail::check_reflectivity(reflectivity);
    detail::check_unit_interval(transmittance, "transmittance");
    if (terms < 1) throw ConfigError("series truncation needs N >= 1");
    const double q = transmittance * transmittance / (1.0 - reflectivity * reflectivity);
    double acc = 0.0;
    double rn = 1.0;
    for (int n = 1; n < terms; ++n) {
        rn *= reflectivity;
        acc += 2.0 * q * rn * detail::cos_phase(static_cast<double>(n) * delta, sigma);
    }
    return q + acc;
}

// ---------------------------------------------------------------------------
// Transfer matrix
// ---------------------------------------------------------------------------

struct BuildOptions {
    /// Truncate the MBI response to N series terms; closed-form Airy when empty.
    std::optional<int> series_terms{};
};

/// Samples the instrument response on (schedule x grid). Reflectivity and
/// transmittance are evaluated pointwise at every sigma_k.
inline TransferMatrix build_transfer_matrix(const InstrumentProfile& profile,
                                            const WavenumberGrid& grid,
                                            const BuildOptions& options = {})
{
    const auto& opds = profile.opds();
    const auto L = static_cast<Eigen::Index>(opds.size());
    const auto K = static_cast<Eigen::Index>(grid.size());
    detail::require(L > 0 && K > 0, "cannot build a transfer matrix on an empty axis");
    if (options.series_terms && *options.series_terms < 1)
        throw ConfigError("series truncation needs N >= 1");

    std::vector<double> t(static_cast<std::size_t>(K));
    std::vector<double> r(static_cast<std::size_t>(K), 0.0);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double sigma = grid[static_cast<std::size_t>(k)];
        t[static_cast<std::size_t>(k)] = profile.transmittance()(sigma);
        if (profile.regime() == Regime::mbi) {
            const double rk = (*profile.reflectivity())(sigma);
            detail::check_reflectivity(rk);
            r[static_cast<std::size_t>(k)] = rk;
        }
    }

    Matrix a(L, K);
    parallel_for(static_cast<std::size_t>(K), [&](std::size_t k) {
        const double sigma = grid[k];
        for (Eigen::Index l = 0; l < L; ++l) {
            const double delta = opds[static_cast<std::size_t>(l)];
            double v = 0.0;
            if (profile.regime() == Regime::tbi)
                v = tbi_response(delta, sigma, t[k]);
            else if (options.series_terms)
                v = mbi_series_response(delta, sigma, r[k], t[k], *options.series_terms);
            else
                v = mbi_airy_response(delta, sigma, r[k], t[k]);
            a(l, static_cast<Eigen::Index>(k)) = v;
        }
    });

    // Truncated series can dip marginally below zero for high R; report it
    // instead of building an invalid matrix.
    if ((a.array() < 0.0).any())
        throw NumericError("truncated series produced negative responses; increase N");

    Provenance p = Provenance::tbi_closed_form;
    int terms = 0;
    if (profile.regime() == Regime::mbi) {
        p = options.series_terms ? Provenance::mbi_series : Provenance::mbi_airy;
        terms = options.series_terms.value_or(0);
    }
    return TransferMatrix(std::move(a), opds, grid, p, terms);
}

/// Pure cosine kernel cos(2 pi delta_l sigma_k). On DCT grids this is the
/// unnormalised DCT-II matrix cos(pi/K (k + 1/2) l). It has negative entries,
/// so it is returned as a plain matrix rather than a TransferMatrix.
inline Matrix cosine_kernel(const OpdSchedule& opds, const WavenumberGrid& grid)
{
    const auto L = static_cast<Eigen::Index>(opds.size());
    const auto K = static_cast<Eigen::Index>(grid.size());
    Matrix a(L, K);
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index l = 0; l < L; ++l)
            a(l, k) = detail::cos_phase(opds[static_cast<std::size_t>(l)],
                                        grid[static_cast<std::size_t>(k)]);
    return a;
}

/// TBI matrix 2T (1 + cos(pi/K (k + 1/2) l)) on make_dct_grids(K, d_delta),
/// tagged with dct-ii provenance.
inline TransferMatrix build_dct_transfer_matrix(std::size_t count, double opd_step,
                                                double transmittance)
{
    detail::check_unit_interval(transmittance, "transmittance");
    auto g = make_dct_grids(count, opd_step);
    const auto K = static_cast<Eigen::Index>(count);
    Matrix a(K, K);
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index l = 0; l < K; ++l)
            a(l, k) = 2.0 * transmittance *
                      (1.0 + std::cos(std::numbers::pi / static_cast<double>(K) *
                                      (static_cast<double>(k) + 0.5) * static_cast<double>(l)));
    return TransferMatrix(std::move(a), std::move(g.opds), std::move(g.wavenumbers),
                          Provenance::dct_ii);
}

// ---------------------------------------------------------------------------
// Acquisition
// ---------------------------------------------------------------------------

/// Noiseless acquisition Y = A X, column by column.
inline InterferogramSet simulate_interferograms(const TransferMatrix& a, const SpectrumSet& x)
{
    if (!(x.grid() == a.grid()))
        throw ConfigError("spectra grid differs from the transfer-matrix grid");
    Matrix y(a.rows(), x.cols());
    parallel_for(static_cast<std::size_t>(x.cols()), [&](std::size_t m) {
        const auto col = static_cast<Eigen::Index>(m);
        y.col(col).noalias() = a.entries() * x.values().col(col);
    });
    return InterferogramSet(a.schedule(), std::move(y), x.labels());
}

/// Reference power for the signal-to-noise ratio of one column.
enum class SignalPower {
    variance,    ///< mean((y - mean(y))^2): the modulated part only
    mean_square, ///< mean(y^2): includes the DC level
};

inline double column_power(const Eigen::Ref<const Vector>& y, SignalPower power)
{
    if (y.size() == 0) return 0.0;
    if (power == SignalPower::mean_square) return y.squaredNorm() / static_cast<double>(y.size());
    const double mean = y.mean();
    return (y.array() - mean).square().sum() / static_cast<double>(y.size());
}

/// Adds i.i.d. zero-mean Gaussian noise with variance power(y_m) * 10^(-snr/10)
/// to every column. An infinite SNR returns the input unchanged. Draws are taken
/// column by column from one Rng(seed) stream.
inline InterferogramSet add_gaussian_noise(const InterferogramSet& y, double snr_db,
                                           std::uint64_t seed,
                                           SignalPower power = SignalPower::variance)
{
    detail::require(y.rows() > 0 && y.cols() > 0, "cannot add noise to an empty interferogram");
    if (std::isinf(snr_db) && snr_db > 0) return y;
    detail::require(std::isfinite(snr_db), "SNR must be finite or +inf");
    Rng rng(seed);
    Matrix out = y.values();
    const double scale = std::pow(10.0, -snr_db / 10.0);
    for (Eigen::Index m = 0; m < out.cols(); ++m) {
        const double sd = std::sqrt(column_power(y.values().col(m), power) * scale);
        for (Eigen::Index l = 0; l < out.rows(); ++l) out(l, m) += sd * rng.gaussian();
    }
    return InterferogramSet(y.schedule(), std::move(out), y.labels());
}

/// Empirical SNR (dB) of a noisy column against its clean version.
inline double empirical_snr_db(const Eigen::Ref<const Vector>& clean,
                               const Eigen::Ref<const Vector>& noisy,
                               SignalPower power = SignalPower::variance)
{
    const double noise = (noisy - clean).squaredNorm() / static_cast<double>(clean.size());
    return 10.0 * std::log10(column_power(clean, power) / noise);
}

// ---------------------------------------------------------------------------
// OPD schedule utilities
// ---------------------------------------------------------------------------

struct ExtrapolatedSchedule {
    OpdSchedule schedule;
    std::size_t prepended = 0;
};

/// Extends a schedule that starts above zero down to delta = 0. The slope of a
/// least-squares line through (l, delta_l) gives the step; the gap [0, delta_0)
/// is filled with round(delta_0 / step) evenly spaced samples starting at 0.
inline ExtrapolatedSchedule extrapolate_to_zero(const OpdSchedule& s)
{
    if (s[0] == 0.0) return {s, 0};
    detail::require(s.size() >= 2, "cannot extrapolate a single-sample schedule");
    const auto n = static_cast<double>(s.size());
    double mean_l = (n - 1.0) / 2.0;
    double mean_d = 0.0;
    for (double d : s.samples()) mean_d += d;
    mean_d /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t l = 0; l < s.size(); ++l) {
        const double dl = static_cast<double>(l) - mean_l;
        sxy += dl * (s[l] - mean_d);
        sxx += dl * dl;
    }
    const double slope = sxy / sxx;
    detail::require(slope > 0.0, "schedule slope must be positive to extrapolate");
    const auto missing = static_cast<std::size_t>(std::max(1.0, std::round(s[0] / slope)));
    std::vector<double> out;
    out.reserve(missing + s.size());
    for (std::size_t j = 0; j < missing; ++j)
        out.push_back(static_cast<double>(j) * s[0] / static_cast<double>(missing));
    out.insert(out.end(), s.samples().begin(), s.samples().end());
    return {OpdSchedule::from_samples(std::move(out)), missing};
}

/// Perturbs every sample with N(0, sigma^2) jitter, keeping a leading delta = 0
/// fixed, and sorts the result. Negative values are reflected about zero.
inline OpdSchedule jitter_schedule(const OpdSchedule& s, double sigma_um, std::uint64_t seed)
{
    detail::require(sigma_um >= 0.0, "jitter standard deviation must be non-negative");
    Rng rng(seed);
    std::vector<double> out = s.samples();
    for (std::size_t l = 0; l < out.size(); ++l) {
        const double g = rng.gaussian();
        if (l == 0 && out[0] == 0.0) continue;
        out[l] = std::abs(out[l] + sigma_um * g);
    }
    std::sort(out.begin(), out.end());
    for (std::size_t l = 1; l < out.size(); ++l)
        if (!(out[l] > out[l - 1]))
            throw NumericError("jittered OPD schedule has coincident samples; change the seed");
    return OpdSchedule::from_samples(std::move(out));
}

// ---------------------------------------------------------------------------
// Sampling conditions
// ---------------------------------------------------------------------------

inline constexpr double kHarmonicThreshold = 1e-3;
inline constexpr int kMaxHarmonicOrder = 64;

/// Smallest N >= 2 with max_sigma R(sigma)^(N-1) < threshold, capped at 64.
/// TBI instruments have N = 2.
inline int effective_harmonic_order(const InstrumentProfile& profile, const WavenumberGrid& grid,
                                    double threshold = kHarmonicThreshold)
{
    if (profile.regime() == Regime::tbi) return 2;
    const double rmax = profile.reflectivity()->max_over(grid.samples());
    int n = 2;
    double p = rmax;
    while (!(p < threshold) && n < kMaxHarmonicOrder) {
        p *= rmax;
        ++n;
    }
    return n;
}

struct SamplingReport {
    bool opd_applicable = true;        ///< false for irregular schedules (mean step used)
    bool wavenumber_applicable = true; ///< false for irregular grids (mean step used)
    bool opd_condition_ok = false;           ///< d_delta <= 1 / (2 sigma_max)
    bool harmonic_opd_condition_ok = false;  ///< d_delta <= 1 / (2 (N-1) sigma_max)
    bool wavenumber_condition_ok = false;    ///< d_sigma <= 1 / (2 (N-1) delta_max)
    bool overlap_condition_ok = false;       ///< (sigma_max - sigma_min) / sigma_min <= 1/(N-2)
    double opd_step = 0.0;
    double wavenumber_step = 0.0;
    double sigma_nyquist = 0.0;
    double max_opd_step = 0.0;           ///< 1 / (2 sigma_max)
    double max_opd_step_harmonics = 0.0; ///< 1 / (2 (N-1) sigma_max)
    double max_wavenumber_step = 0.0;    ///< 1 / (2 (N-1) delta_max), +inf when unbounded
    int harmonic_order = 2;
    double alpha = 1.0; ///< fraction of [0, sigma_nyq] covered by the support
};

/// Overlap-free replicas: (sigma_max - sigma_min) / sigma_min <= 1 / (N - 2).
/// N = 2 is always satisfied.
inline bool check_overlap(const WavenumberGrid& grid, int harmonic_order)
{
    detail::require(harmonic_order >= 2, "overlap check needs N >= 2");
    if (harmonic_order == 2) return true;
    return (grid.max() - grid.min()) / grid.min() <= 1.0 / (harmonic_order - 2);
}

namespace detail {

inline SamplingReport sampling_report(const OpdSchedule& schedule, const WavenumberGrid& grid,
                                      int n)
{
    require(n >= 1, "harmonic order must be >= 1");
    SamplingReport rep;
    rep.harmonic_order = n;
    rep.opd_applicable = schedule.regular();
    rep.opd_step = schedule.step().value_or(schedule.mean_step());
    rep.wavenumber_applicable = grid.regular();
    rep.wavenumber_step = grid.step().value_or(
        grid.size() > 1 ? (grid.samples().back() - grid.samples().front()) /
                              static_cast<double>(grid.size() - 1)
                        : 0.0);

    const double inf = std::numeric_limits<double>::infinity();
    const double sigma_max = grid.max();
    rep.sigma_nyquist = rep.opd_step > 0.0 ? 1.0 / (2.0 * rep.opd_step) : inf;
    rep.max_opd_step = 1.0 / (2.0 * sigma_max);
    rep.max_opd_step_harmonics = n >= 2 ? 1.0 / (2.0 * (n - 1) * sigma_max) : inf;
    // Equality cases (e.g. DCT grids, whose support ends exactly at sigma_nyq)
    // must not fail on the last bit of a reciprocal.
    constexpr double slack = 1.0 + 1e-12;
    rep.opd_condition_ok = rep.opd_step <= rep.max_opd_step * slack;
    rep.harmonic_opd_condition_ok = rep.opd_step <= rep.max_opd_step_harmonics * slack;

    const double delta_max = schedule.max();
    rep.max_wavenumber_step =
        (n >= 2 && delta_max > 0.0) ? 1.0 / (2.0 * (n - 1) * delta_max) : inf;
    rep.wavenumber_condition_ok = rep.wavenumber_step <= rep.max_wavenumber_step * slack;
    rep.overlap_condition_ok = n <= 2 || check_overlap(grid, n);

    rep.alpha = std::isfinite(rep.sigma_nyquist)
                    ? std::clamp((grid.max() - grid.min()) / rep.sigma_nyquist, 0.0, 1.0)
                    : 0.0;
    if (rep.alpha <= 0.0) rep.alpha = std::numeric_limits<double>::min();
    return rep;
}

} // namespace detail

/// OPD-domain conditions (Nyquist and the stricter harmonic variant). For an
/// irregular schedule the mean step is used and opd_applicable is false.
inline SamplingReport check_opd_sampling(const OpdSchedule& schedule, const WavenumberGrid& grid,
                                         int harmonic_order)
{
    return detail::sampling_report(schedule, grid, harmonic_order);
}

/// Wavenumber-domain condition d_sigma <= 1 / (2 (N-1) delta_max).
inline SamplingReport check_wavenumber_sampling(const WavenumberGrid& grid,
                                                const OpdSchedule& schedule, int harmonic_order)
{
    return detail::sampling_report(schedule, grid, harmonic_order);
}

/// Endpoint-inclusive grid over [sigma_min, sigma_max] fine enough to satisfy
/// the wavenumber condition for harmonic order N.
inline WavenumberGrid make_alias_free_grid(double sigma_min, double sigma_max,
                                           const OpdSchedule& schedule, int harmonic_order)
{
    detail::require(harmonic_order >= 2, "harmonic order must be >= 2");
    const double step = 1.0 / (2.0 * (harmonic_order - 1) * schedule.max());
    const auto count =
        static_cast<std::size_t>(std::ceil((sigma_max - sigma_min) / step - 1e-9)) + 1;
    return make_regular_grid(sigma_min, sigma_max, std::max<std::size_t>(count, 2));
}

} // namespace inverspect
