#pragma once

// Domain types shared by every module: the two sampling axes, optical curves,
// instrument descriptions, signal containers and the transfer matrix.
//
// Units are fixed: wavenumbers in um^-1, optical path differences in um.
// Intensities and spectra are unitless linear values.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"

namespace inverspect {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tolerance on the spacing of a regular axis.
inline constexpr double kStepTolerance = 1e-12;

namespace detail {

inline bool all_finite(const std::vector<double>& v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline bool strictly_increasing(const std::vector<double>& v)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

inline bool uniform_spacing(const std::vector<double>& v, double step)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i] - v[i - 1] - step) > kStepTolerance * std::max(1.0, std::abs(v[i])))
            return false;
    return true;
}

inline bool same_matrix(const Matrix& a, const Matrix& b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

/// Step of an evenly spaced axis, or nullopt when the spacing is irregular.
inline std::optional<double> detect_step(const std::vector<double>& v)
{
    if (v.size() < 2) return std::nullopt;
    const double step = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
    if (uniform_spacing(v, step)) return step;
    return std::nullopt;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Sampling axes
// ---------------------------------------------------------------------------

/// Wavenumber samples sigma_k (um^-1) inside the spectral support [min, max].
class WavenumberGrid {
public:
    WavenumberGrid(std::vector<double> samples, double sigma_min, double sigma_max,
                   std::optional<double> step = std::nullopt)
        : samples_(std::move(samples)), min_(sigma_min), max_(sigma_max), step_(step)
    {
        detail::require(!samples_.empty(), "wavenumber grid is empty");
        detail::require(detail::all_finite(samples_), "wavenumber grid has non-finite samples");
        detail::require(samples_.front() > 0.0, "wavenumbers must be positive");
        detail::require(detail::strictly_increasing(samples_),
                        "wavenumber samples must be strictly increasing");
        detail::require(min_ <= samples_.front() && samples_.back() <= max_,
                        "wavenumber samples fall outside the declared support");
        if (step_) {
            detail::require(*step_ > 0.0, "wavenumber step must be positive");
            detail::require(detail::uniform_spacing(samples_, *step_),
                            "wavenumber samples do not match the declared step");
        }
    }

    /// Grid over the sample span; regular when the samples are evenly spaced.
    static WavenumberGrid from_samples(std::vector<double> samples)
    {
        detail::require(!samples.empty(), "wavenumber grid is empty");
        const auto step = detail::detect_step(samples);
        const double lo = samples.front();
        const double hi = samples.back();
        return WavenumberGrid(std::move(samples), lo, hi, step);
    }

    const std::vector<double>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double operator[](std::size_t k) const { return samples_[k]; }
    double min() const noexcept { return min_; }
    double max() const noexcept { return max_; }
    std::optional<double> step() const noexcept { return step_; }
    bool regular() const noexcept { return step_.has_value(); }

    friend bool operator==(const WavenumberGrid&, const WavenumberGrid&) = default;

private:
    std::vector<double> samples_;
    double min_;
    double max_;
    std::optional<double> step_;
};

/// Optical path differences delta_l (um) generated by the device.
class OpdSchedule {
public:
    explicit OpdSchedule(std::vector<double> samples, std::optional<double> step = std::nullopt)
        : samples_(std::move(samples)), step_(step)
    {
        detail::require(!samples_.empty(), "OPD schedule is empty");
        detail::require(detail::all_finite(samples_), "OPD schedule has non-finite samples");
        detail::require(samples_.front() >= 0.0, "OPDs must be non-negative");
        detail::require(detail::strictly_increasing(samples_),
                        "OPD samples must be strictly increasing");
        if (step_) {
            detail::require(*step_ > 0.0, "OPD step must be positive");
            detail::require(detail::uniform_spacing(samples_, *step_),
                            "OPD samples do not match the declared step");
        }
    }

    /// delta_l = start + l * step for l in [0, count).
    static OpdSchedule regular(double start, double step, std::size_t count)
    {
        detail::require(step > 0.0, "OPD step must be positive");
        detail::require(count >= 1, "OPD count must be at least 1");
        std::vector<double> s(count);
        for (std::size_t l = 0; l < count; ++l) s[l] = start + static_cast<double>(l) * step;
        return OpdSchedule(std::move(s), step);
    }

    /// Explicit list; flagged regular when the spacing is uniform.
    static OpdSchedule from_samples(std::vector<double> samples)
    {
        const auto step = detail::detect_step(samples);
        return OpdSchedule(std::move(samples), step);
    }

    const std::vector<double>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double operator[](std::size_t l) const { return samples_[l]; }
    double max() const noexcept { return samples_.back(); }
    std::optional<double> step() const noexcept { return step_; }
    bool regular() const noexcept { return step_.has_value(); }

    /// Average spacing; used advisorily for irregular schedules.
    double mean_step() const noexcept
    {
        if (samples_.size() < 2) return 0.0;
        return (samples_.back() - samples_.front()) / static_cast<double>(samples_.size() - 1);
    }

    friend bool operator==(const OpdSchedule&, const OpdSchedule&) = default;

private:
    std::vector<double> samples_;
    std::optional<double> step_;
};

/// Evenly spaced, endpoint-inclusive grid over [sigma_min, sigma_max].
inline WavenumberGrid make_regular_grid(double sigma_min, double sigma_max, std::size_t count)
{
    detail::require(sigma_min > 0.0 && sigma_max > 0.0, "wavenumber bounds must be positive");
    detail::require(sigma_min < sigma_max, "wavenumber bounds must satisfy min < max");
    detail::require(count >= 2, "a regular grid needs at least 2 samples");
    const double step = (sigma_max - sigma_min) / static_cast<double>(count - 1);
    std::vector<double> s(count);
    for (std::size_t k = 0; k < count; ++k) s[k] = sigma_min + static_cast<double>(k) * step;
    s.back() = sigma_max;
    return WavenumberGrid(std::move(s), sigma_min, sigma_max, step);
}

struct DctGrids {
    OpdSchedule opds;
    WavenumberGrid wavenumbers;
};

/// Square sampling on which the cosine kernel becomes the DCT-II:
/// delta_l = l * d_delta, sigma_k = (k + 1/2) * d_sigma, d_sigma * d_delta = 1 / (2K).
/// The support is (0, sigma_nyq] with sigma_nyq = 1 / (2 d_delta).
inline DctGrids make_dct_grids(std::size_t count, double opd_step)
{
    detail::require(count >= 2, "DCT grids need at least 2 samples");
    detail::require(opd_step > 0.0, "OPD step must be positive");
    const double K = static_cast<double>(count);
    const double sigma_step = 1.0 / (2.0 * K * opd_step);
    const double nyquist = 1.0 / (2.0 * opd_step);
    std::vector<double> s(count);
    for (std::size_t k = 0; k < count; ++k) s[k] = (static_cast<double>(k) + 0.5) * sigma_step;
    const double lo = s.front();
    return {OpdSchedule::regular(0.0, opd_step, count),
            WavenumberGrid(std::move(s), lo, nyquist, sigma_step)};
}

// ---------------------------------------------------------------------------
// Optical curves and instruments
// ---------------------------------------------------------------------------

/// Reflectivity or transmittance as a function of wavenumber.
///
/// Three representations: a constant, a monomial polynomial in sigma of
/// degree <= 5, or tabulated (sigma, value) pairs with linear interpolation.
/// Evaluation outside the valid range, or producing a value outside [0, 1],
/// raises ConfigError; nothing is clamped.
class OpticalCurve {
public:
    static constexpr std::size_t kMaxDegree = 5;

    struct Constant {
        double value;
        friend bool operator==(const Constant&, const Constant&) = default;
    };
    struct Polynomial {
        std::vector<double> coefficients; ///< c_0 + c_1 sigma + ... + c_d sigma^d
        friend bool operator==(const Polynomial&, const Polynomial&) = default;
    };
    struct Tabulated {
        std::vector<double> sigma;
        std::vector<double> value;
        friend bool operator==(const Tabulated&, const Tabulated&) = default;
    };
    using Representation = std::variant<Constant, Polynomial, Tabulated>;

    static OpticalCurve constant(double value)
    {
        detail::require(std::isfinite(value) && value >= 0.0 && value <= 1.0,
                        "constant optical curve must lie in [0, 1]");
        return OpticalCurve(Constant{value}, 0.0, std::numeric_limits<double>::infinity());
    }

    static OpticalCurve polynomial(std::vector<double> coefficients, double range_min,
                                   double range_max)
    {
        detail::require(!coefficients.empty(), "polynomial curve needs coefficients");
        detail::require(coefficients.size() <= kMaxDegree + 1,
                        "polynomial curve degree exceeds 5");
        detail::require(detail::all_finite(coefficients), "polynomial coefficients must be finite");
        detail::require(range_min < range_max, "polynomial curve range must satisfy min < max");
        OpticalCurve c(Polynomial{std::move(coefficients)}, range_min, range_max);
        c.check_on_range();
        return c;
    }

    static OpticalCurve tabulated(std::vector<double> sigma, std::vector<double> value)
    {
        detail::require(sigma.size() >= 2 && sigma.size() == value.size(),
                        "tabulated curve needs >= 2 (sigma, value) pairs of equal length");
        detail::require(detail::strictly_increasing(sigma),
                        "tabulated curve wavenumbers must be strictly increasing");
        for (double v : value)
            detail::require(std::isfinite(v) && v >= 0.0 && v <= 1.0,
                            "tabulated curve values must lie in [0, 1]");
        const double lo = sigma.front();
        const double hi = sigma.back();
        return OpticalCurve(Tabulated{std::move(sigma), std::move(value)}, lo, hi);
    }

    double operator()(double sigma) const
    {
        if (sigma < range_min_ - range_slack() || sigma > range_max_ + range_slack())
            throw ConfigError("optical curve evaluated at sigma=" + std::to_string(sigma) +
                              " outside its valid range [" + std::to_string(range_min_) + ", " +
                              std::to_string(range_max_) + "]");
        const double v = raw(sigma);
        if (!(v >= 0.0 && v <= 1.0))
            throw ConfigError("optical curve value " + std::to_string(v) + " at sigma=" +
                              std::to_string(sigma) + " is outside [0, 1]");
        return v;
    }

    /// Largest value over a set of wavenumbers.
    double max_over(const std::vector<double>& sigmas) const
    {
        double m = 0.0;
        for (double s : sigmas) m = std::max(m, (*this)(s));
        return m;
    }

    const Representation& representation() const noexcept { return repr_; }
    double range_min() const noexcept { return range_min_; }
    double range_max() const noexcept { return range_max_; }
    bool is_constant() const noexcept { return std::holds_alternative<Constant>(repr_); }

    friend bool operator==(const OpticalCurve&, const OpticalCurve&) = default;

private:
    OpticalCurve(Representation r, double lo, double hi) : repr_(std::move(r)), range_min_(lo), range_max_(hi) {}

    double range_slack() const noexcept
    {
        if (!std::isfinite(range_max_)) return 0.0;
        return 1e-12 * std::max(1.0, std::abs(range_max_));
    }

    double raw(double sigma) const
    {
        if (const auto* c = std::get_if<Constant>(&repr_)) return c->value;
        if (const auto* p = std::get_if<Polynomial>(&repr_)) {
            double acc = 0.0;
            for (auto it = p->coefficients.rbegin(); it != p->coefficients.rend(); ++it)
                acc = acc * sigma + *it;
            return acc;
        }
        const auto& t = std::get<Tabulated>(repr_);
        const double s = std::clamp(sigma, t.sigma.front(), t.sigma.back());
        auto hi = std::upper_bound(t.sigma.begin(), t.sigma.end(), s);
        if (hi == t.sigma.end()) return t.value.back();
        if (hi == t.sigma.begin()) return t.value.front();
        const auto i = static_cast<std::size_t>(hi - t.sigma.begin());
        const double w = (s - t.sigma[i - 1]) / (t.sigma[i] - t.sigma[i - 1]);
        return (1.0 - w) * t.value[i - 1] + w * t.value[i];
    }

    // Dense scan of the declared range; polynomials can leave [0, 1] between samples.
    void check_on_range() const
    {
        constexpr int kScan = 1024;
        for (int i = 0; i <= kScan; ++i) {
            const double s = range_min_ + (range_max_ - range_min_) * i / kScan;
            (void)(*this)(s);
        }
    }

    Representation repr_;
    double range_min_;
    double range_max_;
};

enum class Regime { tbi, mbi };

inline const char* to_string(Regime r) { return r == Regime::tbi ? "tbi" : "mbi"; }

/// Etalon geometry: delta_l = 2 n d_l cos(theta).
struct Geometry {
    double refractive_index = 1.0;
    double incidence_angle_rad = 0.0;
    double thickness_step_um = 0.0;
    std::vector<double> thicknesses_um;

    double opd_of(double thickness) const
    {
        return 2.0 * refractive_index * thickness * std::cos(incidence_angle_rad);
    }

    friend bool operator==(const Geometry&, const Geometry&) = default;
};

inline constexpr double kGeometryTolerance = 1e-9;

class InstrumentProfile {
public:
    InstrumentProfile(Regime regime, OpticalCurve transmittance,
                      std::optional<OpticalCurve> reflectivity, OpdSchedule opds,
                      std::optional<Geometry> geometry = std::nullopt)
        : regime_(regime), transmittance_(std::move(transmittance)),
          reflectivity_(std::move(reflectivity)), opds_(std::move(opds)),
          geometry_(std::move(geometry))
    {
        detail::require(regime_ == Regime::tbi || reflectivity_.has_value(),
                        "an MBI instrument requires a reflectivity curve");
        if (geometry_) {
            const auto& g = *geometry_;
            detail::require(g.refractive_index > 0.0, "refractive index must be positive");
            detail::require(g.thicknesses_um.size() == opds_.size(),
                            "geometry thickness count differs from the OPD count");
            for (std::size_t l = 0; l < opds_.size(); ++l)
                detail::require(std::abs(g.opd_of(g.thicknesses_um[l]) - opds_[l]) <= kGeometryTolerance,
                                "OPD sample " + std::to_string(l) +
                                    " disagrees with 2 n d cos(theta)");
        }
    }

    /// Etalon stack d_l = first + l * step; the schedule follows from the geometry.
    static InstrumentProfile from_geometry(Regime regime, OpticalCurve transmittance,
                                           std::optional<OpticalCurve> reflectivity,
                                           double refractive_index, double incidence_angle_rad,
                                           double first_thickness_um, double thickness_step_um,
                                           std::size_t count)
    {
        detail::require(count >= 1, "geometry needs at least one etalon");
        detail::require(thickness_step_um > 0.0, "thickness step must be positive");
        Geometry g{refractive_index, incidence_angle_rad, thickness_step_um, {}};
        std::vector<double> opds(count);
        g.thicknesses_um.resize(count);
        for (std::size_t l = 0; l < count; ++l) {
            g.thicknesses_um[l] = first_thickness_um + static_cast<double>(l) * thickness_step_um;
            opds[l] = g.opd_of(g.thicknesses_um[l]);
        }
        auto schedule = OpdSchedule::from_samples(std::move(opds));
        return InstrumentProfile(regime, std::move(transmittance), std::move(reflectivity),
                                 std::move(schedule), std::move(g));
    }

    Regime regime() const noexcept { return regime_; }
    const OpticalCurve& transmittance() const noexcept { return transmittance_; }
    const std::optional<OpticalCurve>& reflectivity() const noexcept { return reflectivity_; }
    const OpdSchedule& opds() const noexcept { return opds_; }
    const std::optional<Geometry>& geometry() const noexcept { return geometry_; }

    /// Same optics, different OPD schedule (geometry is dropped).
    InstrumentProfile with_opds(OpdSchedule opds) const
    {
        return InstrumentProfile(regime_, transmittance_, reflectivity_, std::move(opds));
    }

    /// Same instrument with a constant reflectivity; switches to MBI.
    InstrumentProfile with_constant_reflectivity(double r) const
    {
        return InstrumentProfile(Regime::mbi, transmittance_, OpticalCurve::constant(r), opds_,
                                 geometry_);
    }

    friend bool operator==(const InstrumentProfile&, const InstrumentProfile&) = default;

private:
    Regime regime_;
    OpticalCurve transmittance_;
    std::optional<OpticalCurve> reflectivity_;
    OpdSchedule opds_;
    std::optional<Geometry> geometry_;
};

// ---------------------------------------------------------------------------
// Signals
// ---------------------------------------------------------------------------

struct ColumnLabel {
    std::string name;
    std::optional<double> nominal_wavenumber; ///< um^-1

    friend bool operator==(const ColumnLabel&, const ColumnLabel&) = default;
};

namespace detail {

inline std::vector<ColumnLabel> default_labels(Eigen::Index count, char prefix)
{
    std::vector<ColumnLabel> labels(static_cast<std::size_t>(count));
    for (Eigen::Index m = 0; m < count; ++m)
        labels[static_cast<std::size_t>(m)].name = prefix + std::to_string(m);
    return labels;
}

} // namespace detail

/// K x M spectra, one column per spectrum, rows on the wavenumber grid.
class SpectrumSet {
public:
    SpectrumSet(WavenumberGrid grid, Matrix values, std::vector<ColumnLabel> labels = {})
        : grid_(std::move(grid)), values_(std::move(values)), labels_(std::move(labels))
    {
        detail::require(static_cast<std::size_t>(values_.rows()) == grid_.size(),
                        "spectrum rows differ from the grid size");
        detail::require(values_.allFinite(), "spectrum values must be finite");
        if (labels_.empty()) labels_ = detail::default_labels(values_.cols(), 's');
        detail::require(static_cast<Eigen::Index>(labels_.size()) == values_.cols(),
                        "spectrum label count differs from the column count");
    }

    const WavenumberGrid& grid() const noexcept { return grid_; }
    const Matrix& values() const noexcept { return values_; }
    const std::vector<ColumnLabel>& labels() const noexcept { return labels_; }
    Eigen::Index rows() const noexcept { return values_.rows(); }
    Eigen::Index cols() const noexcept { return values_.cols(); }

    friend bool operator==(const SpectrumSet& a, const SpectrumSet& b)
    {
        return a.grid_ == b.grid_ && detail::same_matrix(a.values_, b.values_) &&
               a.labels_ == b.labels_;
    }

private:
    WavenumberGrid grid_;
    Matrix values_;
    std::vector<ColumnLabel> labels_;
};

/// L x M interferograms, one column per acquisition, rows on the OPD schedule.
class InterferogramSet {
public:
    InterferogramSet(OpdSchedule schedule, Matrix values, std::vector<ColumnLabel> labels = {})
        : schedule_(std::move(schedule)), values_(std::move(values)), labels_(std::move(labels))
    {
        detail::require(static_cast<std::size_t>(values_.rows()) == schedule_.size(),
                        "interferogram rows differ from the OPD count");
        detail::require(values_.allFinite(), "interferogram values must be finite");
        if (labels_.empty()) labels_ = detail::default_labels(values_.cols(), 'i');
        detail::require(static_cast<Eigen::Index>(labels_.size()) == values_.cols(),
                        "interferogram label count differs from the column count");
    }

    const OpdSchedule& schedule() const noexcept { return schedule_; }
    const Matrix& values() const noexcept { return values_; }
    const std::vector<ColumnLabel>& labels() const noexcept { return labels_; }
    Eigen::Index rows() const noexcept { return values_.rows(); }
    Eigen::Index cols() const noexcept { return values_.cols(); }

    friend bool operator==(const InterferogramSet& a, const InterferogramSet& b)
    {
        return a.schedule_ == b.schedule_ && detail::same_matrix(a.values_, b.values_) &&
               a.labels_ == b.labels_;
    }

private:
    OpdSchedule schedule_;
    Matrix values_;
    std::vector<ColumnLabel> labels_;
};

// ---------------------------------------------------------------------------
// Transfer matrix
// ---------------------------------------------------------------------------

enum class Provenance { tbi_closed_form, mbi_airy, mbi_series, dct_ii, custom_loaded };

inline const char* to_string(Provenance p)
{
    switch (p) {
    case Provenance::tbi_closed_form: return "tbi-closed-form";
    case Provenance::mbi_airy: return "mbi-airy";
    case Provenance::mbi_series: return "mbi-series";
    case Provenance::dct_ii: return "dct-ii";
    case Provenance::custom_loaded: return "custom-loaded";
    }
    return "custom-loaded";
}

inline Provenance provenance_from_string(const std::string& s)
{
    if (s == "tbi-closed-form") return Provenance::tbi_closed_form;
    if (s == "mbi-airy") return Provenance::mbi_airy;
    if (s == "mbi-series") return Provenance::mbi_series;
    if (s == "dct-ii") return Provenance::dct_ii;
    if (s == "custom-loaded") return Provenance::custom_loaded;
    throw ConfigError("unknown transfer-matrix provenance '" + s + "'");
}

/// L x K sampled response a_lk = A(delta_l, sigma_k).
class TransferMatrix {
public:
    TransferMatrix(Matrix entries, OpdSchedule schedule, WavenumberGrid grid,
                   Provenance provenance, int series_terms = 0)
        : entries_(std::move(entries)), schedule_(std::move(schedule)), grid_(std::move(grid)),
          provenance_(provenance), series_terms_(series_terms)
    {
        detail::require(static_cast<std::size_t>(entries_.rows()) == schedule_.size() &&
                            static_cast<std::size_t>(entries_.cols()) == grid_.size(),
                        "transfer matrix shape differs from its axes");
        detail::require(entries_.allFinite(), "transfer matrix entries must be finite");
        detail::require((entries_.array() >= 0.0).all(),
                        "transfer matrix entries must be non-negative");
        detail::require(provenance_ != Provenance::mbi_series || series_terms_ >= 1,
                        "series provenance needs the number of terms");
    }

    const Matrix& entries() const noexcept { return entries_; }
    const OpdSchedule& schedule() const noexcept { return schedule_; }
    const WavenumberGrid& grid() const noexcept { return grid_; }
    Provenance provenance() const noexcept { return provenance_; }
    /// Number of series terms N for mbi-series provenance, 0 otherwise.
    int series_terms() const noexcept { return series_terms_; }
    Eigen::Index rows() const noexcept { return entries_.rows(); }
    Eigen::Index cols() const noexcept { return entries_.cols(); }

    friend bool operator==(const TransferMatrix& a, const TransferMatrix& b)
    {
        return detail::same_matrix(a.entries_, b.entries_) && a.schedule_ == b.schedule_ &&
               a.grid_ == b.grid_ && a.provenance_ == b.provenance_ &&
               a.series_terms_ == b.series_terms_;
    }

private:
    Matrix entries_;
    OpdSchedule schedule_;
    WavenumberGrid grid_;
    Provenance provenance_;
    int series_terms_;
};

} // namespace inverspect
