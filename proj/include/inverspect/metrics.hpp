#pragma once

// Reconstruction quality metrics, lambda grid search and surrogate spectra.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "inversion.hpp"
#include "random.hpp"

namespace inverspect {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// ||X - X_hat||_F^2 / ||X||_F^2. Note this is the squared ratio, not its root.
inline double rmse(const Matrix& x, const Matrix& x_hat)
{
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
        throw ConfigError("RMSE operands have different dimensions");
    const double ref = x.squaredNorm();
    if (ref == 0.0) throw ConfigError("RMSE is undefined for an all-zero reference");
    return (x - x_hat).squaredNorm() / ref;
}

inline double rmse(const SpectrumSet& x, const SpectrumSet& x_hat)
{
    return rmse(x.values(), x_hat.values());
}

/// ||X - X_hat||_F / ||X||_F, the square root of rmse().
inline double rrmse_sqrt(const SpectrumSet& x, const SpectrumSet& x_hat)
{
    return std::sqrt(rmse(x, x_hat));
}

struct McwResult {
    std::size_t matches = 0;
    std::size_t ties = 0; ///< columns whose maximum is attained more than once
};

/// Counts columns whose argmax (lowest index on ties) equals the nominal index.
inline McwResult mcw_detailed(const Matrix& x_hat, const std::vector<Eigen::Index>& nominal)
{
    if (static_cast<Eigen::Index>(nominal.size()) != x_hat.cols())
        throw ConfigError("MCW needs one nominal index per column");
    McwResult out;
    for (Eigen::Index m = 0; m < x_hat.cols(); ++m) {
        const Eigen::Index n = nominal[static_cast<std::size_t>(m)];
        if (n < 0 || n >= x_hat.rows()) throw ConfigError("MCW nominal index out of range");
        Eigen::Index best = 0;
        const double peak = x_hat.col(m).maxCoeff(&best);
        if ((x_hat.col(m).array() == peak).count() > 1) ++out.ties;
        if (best == n) ++out.matches;
    }
    return out;
}

inline std::size_t mcw(const SpectrumSet& x_hat, const std::vector<Eigen::Index>& nominal)
{
    return mcw_detailed(x_hat.values(), nominal).matches;
}

/// Snaps each label's nominal wavenumber to the closest grid index; an exact
/// midpoint goes to the lower index.
inline std::vector<Eigen::Index> nominal_indices(const SpectrumSet& x)
{
    const auto& s = x.grid().samples();
    std::vector<Eigen::Index> out;
    out.reserve(x.labels().size());
    for (const auto& label : x.labels()) {
        if (!label.nominal_wavenumber)
            throw ConfigError("column '" + label.name + "' has no nominal wavenumber");
        const double w = *label.nominal_wavenumber;
        auto it = std::lower_bound(s.begin(), s.end(), w);
        std::size_t idx = 0;
        if (it == s.end()) {
            idx = s.size() - 1;
        } else if (it == s.begin()) {
            idx = 0;
        } else {
            const auto hi = static_cast<std::size_t>(it - s.begin());
            idx = (w - s[hi - 1] <= s[hi] - w) ? hi - 1 : hi;
        }
        out.push_back(static_cast<Eigen::Index>(idx));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lambda grids
// ---------------------------------------------------------------------------

inline constexpr int kPointsPerDecade = 25;

/// lo * 10^(i / per_decade) for all i with the value <= hi (within 1e-9 relative).
inline std::vector<double> log_space(double lo, double hi, int per_decade = kPointsPerDecade)
{
    detail::require(lo > 0.0 && hi >= lo, "log grid needs 0 < lo <= hi");
    detail::require(per_decade >= 1, "log grid needs at least one point per decade");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        const double v = lo * std::pow(10.0, static_cast<double>(i) / per_decade);
        if (v > hi * (1.0 + 1e-9)) break;
        out.push_back(v);
    }
    return out;
}

/// count evenly spaced values from lo to hi inclusive.
inline std::vector<double> lin_space(double lo, double hi, std::size_t count)
{
    detail::require(count >= 1, "linear grid needs at least one point");
    if (count == 1) return {lo};
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    out.back() = hi;
    return out;
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct GridEntry {
    double lambda = 0.0;
    std::optional<double> rmse;        ///< empty when the solver failed
    std::optional<std::size_t> mcw;    ///< present when nominal indices were given
    std::optional<std::size_t> ties;
    std::string error;
};

struct GridSearchResult {
    double lambda_opt = 0.0;
    double rmse_opt = 0.0;
    std::optional<std::size_t> mcw_opt;
    std::vector<GridEntry> table;
};

/// Reconstructs for every lambda and keeps the one with the smallest RMSE
/// (ties go to the smaller lambda). Per-lambda failures are recorded in the
/// table; the search throws only if every lambda fails.
inline GridSearchResult grid_search_lambda(Reconstructor& rec, Method method,
                                           const InterferogramSet& y, const SpectrumSet& x_ref,
                                           const std::vector<double>& lambdas,
                                           const ReconstructParams& base = {},
                                           const std::vector<Eigen::Index>* nominal = nullptr)
{
    detail::require(!lambdas.empty(), "lambda grid is empty");
    GridSearchResult out;
    out.table.reserve(lambdas.size());
    bool found = false;
    std::string last_error;
    bool last_config = false;
    for (double lambda : lambdas) {
        GridEntry e;
        e.lambda = lambda;
        try {
            ReconstructParams p = base;
            p.lambda = lambda;
            const auto r = rec.run(method, y, p);
            e.rmse = rmse(x_ref, r.spectra);
            if (nominal) {
                const auto m = mcw_detailed(r.spectra.values(), *nominal);
                e.mcw = m.matches;
                e.ties = m.ties;
            }
        } catch (const Error& err) {
            e.error = err.what();
            last_error = e.error;
            last_config = err.kind() == ErrorKind::config;
        }
        if (e.rmse) {
            const bool better = !found || *e.rmse < out.rmse_opt ||
                                (*e.rmse == out.rmse_opt && lambda < out.lambda_opt);
            if (better) {
                found = true;
                out.lambda_opt = lambda;
                out.rmse_opt = *e.rmse;
                out.mcw_opt = e.mcw;
            }
        }
        out.table.push_back(std::move(e));
    }
    if (!found) {
        if (last_config) throw ConfigError(last_error);
        throw NumericError("every lambda failed; last error: " + last_error);
    }
    return out;
}

inline GridSearchResult grid_search_lambda(Method method, const TransferMatrix& a,
                                           const InterferogramSet& y, const SpectrumSet& x_ref,
                                           const std::vector<double>& lambdas,
                                           const ReconstructParams& base = {})
{
    Reconstructor rec(a);
    return grid_search_lambda(rec, method, y, x_ref, lambdas, base);
}

// ---------------------------------------------------------------------------
// Surrogate spectra
// ---------------------------------------------------------------------------

enum class SurrogateKind { smooth_random, blackbody_like, dirac_comb };

inline const char* to_string(SurrogateKind k)
{
    switch (k) {
    case SurrogateKind::smooth_random: return "smooth-random";
    case SurrogateKind::blackbody_like: return "blackbody-like";
    case SurrogateKind::dirac_comb: return "dirac-comb";
    }
    return "smooth-random";
}

inline SurrogateKind surrogate_from_string(const std::string& s)
{
    if (s == "smooth-random") return SurrogateKind::smooth_random;
    if (s == "blackbody-like") return SurrogateKind::blackbody_like;
    if (s == "dirac-comb") return SurrogateKind::dirac_comb;
    throw ConfigError("unknown surrogate kind '" + s + "'");
}

inline constexpr int kSmoothCoefficients = 8;
inline constexpr double kSmoothDecay = 2.0;

/// smooth-random: x = L^T c - min(L^T c) with L the orthogonal DCT and
///   c_j ~ N(0, 1) exp(-j / 2) for j < 8, zero above.
/// blackbody-like: sigma^3 / (exp(sigma / theta) - 1) normalised to a unit
///   peak, theta ~ U(0.2, 0.8) * sigma_max.
/// dirac-comb: unit pulse at index floor(m K / M); labels carry the pulse
///   wavenumber. Needs M <= K; M = K gives the identity. Ignores the seed.
inline SpectrumSet make_surrogate_spectra(SurrogateKind kind, const WavenumberGrid& grid,
                                          Eigen::Index count, std::uint64_t seed)
{
    detail::require(count >= 1, "surrogate needs at least one spectrum");
    const auto K = static_cast<Eigen::Index>(grid.size());
    Matrix x = Matrix::Zero(K, count);
    std::vector<ColumnLabel> labels;
    Rng rng(seed);
    switch (kind) {
    case SurrogateKind::smooth_random: {
        const PriorOperator l(PriorKind::orthogonal_dct, K);
        const Eigen::Index j_max = std::min<Eigen::Index>(kSmoothCoefficients, K);
        for (Eigen::Index m = 0; m < count; ++m) {
            Vector c = Vector::Zero(K);
            for (Eigen::Index j = 0; j < j_max; ++j)
                c(j) = rng.gaussian() * std::exp(-static_cast<double>(j) / kSmoothDecay);
            Vector v = l.apply_transpose(c);
            v.array() -= v.minCoeff();
            x.col(m) = v;
        }
        break;
    }
    case SurrogateKind::blackbody_like: {
        for (Eigen::Index m = 0; m < count; ++m) {
            const double theta = (0.2 + 0.6 * rng.uniform()) * grid.max();
            for (Eigen::Index k = 0; k < K; ++k) {
                const double s = grid[static_cast<std::size_t>(k)];
                x(k, m) = s * s * s / std::expm1(s / theta);
            }
            x.col(m) /= x.col(m).maxCoeff();
        }
        break;
    }
    case SurrogateKind::dirac_comb: {
        detail::require(count <= K, "dirac comb needs at most one pulse per wavenumber");
        labels.resize(static_cast<std::size_t>(count));
        for (Eigen::Index m = 0; m < count; ++m) {
            const Eigen::Index k = m * K / count;
            x(k, m) = 1.0;
            labels[static_cast<std::size_t>(m)] = {"s" + std::to_string(m),
                                                   grid[static_cast<std::size_t>(k)]};
        }
        break;
    }
    }
    return SpectrumSet(grid, std::move(x), std::move(labels));
}

} // namespace inverspect
