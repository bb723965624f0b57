#pragma once

// Well-posedness diagnostics: singular spectrum, numerical rank, condition
// number, harmonic decomposition of the Airy response and reflectivity sweeps.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SVD>

#include "core.hpp"
#include "forward.hpp"
#include "parallel.hpp"

namespace inverspect {

inline constexpr double kDefaultRankTolerance = 1e-10;

struct SvdAnalysis {
    Vector singular_values;      ///< descending
    Eigen::Index rank = 0;       ///< count of psi_r >= tolerance * psi_1
    double condition_number = 0; ///< psi_1 / psi_rank over the retained values
    double rank_tolerance = kDefaultRankTolerance;
    /// True when rank < min(L, K): the unregularised condition number is infinite.
    bool rank_deficient = false;

    /// psi_1 / psi_min(L,K); +inf when the matrix is rank deficient.
    double full_condition_number() const
    {
        return rank_deficient ? std::numeric_limits<double>::infinity() : condition_number;
    }
};

namespace detail {

inline Vector singular_values(const Matrix& a)
{
    Eigen::BDCSVD<Matrix> svd(a);
    if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
    Vector s = svd.singularValues();
    if (!s.allFinite()) throw NumericError("SVD produced non-finite singular values");
    return s;
}

inline Eigen::Index numerical_rank(const Vector& s, double tol)
{
    if (s.size() == 0 || s(0) <= 0.0) return 0;
    Eigen::Index r = 0;
    while (r < s.size() && s(r) >= tol * s(0)) ++r;
    return r;
}

} // namespace detail

/// Full SVD of a dense matrix. Uses Eigen's divide-and-conquer bidiagonal SVD
/// (Golub-Kahan bidiagonalisation, QR sweeps on small blocks); non-convergence
/// is reported as NumericError.
inline SvdAnalysis svd_analysis(const Matrix& a, double rank_tol = kDefaultRankTolerance)
{
    detail::require(a.size() > 0, "cannot analyse an empty matrix");
    detail::require(rank_tol > 0.0 && rank_tol < 1.0, "rank tolerance must lie in (0, 1)");
    SvdAnalysis out;
    out.rank_tolerance = rank_tol;
    out.singular_values = detail::singular_values(a);
    out.rank = detail::numerical_rank(out.singular_values, rank_tol);
    out.condition_number = out.rank > 0
                               ? out.singular_values(0) / out.singular_values(out.rank - 1)
                               : std::numeric_limits<double>::infinity();
    out.rank_deficient = out.rank < std::min(a.rows(), a.cols());
    return out;
}

inline SvdAnalysis svd_analysis(const TransferMatrix& a, double rank_tol = kDefaultRankTolerance)
{
    return svd_analysis(a.entries(), rank_tol);
}

// ---------------------------------------------------------------------------
// Harmonics
// ---------------------------------------------------------------------------

/// Splits the Airy matrix into its first N harmonics:
/// A^(n)_lk = C_n(sigma_k) cos(2 pi n delta_l sigma_k), n = 0 .. N-1.
inline std::vector<Matrix> harmonic_decomposition(const InstrumentProfile& profile,
                                                  const WavenumberGrid& grid, int terms)
{
    if (profile.regime() != Regime::mbi)
        throw ConfigError("harmonic decomposition needs an MBI profile");
    detail::require(terms >= 1, "harmonic decomposition needs N >= 1");
    const auto& opds = profile.opds();
    const auto L = static_cast<Eigen::Index>(opds.size());
    const auto K = static_cast<Eigen::Index>(grid.size());
    std::vector<double> t(grid.size());
    std::vector<double> r(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        t[k] = profile.transmittance()(grid[k]);
        r[k] = (*profile.reflectivity())(grid[k]);
        detail::check_reflectivity(r[k]);
    }
    std::vector<Matrix> out(static_cast<std::size_t>(terms), Matrix(L, K));
    parallel_for(static_cast<std::size_t>(terms), [&](std::size_t n) {
        Matrix& m = out[n];
        for (Eigen::Index k = 0; k < K; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const double c = harmonic_coefficient(static_cast<int>(n), r[kk], t[kk]);
            for (Eigen::Index l = 0; l < L; ++l)
                m(l, k) = c * detail::cos_phase(static_cast<double>(n) *
                                                    opds[static_cast<std::size_t>(l)],
                                                grid[kk]);
        }
    });
    return out;
}

/// Bound on |Airy - sum_{n<N} A^(n)|: 2 Q R^N / (1 - R) for constant R and T.
inline double harmonic_tail_bound(double reflectivity, double transmittance, int terms)
{
    const double q = transmittance * transmittance / (1.0 - reflectivity * reflectivity);
    return 2.0 * q * std::pow(reflectivity, terms) / (1.0 - reflectivity);
}

// ---------------------------------------------------------------------------
// Reflectivity sweep
// ---------------------------------------------------------------------------

struct SweepPoint {
    double reflectivity = 0.0;
    double condition_number = 0.0;
    Eigen::Index rank = 0;
};

/// Condition number of the closed-form Airy matrix for each constant R, in
/// input order. Every entry rebuilds and re-decomposes its own matrix.
inline std::vector<SweepPoint> reflectivity_sweep(const InstrumentProfile& base,
                                                  const WavenumberGrid& grid,
                                                  const std::vector<double>& reflectivities,
                                                  double rank_tol = kDefaultRankTolerance)
{
    detail::require(!reflectivities.empty(), "reflectivity sweep is empty");
    for (double r : reflectivities) detail::check_reflectivity(r);
    std::vector<SweepPoint> out(reflectivities.size());
    parallel_for(reflectivities.size(), [&](std::size_t i) {
        const auto profile = base.with_constant_reflectivity(reflectivities[i]);
        const auto a = build_transfer_matrix(profile, grid);
        const auto s = svd_analysis(a, rank_tol);
        out[i] = {reflectivities[i], s.condition_number, s.rank};
    });
    return out;
}

// ---------------------------------------------------------------------------
// DCT compatibility
// ---------------------------------------------------------------------------

inline constexpr double kDctGridTolerance = 1e-9;

struct DctEquivalenceReport {
    bool grids_compatible = false;  ///< delta_l = l dd, sigma_k = (k + 1/2) ds, ds dd = 1/(2K)
    bool is_dct_compatible = false; ///< grids compatible and entries 2T (1 + DCT-II kernel)
    double max_deviation = std::numeric_limits<double>::infinity();
    double opd_step = 0.0;
};

/// Checks the DCT grid relations and, for TBI-shaped matrices, the entries
/// against 2 T_k (1 + cos(pi/K (k + 1/2) l)) with T_k = a_0k / 4.
inline DctEquivalenceReport dct_equivalence_check(const TransferMatrix& a)
{
    DctEquivalenceReport rep;
    const auto& s = a.schedule();
    const auto& g = a.grid();
    const std::size_t K = g.size();
    if (s.size() != K || K < 2 || !s.regular() || s[0] != 0.0) return rep;
    const double dd = *s.step();
    const double ds = 1.0 / (2.0 * static_cast<double>(K) * dd);
    double grid_dev = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        grid_dev = std::max(grid_dev, std::abs(g[k] - (static_cast<double>(k) + 0.5) * ds));
    rep.opd_step = dd;
    rep.grids_compatible = grid_dev <= kDctGridTolerance;
    if (!rep.grids_compatible) return rep;

    const auto Ki = static_cast<Eigen::Index>(K);
    double dev = 0.0;
    for (Eigen::Index k = 0; k < Ki; ++k) {
        const double two_t = a.entries()(0, k) / 2.0;
        for (Eigen::Index l = 0; l < Ki; ++l) {
            const double kernel = std::cos(std::numbers::pi / static_cast<double>(K) *
                                           (static_cast<double>(k) + 0.5) *
                                           static_cast<double>(l));
            dev = std::max(dev, std::abs(a.entries()(l, k) - two_t * (1.0 + kernel)));
        }
    }
    rep.max_deviation = dev;
    const bool tbi_like = a.provenance() == Provenance::tbi_closed_form ||
                          a.provenance() == Provenance::dct_ii ||
                          a.provenance() == Provenance::custom_loaded;
    rep.is_dct_compatible = tbi_like && dev <= kDctGridTolerance;
    return rep;
}

} // namespace inverspect
