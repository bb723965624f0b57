#pragma once

// Spectrum reconstruction: IDCT, pseudo-inverse, truncated SVD, ridge and the
// Loris-Verhoeven primal-dual solver for the l1-penalised least squares.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "analysis.hpp"
#include "core.hpp"
#include "forward.hpp"
#include "parallel.hpp"

namespace inverspect {

// ---------------------------------------------------------------------------
// DCT pair
// ---------------------------------------------------------------------------

/// Unnormalised DCT-II kernel C_lk = cos(pi/K (k + 1/2) l), K x K.
inline Matrix dct_kernel(Eigen::Index K)
{
    Matrix c(K, K);
    const double w = std::numbers::pi / static_cast<double>(K);
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index l = 0; l < K; ++l)
            c(l, k) = std::cos(w * (static_cast<double>(k) + 0.5) * static_cast<double>(l));
    return c;
}

/// Y_l = sum_k v_k cos(pi/K (k + 1/2) l).
inline Vector dct2(const Vector& v)
{
    detail::require(v.size() >= 1, "DCT needs at least one sample");
    return dct_kernel(v.size()) * v;
}

/// Inverse of dct2: v_k = Y_0 / K + (2/K) sum_{l>=1} Y_l cos(pi/K (k + 1/2) l).
inline Vector dct3(const Vector& y)
{
    detail::require(y.size() >= 1, "DCT needs at least one sample");
    const auto K = static_cast<double>(y.size());
    Vector out = (2.0 / K) * (dct_kernel(y.size()).transpose() * y);
    out.array() -= y(0) / K;
    return out;
}

// ---------------------------------------------------------------------------
// Prior operators
// ---------------------------------------------------------------------------

enum class PriorKind { identity, orthogonal_dct };

inline const char* to_string(PriorKind p)
{
    return p == PriorKind::identity ? "identity" : "orthogonal-dct";
}

inline PriorKind prior_from_string(const std::string& s)
{
    if (s == "identity" || s == "id") return PriorKind::identity;
    if (s == "orthogonal-dct" || s == "dct") return PriorKind::orthogonal_dct;
    throw ConfigError("unknown prior '" + s + "' (expected identity or dct)");
}

/// Sparsifying transform in the l1 penalty. The orthogonal DCT has entries
/// sqrt(2/K) cos(pi/K (j + 1/2) i) with row 0 divided by sqrt(2).
class PriorOperator {
public:
    PriorOperator(PriorKind kind, Eigen::Index dimension) : kind_(kind), dim_(dimension)
    {
        detail::require(dimension >= 1, "prior dimension must be positive");
        if (kind_ == PriorKind::orthogonal_dct) {
            matrix_ = std::sqrt(2.0 / static_cast<double>(dim_)) * dct_kernel(dim_);
            matrix_.row(0) /= std::sqrt(2.0);
        }
    }

    PriorKind kind() const noexcept { return kind_; }
    Eigen::Index dimension() const noexcept { return dim_; }

    /// Dense form (identity materialised on demand).
    Matrix matrix() const
    {
        return kind_ == PriorKind::identity ? Matrix(Matrix::Identity(dim_, dim_)) : matrix_;
    }

    template <class Derived>
    Matrix apply(const Eigen::MatrixBase<Derived>& x) const
    {
        return kind_ == PriorKind::identity ? Matrix(x) : Matrix(matrix_ * x);
    }

    template <class Derived>
    Matrix apply_transpose(const Eigen::MatrixBase<Derived>& u) const
    {
        return kind_ == PriorKind::identity ? Matrix(u) : Matrix(matrix_.transpose() * u);
    }

private:
    PriorKind kind_;
    Eigen::Index dim_;
    Matrix matrix_;
};

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

enum class Method { idct, pinv, tsvd, rr, lv_id, lv_dct };

inline const char* to_string(Method m)
{
    switch (m) {
    case Method::idct: return "idct";
    case Method::pinv: return "pinv";
    case Method::tsvd: return "tsvd";
    case Method::rr: return "rr";
    case Method::lv_id: return "lv-id";
    case Method::lv_dct: return "lv-dct";
    }
    return "pinv";
}

inline Method method_from_string(const std::string& s)
{
    if (s == "idct") return Method::idct;
    if (s == "pinv") return Method::pinv;
    if (s == "tsvd") return Method::tsvd;
    if (s == "rr" || s == "ridge") return Method::rr;
    if (s == "lv-id") return Method::lv_id;
    if (s == "lv-dct") return Method::lv_dct;
    throw ConfigError("unknown method '" + s + "'");
}

/// Whether the method takes a regularisation parameter.
inline bool uses_lambda(Method m) { return m != Method::idct && m != Method::pinv; }

struct SolverDiagnostics {
    int iterations = 0;
    std::vector<double> objective_trace; ///< 0.5 ||y - Ax||^2 + lambda ||Lx||_1
    std::vector<int> trace_iterations;   ///< iterate index of each trace entry
    double final_residual = 0.0;         ///< ||x_q - x_{q-1}|| / max(||x_q||, 1e-300)
    double tau = 0.0;
    double eta = 0.0;
    double rho = 0.0;
};

struct ReconstructionResult {
    SpectrumSet spectra;
    Method method;
    double lambda = 0.0;
    std::vector<SolverDiagnostics> diagnostics; ///< one per column, iterative methods only
};

// ---------------------------------------------------------------------------
// IDCT
// ---------------------------------------------------------------------------

/// Per-wavenumber modulation weights q and the fraction beta of y(0) that is
/// attributed to the constant term: x = dct3(y - beta y_0) / q.
struct IdctWeights {
    Vector q;
    double dc_fraction = 0.5;
};

/// TBI: q = 2T, beta = 1/2. MBI: q = C_1 = 2 Q R (the first harmonic) and
/// beta = sum C_0 / sum A(0, sigma), which is (1 - R)/(1 + R) for constant R.
inline IdctWeights idct_weights(const InstrumentProfile& profile, const WavenumberGrid& grid)
{
    const auto K = static_cast<Eigen::Index>(grid.size());
    IdctWeights w;
    w.q.resize(K);
    if (profile.regime() == Regime::tbi) {
        for (Eigen::Index k = 0; k < K; ++k)
            w.q(k) = 2.0 * profile.transmittance()(grid[static_cast<std::size_t>(k)]);
        w.dc_fraction = 0.5;
        return w;
    }
    double c0 = 0.0;
    double peak = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
        const double sigma = grid[static_cast<std::size_t>(k)];
        const double t = profile.transmittance()(sigma);
        const double r = (*profile.reflectivity())(sigma);
        w.q(k) = harmonic_coefficient(1, r, t);
        c0 += harmonic_coefficient(0, r, t);
        peak += mbi_airy_response(0.0, sigma, r, t);
    }
    w.dc_fraction = peak > 0.0 ? c0 / peak : 0.5;
    return w;
}

/// Inverse DCT reconstruction. The schedule must start at delta = 0 and the
/// (schedule, grid) pair must satisfy the DCT relations.
inline ReconstructionResult idct_reconstruct(const InterferogramSet& y, const IdctWeights& w,
                                             const WavenumberGrid& grid)
{
    const auto& s = y.schedule();
    const std::size_t K = grid.size();
    if (!s.regular()) throw ConfigError("IDCT needs a regular OPD schedule");
    if (s[0] != 0.0)
        throw ConfigError("IDCT needs a sample at delta = 0; extrapolate the schedule first");
    if (s.size() != K) throw ConfigError("IDCT needs as many OPD samples as wavenumbers");
    const double dd = *s.step();
    const double ds = 1.0 / (2.0 * static_cast<double>(K) * dd);
    for (std::size_t k = 0; k < K; ++k)
        if (std::abs(grid[k] - (static_cast<double>(k) + 0.5) * ds) > kDctGridTolerance)
            throw ConfigError("wavenumber grid is not the DCT grid of this OPD schedule");
    if (w.q.size() != static_cast<Eigen::Index>(K))
        throw ConfigError("IDCT weight vector length differs from the grid size");
    if ((w.q.array() == 0.0).any()) throw ConfigError("IDCT weights contain zeros");

    const auto Ki = static_cast<Eigen::Index>(K);
    const Matrix ct = dct_kernel(Ki).transpose();
    Matrix x(Ki, y.cols());
    for (Eigen::Index m = 0; m < y.cols(); ++m) {
        Vector col = y.values().col(m);
        col.array() -= w.dc_fraction * col(0);
        Vector v = (2.0 / static_cast<double>(K)) * (ct * col);
        v.array() -= col(0) / static_cast<double>(K);
        x.col(m) = v.cwiseQuotient(w.q);
    }
    return {SpectrumSet(grid, std::move(x), y.labels()), Method::idct, 0.0, {}};
}

// ---------------------------------------------------------------------------
// SVD filters
// ---------------------------------------------------------------------------

/// Thin SVD of a transfer matrix, computed once and reused by every SVD filter.
class Decomposition {
public:
    explicit Decomposition(const TransferMatrix& a, double rank_tol = kDefaultRankTolerance)
        : grid_(a.grid()), rank_tol_(rank_tol)
    {
        detail::require(rank_tol > 0.0 && rank_tol < 1.0, "rank tolerance must lie in (0, 1)");
        Eigen::BDCSVD<Matrix> svd(a.entries(), Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
        u_ = svd.matrixU();
        v_ = svd.matrixV();
        s_ = svd.singularValues();
        if (!s_.allFinite()) throw NumericError("SVD produced non-finite singular values");
        rank_ = detail::numerical_rank(s_, rank_tol);
        rows_ = a.rows();
    }

    const Matrix& u() const noexcept { return u_; }
    const Matrix& v() const noexcept { return v_; }
    const Vector& singular_values() const noexcept { return s_; }
    Eigen::Index rank() const noexcept { return rank_; }
    Eigen::Index rows() const noexcept { return rows_; }
    double rank_tolerance() const noexcept { return rank_tol_; }
    const WavenumberGrid& grid() const noexcept { return grid_; }

    /// X = V diag(f) U^T Y.
    Matrix apply_filter(const Vector& f, const Matrix& y) const
    {
        if (y.rows() != rows_)
            throw ConfigError("interferogram rows differ from the transfer-matrix rows");
        return v_ * (f.asDiagonal() * (u_.transpose() * y));
    }

private:
    WavenumberGrid grid_;
    double rank_tol_;
    Matrix u_;
    Matrix v_;
    Vector s_;
    Eigen::Index rank_ = 0;
    Eigen::Index rows_ = 0;
};

namespace detail {

inline void check_schedule(const Decomposition& d, const InterferogramSet& y)
{
    if (y.rows() != d.rows())
        throw ConfigError("interferogram rows differ from the transfer-matrix rows");
}

inline ReconstructionResult filtered(const Decomposition& d, const InterferogramSet& y,
                                     const Vector& f, Method m, double lambda)
{
    check_schedule(d, y);
    return {SpectrumSet(d.grid(), d.apply_filter(f, y.values()), y.labels()), m, lambda, {}};
}

} // namespace detail

/// X = A^+ Y, singular values below the rank tolerance treated as zero.
inline ReconstructionResult pinv_reconstruct(const Decomposition& d, const InterferogramSet& y)
{
    const Vector& s = d.singular_values();
    Vector f = Vector::Zero(s.size());
    for (Eigen::Index r = 0; r < d.rank(); ++r) f(r) = 1.0 / s(r);
    return detail::filtered(d, y, f, Method::pinv, 0.0);
}

/// Keeps 1/psi_r for r < lambda R_A (at least one value) and zeroes the rest.
/// The product lambda R_A is snapped to an integer when within 1e-9 of one so
/// that, e.g., 0.6 * 40 keeps exactly 24 values.
inline ReconstructionResult tsvd_reconstruct(const Decomposition& d, const InterferogramSet& y,
                                             double lambda)
{
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw ConfigError("TSVD parameter must lie in (0, 1], got " + std::to_string(lambda));
    const double bound = lambda * static_cast<double>(d.rank());
    const double snapped = std::abs(bound - std::round(bound)) < 1e-9 ? std::round(bound) : bound;
    const auto keep = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(snapped)), 1,
                                               std::max<Eigen::Index>(d.rank(), 1));
    const Vector& s = d.singular_values();
    Vector f = Vector::Zero(s.size());
    for (Eigen::Index r = 0; r < std::min(keep, d.rank()); ++r) f(r) = 1.0 / s(r);
    return detail::filtered(d, y, f, Method::tsvd, lambda);
}

/// Ridge filter psi / (psi^2 + lambda^2); solves (A^T A + lambda^2 I) x = A^T y.
/// lambda = 0 falls back to the pseudo-inverse.
inline ReconstructionResult ridge_reconstruct(const Decomposition& d, const InterferogramSet& y,
                                              double lambda)
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw ConfigError("ridge parameter must be finite and >= 0");
    if (lambda == 0.0) {
        auto r = pinv_reconstruct(d, y);
        r.method = Method::rr;
        return r;
    }
    const Vector& s = d.singular_values();
    const Vector f = s.array() / (s.array().square() + lambda * lambda);
    return detail::filtered(d, y, f, Method::rr, lambda);
}

inline ReconstructionResult pinv_reconstruct(const TransferMatrix& a, const InterferogramSet& y)
{
    return pinv_reconstruct(Decomposition(a), y);
}

inline ReconstructionResult tsvd_reconstruct(const TransferMatrix& a, const InterferogramSet& y,
                                             double lambda)
{
    return tsvd_reconstruct(Decomposition(a), y, lambda);
}

inline ReconstructionResult ridge_reconstruct(const TransferMatrix& a, const InterferogramSet& y,
                                              double lambda)
{
    return ridge_reconstruct(Decomposition(a), y, lambda);
}

// ---------------------------------------------------------------------------
// Loris-Verhoeven
// ---------------------------------------------------------------------------

/// Power iteration on M^T M from the normalised all-ones vector. Stops when
/// the Rayleigh quotient changes by less than tol (relative).
inline double operator_norm(const Matrix& m, double tol = 1e-6, int max_iters = 100000)
{
    detail::require(m.size() > 0, "operator norm of an empty matrix");
    detail::require(tol > 0.0 && max_iters >= 1, "invalid power-iteration settings");
    Vector v = Vector::Ones(m.cols()) / std::sqrt(static_cast<double>(m.cols()));
    double prev = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Vector w = m.transpose() * (m * v);
        const double lambda = v.dot(w);
        const double n = w.norm();
        if (!std::isfinite(n)) throw NumericError("power iteration produced non-finite values");
        if (n == 0.0) return 0.0;
        v = w / n;
        if (it > 0 && std::abs(lambda - prev) <= tol * std::abs(lambda))
            return std::sqrt(std::max(lambda, 0.0));
        prev = lambda;
    }
    throw NumericError("power iteration did not converge in " + std::to_string(max_iters) +
                       " iterations");
}

/// Proximal map of the conjugate of lambda ||.||_1: clipping onto [-lambda, lambda].
inline Vector prox_conj_l1(const Vector& u, double lambda)
{
    detail::require(lambda >= 0.0, "prox threshold must be >= 0");
    return u.cwiseMax(-lambda).cwiseMin(lambda);
}

/// Starting point of the primal iterate.
enum class LvInit {
    adjoint, ///< x0 = A^T y
    scaled,  ///< x0 = A^T y / ||A||^2
    zero,    ///< x0 = 0
};

inline const char* to_string(LvInit i)
{
    switch (i) {
    case LvInit::adjoint: return "adjoint";
    case LvInit::scaled: return "scaled";
    case LvInit::zero: return "zero";
    }
    return "adjoint";
}

inline LvInit lv_init_from_string(const std::string& s)
{
    if (s == "adjoint") return LvInit::adjoint;
    if (s == "scaled") return LvInit::scaled;
    if (s == "zero") return LvInit::zero;
    throw ConfigError("unknown LV initialisation '" + s + "'");
}

/// Called after every iteration q >= 1 with (q, x, u_half, u).
using LvObserver =
    std::function<void(int, const Vector&, const Vector&, const Vector&)>;

struct LvOptions {
    int iterations = 1000;
    LvInit init = LvInit::adjoint;
    double rho = 1.9;
    double tau_factor = 0.99;
    int trace_stride = 10; ///< objective recorded every stride iterations, plus the last
    LvObserver observer{}; ///< invoked from worker threads when M > 1
};

/// 0.5 ||y - A x||^2 + lambda ||L x||_1.
inline double lasso_objective(const Matrix& a, const Vector& y, const Vector& x, double lambda,
                              const PriorOperator& prior)
{
    return 0.5 * (y - a * x).squaredNorm() + lambda * prior.apply(x).lpNorm<1>();
}

/// Operator norms for one transfer matrix, computed once by power iteration.
struct LvOperator {
    const TransferMatrix* matrix = nullptr;
    double norm_a = 0.0;
    Matrix gram; ///< A^T A when K < 2L, empty otherwise

    explicit LvOperator(const TransferMatrix& a) : matrix(&a)
    {
        norm_a = operator_norm(a.entries());
        if (!(norm_a > 0.0)) throw NumericError("transfer matrix has zero operator norm");
        if (a.cols() < 2 * a.rows()) gram = a.entries().transpose() * a.entries();
    }
};

namespace detail {

/// Columns are iterated together in blocks of this size.
inline constexpr Eigen::Index kLvBlock = 16;

/// Runs the iteration on a block of columns at once. Every column follows
/// exactly the per-column recursion; batching only turns GEMVs into GEMMs.
inline Matrix lv_block(const LvOperator& op, const Matrix& y, double lambda,
                       const PriorOperator& prior, double norm_l, const LvOptions& opt,
                       SolverDiagnostics* diag)
{
    const Matrix& a = op.matrix->entries();
    const Eigen::Index n = y.cols();
    const double tau = opt.tau_factor / (op.norm_a * op.norm_a);
    const double eta = 1.0 / (tau * norm_l * norm_l);
    const double rho = opt.rho;

    const Matrix aty = a.transpose() * y;
    Matrix x;
    switch (opt.init) {
    case LvInit::adjoint: x = aty; break;
    case LvInit::scaled: x = aty / (op.norm_a * op.norm_a); break;
    case LvInit::zero: x = Matrix::Zero(a.cols(), n); break;
    }
    Matrix u = prior.apply(x);
    Matrix ltu = prior.apply_transpose(u);
    const bool use_gram = op.gram.size() > 0;

    auto record = [&](int q, const Matrix& xq) {
        const Matrix r = y - a * xq;
        const Matrix lx = prior.apply(xq);
        for (Eigen::Index j = 0; j < n; ++j) {
            diag[j].objective_trace.push_back(0.5 * r.col(j).squaredNorm() +
                                              lambda * lx.col(j).lpNorm<1>());
            diag[j].trace_iterations.push_back(q);
        }
    };
    const int stride = std::max(1, opt.trace_stride);
    record(0, x);

    Matrix e, xh, uh, ltuh, prev;
    for (int q = 1; q <= opt.iterations; ++q) {
        if (use_gram) {
            e.noalias() = op.gram * x;
            e -= aty;
        } else {
            e.noalias() = a.transpose() * (a * x - y);
        }
        xh = x - tau * (e + ltu);
        uh = (u + eta * prior.apply(xh)).cwiseMax(-lambda).cwiseMin(lambda);
        ltuh = prior.apply_transpose(uh);
        if (q == opt.iterations) prev = x;
        x -= rho * tau * (e + ltuh);
        u += rho * (uh - u);
        ltu += rho * (ltuh - ltu);

        if ((q & 63) == 0 || q == opt.iterations)
            if (!x.allFinite() || !u.allFinite())
                throw NumericError("LV iterates became non-finite at iteration " +
                                   std::to_string(q));
        if (opt.observer)
            for (Eigen::Index j = 0; j < n; ++j)
                opt.observer(q, x.col(j), uh.col(j), u.col(j));
        if (q % stride == 0 || q == opt.iterations) record(q, x);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        diag[j].iterations = opt.iterations;
        diag[j].final_residual = (x.col(j) - prev.col(j)).norm() / std::max(x.col(j).norm(), 1e-300);
        diag[j].tau = tau;
        diag[j].eta = eta;
        diag[j].rho = rho;
    }
    return x;
}

} // namespace detail

/// Loris-Verhoeven iteration for min 0.5 ||y - A x||^2 + lambda ||L x||_1, run
/// for a fixed number of iterations on every column independently:
///   e = A^T (A x - y)
///   x_h = x - tau (e + L^T u)
///   u_h = clip(u + eta L x_h, lambda)
///   x <- x - rho tau (e + L^T u_h)
///   u <- u + rho (u_h - u)
/// with tau = 0.99 / ||A||^2, eta = 1 / (tau ||L||^2), rho = 1.9.
inline ReconstructionResult lv_reconstruct(const LvOperator& op, const InterferogramSet& y,
                                           double lambda, const PriorOperator& prior,
                                           const LvOptions& opt = {})
{
    const TransferMatrix& a = *op.matrix;
    detail::require(opt.iterations >= 1, "LV needs at least one iteration");
    detail::require(lambda >= 0.0 && std::isfinite(lambda), "LV lambda must be finite and >= 0");
    detail::require(opt.rho > 0.0 && opt.rho < 2.0, "LV relaxation must lie in (0, 2)");
    detail::require(opt.tau_factor > 0.0 && opt.tau_factor < 1.0,
                    "LV step factor must lie in (0, 1)");
    if (y.rows() != a.rows())
        throw ConfigError("interferogram rows differ from the transfer-matrix rows");
    if (prior.dimension() != a.cols())
        throw ConfigError("prior dimension differs from the number of wavenumbers");

    const double norm_l =
        prior.kind() == PriorKind::identity ? 1.0 : operator_norm(prior.matrix());

    const Eigen::Index m_total = y.cols();
    Matrix x(a.cols(), m_total);
    std::vector<SolverDiagnostics> diags(static_cast<std::size_t>(m_total));
    const auto blocks = static_cast<std::size_t>((m_total + detail::kLvBlock - 1) / detail::kLvBlock);
    parallel_for(blocks, [&](std::size_t b) {
        const Eigen::Index start = static_cast<Eigen::Index>(b) * detail::kLvBlock;
        const Eigen::Index n = std::min(detail::kLvBlock, m_total - start);
        x.middleCols(start, n) = detail::lv_block(op, y.values().middleCols(start, n), lambda, prior,
                                                  norm_l, opt, diags.data() + start);
    });
    const Method method = prior.kind() == PriorKind::identity ? Method::lv_id : Method::lv_dct;
    return {SpectrumSet(a.grid(), std::move(x), y.labels()), method, lambda, std::move(diags)};
}

inline ReconstructionResult lv_reconstruct(const TransferMatrix& a, const InterferogramSet& y,
                                           double lambda, const PriorOperator& prior,
                                           const LvOptions& opt = {})
{
    return lv_reconstruct(LvOperator(a), y, lambda, prior, opt);
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

struct ReconstructParams {
    double lambda = 0.0;
    LvOptions lv{};
    double rank_tolerance = kDefaultRankTolerance;
    /// IDCT weights; derived from row 0 of a TBI-shaped matrix when absent.
    std::optional<IdctWeights> idct{};
};

/// Reusable per-matrix state: the SVD and the LV operator norms are built
/// lazily and shared across calls (e.g. over a lambda grid).
class Reconstructor {
public:
    explicit Reconstructor(const TransferMatrix& a) : a_(a) {}

    const TransferMatrix& matrix() const noexcept { return a_; }

    const Decomposition& decomposition(double rank_tol = kDefaultRankTolerance)
    {
        if (!svd_ || svd_->rank_tolerance() != rank_tol) svd_.emplace(a_, rank_tol);
        return *svd_;
    }

    const LvOperator& lv_operator()
    {
        if (!lv_) lv_.emplace(a_);
        return *lv_;
    }

    const PriorOperator& prior(PriorKind kind)
    {
        auto& slot = kind == PriorKind::identity ? prior_id_ : prior_dct_;
        if (!slot) slot.emplace(kind, a_.cols());
        return *slot;
    }

    ReconstructionResult run(Method method, const InterferogramSet& y,
                             const ReconstructParams& p = {})
    {
        switch (method) {
        case Method::idct: {
            IdctWeights w;
            if (p.idct) {
                w = *p.idct;
            } else {
                if (a_.provenance() != Provenance::tbi_closed_form &&
                    a_.provenance() != Provenance::dct_ii)
                    throw ConfigError("IDCT on a non-TBI matrix needs explicit weights");
                w.q = a_.entries().row(0).transpose() / 2.0;
                w.dc_fraction = 0.5;
            }
            return idct_reconstruct(y, w, a_.grid());
        }
        case Method::pinv: return pinv_reconstruct(decomposition(p.rank_tolerance), y);
        case Method::tsvd: return tsvd_reconstruct(decomposition(p.rank_tolerance), y, p.lambda);
        case Method::rr: return ridge_reconstruct(decomposition(p.rank_tolerance), y, p.lambda);
        case Method::lv_id:
            return lv_reconstruct(lv_operator(), y, p.lambda, prior(PriorKind::identity), p.lv);
        case Method::lv_dct:
            return lv_reconstruct(lv_operator(), y, p.lambda, prior(PriorKind::orthogonal_dct),
                                  p.lv);
        }
        throw ConfigError("unknown method");
    }

private:
    const TransferMatrix& a_;
    std::optional<Decomposition> svd_;
    std::optional<LvOperator> lv_;
    std::optional<PriorOperator> prior_id_;
    std::optional<PriorOperator> prior_dct_;
};

inline ReconstructionResult reconstruct(Method method, const TransferMatrix& a,
                                        const InterferogramSet& y,
                                        const ReconstructParams& p = {})
{
    Reconstructor r(a);
    return r.run(method, y, p);
}

} // namespace inverspect
