#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "inverspect/inversion.hpp"
#include "inverspect/random.hpp"

using namespace inverspect;

namespace {

TransferMatrix custom(const Matrix& m)
{
    return TransferMatrix(m, OpdSchedule::regular(0.0, 0.1, static_cast<std::size_t>(m.rows())),
                          make_regular_grid(1.0, 2.0, static_cast<std::size_t>(m.cols())),
                          Provenance::custom_loaded);
}

Matrix random_nonneg(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed)
{
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform();
    return m;
}

Vector soft(const Vector& v, double t)
{
    return v.unaryExpr([t](double x) { return std::copysign(std::max(std::abs(x) - t, 0.0), x); });
}

// Plain ISTA on min 0.5 ||y - B z||^2 + lambda ||z||_1.
Vector ista(const Matrix& b, const Vector& y, double lambda, int iters)
{
    Eigen::JacobiSVD<Matrix> svd(b);
    const double step = 1.0 / (svd.singularValues()(0) * svd.singularValues()(0));
    Vector z = Vector::Zero(b.cols());
    for (int i = 0; i < iters; ++i) z = soft(z - step * b.transpose() * (b * z - y), step * lambda);
    return z;
}

InterferogramSet ifg(const TransferMatrix& a, const Matrix& y)
{
    return InterferogramSet(a.schedule(), y);
}

} // namespace

TEST(Dct, PairRoundTrips)
{
    Rng rng(5);
    for (Eigen::Index K : {1, 2, 5, 64}) {
        Vector v(K);
        for (Eigen::Index k = 0; k < K; ++k) v(k) = rng.gaussian();
        EXPECT_LT((dct3(dct2(v)) - v).norm(), 1e-12 * std::max(1.0, v.norm())) << K;
        EXPECT_LT((dct2(dct3(v)) - v).norm(), 1e-12 * std::max(1.0, v.norm())) << K;
    }
}

TEST(Dct, KnownValues)
{
    Vector v = Vector::Zero(4);
    v(0) = 1.0;
    const Vector y = dct2(v);
    for (Eigen::Index l = 0; l < 4; ++l)
        EXPECT_NEAR(y(l), std::cos(std::numbers::pi / 4 * 0.5 * static_cast<double>(l)), 1e-15);
    EXPECT_NEAR(dct2(Vector::Ones(4))(0), 4.0, 1e-15);
    EXPECT_NEAR(dct2(Vector::Ones(4))(2), 0.0, 1e-15);
}

TEST(Prior, OrthogonalDctIsOrthogonal)
{
    const PriorOperator l(PriorKind::orthogonal_dct, 17);
    const Matrix m = l.matrix();
    EXPECT_LT((m * m.transpose() - Matrix::Identity(17, 17)).cwiseAbs().maxCoeff(), 1e-13);
    const Vector x = Vector::LinSpaced(17, -1.0, 3.0);
    EXPECT_LT((l.apply_transpose(l.apply(x)) - x).norm(), 1e-13);
    const PriorOperator id(PriorKind::identity, 4);
    EXPECT_TRUE(id.apply(Vector::Ones(4)) == Vector::Ones(4));
    EXPECT_EQ(prior_from_string("dct"), PriorKind::orthogonal_dct);
    EXPECT_EQ(prior_from_string("identity"), PriorKind::identity);
    EXPECT_THROW(prior_from_string("wavelet"), ConfigError);
}

TEST(MethodNames, RoundTrip)
{
    for (Method m : {Method::idct, Method::pinv, Method::tsvd, Method::rr, Method::lv_id,
                     Method::lv_dct})
        EXPECT_EQ(method_from_string(to_string(m)), m);
    EXPECT_FALSE(uses_lambda(Method::pinv));
    EXPECT_TRUE(uses_lambda(Method::tsvd));
    EXPECT_THROW(method_from_string("magic"), ConfigError);
}

TEST(Idct, RecoversTbiSpectraExactly)
{
    const std::size_t K = 48;
    const auto g = make_dct_grids(K, 0.175);
    const InstrumentProfile p(Regime::tbi, OpticalCurve::polynomial({0.6, 0.05}, 0.0, 3.0),
                              std::nullopt, g.opds);
    const auto a = build_transfer_matrix(p, g.wavenumbers);
    const Matrix x = random_nonneg(static_cast<Eigen::Index>(K), 3, 9);
    const auto y = ifg(a, a.entries() * x);
    const auto r = idct_reconstruct(y, idct_weights(p, g.wavenumbers), g.wavenumbers);
    EXPECT_LT((r.spectra.values() - x).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(r.method, Method::idct);
    // Weights derived from the matrix row give the same answer.
    const auto r2 = reconstruct(Method::idct, a, y);
    EXPECT_LT((r2.spectra.values() - x).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Idct, RejectsUnsuitableInputs)
{
    const auto g = make_dct_grids(16, 0.2);
    const InstrumentProfile p(Regime::tbi, OpticalCurve::constant(1.0), std::nullopt, g.opds);
    const auto w = idct_weights(p, g.wavenumbers);
    const Matrix y = Matrix::Ones(16, 1);
    EXPECT_THROW(idct_reconstruct(InterferogramSet(OpdSchedule::regular(0.2, 0.2, 16), y), w,
                                  g.wavenumbers),
                 ConfigError);
    EXPECT_THROW(idct_reconstruct(InterferogramSet(OpdSchedule::regular(0.0, 0.2, 15),
                                                   Matrix::Ones(15, 1)),
                                  w, g.wavenumbers),
                 ConfigError);
    std::vector<double> s(16);
    for (std::size_t i = 0; i < 16; ++i) s[i] = 0.2 * static_cast<double>(i) + (i == 7 ? 0.01 : 0.0);
    EXPECT_THROW(idct_reconstruct(InterferogramSet(OpdSchedule(s), y), w, g.wavenumbers),
                 ConfigError);
    EXPECT_THROW(idct_reconstruct(InterferogramSet(g.opds, y), w, make_regular_grid(1, 2, 16)),
                 ConfigError);
    IdctWeights zero = w;
    zero.q(3) = 0.0;
    EXPECT_THROW(idct_reconstruct(InterferogramSet(g.opds, y), zero, g.wavenumbers), ConfigError);

    const InstrumentProfile m(Regime::mbi, OpticalCurve::constant(1.0), OpticalCurve::constant(0.2),
                              g.opds);
    const auto a = build_transfer_matrix(m, g.wavenumbers);
    EXPECT_THROW(reconstruct(Method::idct, a, InterferogramSet(g.opds, y)), ConfigError);
}

TEST(Idct, MbiWeightsUseFirstHarmonic)
{
    const auto g = make_dct_grids(8, 0.2);
    const InstrumentProfile m(Regime::mbi, OpticalCurve::constant(1.0), OpticalCurve::constant(0.2),
                              g.opds);
    const auto w = idct_weights(m, g.wavenumbers);
    const double q = 1.0 / 0.96;
    EXPECT_NEAR(w.q(0), 2.0 * q * 0.2, 1e-15);
    EXPECT_NEAR(w.dc_fraction, q / 1.5625, 1e-12);
}

TEST(Pinv, ExactOnNoiselessFullRankData)
{
    const auto a = custom(random_nonneg(12, 6, 1));
    const Matrix x = random_nonneg(6, 2, 2);
    const auto r = pinv_reconstruct(a, ifg(a, a.entries() * x));
    EXPECT_LT((r.spectra.values() - x).norm(), 1e-10 * x.norm());
}

TEST(Pinv, MatchesLeastSquares)
{
    const auto a = custom(random_nonneg(10, 4, 3));
    const Matrix y = random_nonneg(10, 2, 4);
    const Matrix ls = a.entries().colPivHouseholderQr().solve(y);
    const auto r = pinv_reconstruct(a, ifg(a, y));
    EXPECT_LT((r.spectra.values() - ls).norm(), 1e-10 * ls.norm());
}

TEST(Tsvd, KeepCountFollowsLambda)
{
    const auto a = custom(random_nonneg(9, 5, 6));
    const auto y = ifg(a, random_nonneg(9, 1, 7));
    const auto full = tsvd_reconstruct(a, y, 1.0);
    const auto pinv = pinv_reconstruct(a, y);
    EXPECT_LT((full.spectra.values() - pinv.spectra.values()).norm(), 1e-12);

    Eigen::JacobiSVD<Matrix> svd(a.entries(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    auto truncated = [&](int keep) {
        Vector x = Vector::Zero(5);
        for (int r = 0; r < keep; ++r)
            x += svd.matrixV().col(r) * (svd.matrixU().col(r).dot(y.values().col(0)) /
                                         svd.singularValues()(r));
        return x;
    };
    // ceil(lambda * 5): 0.2 -> 1, 0.21 -> 2, 0.6 -> 3.
    EXPECT_LT((tsvd_reconstruct(a, y, 0.2).spectra.values().col(0) - truncated(1)).norm(), 1e-10);
    EXPECT_LT((tsvd_reconstruct(a, y, 0.21).spectra.values().col(0) - truncated(2)).norm(), 1e-10);
    EXPECT_LT((tsvd_reconstruct(a, y, 0.6).spectra.values().col(0) - truncated(3)).norm(), 1e-10);
    EXPECT_LT((tsvd_reconstruct(a, y, 1e-6).spectra.values().col(0) - truncated(1)).norm(), 1e-10);
    EXPECT_THROW(tsvd_reconstruct(a, y, 0.0), ConfigError);
    EXPECT_THROW(tsvd_reconstruct(a, y, 1.5), ConfigError);
}

TEST(Ridge, SolvesRegularisedNormalEquations)
{
    const auto a = custom(random_nonneg(14, 6, 8));
    const Matrix y = random_nonneg(14, 2, 9);
    for (double lambda : {0.01, 0.3, 2.0}) {
        const Matrix lhs =
            a.entries().transpose() * a.entries() + lambda * lambda * Matrix::Identity(6, 6);
        const Matrix ref = lhs.ldlt().solve(a.entries().transpose() * y);
        const auto r = ridge_reconstruct(a, ifg(a, y), lambda);
        EXPECT_LT((r.spectra.values() - ref).norm(), 1e-10 * ref.norm()) << lambda;
    }
    const auto r0 = ridge_reconstruct(a, ifg(a, y), 0.0);
    const auto p = pinv_reconstruct(a, ifg(a, y));
    EXPECT_LT((r0.spectra.values() - p.spectra.values()).norm(), 1e-12);
    EXPECT_THROW(ridge_reconstruct(a, ifg(a, y), -1.0), ConfigError);
}

TEST(Ridge, ShrinksAndScales)
{
    const auto a = custom(random_nonneg(10, 5, 10));
    const auto y = ifg(a, random_nonneg(10, 1, 11));
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {0.01, 0.1, 1.0, 10.0}) {
        const double n = ridge_reconstruct(a, y, lambda).spectra.values().norm();
        EXPECT_LT(n, prev);
        prev = n;
    }
    // (alpha A, alpha y, alpha lambda) gives the same solution.
    const double alpha = 3.5;
    const auto as = custom(alpha * a.entries());
    const auto ys = InterferogramSet(as.schedule(), alpha * y.values());
    EXPECT_LT((ridge_reconstruct(as, ys, alpha * 0.4).spectra.values() -
               ridge_reconstruct(a, y, 0.4).spectra.values())
                  .norm(),
              1e-10);
}

TEST(OperatorNorm, Examples)
{
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    EXPECT_NEAR(operator_norm(d), 3.0, 1e-6);
    EXPECT_NEAR(operator_norm(Matrix::Ones(2, 2)), 2.0, 1e-12);
    EXPECT_EQ(operator_norm(Matrix::Zero(3, 2)), 0.0);
    const Matrix m = random_nonneg(20, 7, 12);
    Eigen::JacobiSVD<Matrix> svd(m);
    EXPECT_NEAR(operator_norm(m, 1e-12) / svd.singularValues()(0), 1.0, 1e-8);
}

TEST(Prox, ClipsOntoBox)
{
    Vector u(5);
    u << -3.0, -0.5, 0.0, 0.2, 7.0;
    const Vector p = prox_conj_l1(u, 1.0);
    Vector expect(5);
    expect << -1.0, -0.5, 0.0, 0.2, 1.0;
    EXPECT_TRUE(p == expect);
    EXPECT_TRUE(prox_conj_l1(p, 1.0) == p);
    EXPECT_TRUE(prox_conj_l1(u, 0.0) == Vector::Zero(5));
    // Moreau: u = prox_{lambda f*}(u) + soft(u, lambda).
    EXPECT_LT((prox_conj_l1(u, 0.7) + soft(u, 0.7) - u).norm(), 1e-15);
    EXPECT_THROW(prox_conj_l1(u, -1.0), ConfigError);
}

TEST(Lv, IdentityOperatorGivesSoftThreshold)
{
    const auto a = custom(Matrix::Identity(6, 6));
    Matrix y(6, 1);
    y << 3.0, -0.2, 0.05, -2.0, 0.6, 0.0;
    const auto r = lv_reconstruct(a, InterferogramSet(a.schedule(), y), 0.5,
                                  PriorOperator(PriorKind::identity, 6), {.iterations = 400});
    EXPECT_LT((r.spectra.values().col(0) - soft(y.col(0), 0.5)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(r.method, Method::lv_id);
}

TEST(Lv, MatchesIstaWithIdentityPrior)
{
    const auto a = custom(random_nonneg(12, 6, 13));
    const Matrix y = random_nonneg(12, 1, 14);
    const double lambda = 0.05;
    const Vector ref = ista(a.entries(), y.col(0), lambda, 200000);
    const auto r = lv_reconstruct(a, ifg(a, y), lambda, PriorOperator(PriorKind::identity, 6),
                                  {.iterations = 20000});
    EXPECT_LT((r.spectra.values().col(0) - ref).norm(), 1e-6 * std::max(1.0, ref.norm()));
}

TEST(Lv, MatchesIstaWithDctPrior)
{
    const auto a = custom(random_nonneg(12, 6, 15));
    const Matrix y = random_nonneg(12, 1, 16);
    const double lambda = 0.05;
    const PriorOperator l(PriorKind::orthogonal_dct, 6);
    // With orthogonal L, substitute z = L x.
    const Vector z = ista(a.entries() * l.matrix().transpose(), y.col(0), lambda, 200000);
    const Vector ref = l.apply_transpose(z);
    const auto r = lv_reconstruct(a, ifg(a, y), lambda, l, {.iterations = 20000});
    EXPECT_LT((r.spectra.values().col(0) - ref).norm(), 1e-6 * std::max(1.0, ref.norm()));
    EXPECT_EQ(r.method, Method::lv_dct);
}

TEST(Lv, DualIterateStaysFeasible)
{
    const auto a = custom(random_nonneg(10, 8, 17));
    const Matrix y = random_nonneg(10, 1, 18);
    const double lambda = 0.02;
    double worst = 0.0;
    LvOptions opt;
    opt.iterations = 300;
    // Only the half step is clipped; the relaxed u may leave the box.
    opt.observer = [&](int, const Vector&, const Vector& uh, const Vector&) {
        worst = std::max(worst, uh.cwiseAbs().maxCoeff());
    };
    lv_reconstruct(a, ifg(a, y), lambda, PriorOperator(PriorKind::orthogonal_dct, 8), opt);
    EXPECT_LE(worst, lambda * (1.0 + 1e-12));
}

TEST(Lv, ZeroLambdaApproachesPinv)
{
    const auto a = custom(random_nonneg(15, 4, 19));
    const auto y = ifg(a, random_nonneg(15, 2, 20));
    const auto p = pinv_reconstruct(a, y);
    const auto r = lv_reconstruct(a, y, 0.0, PriorOperator(PriorKind::identity, 4),
                                  {.iterations = 20000, .init = LvInit::zero});
    EXPECT_LT((r.spectra.values() - p.spectra.values()).norm(), 1e-6 * p.spectra.values().norm());
}

TEST(Lv, DiagnosticsAndValidation)
{
    const auto a = custom(random_nonneg(8, 5, 21));
    const auto y = ifg(a, random_nonneg(8, 3, 22));
    const PriorOperator id(PriorKind::identity, 5);
    const auto r = lv_reconstruct(a, y, 0.1, id, {.iterations = 95, .trace_stride = 10});
    ASSERT_EQ(r.diagnostics.size(), 3u);
    const auto& d = r.diagnostics[0];
    EXPECT_EQ(d.iterations, 95);
    EXPECT_EQ(d.objective_trace.size(), 11u); // 0, 10, ..., 90, 95
    EXPECT_EQ(d.trace_iterations.back(), 95);
    EXPECT_LT(d.objective_trace.back(), d.objective_trace.front());
    const double norm = operator_norm(a.entries());
    EXPECT_NEAR(d.tau, 0.99 / (norm * norm), 1e-12);
    EXPECT_NEAR(d.eta * d.tau, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(d.rho, 1.9);

    EXPECT_THROW(lv_reconstruct(a, y, -0.1, id), ConfigError);
    EXPECT_THROW(lv_reconstruct(a, y, 0.1, id, {.rho = 2.0}), ConfigError);
    EXPECT_THROW(lv_reconstruct(a, y, 0.1, PriorOperator(PriorKind::identity, 4)), ConfigError);
    EXPECT_THROW(lv_reconstruct(a, y, 0.1, id, {.iterations = 0}), ConfigError);
}

TEST(Lv, IndependentOfThreadCountAndInit)
{
    const auto a = custom(random_nonneg(30, 12, 23));
    const auto y = ifg(a, random_nonneg(30, 5, 24));
    const PriorOperator l(PriorKind::orthogonal_dct, 12);
    set_max_threads(1);
    const auto r1 = lv_reconstruct(a, y, 0.05, l, {.iterations = 200});
    set_max_threads(4);
    const auto r4 = lv_reconstruct(a, y, 0.05, l, {.iterations = 200});
    set_max_threads(0);
    EXPECT_TRUE(r1.spectra == r4.spectra);

    // All starting points reach the same minimiser.
    Matrix prev;
    for (LvInit init : {LvInit::adjoint, LvInit::scaled, LvInit::zero}) {
        const auto r = lv_reconstruct(a, y, 0.05, l, {.iterations = 30000, .init = init});
        if (prev.size() > 0) {
            EXPECT_LT((r.spectra.values() - prev).norm(), 1e-6 * prev.norm());
        }
        prev = r.spectra.values();
    }
    EXPECT_EQ(lv_init_from_string("scaled"), LvInit::scaled);
    EXPECT_THROW(lv_init_from_string("random"), ConfigError);
}

TEST(Reconstructor, ReusesDecompositionAcrossMethods)
{
    const auto a = custom(random_nonneg(10, 6, 25));
    const auto y = ifg(a, random_nonneg(10, 2, 26));
    Reconstructor rec(a);
    const auto p1 = rec.run(Method::pinv, y);
    const auto p2 = pinv_reconstruct(a, y);
    EXPECT_TRUE(p1.spectra == p2.spectra);
    const auto rr = rec.run(Method::rr, y, {.lambda = 0.2});
    EXPECT_TRUE(rr.spectra == ridge_reconstruct(a, y, 0.2).spectra);
    EXPECT_EQ(rr.lambda, 0.2);
    EXPECT_THROW(rec.run(Method::pinv, InterferogramSet(OpdSchedule::regular(0, 0.1, 9),
                                                        Matrix::Ones(9, 1))),
                 ConfigError);
}
