#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "inverspect/analysis.hpp"
#include "inverspect/inversion.hpp"

using namespace inverspect;

namespace {

InstrumentProfile mbi(double r, OpdSchedule opds, double t = 1.0)
{
    return InstrumentProfile(Regime::mbi, OpticalCurve::constant(t), OpticalCurve::constant(r),
                             std::move(opds));
}

} // namespace

TEST(Svd, DiagonalMatrix)
{
    Matrix d = Matrix::Zero(4, 3);
    d(0, 0) = 2.0;
    d(1, 1) = 8.0;
    d(2, 2) = 0.5;
    const auto s = svd_analysis(d);
    EXPECT_NEAR(s.singular_values(0), 8.0, 1e-14);
    EXPECT_NEAR(s.singular_values(2), 0.5, 1e-14);
    EXPECT_EQ(s.rank, 3);
    EXPECT_FALSE(s.rank_deficient);
    EXPECT_NEAR(s.condition_number, 16.0, 1e-12);
    EXPECT_NEAR(s.full_condition_number(), 16.0, 1e-12);
}

TEST(Svd, RankDeficiencyIsReported)
{
    Matrix m(4, 3);
    m << 1, 2, 1, 3, 1, 3, 0, 5, 0, 2, 2, 2; // columns 0 and 2 equal
    const auto s = svd_analysis(m);
    EXPECT_EQ(s.rank, 2);
    EXPECT_TRUE(s.rank_deficient);
    EXPECT_TRUE(std::isfinite(s.condition_number));
    EXPECT_TRUE(std::isinf(s.full_condition_number()));
    EXPECT_THROW(svd_analysis(m, 0.0), ConfigError);
}

TEST(Svd, MatchesGramEigenvalues)
{
    const auto g = make_regular_grid(1.0, 2.5, 30);
    const auto a = build_transfer_matrix(mbi(0.4, OpdSchedule::regular(0, 0.2, 40)), g);
    const auto s = svd_analysis(a);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a.entries().transpose() * a.entries());
    const Vector ev = eig.eigenvalues().reverse();
    for (Eigen::Index i = 0; i < 5; ++i)
        EXPECT_NEAR(s.singular_values(i), std::sqrt(ev(i)), 1e-9 * s.singular_values(0));
}

TEST(Svd, ConditionNumberIsScaleInvariant)
{
    const auto g = make_regular_grid(1.0, 2.5, 25);
    const auto a = build_transfer_matrix(mbi(0.3, OpdSchedule::regular(0, 0.2, 25)), g);
    const double c = svd_analysis(a).condition_number;
    for (double alpha : {1e-3, 0.7, 250.0}) {
        const double ca = svd_analysis(Matrix(alpha * a.entries())).condition_number;
        EXPECT_NEAR(ca / c, 1.0, 1e-8);
    }
}

TEST(Svd, LargestSingularValueIsOperatorNorm)
{
    const auto g = make_dct_grids(48, 0.175);
    const auto a = build_transfer_matrix(mbi(0.2, g.opds), g.wavenumbers);
    const double psi1 = svd_analysis(a).singular_values(0);
    EXPECT_NEAR(operator_norm(a.entries(), 1e-12) / psi1, 1.0, 1e-6);
}

TEST(Svd, ZeroReflectivityIsRankOne)
{
    const auto g = make_regular_grid(1.0, 2.5, 20);
    const auto a = build_transfer_matrix(mbi(0.0, OpdSchedule::regular(0, 0.2, 20)), g);
    const auto s = svd_analysis(a);
    EXPECT_EQ(s.rank, 1);
    EXPECT_TRUE(s.rank_deficient);
    EXPECT_DOUBLE_EQ(s.condition_number, 1.0);
}

TEST(Svd, TbiFullBandIsFullRank)
{
    for (std::size_t K : {16u, 64u}) {
        const auto g = make_dct_grids(K, 0.175);
        const InstrumentProfile p(Regime::tbi, OpticalCurve::constant(1.0), std::nullopt, g.opds);
        const auto s = svd_analysis(build_transfer_matrix(p, g.wavenumbers));
        EXPECT_EQ(s.rank, static_cast<Eigen::Index>(K));
        EXPECT_TRUE(std::isfinite(s.condition_number));
    }
}

TEST(Svd, DctKernelConditioning)
{
    const Eigen::Index K = 32;
    const Matrix c = dct_kernel(K);
    // Rows are mutually orthogonal with squared norms K (row 0) and K/2.
    const Matrix cct = c * c.transpose();
    EXPECT_NEAR(cct(0, 0), K, 1e-10);
    EXPECT_NEAR(cct(5, 5), K / 2.0, 1e-10);
    EXPECT_LT((cct - Matrix(cct.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(svd_analysis(c).condition_number, std::sqrt(2.0), 1e-10);
    EXPECT_NEAR(svd_analysis(PriorOperator(PriorKind::orthogonal_dct, K).matrix()).condition_number,
                1.0, 1e-10);
}

TEST(Harmonics, SumApproachesClosedForm)
{
    const auto g = make_regular_grid(1.0, 2.5, 30);
    const auto p = mbi(0.5, OpdSchedule::regular(0, 0.15, 25), 0.9);
    const auto a = build_transfer_matrix(p, g);
    for (int n : {1, 4, 12}) {
        const auto parts = harmonic_decomposition(p, g, n);
        ASSERT_EQ(static_cast<int>(parts.size()), n);
        Matrix sum = Matrix::Zero(a.rows(), a.cols());
        for (const auto& m : parts) sum += m;
        const double err = (a.entries() - sum).cwiseAbs().maxCoeff();
        EXPECT_LE(err, harmonic_tail_bound(0.5, 0.9, n) * (1.0 + 1e-12));
    }
    const auto parts = harmonic_decomposition(p, g, 3);
    const double q = 0.81 / 0.75;
    EXPECT_TRUE((parts[0].array() - q).abs().maxCoeff() < 1e-15);
    // The first harmonic is C1 times the cosine kernel.
    const Matrix ck = cosine_kernel(p.opds(), g);
    EXPECT_LT((parts[1] - 2.0 * q * 0.5 * ck).cwiseAbs().maxCoeff(), 1e-12);

    const InstrumentProfile tbi(Regime::tbi, OpticalCurve::constant(1.0), std::nullopt,
                                p.opds());
    EXPECT_THROW(harmonic_decomposition(tbi, g, 2), ConfigError);
}

TEST(Sweep, MatchesIndividualAnalyses)
{
    const auto g = make_regular_grid(1.0, 2.5, 40);
    const auto base = mbi(0.1, OpdSchedule::regular(0, 0.2, 30));
    const std::vector<double> rs{0.6, 0.1, 0.35};
    const auto sweep = reflectivity_sweep(base, g, rs);
    ASSERT_EQ(sweep.size(), 3u);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        EXPECT_EQ(sweep[i].reflectivity, rs[i]);
        const auto s = svd_analysis(build_transfer_matrix(base.with_constant_reflectivity(rs[i]), g));
        EXPECT_EQ(sweep[i].condition_number, s.condition_number);
        EXPECT_EQ(sweep[i].rank, s.rank);
    }
    EXPECT_THROW(reflectivity_sweep(base, g, {1.0}), ConfigError);
    EXPECT_THROW(reflectivity_sweep(base, g, {}), ConfigError);
}

TEST(DctEquivalence, TbiOnDctGrids)
{
    const auto g = make_dct_grids(40, 0.2);
    const InstrumentProfile p(Regime::tbi, OpticalCurve::constant(0.8), std::nullopt, g.opds);
    const auto rep = dct_equivalence_check(build_transfer_matrix(p, g.wavenumbers));
    EXPECT_TRUE(rep.grids_compatible);
    EXPECT_TRUE(rep.is_dct_compatible);
    EXPECT_LT(rep.max_deviation, 1e-12);
    EXPECT_NEAR(rep.opd_step, 0.2, 1e-15);
    EXPECT_TRUE(dct_equivalence_check(build_dct_transfer_matrix(40, 0.2, 0.8)).is_dct_compatible);
}

TEST(DctEquivalence, RejectsMbiAndOtherGrids)
{
    const auto g = make_dct_grids(40, 0.2);
    const auto a = build_transfer_matrix(mbi(0.2, g.opds), g.wavenumbers);
    const auto rep = dct_equivalence_check(a);
    EXPECT_TRUE(rep.grids_compatible);
    EXPECT_FALSE(rep.is_dct_compatible);

    const InstrumentProfile p(Regime::tbi, OpticalCurve::constant(1.0), std::nullopt, g.opds);
    const auto b = build_transfer_matrix(p, make_regular_grid(0.1, 2.5, 40));
    EXPECT_FALSE(dct_equivalence_check(b).grids_compatible);
    EXPECT_FALSE(dct_equivalence_check(b).is_dct_compatible);

    const auto c = build_transfer_matrix(
        InstrumentProfile(Regime::tbi, OpticalCurve::constant(1.0), std::nullopt,
                          OpdSchedule::regular(0.1, 0.2, 40)),
        g.wavenumbers);
    EXPECT_FALSE(dct_equivalence_check(c).is_dct_compatible);
}
