#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "inverspect/core.hpp"
#include "inverspect/random.hpp"

using namespace inverspect;

TEST(WavenumberGrid, RegularGridIsEndpointInclusive)
{
    const auto g = make_regular_grid(1.0, 2.5, 101);
    ASSERT_EQ(g.size(), 101u);
    EXPECT_DOUBLE_EQ(g[0], 1.0);
    EXPECT_DOUBLE_EQ(g[100], 2.5);
    ASSERT_TRUE(g.regular());
    EXPECT_NEAR(*g.step(), 0.015, 1e-15);
}

TEST(WavenumberGrid, RejectsInvalidSamples)
{
    EXPECT_THROW(WavenumberGrid({}, 1.0, 2.0), ConfigError);
    EXPECT_THROW(WavenumberGrid({1.0, 1.0}, 1.0, 2.0), ConfigError);
    EXPECT_THROW(WavenumberGrid({1.5, 1.2}, 1.0, 2.0), ConfigError);
    EXPECT_THROW(WavenumberGrid({0.0, 1.0}, 0.0, 2.0), ConfigError);
    EXPECT_THROW(WavenumberGrid({1.0, 3.0}, 1.0, 2.0), ConfigError);
    EXPECT_THROW(WavenumberGrid({1.0, std::nan("")}, 1.0, 2.0), ConfigError);
    EXPECT_THROW(WavenumberGrid({1.0, 1.5, 1.7}, 1.0, 2.0, 0.5), ConfigError);
    EXPECT_THROW(make_regular_grid(2.0, 1.0, 10), ConfigError);
    EXPECT_THROW(make_regular_grid(1.0, 2.0, 1), ConfigError);
}

TEST(WavenumberGrid, FromSamplesDetectsRegularity)
{
    EXPECT_TRUE(WavenumberGrid::from_samples({1.0, 1.5, 2.0}).regular());
    EXPECT_FALSE(WavenumberGrid::from_samples({1.0, 1.5, 2.1}).regular());
}

TEST(OpdSchedule, RegularAndIrregular)
{
    const auto s = OpdSchedule::regular(0.0, 0.175, 319);
    EXPECT_EQ(s.size(), 319u);
    EXPECT_NEAR(s.max(), 318 * 0.175, 1e-12);
    EXPECT_TRUE(s.regular());
    const auto irr = OpdSchedule::from_samples({1.79, 2.0, 2.3, 2.35});
    EXPECT_FALSE(irr.regular());
    EXPECT_NEAR(irr.mean_step(), (2.35 - 1.79) / 3.0, 1e-15);
    EXPECT_THROW(OpdSchedule({-0.1, 0.2}), ConfigError);
    EXPECT_THROW(OpdSchedule({0.2, 0.2}), ConfigError);
    EXPECT_THROW(OpdSchedule::regular(0.0, 0.0, 3), ConfigError);
}

TEST(DctGrids, SatisfyProductRelation)
{
    const std::size_t K = 64;
    const double dd = 0.175;
    const auto g = make_dct_grids(K, dd);
    ASSERT_EQ(g.opds.size(), K);
    ASSERT_EQ(g.wavenumbers.size(), K);
    const double ds = *g.wavenumbers.step();
    EXPECT_NEAR(ds * dd, 1.0 / (2.0 * K), 1e-15);
    for (std::size_t k = 0; k < K; ++k) EXPECT_NEAR(g.wavenumbers[k], (k + 0.5) * ds, 1e-13);
    EXPECT_DOUBLE_EQ(g.opds[0], 0.0);
    EXPECT_NEAR(g.wavenumbers.max(), 1.0 / (2.0 * dd), 1e-15);
}

TEST(OpticalCurve, ConstantPolynomialTabulated)
{
    EXPECT_DOUBLE_EQ(OpticalCurve::constant(0.2)(7.0), 0.2);
    const auto p = OpticalCurve::polynomial({0.1, 0.1}, 1.0, 2.0);
    EXPECT_NEAR(p(1.5), 0.25, 1e-15);
    const auto t = OpticalCurve::tabulated({1.0, 2.0, 3.0}, {0.0, 0.5, 0.3});
    EXPECT_NEAR(t(1.5), 0.25, 1e-15);
    EXPECT_NEAR(t(2.5), 0.4, 1e-15);
    EXPECT_NEAR(t.max_over({1.0, 2.0, 2.9}), 0.5, 1e-15);
}

TEST(OpticalCurve, RejectsOutOfRange)
{
    EXPECT_THROW(OpticalCurve::constant(1.2), ConfigError);
    EXPECT_THROW(OpticalCurve::constant(-0.01), ConfigError);
    // Degree 6 exceeds the cap.
    EXPECT_THROW(OpticalCurve::polynomial({0.1, 0, 0, 0, 0, 0, 0.001}, 1.0, 2.0), ConfigError);
    // Leaves [0, 1] inside its range.
    EXPECT_THROW(OpticalCurve::polynomial({0.0, 0.8}, 1.0, 2.0), ConfigError);
    EXPECT_THROW(OpticalCurve::tabulated({1.0, 2.0}, {0.1, 1.1}), ConfigError);
    const auto p = OpticalCurve::polynomial({0.2}, 1.0, 2.0);
    EXPECT_THROW(p(2.5), ConfigError);
}

TEST(InstrumentProfile, MbiNeedsReflectivity)
{
    EXPECT_THROW(InstrumentProfile(Regime::mbi, OpticalCurve::constant(1.0), std::nullopt,
                                   OpdSchedule::regular(0, 0.2, 5)),
                 ConfigError);
    const InstrumentProfile tbi(Regime::tbi, OpticalCurve::constant(1.0), std::nullopt,
                                OpdSchedule::regular(0, 0.2, 5));
    const auto mbi = tbi.with_constant_reflectivity(0.4);
    EXPECT_EQ(mbi.regime(), Regime::mbi);
    EXPECT_DOUBLE_EQ((*mbi.reflectivity())(1.0), 0.4);
}

TEST(InstrumentProfile, GeometryDefinesOpds)
{
    const auto p = InstrumentProfile::from_geometry(Regime::mbi, OpticalCurve::constant(1.0),
                                                    OpticalCurve::constant(0.2), 1.5, 0.1, 1.0,
                                                    0.05, 10);
    ASSERT_EQ(p.opds().size(), 10u);
    EXPECT_NEAR(p.opds()[3], 2.0 * 1.5 * 1.15 * std::cos(0.1), 1e-12);

    Geometry g{1.0, 0.0, 0.1, {0.0, 0.1, 0.2}};
    EXPECT_NO_THROW(InstrumentProfile(Regime::tbi, OpticalCurve::constant(1.0), std::nullopt,
                                      OpdSchedule({0.0, 0.2, 0.4}), g));
    EXPECT_THROW(InstrumentProfile(Regime::tbi, OpticalCurve::constant(1.0), std::nullopt,
                                   OpdSchedule({0.0, 0.2, 0.5}), g),
                 ConfigError);
}

TEST(Signals, ShapeAndLabelChecks)
{
    const auto g = make_regular_grid(1.0, 2.0, 4);
    EXPECT_THROW(SpectrumSet(g, Matrix::Zero(3, 2)), ConfigError);
    const SpectrumSet x(g, Matrix::Zero(4, 2));
    EXPECT_EQ(x.labels()[1].name, "s1");
    Matrix bad = Matrix::Zero(4, 1);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(SpectrumSet(g, bad), ConfigError);
    EXPECT_THROW(SpectrumSet(g, Matrix::Zero(4, 2), {{"a", std::nullopt}}), ConfigError);

    const InterferogramSet y(OpdSchedule::regular(0, 0.1, 3), Matrix::Ones(3, 2));
    EXPECT_EQ(y.labels()[0].name, "i0");
    EXPECT_FALSE(x == SpectrumSet(g, Matrix::Zero(4, 3)));
}

TEST(TransferMatrix, Invariants)
{
    const auto g = make_regular_grid(1.0, 2.0, 3);
    const auto s = OpdSchedule::regular(0, 0.1, 2);
    EXPECT_NO_THROW(TransferMatrix(Matrix::Ones(2, 3), s, g, Provenance::tbi_closed_form));
    EXPECT_THROW(TransferMatrix(Matrix::Ones(3, 3), s, g, Provenance::tbi_closed_form),
                 ConfigError);
    EXPECT_THROW(TransferMatrix(-Matrix::Ones(2, 3), s, g, Provenance::custom_loaded),
                 ConfigError);
    EXPECT_THROW(TransferMatrix(Matrix::Ones(2, 3), s, g, Provenance::mbi_series, 0),
                 ConfigError);
    for (auto p : {Provenance::tbi_closed_form, Provenance::mbi_airy, Provenance::mbi_series,
                   Provenance::dct_ii, Provenance::custom_loaded})
        EXPECT_EQ(provenance_from_string(to_string(p)), p);
    EXPECT_THROW(provenance_from_string("bogus"), ConfigError);
}

TEST(Rng, DeterministicAndStandardNormal)
{
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.gaussian(), b.gaussian());

    Rng r(1);
    const int n = 200000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double z = r.gaussian();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.01);

    Rng u(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}
