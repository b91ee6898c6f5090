#include "hkc/semiflat.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hkc;

namespace {

Patch base_annulus_patch() {
    Patch pt;
    pt.lo = {-10, -10, -2, 0.05};
    pt.hi = {10, 10, 2, 2};
    return pt;
}

double fitted_order(const std::vector<double>& h, const std::vector<double>& r) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]), y = std::log(r[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(PeriodSeries, LogBranchAndDerivatives) {
    const PeriodPair p = i1_periods();
    const cplx y{0.3, 0.4};
    const cplx expected = std::log(y) / (2.0 * std::numbers::pi * I_unit) + I_unit;
    EXPECT_NEAR(std::abs(p.tau2(y) - expected), 0.0, 1e-15);
    const double h = 1e-5;
    const cplx fd = (p.tau2(y + h) - p.tau2(y - h)) / (2 * h);
    EXPECT_NEAR(std::abs(fd - p.tau2.derivative(y)), 0.0, 1e-9);
    const cplx fd2 = (p.tau2.derivative(y + h) - p.tau2.derivative(y - h)) / (2 * h);
    EXPECT_NEAR(std::abs(fd2 - p.tau2.second_derivative(y)), 0.0, 1e-8);
    const cplx fa = (p.tau2.antiderivative(y + h) - p.tau2.antiderivative(y - h)) / (2 * h);
    EXPECT_NEAR(std::abs(fa - p.tau2(y)), 0.0, 1e-9);
}

TEST(PeriodSeries, MonodromyAcrossSheets) {
    const cplx y{-0.5, 1e-9};
    LogBranch next;
    next.sheet = 1;
    const cplx jump = i1_periods(1.0, next).tau2(y) - i1_periods().tau2(y);
    EXPECT_NEAR(std::abs(jump - cplx(1.0)), 0.0, 1e-14);  // tau2 -> tau2 + tau1
}

TEST(PeriodSeries, BranchPointRejected) {
    EXPECT_THROW(i1_periods().tau2(cplx(0.0)), BranchError);
    const SemiFlatMetric m{i1_periods(), 0.2};
    EXPECT_THROW(semiflat_data(m, {{0.1, 0.0}, {0.0, 0.0}}), BranchError);
}

TEST(SemiFlat, ConstantPeriodsGiveFlatMetric) {
    const SemiFlatMetric m{constant_periods({0.3, 1.2}), 0.5};
    const FrameMetric fm = semiflat_data(m, {{0.7, -0.2}, {0.1, 0.3}});
    EXPECT_DOUBLE_EQ(fm.W, 0.5 / 1.2);
    EXPECT_EQ(fm.b, cplx(0.0));
    const auto [r1, r2] = ricci_flat_residuals(semiflat_sampler(m, 1e-3, Patch{}), {{0.7, -0.2}, {0.1, 0.3}});
    EXPECT_EQ(std::abs(r1) + std::abs(r2), 0.0);
}

TEST(SemiFlat, NonPositiveAreaRejected) {
    EXPECT_THROW(semiflat_data({constant_periods({0.3, -1.0}), 1.0}, {}), DomainError);
    EXPECT_THROW(semiflat_data({constant_periods({0.3, 1.0}), 0.0}, {}), DomainError);
}

TEST(SemiFlat, IOneModelResidualsAreSecondOrder) {
    const SemiFlatMetric m{i1_periods(), 0.2};
    const Point at{{0.05, 0.1}, {0.3, 0.4}};
    std::vector<double> hs{1e-2, 5e-3, 2.5e-3}, res;
    for (double h : hs) {
        const auto [r1, r2] = ricci_flat_residuals(semiflat_sampler(m, h, base_annulus_patch()), at);
        res.push_back(std::abs(r1) + std::abs(r2));
    }
    const double order = fitted_order(hs, res);
    EXPECT_GE(order, 1.8);
    EXPECT_LE(order, 2.2);
    const auto [r1, r2] = ricci_flat_residuals(semiflat_sampler(m, 1e-3, base_annulus_patch()), at);
    EXPECT_LE(std::abs(r1) + std::abs(r2), 1e-4);
}

TEST(SemiFlat, IOneModelNumericalRicciIsSmall) {
    const SemiFlatMetric m{i1_periods(), 0.2};
    const Point at{{0.05, 0.1}, {0.3, 0.4}};
    EXPECT_LE(numerical_ricci(semiflat_sampler(m, 1e-3, base_annulus_patch()), at), 1e-5);
}

TEST(SemiFlat, LatticeBasisChangeLeavesDataInvariant) {
    const PeriodPair p = i1_periods();
    PeriodPair swapped;
    swapped.tau1 = p.tau2;
    swapped.tau2.coeffs = {cplx(-1.0)};
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-1, 1), R(0.2, 0.9), A(0.1, 3.0);
    for (int i = 0; i < 50; ++i) {
        const Point at{{U(rng), U(rng)}, std::polar(R(rng), A(rng))};
        const FrameMetric a = semiflat_data({p, 0.3}, at), b = semiflat_data({swapped, 0.3}, at);
        EXPECT_NEAR(a.W, b.W, 1e-14 * a.W);
        EXPECT_NEAR(std::abs(a.b - b.b), 0.0, 1e-13 * (1 + std::abs(a.b)));
    }
}

TEST(SemiFlat, FibreVolumeEqualsEpsilon) {
    for (double eps : {0.4, 0.1, 0.05}) {
        const SemiFlatMetric m{i1_periods(), eps};
        for (cplx y : {cplx(0.5, 0.0), cplx(-0.2, 0.3), cplx(0.0, -0.8)})
            EXPECT_NEAR(fibre_volume(m, y), eps, 1e-12) << eps << " " << y;
    }
}

TEST(SemiFlat, PotentialReproducesKahlerForm) {
    const SemiFlatMetric m{i1_periods(), 0.3};
    const BaseSector sector{0.2, 0.9, -2.5, 2.5};
    for (const Point at : {Point{{0.1, 0.2}, {0.4, 0.1}}, Point{{-0.3, 0.05}, std::polar(0.6, 2.0)}}) {
        auto phi = [&](const Vec4& r) { return semiflat_potential(m, Point::from_real(r), sector); };
        const TwoForm fd = levi_form(hessian_fd(phi, at.real(), 1e-3));
        const TwoForm exact = kahler_form(semiflat_data(m, at), at);
        EXPECT_LE((fd - exact).max_abs(), 1e-5 * (1 + exact.max_abs()));
    }
}

TEST(SemiFlat, PotentialOfUnitSquareLattice) {
    // tau2 = i, eps = 1: phi = 2 x2^2 + |y|^2 up to pluriharmonic terms; here exactly.
    const SemiFlatMetric m{constant_periods(I_unit), 1.0};
    const Point at{{0.3, -0.7}, {0.2, 0.5}};
    EXPECT_NEAR(semiflat_potential(m, at, {0.0, 10.0, -4.0, 4.0}), 2 * 0.49 + 0.29, 1e-14);
}

TEST(SemiFlat, PotentialRejectsSectorAcrossBranchCut) {
    const SemiFlatMetric m{i1_periods(), 0.3};
    EXPECT_THROW(semiflat_potential(m, {{0, 0}, {-0.5, 0.01}}, {0.2, 0.9, 0.0, 3.5}), BranchError);
    EXPECT_THROW(semiflat_potential(m, {{0, 0}, {0.05, 0.0}}, {0.2, 0.9, -2.5, 2.5}), BranchError);
}

TEST(SemiFlat, LatticeTranslationsAreIsometries) {
    const SemiFlatMetric m{i1_periods(), 0.2};
    const Point at{{0.1, -0.05}, {0.3, -0.4}};
    for (auto [a1, a2] : {std::pair{1.0, 0.0}, std::pair{0.0, 1.0}, std::pair{0.37, -0.81}}) {
        const TranslationCheck tc = flat_translation(m, a1, a2, at);
        EXPECT_LE(tc.pullback_error, 1e-12);
        const auto st0 = lattice_coordinates(m.periods, at), st1 = lattice_coordinates(m.periods, tc.image);
        EXPECT_NEAR(st1[0] - st0[0], a1, 1e-12);
        EXPECT_NEAR(st1[1] - st0[1], a2, 1e-12);
    }
}

TEST(SemiFlat, ClosedFormCurvatureMatchesFiniteDifferences) {
    const SemiFlatMetric m{i1_periods(), 0.2};
    for (cplx y : {cplx(0.5, 0.0), cplx(0.1, 0.3), cplx(-0.4, -0.6)}) {
        const Point at{{0.02, 0.03}, y};
        auto metric = [&](const Vec4& r) {
            const Point p = Point::from_real(r);
            return metric_from_form(kahler_form(semiflat_data(m, p), p));
        };
        // The closed form uses |R|^2 = (1/2) R_abcd R^abcd.
        const double fd = riemann_norm(curvature_from_jet(metric_jet(metric, at.real(), 1e-3))) / std::sqrt(2.0);
        const double closed = semiflat_curvature(m, y);
        EXPECT_NEAR(fd / closed, 1.0, 1e-5) << y;
    }
    EXPECT_THROW(semiflat_curvature({PeriodPair{i1_periods().tau2, i1_periods().tau1}, 1.0}, 0.5), DomainError);
}

TEST(SemiFlat, GibbonsHawkingPotentialIsHarmonic) {
    const SemiFlatPotential V{i1_periods().tau2, 0.2};
    using J = Jet<3, 2>;
    const std::array<J, 3> u{J::variable(0, 0.3), J::variable(1, -0.2), J::variable(2, 0.1)};
    const J v = V(u);
    EXPECT_NEAR(v.value(), i1_periods().tau2(cplx(0.3, -0.2)).imag() / 0.2, 1e-14);
    EXPECT_NEAR(laplacian(v).value(), 0.0, 1e-12);
}
