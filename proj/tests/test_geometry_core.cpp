#include "hkc/geometry_core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace hkc;

namespace {

// Semi-flat data for tau1 = 1, tau2 = y on Im y > 0 (eps = 1): W = 1/y2, b = -x2/y2.
FrameMetric upper_half_plane_data(const Point& p) { return {1.0 / p.y.imag(), -p.x.imag() / p.y.imag()}; }

Patch upper_patch() {
    Patch pt;
    pt.lo = {-5, -5, -5, 0.2};
    pt.hi = {5, 5, 5, 5};
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

TEST(KahlerForm, FlatIdentity) {
    const TwoForm w = kahler_form({1.0, 0.0}, {});
    const TwoForm expected{{1, 0, 0, 0, 0, 1}};
    EXPECT_EQ(w, expected);
}

TEST(KahlerForm, HandExpandedCoefficients) {
    // Expanding (i/2)(W theta ^ conj theta + W^-1 dy ^ conj dy), theta = dx + (p + iq) dy, gives
    // w01 = W, w02 = W q, w03 = W p, w12 = -W p, w13 = W q, w23 = W |b|^2 + 1/W.
    const TwoForm w = kahler_form({2.0, {1.0, 1.0}}, {});
    const TwoForm expected{{2, 2, 2, -2, 2, 4.5}};
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(w.c[k], expected.c[k], 1e-15) << k;
}

TEST(KahlerForm, SquareIsHalfOmegaOmegaBar) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-3, 3);
    for (int i = 0; i < 200; ++i) {
        const FrameMetric fm{std::exp(U(rng)), {U(rng), U(rng)}};
        const TwoForm w = kahler_form(fm, {});
        const double scale = 1.0 + std::pow(w.max_abs(), 2);
        EXPECT_NEAR(wedge(w, w), 2.0, 1e-13 * scale);
        EXPECT_GT(min_eigenvalue(metric_from_form(w)), 0.0);
    }
}

TEST(FrameDecompose, KahlerFormGivesInverseW) {
    const FrameMetric fm{1.7, {0.3, -0.8}};
    const auto k = frame_decompose(kahler_form(fm, {}), fm, {});
    EXPECT_NEAR(k.alpha, 1 / 1.7, 1e-14);
    EXPECT_NEAR(std::abs(k.beta), 0.0, 1e-14);
    EXPECT_NEAR(k.gamma, 1 / 1.7, 1e-14);
}

TEST(FrameDecompose, ZeroForm) {
    const auto k = frame_decompose(TwoForm{}, {2.0, {1, 1}}, {});
    EXPECT_EQ(k.alpha, 0.0);
    EXPECT_EQ(k.beta, cplx(0.0));
    EXPECT_EQ(k.gamma, 0.0);
}

TEST(FrameDecompose, RoundTripOnRandomForms) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int i = 0; i < 200; ++i) {
        const FrameMetric fm{std::exp(U(rng)), {U(rng), U(rng)}};
        const FrameCoefficients in{U(rng), {U(rng), U(rng)}, U(rng)};
        const TwoForm w = frame_form(in, fm);
        const auto out = frame_decompose(w, fm, {});
        const double scale = 1.0 + w.max_abs();
        EXPECT_NEAR(out.alpha, in.alpha, 1e-12 * scale);
        EXPECT_NEAR(std::abs(out.beta - in.beta), 0.0, 1e-12 * scale);
        EXPECT_NEAR(out.gamma, in.gamma, 1e-12 * scale);
        EXPECT_LE((frame_form(out, fm) - w).max_abs(), 1e-12 * scale);
    }
}

TEST(FrameDecompose, RejectsTwoZeroPart) {
    // Re(dx ^ dy) = dx1^dy1 - dx2^dy2 is of type (2,0) + (0,2).
    TwoForm w;
    w.set(0, 2, 1.0);
    w.set(1, 3, -1.0);
    EXPECT_THROW(frame_decompose(w, {1.0, 0.0}, {}), TypeMismatchError);
}

TEST(LeviForm, QuadraticPotentialReproducesFlatForm) {
    // phi = 2 x2^2 + |y|^2 has (i/2) d dbar phi = dx1^dx2 + dy1^dy2.
    auto phi = [](const Vec4& r) { return 2 * r[1] * r[1] + r[2] * r[2] + r[3] * r[3]; };
    const TwoForm w = levi_form(hessian_fd(phi, {0.3, 0.2, -0.1, 0.5}, 1e-3));
    EXPECT_LE((w - kahler_form({1.0, 0.0}, {})).max_abs(), 1e-8);
}

TEST(RicciFlatResiduals, ConstantDataIsExactlyFlat) {
    const auto fs = make_sampler(1e-3, Patch{}, [](const Point&) { return FrameMetric{2.0, {0.5, -1.0}}; });
    const auto [r1, r2] = ricci_flat_residuals(fs, {{0.1, 0.2}, {0.3, 0.4}});
    EXPECT_EQ(std::abs(r1), 0.0);
    EXPECT_EQ(std::abs(r2), 0.0);
}

TEST(RicciFlatResiduals, SemiFlatUpperHalfPlaneConvergesQuadratically) {
    const Point at{{0.2, 0.35}, {0.1, 0.6}};
    std::vector<double> hs{1e-2, 5e-3, 2.5e-3}, res;
    for (double h : hs) {
        const auto fs = make_sampler(h, upper_patch(), upper_half_plane_data);
        const auto [r1, r2] = ricci_flat_residuals(fs, at);
        res.push_back(std::abs(r1) + std::abs(r2));
        EXPECT_LE(res.back(), 50.0 * h * h);
    }
    const double order = fitted_order(hs, res);
    EXPECT_GE(order, 1.8);
    EXPECT_LE(order, 2.2);
}

TEST(RicciFlatResiduals, PerturbedWIsDetected) {
    const double amp = 0.05;
    auto bad = [amp](const Point& p) {
        FrameMetric fm = upper_half_plane_data(p);
        fm.W *= 1.0 + amp * std::sin(p.y.real());
        return fm;
    };
    const auto fs = make_sampler(1e-3, upper_patch(), bad);
    const auto [r1, r2] = ricci_flat_residuals(fs, {{0.0, 0.3}, {0.4, 0.6}});
    EXPECT_GE(std::abs(r1) + std::abs(r2), 0.5 * amp);
}

TEST(RicciFlatResiduals, OutOfPatchRejected) {
    const auto fs = make_sampler(1e-2, upper_patch(), upper_half_plane_data);
    EXPECT_THROW(ricci_flat_residuals(fs, {{0, 0}, {0, 0.205}}), PatchError);
}

TEST(Curvature, RoundTwoSphereTimesPlane) {
    // g = d theta^2 + sin^2 theta d phi^2 + da^2 + db^2: Ric = diag(1, sin^2, 0, 0), |Rm|^2 = 4.
    auto metric = [](const Vec4& r) {
        Mat4 g = Mat4::Identity();
        g(1, 1) = std::pow(std::sin(r[0]), 2);
        return g;
    };
    const Vec4 at{0.9, 0.3, 0.0, 0.0};
    const Curvature C = curvature_from_jet(metric_jet(metric, at, 1e-4));
    EXPECT_NEAR(C.ricci(0, 0), 1.0, 1e-6);
    EXPECT_NEAR(C.ricci(1, 1), std::pow(std::sin(0.9), 2), 1e-6);
    EXPECT_NEAR(C.ricci(2, 2), 0.0, 1e-8);
    EXPECT_NEAR(ricci_operator_norm(C.ricci, C.g), 1.0, 1e-6);
    EXPECT_NEAR(riemann_norm(C), 2.0, 1e-6);
}

TEST(NumericalRicci, FlatMetricIsZero) {
    const auto fs = make_sampler(1e-3, Patch{}, [](const Point&) { return FrameMetric{1.0, 0.0}; });
    EXPECT_EQ(numerical_ricci(fs, {{0.1, 0.1}, {0.2, 0.2}}), 0.0);
}

TEST(NumericalRicci, SemiFlatUpperHalfPlaneIsSmallAndSecondOrder) {
    const Point at{{0.2, 0.35}, {0.1, 0.6}};
    std::vector<double> hs{1e-2, 5e-3, 2.5e-3}, res;
    for (double h : hs) res.push_back(numerical_ricci(make_sampler(h, upper_patch(), upper_half_plane_data), at));
    const double order = fitted_order(hs, res);
    EXPECT_GE(order, 1.8);
    EXPECT_LE(order, 2.2);
    // Second-order error: the h = 1e-3 value sits on the h^2 line fitted through h = 1e-2.
    const auto fine = make_sampler(1e-3, upper_patch(), upper_half_plane_data);
    EXPECT_LE(numerical_ricci(fine, at), 1.2 * res[0] * 1e-2);
    EXPECT_LE(numerical_ricci(fine, at, true), 1e-7);
}

TEST(NumericalRicci, NonFlatConformalMetricIsDetected) {
    // W perturbed away from a solution has visible Ricci curvature.
    auto bad = [](const Point& p) {
        FrameMetric fm = upper_half_plane_data(p);
        fm.W *= 1.0 + 0.1 * std::sin(3 * p.y.real());
        return fm;
    };
    EXPECT_GT(numerical_ricci(make_sampler(1e-3, upper_patch(), bad), {{0, 0.3}, {0.4, 0.6}}), 1e-2);
}
