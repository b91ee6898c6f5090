#include "hkc/diagnostics.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

using namespace hkc;

namespace {

constexpr double kPi = std::numbers::pi;

// Radial McLean distance from the singular point of the I1 model (h = 1), by direct
// quadrature in t = r s^2 which removes the logarithmic endpoint behaviour.
double radial_oracle(double r) {
    return integrate_gauss(
        [&](double s) {
            const double t = r * s * s;
            return 2.0 * r * s * std::sqrt(-std::log(t) / (2.0 * kPi) + 1.0);
        },
        0.0, 1.0, 20, 8);
}

McLeanBase flat_base() { return McLeanBase{constant_periods(cplx(0.0, 1.0))}; }
McLeanBase i1_base() { return McLeanBase{i1_periods()}; }

SampledMetricSpace line_space(std::vector<double> xs) {
    SampledMetricSpace s;
    s.d.resize(xs.size(), xs.size());
    for (std::size_t a = 0; a < xs.size(); ++a)
        for (std::size_t b = 0; b < xs.size(); ++b) s.d(a, b) = std::abs(xs[a] - xs[b]);
    return s;
}

}  // namespace

TEST(Distortion, TwoPointSpaces) {
    const SampledMetricSpace X = line_space({0.0, 1.0}), Y = line_space({0.0, 1.1});
    EXPECT_NEAR(gh_distortion(X, Y, {0, 1}, {0, 1}), 0.1, 1e-15);
    EXPECT_EQ(gh_distortion(X, X, {0, 1}, {0, 1}), 0.0);
}

TEST(Distortion, CollapsingMapsPayTheFibreSize) {
    // X = two points at distance 0.3 over one base point; Y = a single point.
    const SampledMetricSpace X = line_space({0.0, 0.3}), Y = line_space({0.0});
    EXPECT_NEAR(gh_distortion(X, Y, {0, 0}, {0}), 0.3, 1e-15);
}

TEST(Distortion, RejectsPartialMaps) {
    const SampledMetricSpace X = line_space({0.0, 1.0});
    EXPECT_THROW(gh_distortion(X, X, {0}, {0, 1}), DomainError);
}

TEST(BaseGraphTest, FlatAxisDistanceIsExact) {
    const McLeanBase base = flat_base();
    auto metric = [&](cplx y) { return base.metric(y); };
    const BaseGraph g(0.5, 20, metric);
    const int a = g.nearest(cplx(-0.225, 0.025)), b = g.nearest(cplx(0.225, 0.025));
    EXPECT_NEAR(g.distances_from(a)[b], std::abs(g.node(b) - g.node(a)), 1e-12);
    EXPECT_NEAR(std::abs(g.node(b) - g.node(a)), 0.45, 1e-12);
}

TEST(BaseGraphTest, FlatObliqueDistanceWithinStencilBias) {
    const McLeanBase base = flat_base();
    const double d = base_distance(cplx(-0.15, -0.2), cplx(0.15, 0.2), base, 64);
    EXPECT_GE(d, 0.5 - 1e-9);
    EXPECT_LE(d, 0.5 * 1.014);
}

TEST(BaseGraphTest, RadialDistanceFromSingularPointMatchesQuadrature) {
    const McLeanBase base = i1_base();
    for (double angle : {0.0, 0.7, 2.0}) {
        const double r = 0.5;
        const double d = base_distance(0.0, std::polar(r, angle), base, 96);
        EXPECT_NEAR(d / radial_oracle(r), 1.0, 0.02) << "angle " << angle;
    }
}

TEST(BaseGraphTest, RefinementChangesShrink) {
    const McLeanBase base = i1_base();
    const cplx a(-0.3, 0.1), b(0.35, -0.2);
    const double d1 = base_distance(a, b, base, 24), d2 = base_distance(a, b, base, 48),
                 d3 = base_distance(a, b, base, 96);
    EXPECT_LE(std::abs(d3 - d2), 2.0 * std::abs(d2 - d1) + 1e-12);
    EXPECT_NEAR(d3 / d2, 1.0, 0.01);
}

TEST(BaseGraphTest, GraphDistancesSatisfyTriangleInequality) {
    const McLeanBase base = i1_base();
    auto metric = [&](cplx y) { return base.metric(y); };
    const BaseGraph g(0.6, 16, metric);
    const int n = std::min(g.size(), 60);
    SampledMetricSpace s;
    s.d.resize(n, n);
    for (int a = 0; a < n; ++a) {
        const std::vector<double> d = g.distances_from(a);
        for (int b = 0; b < n; ++b) s.d(a, b) = d[b];
    }
    EXPECT_LE(triangle_violation(s), 1e-12);
    EXPECT_LE((s.d - s.d.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FibreGraphTest, FlatFibreDistances) {
    const double eps = 0.1;
    const SemiFlatChart chart(SemiFlatMetric{constant_periods(cplx(0.0, 1.0)), eps});
    const FibreGraph g(chart, cplx(0.2, 0.1), 16, 16);
    const std::vector<double> d = g.distances_from(8, 0);
    // fibre metric is eps^2 (du^2/eps^2 + dx1^2) on a square torus of side eps
    EXPECT_NEAR(d[g.index(0, 0)], 0.5 * eps, 1e-12);
    EXPECT_NEAR(d[g.index(8, 8)], 0.5 * eps, 1e-12);
    EXPECT_NEAR(fibre_radius(chart, cplx(0.2, 0.1), 16, 16) / (eps / std::sqrt(2.0)), 1.0, 1e-12);
}

TEST(FibreGraphTest, TwistedFibreIsStillATorusOfTheRightArea) {
    // tau2 = 0.5 + i: the u-circle closes up after an x1 shift of one half
    const double eps = 0.1;
    const SemiFlatChart chart(SemiFlatMetric{constant_periods(cplx(0.5, 1.0)), eps});
    const FibreGraph g(chart, 0.3, 16, 16);
    const std::vector<double> d = g.distances_from(8, 0);
    // the lattice Z + tau2 Z scaled by eps has shortest vector eps
    EXPECT_NEAR(d[g.index(8, 8)], 0.5 * eps, 1e-12);
    for (double v : d) EXPECT_LE(v, eps * 1.02);
}

TEST(FibreGraphTest, OVFibresStayWithinTheirDiameter) {
    OVConfig ov;
    ov.eps = 0.2;
    const GluedMetric gm(ov, GlueConfig{});
    const GluedChart chart(gm);
    for (cplx y : {cplx(0.3, 0.0), cplx(0.0, -0.5), cplx(0.05, 0.05)}) {
        const double radius_g = fibre_radius(chart, y, 16, 8) / std::sqrt(ov.eps);
        EXPECT_LE(radius_g, fibre_diameter(y, ov) * 1.02) << y;
        EXPECT_GE(radius_g, 0.3 * fibre_diameter(y, ov)) << y;
    }
}

TEST(TotalSpaceDistance, FlatBundleAxisPairs) {
    const double eps = 0.1;
    const SemiFlatChart chart(SemiFlatMetric{constant_periods(cplx(0.0, 1.0)), eps});
    const ChartPoint p{cplx(-0.2, 0.0), 0.5 * eps, 0.0};
    const TotalDistance base_pair = total_space_distance(chart, p, ChartPoint{cplx(0.2, 0.0), 0.5 * eps, 0.0});
    EXPECT_NEAR(base_pair.value / 0.4, 1.0, 0.02);
    const TotalDistance fibre_pair = total_space_distance(chart, p, ChartPoint{cplx(-0.2, 0.0), 0.0, 0.0});
    EXPECT_NEAR(fibre_pair.value / (0.5 * eps), 1.0, 0.02);
    EXPECT_LE(base_pair.value, base_pair.product_graph);
    EXPECT_LE(base_pair.value, base_pair.via_zero_section);
}

TEST(TotalSpaceDistance, GluedMetricBoundsAgreeWithProjection) {
    OVConfig ov;
    ov.eps = 0.2;
    const GluedMetric gm(ov, GlueConfig{});
    const GluedChart chart(gm);
    const ChartPoint p{cplx(0.3, 0.1), 0.02, 0.3}, q{cplx(-0.1, 0.35), 0.15, 0.8};
    const TotalDistance d = total_space_distance(chart, p, q);
    const double dB = base_distance(p.y, q.y, McLeanBase{ov_period_pair(ov)});
    const double legs = fibre_radius(chart, p.y) + fibre_radius(chart, q.y);
    EXPECT_TRUE(std::isfinite(d.value));
    EXPECT_GT(d.value, 0.95 * dB);
    EXPECT_LT(d.value, 1.02 * dB + legs);
    EXPECT_FALSE(to_string(d.method).empty());
}

TEST(Collapse, DistortionDecreasesAndSectionTracksBase) {
    OVConfig ov;
    CollapseConfig cfg;
    cfg.samples = 480;
    cfg.base_grid = 24;
    const std::vector<CollapseRow> rows = collapse_scan(ov, GlueConfig{}, {0.4, 0.2, 0.1}, cfg);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_TRUE(strictly_decreasing(rows));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LT(rows[i].fibre_term, rows[i - 1].fibre_term);
        EXPECT_LE(rows[i].projection_gap, rows[i - 1].projection_gap + 1e-12);
    }
    for (const CollapseRow& r : rows) {
        EXPECT_GE(r.delta, r.fibre_term);
        EXPECT_LT(r.section_relative, 0.1);
    }
}

TEST(Collapse, FlatModelDistortionScalesWithFibreSize) {
    // No singular fibre: the base is recovered exactly, so delta is twice the fibre radius.
    const McLeanBase base = flat_base();
    CollapseConfig cfg;
    cfg.samples = 400;
    cfg.base_grid = 16;
    std::vector<double> ratio;
    for (double eps : {0.2, 0.1, 0.05}) {
        const SemiFlatChart chart(SemiFlatMetric{base.periods, eps});
        const CollapseRow r = collapse_measure(chart, base, 0.8, cfg);
        EXPECT_NEAR(r.section_relative, 0.0, 1e-12);
        ratio.push_back(r.delta / fibre_radius(chart, 0.0, cfg.fibre_u, cfg.fibre_x));
    }
    for (double q : ratio) EXPECT_NEAR(q, ratio.front(), 1e-9);
    EXPECT_LE(ratio.front(), 2.0 + 1e-9);
}

TEST(Collapse, SeedDeterminesTheSample) {
    const McLeanBase base = flat_base();
    const SemiFlatChart chart(SemiFlatMetric{base.periods, 0.1});
    CollapseConfig cfg;
    cfg.samples = 200;
    cfg.base_grid = 12;
    const CollapseRow a = collapse_measure(chart, base, 0.8, cfg), b = collapse_measure(chart, base, 0.8, cfg);
    EXPECT_EQ(a.delta, b.delta);
    EXPECT_THROW(collapse_measure(chart, base, 0.8, CollapseConfig{.samples = 4, .fibre_samples = 8}), ConfigError);
}
