#include "hkc/gluing.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

using namespace hkc;

namespace {

OVConfig ov_at(double eps) {
    OVConfig c;
    c.eps = eps;
    return c;
}

SemiFlatMetric model_semiflat(double eps) { return {ov_period_pair(ov_at(eps)), eps}; }

// A test potential in the normal form Z(y) + sum_k 2 Re c_k(y)(e^{2 pi i k s} - e^{i pi k}),
// s = 1/2 - x2 / Im tau2, with Z = 0 on both circles of the annulus.
struct ManufacturedPotential {
    PeriodSeries tau2;
    double r1 = 0.4, r2 = 0.6;
    double scale = 1.0;
    double tilt = 0.5;

    template <class T>
    T operator()(const T& x2, const T& y1, const T& y2) const {
        using std::cos;
        using std::sin;
        const T rho2 = y1 * y1 + y2 * y2;
        const T height = tau2.value(y1, y2).im;
        const T s = 0.5 - x2 / height;
        const T base = (rho2 - r1 * r1) * (r2 * r2 - rho2) * (1.0 + y1 * tilt);
        // c1 = 0.01 (y1 + i y1 y2), c2 = 0.003 (y1^2 - y2^2 + 2 i y1 y2)
        const T c1r = 0.01 * y1, c1i = 0.01 * y1 * y2;
        const T c2r = 0.003 * (y1 * y1 - y2 * y2), c2i = 0.006 * y1 * y2;
        const double w = 2.0 * std::numbers::pi;
        const T m1 = 2.0 * (c1r * (cos(w * s) + 1.0) - c1i * sin(w * s));
        const T m2 = 2.0 * (c2r * (cos(2.0 * w * s) - 1.0) - c2i * sin(2.0 * w * s));
        return (base + m1 + m2) * scale;
    }

    // i d dbar phi from the exact Hessian.
    TwoForm ddbar(const Point& p) const {
        using J = Jet<4, 2>;
        const Vec4 r = p.real();
        const J v = (*this)(J::variable(1, r[1]), J::variable(2, r[2]), J::variable(3, r[3])) + 0.0 * J::variable(0, r[0]);
        Mat4 H;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                std::array<int, 4> idx{};
                idx[a] += 1;
                idx[b] += 1;
                H(a, b) = v.derivative(idx);
            }
        return 2.0 * levi_form(H);
    }
};

std::shared_ptr<const AnnulusGrid> default_grid() { return std::make_shared<const AnnulusGrid>(0.4, 0.6, 28, 9); }

double max_diff(const TwoForm& a, const TwoForm& b) { return (a - b).max_abs(); }

}  // namespace

// ---------------------------------------------------------------------------
// Cutoff

TEST(Cutoff, EqualsOneInsideAndZeroOutside) {
    const Cutoff c{0.4, 0.6};
    EXPECT_EQ(c(0.3 * 0.3).psi, 1.0);
    EXPECT_EQ(c(0.16).psi, 1.0);
    EXPECT_EQ(c(0.36).psi, 0.0);
    EXPECT_EQ(c(0.7 * 0.7).psi, 0.0);
    for (int i = 0; i <= 100; ++i) {
        const double rho2 = 0.16 + 0.2 * i / 100.0;
        const double v = c(rho2).psi;
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Cutoff, DerivativesMatchDifferencesAndVanishAtJoins) {
    const Cutoff c{0.4, 0.6};
    const double h = 1e-6;
    for (double rho2 : {0.17, 0.2, 0.25, 0.31, 0.35}) {
        EXPECT_NEAR(c(rho2).d1, (c(rho2 + h).psi - c(rho2 - h).psi) / (2 * h), 1e-6);
        EXPECT_NEAR(c(rho2).d2, (c(rho2 + h).d1 - c(rho2 - h).d1) / (2 * h), 1e-4);
    }
    for (double edge : {0.16, 0.36}) {
        EXPECT_NEAR(c(edge + 1e-9).d1, 0.0, 1e-12);
        EXPECT_NEAR(c(edge - 1e-9).d2, 0.0, 1e-9);
        EXPECT_NEAR(c(edge + 1e-9).d2, 0.0, 1e-6);
    }
}

// ---------------------------------------------------------------------------
// Spectral annulus fields

TEST(AnnulusField, InterpolatesSmoothFieldsWithDerivatives) {
    const auto grid = std::make_shared<const AnnulusGrid>(0.4, 0.6, 28, 31);
    auto f = [](cplx y) { return std::exp(3.0 * y.real()) * cplx(1.0, y.imag()) + std::pow(y, 3); };
    std::vector<std::vector<cplx>> nodes(grid->radial_nodes(), std::vector<cplx>(grid->angular_nodes()));
    for (int i = 0; i < grid->radial_nodes(); ++i)
        for (int j = 0; j < grid->angular_nodes(); ++j) nodes[i][j] = f(grid->node(i, j));
    const AnnulusField F = AnnulusField::from_nodes(grid.get(), nodes);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> rr(0.4, 0.6), tt(-3.1, 3.1);
    const double h = 1e-6;
    for (int n = 0; n < 20; ++n) {
        const cplx y = std::polar(rr(rng), tt(rng));
        const AnnulusField::Value v = F(y);
        EXPECT_LT(std::abs(v.f - f(y)), 1e-10);
        EXPECT_LT(std::abs(v.d1 - (f(y + h) - f(y - h)) / (2 * h)), 1e-8);
        EXPECT_LT(std::abs(v.d2 - (f(y + I_unit * h) - f(y - I_unit * h)) / (2 * h)), 1e-8);
    }
}

TEST(AnnulusField, PolynomialFieldsAreExact) {
    const auto grid = default_grid();
    auto f = [](cplx y) { return cplx(y.real() * y.imag() * y.imag(), std::norm(y)); };
    std::vector<std::vector<cplx>> nodes(grid->radial_nodes(), std::vector<cplx>(grid->angular_nodes()));
    for (int i = 0; i < grid->radial_nodes(); ++i)
        for (int j = 0; j < grid->angular_nodes(); ++j) nodes[i][j] = f(grid->node(i, j));
    const AnnulusField F = AnnulusField::from_nodes(grid.get(), nodes);
    for (double t : {0.1, 1.7, -2.4}) {
        const cplx y = std::polar(0.47, t);
        const AnnulusField::Value v = F(y);
        EXPECT_NEAR(std::abs(v.f - f(y)), 0.0, 1e-13);
        EXPECT_NEAR(std::abs(v.d1 - cplx(y.imag() * y.imag(), 2 * y.real())), 0.0, 1e-11);
        EXPECT_NEAR(std::abs(v.d2 - cplx(2 * y.real() * y.imag(), 2 * y.imag())), 0.0, 1e-11);
    }
}

TEST(AnnulusField, DirichletPoissonRecoversManufacturedSolution) {
    const auto grid = default_grid();
    using J = Jet<2, 2>;
    auto Z = [](auto y1, auto y2) {
        const auto rho2 = y1 * y1 + y2 * y2;
        return (rho2 - 0.16) * (0.36 - rho2) * (1.0 + 0.5 * y1 - y2 * y2 + 0.3 * y1 * y2 * y2);
    };
    std::vector<std::vector<cplx>> src(grid->radial_nodes(), std::vector<cplx>(grid->angular_nodes()));
    for (int i = 0; i < grid->radial_nodes(); ++i)
        for (int j = 0; j < grid->angular_nodes(); ++j) {
            const cplx y = grid->node(i, j);
            src[i][j] = laplacian(Z(J::variable(0, y.real()), J::variable(1, y.imag()))).value();
        }
    const AnnulusField sol = solve_dirichlet_poisson(grid.get(), src);
    for (double t : {0.3, 2.0, -1.1})
        for (double r : {0.41, 0.5, 0.59}) {
            const cplx y = std::polar(r, t);
            EXPECT_NEAR(sol(y).f.real(), Z(y.real(), y.imag()), 1e-12);
        }
}

// ---------------------------------------------------------------------------
// Frame differences

TEST(FrameDifference, SemiFlatAgainstItselfIsZero) {
    const SemiFlatMetric sf = model_semiflat(0.2);
    for (double x2 : {-0.3, 0.0, 0.4}) {
        const Point p{cplx(0.1, x2), std::polar(0.5, 0.7)};
        const FrameCoefficients c =
            frame_difference(sf, [&](const Point& q) { return kahler_form(semiflat_data(sf, q), q); }, p);
        EXPECT_EQ(c.alpha, 0.0);
        EXPECT_EQ(c.beta, cplx(0.0));
        EXPECT_EQ(c.gamma, 0.0);
    }
}

TEST(FrameDifference, ClosedFormMatchesDecompositionOfTheForms) {
    const OVConfig cfg = ov_at(0.4);
    const SemiFlatMetric sf = model_semiflat(0.4);
    const OVPrimitive prim(cfg);
    for (double r : {0.42, 0.5, 0.58})
        for (double u : {0.03, 0.17, 0.31}) {
            const cplx y = std::polar(r, 1.1);
            const double x2 = -prim.primitive(y, u);
            const Point p{cplx(0.0, x2), y};
            const FrameCoefficients direct = frame_difference(
                sf, [&](const Point&) { return kahler_form({1.0 / prim.potential(y, u), 2.0 * I_unit * prim.primitive_dy(y, u)}, p); },
                p, 1e-9);
            const FrameCoefficients closed = ov_frame_difference(cfg, y, u);
            const double scale = std::abs(closed.alpha) + std::abs(closed.beta) + std::abs(closed.gamma);
            EXPECT_NEAR(direct.alpha, closed.alpha, 1e-7 * scale + 1e-13);
            EXPECT_NEAR(std::abs(direct.beta - closed.beta), 0.0, 1e-7 * scale + 1e-13);
            EXPECT_NEAR(direct.gamma, closed.gamma, 1e-7 * scale + 1e-13);
        }
}

TEST(FrameDifference, AlphaDecaysExponentiallyInInverseEps) {
    std::vector<double> eps{0.4, 0.2, 0.1}, sup;
    for (double e : eps) {
        double m = 0.0;
        for (double r : {0.4, 0.5, 0.6})
            for (int k = 0; k < 16; ++k) m = std::max(m, std::abs(ov_frame_difference(ov_at(e), r, k * e / 16).alpha));
        sup.push_back(m);
    }
    EXPECT_GT(sup[0], sup[1]);
    EXPECT_GT(sup[1], sup[2]);
    const LineFit fit = fit_exponential_decay(eps, sup);
    EXPECT_LT(fit.slope, 0.0);
    EXPECT_GT(fit.r_squared, 0.99);
}

TEST(FrameDifference, FibreMeanOfBetaVanishes) {
    for (double e : {0.4, 0.2, 0.1}) {
        const auto src = ov_fibre_source(ov_at(e), 8, 64);
        for (double r : {0.4, 0.5, 0.6})
            for (double t : {0.0, 2.0}) EXPECT_LE(std::abs(src(std::polar(r, t)).beta_mean), 1e-9 * e);
    }
}

TEST(FrameDifference, TCycleIntegralVanishes) {
    for (double s : {0.1, 0.25, 0.6}) EXPECT_NEAR(ov_t_cycle_integral(ov_at(0.2), 0.5, s), 0.0, 1e-10);
    OVConfig tilted = ov_at(0.2);
    tilted.h_coeffs = {cplx(1.0), cplx(0.2, 0.1)};
    EXPECT_NEAR(ov_t_cycle_integral(tilted, 0.45, 0.3), 0.0, 1e-10);
}

// ---------------------------------------------------------------------------
// Potential solve

TEST(SolvePotential, ZeroFieldsGiveZeroPotential) {
    const SemiFlatMetric sf = model_semiflat(0.2);
    auto zero = [](const Point&) { return TwoForm{}; };
    const PotentialSolution sol = solve_potential(default_grid(), fibre_source_from_form(zero, sf, 4, 16), 4, 1e-9);
    for (double r : {0.41, 0.5, 0.59}) {
        const PotentialValue v = sol.evaluate(0.13, std::polar(r, 0.4), 1.2, {0.1, 0.2});
        EXPECT_EQ(v.phi, 0.0);
        EXPECT_EQ(v.phi_x2, 0.0);
        EXPECT_EQ(v.phi_y[0], 0.0);
        EXPECT_EQ(v.phi_y[1], 0.0);
    }
}

TEST(SolvePotential, RecoversManufacturedPotential) {
    const SemiFlatMetric sf = model_semiflat(0.2);
    const ManufacturedPotential phi0{sf.periods.tau2};
    auto form = [&](const Point& p) { return phi0.ddbar(p); };
    const PotentialSolution sol = solve_potential(default_grid(), fibre_source_from_form(form, sf, 4, 32), 4, 1e-9);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> rr(0.4, 0.6), tt(-3.1, 3.1), ss(-1.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < 40; ++n) {
        const cplx y = std::polar(rr(rng), tt(rng));
        const double x2 = ss(rng);
        using J = Jet<2, 1>;
        const double height = sf.periods.tau2(y).imag();
        const Cplx<J> t = sf.periods.tau2.value(J::variable(0, y.real()), J::variable(1, y.imag()));
        const PotentialValue v =
            sol.evaluate(x2, y, height, {t.im.derivative({1, 0}), t.im.derivative({0, 1})});
        worst = std::max(worst, std::abs(v.phi - phi0(x2, y.real(), y.imag())));
    }
    EXPECT_LE(worst, 1e-6);
}

TEST(SolvePotential, IsLinearInTheSource) {
    const SemiFlatMetric sf = model_semiflat(0.2);
    const ManufacturedPotential a{sf.periods.tau2, 0.4, 0.6, 1.0, 0.5};
    const ManufacturedPotential b{sf.periods.tau2, 0.4, 0.6, -0.7, -1.5};
    auto fa = [&](const Point& p) { return a.ddbar(p); };
    auto fb = [&](const Point& p) { return b.ddbar(p); };
    auto fab = [&](const Point& p) { return a.ddbar(p) + b.ddbar(p); };
    const auto grid = default_grid();
    const PotentialSolution sa = solve_potential(grid, fibre_source_from_form(fa, sf, 4, 32), 4, 1e-9);
    const PotentialSolution sb = solve_potential(grid, fibre_source_from_form(fb, sf, 4, 32), 4, 1e-9);
    const PotentialSolution sab = solve_potential(grid, fibre_source_from_form(fab, sf, 4, 32), 4, 1e-9);
    for (double r : {0.43, 0.52})
        for (double x2 : {-0.4, 0.2}) {
            const cplx y = std::polar(r, 0.9);
            const double height = sf.periods.tau2(y).imag();
            const double va = sa.evaluate(x2, y, height, {0, 0}).phi, vb = sb.evaluate(x2, y, height, {0, 0}).phi;
            EXPECT_NEAR(sab.evaluate(x2, y, height, {0, 0}).phi, va + vb, 1e-9);
        }
}

TEST(SolvePotential, RejectsNonzeroFibreMeanOfBeta) {
    auto bad = [](cplx) {
        FibreData d;
        d.alpha_modes.assign(2, cplx{});
        d.beta_mean = 1e-3;
        return d;
    };
    EXPECT_THROW(solve_potential(default_grid(), bad, 2, 1e-8), ObstructionError);
}

TEST(SolvePotential, OVDifferenceIsIDDbarOfPotential) {
    const GluedMetric gm(ov_at(0.2), GlueConfig{});
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> rr(0.42, 0.58), tt(-3.1, 3.1), uu(0.0, 0.2);
    struct Sample {
        TwoForm target, fit;
    };
    std::vector<Sample> samples;
    double scale = 0.0;
    for (int n = 0; n < 12; ++n) {
        const cplx y = std::polar(rr(rng), tt(rng));
        const double u = uu(rng);
        const double x2 = -gm.primitive().primitive(y, u);
        const Point p{cplx(0.0, x2), y};
        const FrameCoefficients c = ov_frame_difference(gm.ov(), y, u);
        const FrameMetric frame = reference_frame(gm.semiflat(), p);
        const TwoForm target = frame_form(c, frame);
        auto phi = [&](const Vec4& r) { return gm.potential_at(r[1], {r[2], r[3]}).phi; };
        const double h = 2e-4;
        const Mat4 H = (4.0 * hessian_fd(phi, p.real(), 0.5 * h) - hessian_fd(phi, p.real(), h)) / 3.0;
        samples.push_back({target, 2.0 * levi_form(H)});
        scale = std::max(scale, target.max_abs());
    }
    for (const auto& s : samples) EXPECT_LE(max_diff(s.target, s.fit), 1e-6 * scale);
}

TEST(SolvePotential, PotentialDecaysWithEps) {
    std::vector<double> eps{0.4, 0.2, 0.1}, sup;
    for (double e : eps) sup.push_back(difference_sups(GluedMetric(ov_at(e), GlueConfig{}), 5, 4, 8).phi);
    EXPECT_GT(sup[0], sup[1]);
    EXPECT_GT(sup[1], sup[2]);
    EXPECT_LT(fit_exponential_decay(eps, sup).slope, 0.0);
}

// ---------------------------------------------------------------------------
// Translation sections

TEST(TranslationSection, MatchedZeroSectionsGiveZero) {
    const OVConfig cfg = ov_at(0.2);
    const auto src = ov_fibre_source(cfg, 4, 64);
    const TranslationSection t =
        translation_section([&](cplx y) { return src(y).beta_mean; }, ov_tau_series(cfg), cfg.eps, 0.4, 0.6);
    EXPECT_LE(t.residual, 1e-9);
    for (cplx c : t.sigma.coeffs) EXPECT_EQ(c, cplx(0.0));
}

TEST(TranslationSection, RecoversAConstantTranslation) {
    const OVConfig cfg = ov_at(0.2);
    const double shift = 0.07;
    const auto src = ov_fibre_source(cfg, 4, 64, shift);
    const PeriodSeries tau2 = ov_tau_series(cfg);
    auto beta0 = [&](cplx y) { return src(y).beta_mean; };
    const TranslationSection t = translation_section(beta0, tau2, cfg.eps, 0.4, 0.6);
    EXPECT_NEAR(t.sigma(0.5).imag(), -shift, 1e-9);
    EXPECT_NEAR(t.sigma(0.5).real(), 0.0, 1e-9);
    for (double r : {0.4, 0.5, 0.6}) {
        const cplx y = std::polar(r, 0.8);
        const cplx sig = t.sigma(y), dsig = t.sigma.derivative(y);
        const cplx b0 = -sig.imag() * tau2.derivative(y) / tau2(y).imag();
        EXPECT_LE(std::abs(beta0(y) - cfg.eps * (dsig + b0)), 1e-9);
    }
}

TEST(TranslationSection, ConstantShiftChangesBetaByMinusEpsB0) {
    const OVConfig cfg = ov_at(0.2);
    const double shift = -0.05;
    const auto plain = ov_fibre_source(cfg, 4, 64), moved = ov_fibre_source(cfg, 4, 64, shift);
    const PeriodSeries tau2 = ov_tau_series(cfg);
    for (double t : {0.0, 1.0, 2.5}) {
        const cplx y = std::polar(0.5, t);
        const cplx sigma = I_unit * shift;
        const cplx b0 = -sigma.imag() * tau2.derivative(y) / tau2(y).imag();
        EXPECT_LE(std::abs(moved(y).beta_mean - (plain(y).beta_mean - cfg.eps * b0)), 1e-12);
    }
}

TEST(TranslationSection, NonHolomorphicDataIsAnObstruction) {
    const OVConfig cfg = ov_at(0.2);
    EXPECT_THROW(translation_section([](cplx y) { return 0.01 * std::conj(y); }, ov_tau_series(cfg), cfg.eps, 0.4, 0.6),
                 ObstructionError);
}

// ---------------------------------------------------------------------------
// Glued metric

TEST(GluedMetric, RejectsUnsupportedConfigurations) {
    OVConfig two = ov_at(0.2);
    two.n_fold = 2;
    EXPECT_THROW(GluedMetric(two, GlueConfig{}), ConfigError);
    GlueConfig bad;
    bad.r2 = 0.95;
    EXPECT_THROW(GluedMetric(ov_at(0.2), bad), ConfigError);
    bad = GlueConfig{};
    bad.n_theta = 8;
    EXPECT_THROW(GluedMetric(ov_at(0.2), bad), ConfigError);
}

TEST(GluedMetric, ExactOutsideAndInsideTheAnnulus) {
    const OVConfig cfg = ov_at(0.2);
    const GluedMetric gm(cfg, GlueConfig{});
    const SemiFlatMetric sf = gm.semiflat();
    const auto ov = ov_canonical_sampler(cfg, 1e-3, Patch{});
    for (double t : {0.0, 1.2, -2.2})
        for (double x2 : {-0.5, 0.1, 0.9}) {
            const Point outer{cplx(0.3, x2), std::polar(0.8, t)};
            EXPECT_EQ(gm.form(outer), kahler_form(semiflat_data(sf, outer), outer));
            const Point inner{cplx(0.3, x2), std::polar(0.2, t)};
            EXPECT_EQ(gm.form(inner), ov.form(inner));
        }
}

TEST(GluedMetric, ContinuousAcrossTheJoins) {
    const OVConfig cfg = ov_at(0.2);
    const GluedMetric gm(cfg, GlueConfig{});
    for (double u : {0.02, 0.1, 0.15}) {
        const cplx y = std::polar(0.4 + 1e-9, 0.3);
        const TwoForm ov = kahler_form({1.0 / gm.primitive().potential(y, u), 2.0 * I_unit * gm.primitive().primitive_dy(y, u)}, {});
        EXPECT_LE(max_diff(gm.form_at_u(y, u), ov), 1e-7);
        const cplx z = std::polar(0.6 - 1e-9, 0.3);
        const Point p{cplx(0.0, -gm.primitive().primitive(z, u)), z};
        EXPECT_LE(max_diff(gm.form_at_u(z, u), kahler_form(semiflat_data(gm.semiflat(), p), p)), 1e-7);
    }
}

TEST(GluedMetric, PointAndHeightEvaluationsAgree) {
    const GluedMetric gm(ov_at(0.2), GlueConfig{});
    for (double r : {0.3, 0.45, 0.55, 0.7}) {
        const cplx y = std::polar(r, 0.6);
        const double u = 0.07;
        const Point p{cplx(0.25, -gm.primitive().primitive(y, u)), y};
        EXPECT_LE(max_diff(gm.form(p), gm.form_at_u(y, u)), 1e-11);
    }
}

TEST(GluedMetric, PositiveOnTheFullGridAtSmallEps) {
    const GluedMetric gm(ov_at(0.1), GlueConfig{});
    const PositivityReport rep = positivity_scan(gm, 64, 16);
    EXPECT_GT(rep.min_eigenvalue, 0.0);
    EXPECT_NO_THROW(require_positive(rep));
    PositivityReport negative;
    negative.min_eigenvalue = -1.0;
    EXPECT_THROW(require_positive(negative), PositivityError);
}

TEST(GluedMetric, RicciDefectVanishesOffTheAnnulusAndDecays) {
    std::vector<double> eps{0.4, 0.2, 0.1}, sup;
    for (double e : eps) {
        const GluedMetric gm = GluedMetric(ov_at(e), GlueConfig{}).normalized();
        const DefectScan F = ricci_defect_scan(gm, 32, 8);
        EXPECT_EQ(F.sup_outside, 0.0);
        sup.push_back(F.sup_annulus);
        EXPECT_EQ(gm.ricci_defect(Point{cplx(0.1, 0.2), 0.8}), 0.0);
        EXPECT_EQ(gm.ricci_defect(Point{cplx(0.1, 0.2), 0.2}), 0.0);
    }
    EXPECT_GT(sup[0], sup[1]);
    EXPECT_GT(sup[1], sup[2]);
    const LineFit fit = fit_exponential_decay(eps, sup);
    EXPECT_LT(fit.slope, 0.0);
    EXPECT_GE(fit.r_squared, 0.9);
}

TEST(GluedMetric, RicciDefectAgreesWithTheVolumeRatio) {
    const GluedMetric gm(ov_at(0.4), GlueConfig{});
    for (double r : {0.45, 0.5, 0.55}) {
        const cplx y = std::polar(r, 0.2);
        const double u = 0.11;
        const double direct = -std::log(volume_ratio(gm.form_at_u(y, u)));
        EXPECT_NEAR(gm.ricci_defect_at_u(y, u), direct, 1e-12);
    }
}

TEST(GluedMetric, FibreVolumeIsEps) {
    for (double e : {0.4, 0.2, 0.1}) {
        const GluedMetric gm = GluedMetric(ov_at(e), GlueConfig{}).normalized();
        for (double r : {0.05, 0.3, 0.4, 0.45, 0.5, 0.55, 0.6, 0.8})
            for (double t : {0.0, 2.1}) EXPECT_NEAR(gm.fibre_volume(std::polar(r, t)), e, 1e-9 * e);
    }
}

TEST(GluedMetric, VolumeNormalizationCancelsTheMismatch) {
    const GluedMetric gm(ov_at(0.2), GlueConfig{});
    const double ref = gm.reference_volume();
    const double before = gm.volume_mismatch();
    const GluedMetric norm = gm.normalized();
    EXPECT_LE(std::abs(norm.volume_mismatch()), 1e-10 * ref);
    EXPECT_NEAR(norm.volume_correction(), -before / (2.0 * gm.eps()), 1e-15 + 1e-12 * std::abs(before));
    EXPECT_NEAR(norm.fibre_volume(0.5), gm.fibre_volume(0.5), 1e-14);
    EXPECT_GT(positivity_scan(norm, 16, 4).min_eigenvalue, 0.0);
    EXPECT_NEAR(gm.annulus_integral([&](cplx y) { return gm.bump(y); }), 1.0, 1e-12);
}

TEST(GluedMetric, MismatchIsExponentiallySmall) {
    std::vector<double> eps{0.4, 0.2}, rel;
    for (double e : eps) {
        const GluedMetric gm(ov_at(e), GlueConfig{});
        rel.push_back(std::abs(gm.volume_mismatch()) / gm.reference_volume());
    }
    EXPECT_LT(rel[1], rel[0]);
    EXPECT_LT(rel[1], 1e-6);
}

TEST(GluedMetric, ClosedUpToDifferenceError) {
    const GluedMetric gm(ov_at(0.2), GlueConfig{});
    auto form = [&](const Point& p) { return gm.form(p); };
    for (double r : {0.45, 0.5, 0.55}) {
        const cplx y = std::polar(r, 0.4);
        const Point p{cplx(0.0, -gm.primitive().primitive(y, 0.06)), y};
        const double a = form_closedness_residual(form, p, 2e-3), b = form_closedness_residual(form, p, 1e-3);
        EXPECT_LE(b, 1e-5);
        EXPECT_TRUE(b < 0.5 * a || b < 1e-8) << a << " " << b;
    }
}

TEST(GluedMetric, NumericalRicciDecreasesWithEps) {
    std::vector<double> ric;
    for (double e : {0.4, 0.2, 0.1}) {
        const GluedMetric gm(ov_at(e), GlueConfig{});
        const cplx y = std::polar(0.47, 0.3);
        const Point p{cplx(0.0, -gm.primitive().primitive(y, 0.3 * e)), y};
        ric.push_back(numerical_ricci_of_forms([&](const Point& q) { return gm.form(q); }, p, 1e-3, true));
    }
    EXPECT_GT(ric[0], ric[1]);
    EXPECT_GT(ric[1], ric[2]);
}

TEST(GluedMetric, ScanRowReportsTheEstimates) {
    const GlueRow row = glue_row(ov_at(0.2), GlueConfig{}, {16, 4});
    EXPECT_EQ(row.sup_defect_outside, 0.0);
    EXPECT_GT(row.min_eigenvalue, 0.0);
    EXPECT_LE(row.fibre_volume_error, 1e-9);
    EXPECT_LE(row.mismatch_after_relative, 1e-10);
    EXPECT_GT(row.sups.potential_constant(), 0.0);
}
