#pragma once

// Gluing the semi-flat metric to the periodic Gibbons-Hawking metric over the
// annulus r1 < |y| < r2 around an I1 fibre.
//
// Both metrics are written in the same canonical coordinates (zero section x = 0
// at u = eps/2). Their difference D = omega_SF - omega_OV is i d dbar phi for a
// function phi(x2, y), found mode by mode along the fibre plus a Poisson problem
// on the zero section, and the glued form is omega_SF - i d dbar(psi(|y|^2) phi).

#include "hkc/errors.hpp"
#include "hkc/fitting.hpp"
#include "hkc/geometry_core.hpp"
#include "hkc/gibbons_hawking.hpp"
#include "hkc/jet.hpp"
#include "hkc/ooguri_vafa.hpp"
#include "hkc/parallel.hpp"
#include "hkc/quadrature.hpp"
#include "hkc/semiflat.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace hkc {

struct GlueConfig {
    double r1 = 0.4;
    double r2 = 0.6;
    int n_r = 28;            // Chebyshev intervals across the annulus
    int n_theta = 9;         // angular nodes, odd
    int fibre_modes = 8;     // Fourier modes of phi along the fibre
    int fibre_samples = 64;  // quadrature nodes per fibre

    void validate(double patch_radius) const {
        if (!(0.0 < r1 && r1 < r2 && r2 < patch_radius))
            throw ConfigError("annulus radii must satisfy 0 < r1 < r2 < patch radius");
        if (n_r < 4) throw ConfigError("n_r must be at least 4");
        if (n_theta < 1 || n_theta % 2 == 0) throw ConfigError("n_theta must be a positive odd integer");
        if (fibre_modes < 1) throw ConfigError("fibre_modes must be at least 1");
        if (fibre_samples < 2 * fibre_modes + 2 || fibre_samples % 2 != 0)
            throw ConfigError("fibre_samples must be even and exceed twice fibre_modes");
    }
};

// psi(rho^2) = 1 - S(t), t = (rho^2 - r1^2)/(r2^2 - r1^2), with the septic smoothstep
// S = 35t^4 - 84t^5 + 70t^6 - 20t^7 (C^3 at both joins). Derivatives are in rho^2.
struct Cutoff {
    double r1 = 0.4, r2 = 0.6;

    struct Value {
        double psi = 1.0, d1 = 0.0, d2 = 0.0;
    };

    Value operator()(double rho2) const {
        const double L = r2 * r2 - r1 * r1;
        const double t = (rho2 - r1 * r1) / L;
        if (t <= 0.0) return {1.0, 0.0, 0.0};
        if (t >= 1.0) return {0.0, 0.0, 0.0};
        const double t2 = t * t, t3 = t2 * t, w = 1.0 - t;
        const double S = t2 * t2 * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t3);
        const double S1 = 140.0 * t3 * w * w * w;
        const double S2 = 420.0 * t2 * w * w * (1.0 - 2.0 * t);
        return {1.0 - S, -S1 / L, -S2 / (L * L)};
    }
};

// ----------------------------------------------------------------------------
// Spectral representation on the annulus: Chebyshev-Lobatto nodes in |y| and
// equispaced nodes in arg y.

class AnnulusGrid {
public:
    AnnulusGrid(double r1, double r2, int n_r, int n_theta)
        : r1_(r1), r2_(r2), n_(n_r), n_theta_(n_theta), D_(n_r + 1, n_r + 1) {
        const double mid = 0.5 * (r1 + r2), half = 0.5 * (r2 - r1);
        for (int i = 0; i <= n_; ++i) {
            x_.push_back(std::cos(std::numbers::pi * i / n_));
            r_.push_back(mid + half * x_.back());
            w_.push_back((i % 2 ? -1.0 : 1.0) * (i == 0 || i == n_ ? 0.5 : 1.0));
        }
        for (int i = 0; i <= n_; ++i) {
            double diag = 0.0;
            for (int j = 0; j <= n_; ++j) {
                if (i == j) continue;
                const double ci = (i == 0 || i == n_) ? 2.0 : 1.0, cj = (j == 0 || j == n_) ? 2.0 : 1.0;
                const double v = (ci / cj) * ((i + j) % 2 ? -1.0 : 1.0) / (x_[i] - x_[j]) / half;
                D_(i, j) = v;
                diag -= v;
            }
            D_(i, i) = diag;
        }
    }

    double r1() const { return r1_; }
    double r2() const { return r2_; }
    int radial_nodes() const { return n_ + 1; }
    int angular_nodes() const { return n_theta_; }
    int max_harmonic() const { return (n_theta_ - 1) / 2; }
    double radius(int i) const { return r_[i]; }
    double angle(int j) const { return 2.0 * std::numbers::pi * j / n_theta_; }
    cplx node(int i, int j) const { return std::polar(r_[i], angle(j)); }
    const Eigen::MatrixXd& diff() const { return D_; }

    // Barycentric interpolation of nodal values (second kind formula).
    template <class V>
    V interpolate(const std::vector<V>& f, double r) const {
        V num{}, den{};
        for (int i = 0; i <= n_; ++i) {
            const double d = r - r_[i];
            if (d == 0.0) return f[i];
            num += f[i] * (w_[i] / d);
            den += V(w_[i] / d);
        }
        return num / den;
    }

private:
    double r1_, r2_;
    int n_, n_theta_;
    std::vector<double> x_, r_, w_;
    Eigen::MatrixXd D_;
};

// A complex field on the annulus stored as angular Fourier coefficients at each radial node.
class AnnulusField {
public:
    struct Value {
        cplx f{};
        cplx d1{}, d2{};  // d/dy1, d/dy2
    };

    AnnulusField() = default;

    // coeff[i][m + M] multiplies e^{i m theta} at radial node i.
    AnnulusField(const AnnulusGrid* grid, std::vector<std::vector<cplx>> coeff) : grid_(grid), coeff_(std::move(coeff)) {
        const int n = grid_->radial_nodes(), nm = static_cast<int>(coeff_[0].size());
        dcoeff_.assign(n, std::vector<cplx>(nm));
        for (int m = 0; m < nm; ++m)
            for (int i = 0; i < n; ++i) {
                cplx s{};
                for (int j = 0; j < n; ++j) s += grid_->diff()(i, j) * coeff_[j][m];
                dcoeff_[i][m] = s;
            }
    }

    static AnnulusField from_nodes(const AnnulusGrid* grid, const std::vector<std::vector<cplx>>& values) {
        const int M = grid->max_harmonic(), nt = grid->angular_nodes();
        std::vector<std::vector<cplx>> coeff(grid->radial_nodes(), std::vector<cplx>(2 * M + 1));
        for (int i = 0; i < grid->radial_nodes(); ++i)
            for (int m = -M; m <= M; ++m) {
                cplx s{};
                for (int j = 0; j < nt; ++j) s += values[i][j] * std::polar(1.0, -m * grid->angle(j));
                coeff[i][m + M] = s / static_cast<double>(nt);
            }
        return AnnulusField(grid, std::move(coeff));
    }

    const std::vector<std::vector<cplx>>& coefficients() const { return coeff_; }

    Value operator()(cplx y) const {
        const int n = grid_->radial_nodes(), M = grid_->max_harmonic();
        const double r = std::abs(y), th = std::arg(y);
        std::vector<cplx> g(n), gr(n), gt(n);
        for (int i = 0; i < n; ++i) {
            cplx a{}, b{}, c{};
            for (int m = -M; m <= M; ++m) {
                const cplx e = std::polar(1.0, m * th);
                a += coeff_[i][m + M] * e;
                b += dcoeff_[i][m + M] * e;
                c += coeff_[i][m + M] * (I_unit * static_cast<double>(m)) * e;
            }
            g[i] = a, gr[i] = b, gt[i] = c;
        }
        const cplx f = grid_->interpolate(g, r), fr = grid_->interpolate(gr, r), ft = grid_->interpolate(gt, r);
        const double c = std::cos(th), s = std::sin(th);
        return {f, c * fr - s / r * ft, s * fr + c / r * ft};
    }

private:
    const AnnulusGrid* grid_ = nullptr;
    std::vector<std::vector<cplx>> coeff_, dcoeff_;
};

// Laplacian Z = source on the annulus with Z = 0 on both circles.
inline AnnulusField solve_dirichlet_poisson(const AnnulusGrid* grid, const std::vector<std::vector<cplx>>& source) {
    const AnnulusField src = AnnulusField::from_nodes(grid, source);
    const int n = grid->radial_nodes(), M = grid->max_harmonic();
    const Eigen::MatrixXd& D = grid->diff();
    const Eigen::MatrixXd D2 = D * D;
    std::vector<std::vector<cplx>> coeff(n, std::vector<cplx>(2 * M + 1));
    for (int m = -M; m <= M; ++m) {
        Eigen::MatrixXd L(n, n);
        Eigen::VectorXcd rhs(n);
        for (int i = 0; i < n; ++i) {
            const double r = grid->radius(i);
            for (int j = 0; j < n; ++j) L(i, j) = D2(i, j) + D(i, j) / r;
            L(i, i) -= static_cast<double>(m * m) / (r * r);
            rhs(i) = src.coefficients()[i][m + M];
        }
        for (int i : {0, n - 1}) {
            L.row(i).setZero();
            L(i, i) = 1.0;
            rhs(i) = 0.0;
        }
        const Eigen::VectorXcd z = L.cast<cplx>().partialPivLu().solve(rhs);
        for (int i = 0; i < n; ++i) coeff[i][m + M] = z(i);
    }
    return AnnulusField(grid, std::move(coeff));
}

// ----------------------------------------------------------------------------
// The potential phi(x2, y) = Z(y) + sum_k 2 Re c_k(y) (e^{2 pi i k s} - e^{i pi k}),
// with fibre coordinate s = 1/2 - x2 / Im tau2(y); Z is phi on the zero section.

// Per base point: the fibre Fourier modes of alpha (k = 1..K, in s), the fibre
// mean of beta and gamma on the zero section.
struct FibreData {
    std::vector<cplx> alpha_modes;
    cplx beta_mean{};
    double gamma_zero_section = 0.0;
};

struct PotentialValue {
    double phi = 0.0;
    double phi_x2 = 0.0;
    std::array<double, 2> phi_y{};  // d/dy1, d/dy2 at fixed x2
};

class PotentialSolution {
public:
    PotentialSolution() = default;
    PotentialSolution(std::shared_ptr<const AnnulusGrid> grid, std::vector<AnnulusField> modes, AnnulusField base)
        : grid_(std::move(grid)), modes_(std::move(modes)), base_(std::move(base)) {}

    const AnnulusGrid& grid() const { return *grid_; }
    int modes() const { return static_cast<int>(modes_.size()); }
    const AnnulusField& mode(int k) const { return modes_.at(k - 1); }
    const AnnulusField& base() const { return base_; }

    // height = Im tau2 at y, dheight its (d/dy1, d/dy2).
    PotentialValue evaluate(double x2, cplx y, double height, std::array<double, 2> dheight) const {
        const double s = 0.5 - x2 / height;
        const std::array<double, 2> ds{x2 * dheight[0] / (height * height), x2 * dheight[1] / (height * height)};
        const AnnulusField::Value z = base_(y);
        PotentialValue v;
        v.phi = z.f.real();
        v.phi_y = {z.d1.real(), z.d2.real()};
        for (int k = 1; k <= modes(); ++k) {
            const AnnulusField::Value c = modes_[k - 1](y);
            const double w = 2.0 * std::numbers::pi * k;
            const cplx E = std::polar(1.0, w * s), dE = I_unit * w * E;
            const cplx Eh(k % 2 ? -1.0 : 1.0);
            v.phi += 2.0 * (c.f * (E - Eh)).real();
            v.phi_x2 -= 2.0 * (c.f * dE).real() / height;
            v.phi_y[0] += 2.0 * (c.d1 * (E - Eh) + c.f * dE * ds[0]).real();
            v.phi_y[1] += 2.0 * (c.d2 * (E - Eh) + c.f * dE * ds[1]).real();
        }
        return v;
    }

private:
    std::shared_ptr<const AnnulusGrid> grid_;
    std::vector<AnnulusField> modes_;
    AnnulusField base_;
};

// phi_ss = 2 alpha fixes the fibre modes, c_k = -2 alpha_k / (2 pi k)^2, and
// Laplacian Z = 2 gamma on the zero section with Z = 0 on the boundary circles.
// A fibre mean of beta above `obstruction_tol` means no such phi exists.
template <class Source>
PotentialSolution solve_potential(std::shared_ptr<const AnnulusGrid> grid, Source&& source, int K,
                                  double obstruction_tol) {
    const int n = grid->radial_nodes(), nt = grid->angular_nodes();
    std::vector<std::vector<std::vector<cplx>>> mode_nodes(K, std::vector<std::vector<cplx>>(n, std::vector<cplx>(nt)));
    std::vector<std::vector<cplx>> gamma(n, std::vector<cplx>(nt));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < nt; ++j) {
            const cplx y = grid->node(i, j);
            const FibreData d = source(y);
            if (std::abs(d.beta_mean) > obstruction_tol)
                throw ObstructionError("fibre mean of beta is " + std::to_string(std::abs(d.beta_mean)) + " at |y| = " +
                                       std::to_string(std::abs(y)) + ", above the tolerance");
            if (static_cast<int>(d.alpha_modes.size()) < K) throw DomainError("solve_potential: too few fibre modes");
            for (int k = 1; k <= K; ++k) {
                const double w = 2.0 * std::numbers::pi * k;
                mode_nodes[k - 1][i][j] = -2.0 * d.alpha_modes[k - 1] / (w * w);
            }
            gamma[i][j] = 2.0 * d.gamma_zero_section;
        }
    std::vector<AnnulusField> modes;
    for (int k = 0; k < K; ++k) modes.push_back(AnnulusField::from_nodes(grid.get(), mode_nodes[k]));
    AnnulusField base = solve_dirichlet_poisson(grid.get(), gamma);
    return PotentialSolution(std::move(grid), std::move(modes), std::move(base));
}

// The frame used for all decompositions: theta_v = (dx + b0 dy)/Im tau2, theta_h = dy,
// with b0 the semi-flat b. Only tau1 = 1 is supported.
inline FrameMetric reference_frame(const SemiFlatMetric& sf, const Point& p) {
    const FrameMetric fm = semiflat_data(sf, p);
    return {fm.W / sf.eps, fm.b};
}

// Frame coefficients of omega_SF - other at p.
template <class FormFn>
FrameCoefficients frame_difference(const SemiFlatMetric& sf, FormFn&& other, const Point& p, double tolerance = 1e-10) {
    const TwoForm d = kahler_form(semiflat_data(sf, p), p) - other(p);
    return frame_decompose(d, reference_frame(sf, p), p, tolerance);
}

// Fibre data of an arbitrary x1-invariant closed (1,1) form, by the trapezoid rule in s.
template <class FormFn>
auto fibre_source_from_form(FormFn form, SemiFlatMetric sf, int K, int n_s, double tolerance = 1e-8) {
    if (n_s % 2 != 0) throw DomainError("fibre_source_from_form: n_s must be even");
    return [form = std::move(form), sf = std::move(sf), K, n_s, tolerance](cplx y) {
        const double height = sf.periods.tau2(y).imag();
        FibreData d;
        d.alpha_modes.assign(K, cplx{});
        for (int j = 0; j < n_s; ++j) {
            const double s = static_cast<double>(j) / n_s;
            const Point p{cplx(0.0, height * (0.5 - s)), y};
            const FrameCoefficients c = frame_decompose(form(p), reference_frame(sf, p), p, tolerance);
            for (int k = 1; k <= K; ++k) d.alpha_modes[k - 1] += c.alpha * std::polar(1.0 / n_s, -2.0 * std::numbers::pi * k * s);
            d.beta_mean += c.beta / static_cast<double>(n_s);
            if (2 * j == n_s) d.gamma_zero_section = c.gamma;
        }
        return d;
    };
}

// ----------------------------------------------------------------------------
// The Ooguri-Vafa side, written through its fluctuating parts V_fl = V - Im tau2 / eps
// and P_fl = P - (u - eps/2) Im tau2 / eps, which are exponentially small on the annulus.

struct OVFibreSample {
    double height = 0.0;  // Im tau2
    cplx dtau{};          // tau2'
    cplx dheight{};       // d_y Im tau2 = tau2' / 2i
    double V = 0.0, vfl = 0.0;
    double P = 0.0, pfl = 0.0;
    cplx dpfl{};          // d_y P_fl
};

inline OVFibreSample ov_fibre_sample(const OVConfig& cfg, cplx y, double u) {
    using J = Jet<2, 1>;
    const double eps = cfg.eps;
    OVFibreSample a;
    a.height = ov_fibre_height(y, cfg);
    a.dtau = ov_tau_series(cfg).derivative(y);
    a.dheight = a.dtau / (2.0 * I_unit);
    a.vfl = v0_oscillation(u, std::abs(y), eps);
    a.V = a.height / eps + a.vfl;
    const J p = ov_primitive_oscillation(J::variable(0, y.real()), J::variable(1, y.imag()), u, cfg);
    a.pfl = p.value();
    a.dpfl = 0.5 * cplx(p.derivative({1, 0}), -p.derivative({0, 1}));
    a.P = (u - 0.5 * eps) * a.height / eps + a.pfl;
    return a;
}

// b_OV - b_SF where the OV metric is translated by x -> x + i shift.
inline cplx ov_b_difference(const OVFibreSample& a, double shift) {
    return 2.0 * I_unit * a.dpfl - (a.pfl + shift) * a.dtau / a.height;
}

// Frame coefficients of omega_SF - omega_OV at the OV point (y, u):
// alpha = eps Im tau2 V_fl / V, beta = -(Im tau2 / V)(b - b0), gamma = -V_fl - |b - b0|^2 / V.
inline FrameCoefficients ov_frame_coefficients(const OVFibreSample& a, double eps, double shift = 0.0) {
    const cplx db = ov_b_difference(a, shift);
    return {eps * a.height * a.vfl / a.V, -(a.height / a.V) * db, -a.vfl - std::norm(db) / a.V};
}

inline FrameCoefficients ov_frame_difference(const OVConfig& cfg, cplx y, double u, double shift = 0.0) {
    return ov_frame_coefficients(ov_fibre_sample(cfg, y, u), cfg.eps, shift);
}

// Fibre data of omega_SF - omega_OV by the periodic trapezoid rule in u; ds = (V / Im tau2) du
// turns the s-modes of alpha into eps * int V_fl e^{-2 pi i k s(u)} du.
inline auto ov_fibre_source(const OVConfig& cfg, int K, int n_u, double shift = 0.0) {
    return [cfg, K, n_u, shift](cplx y) {
        const double eps = cfg.eps, du = eps / n_u;
        FibreData d;
        d.alpha_modes.assign(K, cplx{});
        for (int j = 0; j < n_u; ++j) {
            const double u = j * du;
            const OVFibreSample a = ov_fibre_sample(cfg, y, u);
            const double s = u / eps + a.pfl / a.height;
            for (int k = 1; k <= K; ++k)
                d.alpha_modes[k - 1] += eps * du * a.vfl * std::polar(1.0, -2.0 * std::numbers::pi * k * s);
            d.beta_mean -= du * ov_b_difference(a, shift);
        }
        d.gamma_zero_section = -v0_oscillation(0.5 * eps, std::abs(y), eps);
        return d;
    };
}

// int over x1 in [0,1) and the loop y = r e^{2 pi i t} at fixed s of (omega_SF - T*omega_OV).
// Along this torus the contraction with d/dx1 is -du, so a single-valued u gives 0.
inline double ov_t_cycle_integral(const OVConfig& cfg, double r, double s, int n_t = 32, double shift = 0.0) {
    const SemiFlatMetric sf{ov_period_pair(cfg), cfg.eps};
    const OVPrimitive prim(cfg);
    double sum = 0.0;
    for (int j = 0; j < n_t; ++j) {
        const cplx y = std::polar(r, 2.0 * std::numbers::pi * j / n_t);
        const double height = ov_fibre_height(y, cfg);
        const cplx dheight = ov_tau_series(cfg).derivative(y) / (2.0 * I_unit);
        const double x2 = height * (0.5 - s);
        const Point p{cplx(0.0, x2), y};
        const double u = solve_fibre_height(prim, y, -(x2 + shift));
        const TwoForm ov = kahler_form({1.0 / prim.potential(y, u), 2.0 * I_unit * prim.primitive_dy(y, u)}, p);
        const TwoForm d = kahler_form(semiflat_data(sf, p), p) - ov;
        const cplx dy = 2.0 * std::numbers::pi * I_unit * y;
        const double dx2 = (0.5 - s) * (2.0 * (dheight * dy).real());
        const std::array<cplx, 4> dx1{1.0, 0.0, 0.0, 0.0}, dt{0.0, dx2, dy.real(), dy.imag()};
        sum += apply(d, dx1, dt).real();
    }
    return sum / n_t;
}

// ----------------------------------------------------------------------------
// Holomorphic translation sections.

struct TranslationSection {
    PeriodSeries sigma;   // sigma(y) = sum c_n y^n with Re c_0 = 0
    double residual = 0.0;
};

// Least-squares polynomial sigma of the given degree with
// eps (sigma' + b0(sigma, y)) = beta0(y), b0(sigma, y) = -Im sigma tau2' / Im tau2,
// sampled on circles across [r1, r2]. When beta0 is already below `tolerance` the
// zero section is returned.
template <class Beta0>
TranslationSection translation_section(Beta0&& beta0, const PeriodSeries& tau2, double eps, double r1, double r2,
                                       int degree = 4, double tolerance = 1e-9) {
    const int n_circles = 5, n_angles = 16;
    std::vector<cplx> ys, rhs;
    double scale = 0.0;
    for (int a = 0; a < n_circles; ++a)
        for (int b = 0; b < n_angles; ++b) {
            const cplx y = std::polar(r1 + (r2 - r1) * a / (n_circles - 1), 2.0 * std::numbers::pi * (b + 0.25) / n_angles);
            ys.push_back(y);
            rhs.push_back(beta0(y));
            scale = std::max(scale, std::abs(rhs.back()));
        }
    TranslationSection out;
    out.sigma.coeffs.assign(1, cplx{});
    if (scale <= tolerance) {
        out.residual = scale;
        return out;
    }
    // Real unknowns: Im c_0, then (Re c_n, Im c_n) for n >= 1.
    const int m = 1 + 2 * degree;
    Eigen::MatrixXd A(2 * ys.size(), m);
    Eigen::VectorXd b(2 * ys.size());
    for (std::size_t p = 0; p < ys.size(); ++p) {
        const cplx y = ys[p];
        const cplx t = tau2.derivative(y);
        const double h = tau2(y).imag();
        auto column = [&](cplx sigma, cplx dsigma) { return eps * (dsigma - sigma.imag() * t / h); };
        std::vector<cplx> cols;
        cols.push_back(column(I_unit, 0.0));
        for (int n = 1; n <= degree; ++n) {
            const cplx yn = std::pow(y, n), dyn = static_cast<double>(n) * std::pow(y, n - 1);
            cols.push_back(column(yn, dyn));
            cols.push_back(column(I_unit * yn, I_unit * dyn));
        }
        for (int q = 0; q < m; ++q) {
            A(2 * p, q) = cols[q].real();
            A(2 * p + 1, q) = cols[q].imag();
        }
        b(2 * p) = rhs[p].real();
        b(2 * p + 1) = rhs[p].imag();
    }
    const Eigen::VectorXd x = A.colPivHouseholderQr().solve(b);
    out.residual = (A * x - b).cwiseAbs().maxCoeff();
    if (out.residual > tolerance * std::max(1.0, scale))
        throw ObstructionError("beta0 is not of the form eps(sigma' + b0(sigma)) for a holomorphic sigma: residual " +
                               std::to_string(out.residual));
    out.sigma.coeffs.assign(degree + 1, cplx{});
    out.sigma.coeffs[0] = I_unit * x(0);
    for (int n = 1; n <= degree; ++n) out.sigma.coeffs[n] = cplx(x(2 * n - 1), x(2 * n));
    return out;
}

// ----------------------------------------------------------------------------
// The glued metric.

class GluedMetric {
public:
    enum class Region { ov, annulus, semiflat };

    GluedMetric(OVConfig ov, GlueConfig glue) : ov_(std::move(ov)), glue_(glue), prim_(ov_), cut_{glue.r1, glue.r2} {
        ov_.validate();
        glue_.validate(ov_.radius);
        if (ov_.n_fold != 1) throw ConfigError("gluing is implemented for I1 fibres (n_fold = 1)");
        check_positivity(ov_);
        sf_ = {ov_period_pair(ov_), ov_.eps};
        const double tol = 1e-7 * ov_.eps;
        const double cycle = ov_t_cycle_integral(ov_, 0.5 * (glue_.r1 + glue_.r2), 0.25);
        if (std::abs(cycle) > tol)
            throw ObstructionError("integral of omega_SF - omega_OV over the T-cycle is " + std::to_string(cycle));
        auto grid = std::make_shared<const AnnulusGrid>(glue_.r1, glue_.r2, glue_.n_r, glue_.n_theta);
        potential_ = solve_potential(grid, ov_fibre_source(ov_, glue_.fibre_modes, glue_.fibre_samples),
                                     glue_.fibre_modes, tol);
        bump_scale_ = 1.0 / annulus_integral([this](cplx y) { return bump_profile(y); });
    }

    const OVConfig& ov() const { return ov_; }
    const GlueConfig& glue() const { return glue_; }
    const SemiFlatMetric& semiflat() const { return sf_; }
    const PotentialSolution& potential() const { return potential_; }
    const OVPrimitive& primitive() const { return prim_; }
    double eps() const { return ov_.eps; }
    double volume_correction() const { return correction_; }

    Region region(cplx y) const {
        const double r = std::abs(y);
        return r <= glue_.r1 ? Region::ov : r >= glue_.r2 ? Region::semiflat : Region::annulus;
    }

    // OV height u over (y, x2), for points with |y| < r2.
    double fibre_height(const Point& p) const { return solve_fibre_height(prim_, p.y, -p.x.imag()); }

    TwoForm form(const Point& p) const {
        switch (region(p.y)) {
            case Region::semiflat: return kahler_form(semiflat_data(sf_, p), p);
            case Region::ov: return kahler_form(canonical_sample(prim_, PeriodSeries{}, p).fm, p);
            default: {
                const Split s = annulus_split(p.y, fibre_height(p), p.x.imag());
                return s.semiflat - s.correction;
            }
        }
    }

    // The form at the point of the fibre over y with OV height u (x1 = 0).
    TwoForm form_at_u(cplx y, double u) const {
        switch (region(y)) {
            case Region::semiflat: {
                const Point p{cplx(0.0, -ov_fibre_sample(ov_, y, u).P), y};
                return kahler_form(semiflat_data(sf_, p), p);
            }
            case Region::ov: return kahler_form(ov_frame(y, u), Point{});
            default: {
                const Split s = annulus_split(y, u, -ov_fibre_sample(ov_, y, u).P);
                return s.semiflat - s.correction;
            }
        }
    }

    // F = log(Omega ^ conj Omega / 2 omega^2); both model metrics are Ricci-flat, so F
    // vanishes identically off the annulus. Inside, omega = omega_SF - X and
    // omega_SF^2 has coefficient 2 exactly, which gives F without cancellation.
    double ricci_defect_at_u(cplx y, double u) const {
        if (region(y) != Region::annulus) return 0.0;
        const Split s = annulus_split(y, u, -ov_fibre_sample(ov_, y, u).P);
        return defect(s);
    }
    double ricci_defect(const Point& p) const {
        if (region(p.y) != Region::annulus) return 0.0;
        return defect(annulus_split(p.y, fibre_height(p), p.x.imag()));
    }

    // int over the fibre of omega, through the OV height: dx1 dx2 = V du dx1.
    double fibre_volume(cplx y, int n_u = 64) const {
        if (region(y) == Region::semiflat) {
            const double height = sf_.periods.tau2(y).imag();
            const Point p{0.0, y};
            return kahler_form(semiflat_data(sf_, p), p)(0, 1) * height;
        }
        const double du = ov_.eps / n_u;
        double sum = 0.0;
        for (int j = 0; j < n_u; ++j) {
            const double u = (j + 0.5) * du;
            sum += form_at_u(y, u)(0, 1) * prim_.potential(y, u) * du;
        }
        return sum;
    }

    // int (omega^2 - (Re Omega)^2) over the part of the total space above the annulus.
    double volume_mismatch(int n_u = 32) const {
        return annulus_integral([&](cplx y) {
            const double du = ov_.eps / n_u;
            double s = 0.0;
            for (int j = 0; j < n_u; ++j) {
                const double u = (j + 0.5) * du;
                const OVFibreSample a = ov_fibre_sample(ov_, y, u);
                const Split sp = annulus_split(y, u, -a.P, &a);
                s += (wedge(sp.correction, sp.correction) - 2.0 * wedge(sp.semiflat, sp.correction)) * a.V * du;
            }
            return s;
        });
    }

    // int (Re Omega)^2 above the annulus: coefficient 2 over a fibre of coordinate area Im tau2.
    double reference_volume() const {
        return annulus_integral([&](cplx y) { return 2.0 * ov_fibre_height(y, ov_); });
    }

    // Adds a * kappa, kappa = c psi (1 - psi) dy1 ^ dy2 with int kappa = 1 over the base, so that
    // the total volume matches: ([omega] + a E)^2 = [omega]^2 + 2 a eps.
    GluedMetric normalized(int n_u = 32) const {
        GluedMetric out = *this;
        out.correction_ = correction_ - volume_mismatch(n_u) / (2.0 * ov_.eps);
        return out;
    }

    // c psi (1 - psi), the base density of the volume-correction two-form.
    double bump(cplx y) const { return bump_scale_ * bump_profile(y); }

    // Cartesian annulus integral with Gauss-Legendre in |y| and the trapezoid rule in arg y.
    template <class F>
    double annulus_integral(F&& f, int n_angles = 16) const {
        return integrate_gauss(
            [&](double r) {
                double s = 0.0;
                for (int j = 0; j < n_angles; ++j) s += f(std::polar(r, 2.0 * std::numbers::pi * (j + 0.5) / n_angles));
                return s * (2.0 * std::numbers::pi / n_angles) * r;
            },
            glue_.r1, glue_.r2, 12, 4);
    }

    // phi at the point (x2, y) of the annulus.
    PotentialValue potential_at(double x2, cplx y) const {
        const OVFibreSample a = ov_fibre_sample(ov_, y, 0.5 * ov_.eps);
        return potential_.evaluate(x2, y, a.height, {2.0 * a.dheight.real(), -2.0 * a.dheight.imag()});
    }

private:
    struct Split {
        TwoForm semiflat;    // omega_SF
        TwoForm correction;  // omega_SF - omega
    };

    FrameMetric ov_frame(cplx y, double u) const {
        return {1.0 / prim_.potential(y, u), 2.0 * I_unit * prim_.primitive_dy(y, u)};
    }

    double bump_profile(cplx y) const {
        const double psi = cut_(std::norm(y)).psi;
        return psi * (1.0 - psi);
    }

    double defect(const Split& s) const {
        return -std::log1p(0.5 * (wedge(s.correction, s.correction) - 2.0 * wedge(s.semiflat, s.correction)));
    }

    Split annulus_split(cplx y, double u, double x2, const OVFibreSample* pre = nullptr) const {
        const OVFibreSample a = pre ? *pre : ov_fibre_sample(ov_, y, u);
        const double eps = ov_.eps;
        const cplx b0 = -x2 * a.dtau / a.height;
        Split out;
        out.semiflat = kahler_form({eps / a.height, b0}, Point{});
        const FrameCoefficients k = ov_frame_coefficients(a, eps);
        const TwoForm D = frame_form(k, {1.0 / a.height, b0});

        const PotentialValue pv =
            potential_.evaluate(x2, y, a.height, {2.0 * a.dheight.real(), -2.0 * a.dheight.imag()});
        const cplx phi_x = -0.5 * I_unit * pv.phi_x2;
        const cplx phi_y = 0.5 * cplx(pv.phi_y[0], -pv.phi_y[1]);
        const Cutoff::Value c = cut_(std::norm(y));
        const cplx psi_y = c.d1 * std::conj(y), psi_yb = c.d1 * y;
        std::array<std::array<cplx, 2>, 2> H{};
        H[1][0] = 2.0 * psi_y * std::conj(phi_x);
        H[0][1] = 2.0 * phi_x * psi_yb;
        H[1][1] = 2.0 * (psi_y * std::conj(phi_y) + phi_y * psi_yb + pv.phi * (c.d1 + std::norm(y) * c.d2));
        out.correction = c.psi * D + hermitian_form({kDx, kDy}, H);
        if (correction_ != 0.0) out.correction.add(2, 3, -correction_ * bump(y));
        return out;
    }

    OVConfig ov_;
    GlueConfig glue_;
    OVPrimitive prim_;
    Cutoff cut_;
    SemiFlatMetric sf_;
    PotentialSolution potential_;
    double bump_scale_ = 1.0;
    double correction_ = 0.0;
};

// ----------------------------------------------------------------------------
// Scans.

struct PositivityReport {
    double min_eigenvalue = INFINITY;
    cplx y{};
    double u = 0.0;
};

// Smallest metric eigenvalue over an n x n grid of cell centres in the disc of the
// OV patch, times n_u heights per fibre.
inline PositivityReport positivity_scan(const GluedMetric& gm, int n_grid = 64, int n_u = 16) {
    const double R = gm.ov().radius, eps = gm.eps();
    std::vector<PositivityReport> rows(n_grid);
    parallel_for(n_grid, [&](std::size_t i) {
        PositivityReport best;
        const double y1 = -R + (i + 0.5) * 2.0 * R / n_grid;
        for (int j = 0; j < n_grid; ++j) {
            const cplx y(y1, -R + (j + 0.5) * 2.0 * R / n_grid);
            if (std::abs(y) > R) continue;
            for (int k = 0; k < n_u; ++k) {
                const double u = (k + 0.5) * eps / n_u;
                const double e = min_eigenvalue(metric_from_form(gm.form_at_u(y, u)));
                if (!(e >= best.min_eigenvalue)) best = {e, y, u};
            }
        }
        rows[i] = best;
    });
    PositivityReport out;
    for (const auto& r : rows)
        if (!(r.min_eigenvalue >= out.min_eigenvalue)) out = r;
    return out;
}

inline void require_positive(const PositivityReport& r) {
    if (!(r.min_eigenvalue > 0.0))
        throw PositivityError("glued metric is not positive: eigenvalue " + std::to_string(r.min_eigenvalue) +
                              " at y = (" + std::to_string(r.y.real()) + ", " + std::to_string(r.y.imag()) +
                              "), u = " + std::to_string(r.u));
}

struct DefectScan {
    double sup_annulus = 0.0;   // sup |F| over grid points above the annulus
    double sup_outside = 0.0;   // sup |F| elsewhere
    cplx worst_y{};
    double worst_u = 0.0;
};

inline DefectScan ricci_defect_scan(const GluedMetric& gm, int n_grid = 64, int n_u = 16) {
    const double R = gm.ov().radius, eps = gm.eps();
    std::vector<DefectScan> rows(n_grid);
    parallel_for(n_grid, [&](std::size_t i) {
        DefectScan d;
        const double y1 = -R + (i + 0.5) * 2.0 * R / n_grid;
        for (int j = 0; j < n_grid; ++j) {
            const cplx y(y1, -R + (j + 0.5) * 2.0 * R / n_grid);
            if (std::abs(y) > R) continue;
            const bool inside = gm.region(y) == GluedMetric::Region::annulus;
            for (int k = 0; k < n_u; ++k) {
                const double u = (k + 0.5) * eps / n_u;
                const double F = std::abs(gm.ricci_defect_at_u(y, u));
                if (!inside) {
                    d.sup_outside = std::max(d.sup_outside, F);
                } else if (F > d.sup_annulus) {
                    d.sup_annulus = F;
                    d.worst_y = y;
                    d.worst_u = u;
                }
            }
        }
        rows[i] = d;
    });
    DefectScan out;
    for (const auto& r : rows) {
        out.sup_outside = std::max(out.sup_outside, r.sup_outside);
        if (r.sup_annulus > out.sup_annulus) {
            out.sup_annulus = r.sup_annulus;
            out.worst_y = r.worst_y;
            out.worst_u = r.worst_u;
        }
    }
    return out;
}

// Sup norms of the frame fields and phi over the annulus nodes.
struct DifferenceSups {
    double alpha = 0.0, beta = 0.0, gamma = 0.0, phi = 0.0;
    // sup |phi| / (sup |alpha| + sup |beta| + sup |gamma|)
    double potential_constant() const { return phi / (alpha + beta + gamma); }
};

inline DifferenceSups difference_sups(const GluedMetric& gm, int n_r = 9, int n_theta = 8, int n_u = 16) {
    DifferenceSups d;
    const GlueConfig& g = gm.glue();
    for (int i = 0; i < n_r; ++i) {
        const double r = g.r1 + (g.r2 - g.r1) * i / (n_r - 1);
        for (int j = 0; j < n_theta; ++j) {
            const cplx y = std::polar(r, 2.0 * std::numbers::pi * j / n_theta);
            for (int k = 0; k < n_u; ++k) {
                const double u = k * gm.eps() / n_u;
                const OVFibreSample a = ov_fibre_sample(gm.ov(), y, u);
                const FrameCoefficients c = ov_frame_difference(gm.ov(), y, u);
                d.alpha = std::max(d.alpha, std::abs(c.alpha));
                d.beta = std::max(d.beta, std::abs(c.beta));
                d.gamma = std::max(d.gamma, std::abs(c.gamma));
                d.phi = std::max(d.phi, std::abs(gm.potential_at(-a.P, y).phi));
            }
        }
    }
    return d;
}

struct GlueRow {
    double eps = 0.0;
    DifferenceSups sups;
    double sup_defect = 0.0;
    double sup_defect_outside = 0.0;
    double min_eigenvalue = 0.0;
    double mismatch_relative = 0.0;        // before the volume correction
    double mismatch_after_relative = 0.0;  // after it
    double fibre_volume_error = 0.0;       // max |int_fibre omega - eps| / eps over sampled fibres
};

struct GlueScanGrid {
    int n_grid = 64;
    int n_u = 16;
};

inline GlueRow glue_row(const OVConfig& cfg, const GlueConfig& glue, const GlueScanGrid& grid) {
    GluedMetric gm(cfg, glue);
    GlueRow row;
    row.eps = cfg.eps;
    row.sups = difference_sups(gm);
    const double ref = gm.reference_volume();
    row.mismatch_relative = std::abs(gm.volume_mismatch()) / ref;
    const GluedMetric norm = gm.normalized();
    row.mismatch_after_relative = std::abs(norm.volume_mismatch()) / ref;
    const DefectScan F = ricci_defect_scan(norm, grid.n_grid, grid.n_u);
    row.sup_defect = F.sup_annulus;
    row.sup_defect_outside = F.sup_outside;
    row.min_eigenvalue = positivity_scan(norm, grid.n_grid, grid.n_u).min_eigenvalue;
    for (double r : {0.1, glue.r1, 0.5 * (glue.r1 + glue.r2), glue.r2, 0.5 * (glue.r2 + cfg.radius)})
        for (double t : {0.0, 1.3, 2.9}) {
            const double v = norm.fibre_volume(std::polar(r, t));
            row.fibre_volume_error = std::max(row.fibre_volume_error, std::abs(v - cfg.eps) / cfg.eps);
        }
    return row;
}

}  // namespace hkc
