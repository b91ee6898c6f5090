#pragma once

// Canonical-coordinate geometry on C^2 with coordinates x = x1 + i x2 (fibre)
// and y = y1 + i y2 (base). Real tensors use the basis (x1, x2, y1, y2).

#include "hkc/errors.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>

namespace hkc {

using cplx = std::complex<double>;
using Vec4 = std::array<double, 4>;
using Mat4 = Eigen::Matrix4d;
inline constexpr cplx I_unit{0.0, 1.0};

struct Point {
    cplx x{}, y{};

    Vec4 real() const { return {x.real(), x.imag(), y.real(), y.imag()}; }
    static Point from_real(const Vec4& r) { return {{r[0], r[1]}, {r[2], r[3]}}; }
};

inline Point shifted(const Point& p, int axis, double step) {
    Vec4 r = p.real();
    r[axis] += step;
    return Point::from_real(r);
}

// omega = (i/2)(W (dx + b dy) ^ conj(dx + b dy) + W^-1 dy ^ conj(dy)).
struct FrameMetric {
    double W = 1.0;
    cplx b{};
};

// Real two-form; stores the six independent entries (01,02,03,12,13,23).
class TwoForm {
public:
    std::array<double, 6> c{};

    static constexpr int slot(int i, int j) {
        // i < j assumed
        return i == 0 ? j - 1 : i == 1 ? j + 1 : 5;
    }
    double operator()(int i, int j) const {
        if (i == j) return 0.0;
        return i < j ? c[slot(i, j)] : -c[slot(j, i)];
    }
    void set(int i, int j, double v) {
        if (i < j) c[slot(i, j)] = v;
        else if (j < i) c[slot(j, i)] = -v;
    }
    void add(int i, int j, double v) {
        if (i < j) c[slot(i, j)] += v;
        else if (j < i) c[slot(j, i)] -= v;
    }
    Mat4 matrix() const {
        Mat4 m;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) m(i, j) = (*this)(i, j);
        return m;
    }
    double max_abs() const {
        double m = 0.0;
        for (double v : c) m = std::max(m, std::abs(v));
        return m;
    }
    friend TwoForm operator+(TwoForm a, const TwoForm& b) {
        for (int k = 0; k < 6; ++k) a.c[k] += b.c[k];
        return a;
    }
    friend TwoForm operator-(TwoForm a, const TwoForm& b) {
        for (int k = 0; k < 6; ++k) a.c[k] -= b.c[k];
        return a;
    }
    friend TwoForm operator*(double s, TwoForm a) {
        for (double& v : a.c) v *= s;
        return a;
    }
    friend bool operator==(const TwoForm&, const TwoForm&) = default;
};

// Coefficient of a ^ b on the volume element e0 ^ e1 ^ e2 ^ e3.
inline double wedge(const TwoForm& a, const TwoForm& b) {
    return a.c[0] * b.c[5] + a.c[5] * b.c[0] - a.c[1] * b.c[4] - a.c[4] * b.c[1] + a.c[2] * b.c[3] + a.c[3] * b.c[2];
}

inline TwoForm wedge(const Vec4& a, const Vec4& b) {
    TwoForm w;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) w.set(i, j, a[i] * b[j] - a[j] * b[i]);
    return w;
}

// Pullback when each old basis one-form is old_a = sum_p M(a, p) new_p.
inline TwoForm pullback(const TwoForm& w, const Mat4& M) {
    const Mat4 r = M.transpose() * w.matrix() * M;
    TwoForm out;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) out.set(i, j, r(i, j));
    return out;
}

using CoForm = std::array<cplx, 4>;
inline constexpr CoForm kDx{cplx{1, 0}, cplx{0, 1}, cplx{0, 0}, cplx{0, 0}};
inline constexpr CoForm kDy{cplx{0, 0}, cplx{0, 0}, cplx{1, 0}, cplx{0, 1}};

inline CoForm combine(cplx a, const CoForm& u, cplx b, const CoForm& v) {
    CoForm r;
    for (int p = 0; p < 4; ++p) r[p] = a * u[p] + b * v[p];
    return r;
}

// (i/2) sum_jk H(j, k) e_j ^ conj(e_k) for a Hermitian H; real by construction.
inline TwoForm hermitian_form(const std::array<CoForm, 2>& e, const std::array<std::array<cplx, 2>, 2>& H) {
    TwoForm w;
    for (int p = 0; p < 4; ++p)
        for (int q = p + 1; q < 4; ++q) {
            cplx s{};
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) s += H[j][k] * (e[j][p] * std::conj(e[k][q]) - e[j][q] * std::conj(e[k][p]));
            w.set(p, q, (0.5 * I_unit * s).real());
        }
    return w;
}

inline TwoForm kahler_form(const FrameMetric& fm, const Point& /*at*/) {
    const CoForm theta = combine(1.0, kDx, fm.b, kDy);
    return hermitian_form({theta, kDy}, {{{cplx(fm.W), cplx(0)}, {cplx(0), cplx(1.0 / fm.W)}}});
}

// Coefficients of a (1,1) form in the coframe theta_v = W(dx + b dy), theta_h = dy:
// omega = (i/2)(alpha tv^tv* + beta th^tv* + conj(beta) tv^th* + gamma th^th*).
struct FrameCoefficients {
    double alpha = 0.0;
    cplx beta{};
    double gamma = 0.0;
};

inline std::array<CoForm, 2> frame_coframe(const FrameMetric& fm) {
    return {combine(fm.W, kDx, fm.W * fm.b, kDy), kDy};
}

inline TwoForm frame_form(const FrameCoefficients& k, const FrameMetric& fm) {
    return hermitian_form(frame_coframe(fm), {{{cplx(k.alpha), std::conj(k.beta)}, {k.beta, cplx(k.gamma)}}});
}

inline cplx apply(const TwoForm& w, const std::array<cplx, 4>& X, const std::array<cplx, 4>& Y) {
    cplx s{};
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) s += w(p, q) * X[p] * Y[q];
    return s;
}

inline std::array<cplx, 4> conj(const std::array<cplx, 4>& v) {
    return {std::conj(v[0]), std::conj(v[1]), std::conj(v[2]), std::conj(v[3])};
}

// Frame decomposition through the dual frame E_v = W^-1 d/dx, E_h = d/dy - b d/dx,
// using h_ab = -2i omega(E_a, conj E_b). The (2,0) part is omega(E_v, E_h).
inline FrameCoefficients frame_decompose(const TwoForm& w, const FrameMetric& fm, const Point& /*at*/,
                                         double tolerance = 1e-10) {
    const std::array<cplx, 4> dx{0.5, -0.5 * I_unit, 0.0, 0.0};
    const std::array<cplx, 4> dy{0.0, 0.0, 0.5, -0.5 * I_unit};
    std::array<cplx, 4> ev, eh;
    for (int p = 0; p < 4; ++p) {
        ev[p] = dx[p] / fm.W;
        eh[p] = dy[p] - fm.b * dx[p];
    }
    const double scale = std::max(1.0, w.max_abs());
    const double mixed = std::abs(apply(w, ev, eh));
    if (mixed > tolerance * scale)
        throw TypeMismatchError("frame_decompose: (2,0) component " + std::to_string(mixed) + " exceeds tolerance");
    FrameCoefficients k;
    k.alpha = (-2.0 * I_unit * apply(w, ev, conj(ev))).real();
    k.beta = -2.0 * I_unit * apply(w, eh, conj(ev));
    k.gamma = (-2.0 * I_unit * apply(w, eh, conj(eh))).real();
    return k;
}

// (i/2) d dbar phi from the real Hessian of phi in (x1, x2, y1, y2):
// d_{z_j} d_{zbar_k} phi = 1/4 (H_ajak + H_bjbk + i (H_ajbk - H_bjak)), z_j = a_j + i b_j.
inline TwoForm levi_form(const Mat4& hess) {
    std::array<std::array<cplx, 2>, 2> H;
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
            const int aj = 2 * j, bj = 2 * j + 1, ak = 2 * k, bk = 2 * k + 1;
            H[j][k] = 0.25 * cplx(hess(aj, ak) + hess(bj, bk), hess(aj, bk) - hess(bj, ak));
        }
    return hermitian_form({kDx, kDy}, H);
}

// Centered-difference Hessian, O(h^2).
template <class ScalarFn>
Mat4 hessian_fd(ScalarFn&& f, const Vec4& at, double h) {
    Mat4 H;
    auto ev = [&](int i, double si, int j, double sj) {
        Vec4 p = at;
        if (i >= 0) p[i] += si;
        if (j >= 0) p[j] += sj;
        return f(p);
    };
    const double f0 = ev(-1, 0, -1, 0);
    for (int i = 0; i < 4; ++i) {
        H(i, i) = (ev(i, h, -1, 0) - 2 * f0 + ev(i, -h, -1, 0)) / (h * h);
        for (int j = i + 1; j < 4; ++j) {
            H(i, j) = (ev(i, h, j, h) - ev(i, h, j, -h) - ev(i, -h, j, h) + ev(i, -h, j, -h)) / (4 * h * h);
            H(j, i) = H(i, j);
        }
    }
    return H;
}

// J d/dx1 = d/dx2, J d/dy1 = d/dy2 (so J dx = -i dx on forms, x holomorphic).
inline Mat4 complex_structure() {
    Mat4 J = Mat4::Zero();
    J(1, 0) = 1;
    J(0, 1) = -1;
    J(3, 2) = 1;
    J(2, 3) = -1;
    return J;
}

// g(X, Y) = omega(X, J Y).
inline Mat4 metric_from_form(const TwoForm& w) {
    const Mat4 g = w.matrix() * complex_structure();
    return 0.5 * (g + g.transpose());
}

inline double min_eigenvalue(const Mat4& g) {
    Eigen::SelfAdjointEigenSolver<Mat4> es(g, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// omega^2 / (1/2 Omega ^ conj Omega); equals 1 for Ricci-flat normalized forms.
inline double volume_ratio(const TwoForm& w) { return wedge(w, w) / 2.0; }

// ----------------------------------------------------------------------------
// Samplers and finite differences

struct Patch {
    Vec4 lo{-1e300, -1e300, -1e300, -1e300};
    Vec4 hi{1e300, 1e300, 1e300, 1e300};

    bool contains(const Point& p, double margin) const {
        const Vec4 r = p.real();
        for (int k = 0; k < 4; ++k)
            if (r[k] - margin < lo[k] || r[k] + margin > hi[k]) return false;
        return true;
    }
};

// (W, b) evaluator over a patch together with a finite-difference step.
template <class Eval>
struct FieldSampler {
    double h;
    Patch patch;
    Eval eval;  // Point -> FrameMetric

    FrameMetric metric(const Point& p) const { return eval(p); }
    TwoForm form(const Point& p) const { return kahler_form(eval(p), p); }
    void require_interior(const Point& p, double margin) const {
        if (!(h > 0.0)) throw PatchError("sampler step must be positive");
        if (!patch.contains(p, margin)) throw PatchError("stencil leaves the sampler patch");
    }
};

template <class Eval>
FieldSampler<Eval> make_sampler(double h, Patch patch, Eval eval) {
    return {h, patch, std::move(eval)};
}

namespace geometry_detail {

inline cplx d_holo(const cplx& d1, const cplx& d2) { return 0.5 * (d1 - I_unit * d2); }

}  // namespace geometry_detail

// R1 = (d_y - b d_x) conj(b) + W^-3 d_x W,  R2 = (d_y - b d_x) W - W d_x b,
// by second-order centered differences.
template <class Eval>
std::pair<cplx, cplx> ricci_flat_residuals(const FieldSampler<Eval>& fs, const Point& at) {
    fs.require_interior(at, 2.0 * fs.h);
    const double h = fs.h;
    std::array<cplx, 4> dW, db, dbc;
    for (int a = 0; a < 4; ++a) {
        const FrameMetric p = fs.metric(shifted(at, a, h)), m = fs.metric(shifted(at, a, -h));
        dW[a] = (p.W - m.W) / (2 * h);
        db[a] = (p.b - m.b) / (2 * h);
        dbc[a] = (std::conj(p.b) - std::conj(m.b)) / (2 * h);
    }
    using geometry_detail::d_holo;
    const FrameMetric c = fs.metric(at);
    const cplx Wx = d_holo(dW[0], dW[1]), Wy = d_holo(dW[2], dW[3]);
    const cplx bx = d_holo(db[0], db[1]);
    const cplx bcx = d_holo(dbc[0], dbc[1]), bcy = d_holo(dbc[2], dbc[3]);
    const cplx r1 = bcy - c.b * bcx + Wx / (c.W * c.W * c.W);
    const cplx r2 = Wy - c.b * Wx - c.W * bx;
    return {r1, r2};
}

// ----------------------------------------------------------------------------
// Riemannian curvature from a metric and its first and second derivatives.

struct MetricJet {
    Mat4 g;
    std::array<Mat4, 4> dg;                 // dg[i] = d_i g
    std::array<std::array<Mat4, 4>, 4> ddg; // ddg[i][j] = d_i d_j g
};

// Centered differences: 1 + 8 + 24 = 33 metric evaluations, O(h^2).
template <class MetricFn>
MetricJet metric_jet(MetricFn&& metric, const Vec4& at, double h) {
    auto eval = [&](int i, double si, int j, double sj) {
        Vec4 p = at;
        if (i >= 0) p[i] += si;
        if (j >= 0) p[j] += sj;
        return Mat4(metric(p));
    };
    MetricJet J;
    J.g = eval(-1, 0, -1, 0);
    std::array<Mat4, 4> plus, minus;
    for (int i = 0; i < 4; ++i) {
        plus[i] = eval(i, h, -1, 0);
        minus[i] = eval(i, -h, -1, 0);
        J.dg[i] = (plus[i] - minus[i]) / (2 * h);
        J.ddg[i][i] = (plus[i] - 2.0 * J.g + minus[i]) / (h * h);
    }
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const Mat4 d = (eval(i, h, j, h) - eval(i, h, j, -h) - eval(i, -h, j, h) + eval(i, -h, j, -h)) / (4 * h * h);
            J.ddg[i][j] = d;
            J.ddg[j][i] = d;
        }
    return J;
}

struct Curvature {
    std::array<std::array<std::array<std::array<double, 4>, 4>, 4>, 4> R{};  // R_abcd, all lowered
    Mat4 ricci;
    Mat4 g;
    Mat4 ginv;
};

// R_abcd = 1/2 (g_ad,bc + g_bc,ad - g_ac,bd - g_bd,ac) + g_ef (G^e_bc G^f_ad - G^e_bd G^f_ac),
// Ric_bd = g^ac R_abcd (positive on round spheres).
inline Curvature curvature_from_jet(const MetricJet& J) {
    Curvature C;
    C.g = J.g;
    C.ginv = J.g.inverse();
    std::array<Mat4, 4> gam;  // gam[e](b, c) = Gamma^e_bc
    for (int e = 0; e < 4; ++e)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) {
                double s = 0.0;
                for (int f = 0; f < 4; ++f)
                    s += C.ginv(e, f) * (J.dg[b](f, c) + J.dg[c](f, b) - J.dg[f](b, c));
                gam[e](b, c) = 0.5 * s;
            }
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    double r = 0.5 * (J.ddg[b][c](a, d) + J.ddg[a][d](b, c) - J.ddg[b][d](a, c) - J.ddg[a][c](b, d));
                    for (int e = 0; e < 4; ++e)
                        for (int f = 0; f < 4; ++f)
                            r += J.g(e, f) * (gam[e](b, c) * gam[f](a, d) - gam[e](b, d) * gam[f](a, c));
                    C.R[a][b][c][d] = r;
                }
    C.ricci.setZero();
    for (int b = 0; b < 4; ++b)
        for (int d = 0; d < 4; ++d) {
            double s = 0.0;
            for (int a = 0; a < 4; ++a)
                for (int c = 0; c < 4; ++c) s += C.ginv(a, c) * C.R[a][b][c][d];
            C.ricci(b, d) = s;
        }
    C.ricci = 0.5 * (C.ricci + C.ricci.transpose());
    return C;
}

// max |eigenvalue| of g^-1 Ric, the operator norm of Ricci measured by the metric.
inline double ricci_operator_norm(const Mat4& ricci, const Mat4& g) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat4> es(ricci, g, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// |Rm| = (R_abcd R^abcd)^(1/2).
inline double riemann_norm(const Curvature& C) {
    double s = 0.0;
    const Mat4& gi = C.ginv;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    double raised = 0.0;
                    for (int p = 0; p < 4; ++p)
                        for (int q = 0; q < 4; ++q)
                            for (int r = 0; r < 4; ++r)
                                for (int t = 0; t < 4; ++t)
                                    raised += gi(a, p) * gi(b, q) * gi(c, r) * gi(d, t) * C.R[p][q][r][t];
                    s += C.R[a][b][c][d] * raised;
                }
    return std::sqrt(std::max(0.0, s));
}

// Ricci operator norm of the metric of a two-form field (Point -> TwoForm).
// With richardson = true the Ricci tensors at steps h and h/2 are combined,
// cancelling the h^2 term.
template <class FormField>
double numerical_ricci_of_forms(FormField&& form, const Point& at, double h, bool richardson = false) {
    auto metric = [&](const Vec4& r) { return metric_from_form(form(Point::from_real(r))); };
    const Curvature c1 = curvature_from_jet(metric_jet(metric, at.real(), h));
    if (!richardson) return ricci_operator_norm(c1.ricci, c1.g);
    const Curvature c2 = curvature_from_jet(metric_jet(metric, at.real(), 0.5 * h));
    const Mat4 ric = (4.0 * c2.ricci - c1.ricci) / 3.0;
    return ricci_operator_norm(ric, c1.g);
}

// max over a < b < c of |(d omega)_abc| by centered differences, O(h^2).
template <class FormField>
double form_closedness_residual(FormField&& form, const Point& at, double h) {
    std::array<TwoForm, 4> d;
    for (int a = 0; a < 4; ++a) d[a] = (1.0 / (2.0 * h)) * (form(shifted(at, a, h)) - form(shifted(at, a, -h)));
    double worst = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
            for (int c = b + 1; c < 4; ++c)
                worst = std::max(worst, std::abs(d[a](b, c) - d[b](a, c) + d[c](a, b)));
    return worst;
}

template <class Eval>
double numerical_ricci(const FieldSampler<Eval>& fs, const Point& at, bool richardson = false) {
    fs.require_interior(at, 3.0 * fs.h);
    return numerical_ricci_of_forms([&](const Point& p) { return fs.form(p); }, at, fs.h, richardson);
}

}  // namespace hkc
