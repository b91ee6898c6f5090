#pragma once

// Hyperkahler metrics from a positive harmonic function V on an open set of R^3
// and a connection theta0 = dt/2pi + A.du with curl A = grad V. Tensors use the
// basis (u1, u2, u3, t) unless stated otherwise.

#include "hkc/errors.hpp"
#include "hkc/geometry_core.hpp"
#include "hkc/jet.hpp"
#include "hkc/quadrature.hpp"
#include "hkc/semiflat.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace hkc {

using Vec3 = std::array<double, 3>;

template <class Potential>
struct GHField {
    Potential V;                             // callable on std::array<T, 3>, T = double or Jet
    std::function<Vec3(const Vec3&)> A;      // empty means A = 0
    std::optional<double> period;            // period of V and theta0 in u3

    double potential(const Vec3& u) const {
        const double v = V(u);
        if (!std::isfinite(v) || !(v > 0.0))
            throw DomainError("Gibbons-Hawking potential is not positive at the sample point");
        return v;
    }
    Vec3 connection(const Vec3& u) const { return A ? A(u) : Vec3{0.0, 0.0, 0.0}; }
};

template <class Potential>
GHField<Potential> make_gh_field(Potential V, std::function<Vec3(const Vec3&)> A = {},
                                 std::optional<double> period = std::nullopt) {
    return {std::move(V), std::move(A), period};
}

struct HyperkahlerTriple {
    std::array<TwoForm, 3> omega;
};

// max over i != j of |w_i ^ w_j| and over i of |w_i^2 - w_1^2|, relative to |w_1^2|.
inline double triple_algebra_error(const HyperkahlerTriple& t) {
    const double ref = std::abs(wedge(t.omega[0], t.omega[0]));
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double w = wedge(t.omega[i], t.omega[j]);
            err = std::max(err, i == j ? std::abs(w - ref) : std::abs(w));
        }
    return err / ref;
}

namespace gh_detail {

inline Vec4 theta0_coefficients(const Vec3& A) { return {A[0], A[1], A[2], 0.5 / std::numbers::pi}; }

// w_i = du_i ^ theta0 + V du_j ^ du_k for (i, j, k) cyclic, in any basis where
// du_1, du_2, du_3 and theta0 have coefficient rows du[0..2], theta.
inline HyperkahlerTriple triple_in(const std::array<Vec4, 3>& du, const Vec4& theta, double V) {
    HyperkahlerTriple t;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        t.omega[i] = wedge(du[i], theta) + V * wedge(du[j], du[k]);
    }
    return t;
}

inline std::array<Vec4, 3> coordinate_du() { return {Vec4{1, 0, 0, 0}, Vec4{0, 1, 0, 0}, Vec4{0, 0, 1, 0}}; }

}  // namespace gh_detail

// The triple depends on u only; t is accepted for symmetry with gh_metric.
template <class Potential>
HyperkahlerTriple gh_triple(const GHField<Potential>& g, const Vec3& u, double /*t*/ = 0.0) {
    return gh_detail::triple_in(gh_detail::coordinate_du(), gh_detail::theta0_coefficients(g.connection(u)),
                                g.potential(u));
}

// ds^2 = V du.du + V^-1 theta0^2.
template <class Potential>
Mat4 gh_metric(const GHField<Potential>& g, const Vec3& u, double /*t*/ = 0.0) {
    const double V = g.potential(u);
    const Vec4 th = gh_detail::theta0_coefficients(g.connection(u));
    Mat4 m = Mat4::Zero();
    for (int a = 0; a < 3; ++a) m(a, a) = V;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) m(a, b) += th[a] * th[b] / V;
    return m;
}

// Complex structure on tangent vectors. On covectors (alpha -> alpha o J) it acts by
// J du1 = -du2, J du2 = du1, J du3 = -V^-1 theta0, J theta0 = V du3.
template <class Potential>
Mat4 gh_complex_structure(const GHField<Potential>& g, const Vec3& u) {
    const double V = g.potential(u);
    const Vec4 th = gh_detail::theta0_coefficients(g.connection(u));
    // Rows: coefficients of J(du1), J(du2), J(du3), J(dt) in (du1, du2, du3, dt).
    Mat4 cov = Mat4::Zero();
    cov(0, 1) = -1.0;
    cov(1, 0) = 1.0;
    for (int p = 0; p < 4; ++p) cov(2, p) = -th[p] / V;
    // dt = 2 pi (theta0 - A.du), so J dt = 2 pi (V du3 - A.J du).
    const double two_pi = 2.0 * std::numbers::pi;
    for (int p = 0; p < 4; ++p) cov(3, p) = -two_pi * (th[0] * cov(0, p) + th[1] * cov(1, p) + th[2] * cov(2, p));
    cov(3, 2) += two_pi * V;
    // du_p(J d_q) is the du_q coefficient of J(du_p), so this is also J on vectors.
    return cov;
}

// Closedness of the triple: max |d w_i| coefficient by centered differences in u.
template <class Potential>
double closedness_residual(const GHField<Potential>& g, const Vec3& u, double h) {
    std::array<std::array<TwoForm, 3>, 3> d;  // d[a][i] = d_{u_a} w_i
    for (int a = 0; a < 3; ++a) {
        Vec3 up = u, um = u;
        up[a] += h;
        um[a] -= h;
        const HyperkahlerTriple tp = gh_triple(g, up), tm = gh_triple(g, um);
        for (int i = 0; i < 3; ++i) d[a][i] = (1.0 / (2.0 * h)) * (tp.omega[i] - tm.omega[i]);
    }
    auto deriv = [&](int a, int i, int b, int c) { return a < 3 ? d[a][i](b, c) : 0.0; };
    double worst = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                for (int c = b + 1; c < 4; ++c) {
                    const double r = deriv(a, i, b, c) - deriv(b, i, a, c) + deriv(c, i, a, b);
                    worst = std::max(worst, std::abs(r));
                }
    return worst;
}

// ----------------------------------------------------------------------------
// Curvature

struct GHCurvature {
    double compact = 0.0;             // sqrt((1/2) V^-1 Lap Lap V^-1)
    double expanded = 0.0;            // from 12V^-6|dV|^4 + V^-4 Lap|dV|^2 - 6V^-5 dV.d|dV|^2
    double laplacian_residual = 0.0;  // |Lap V| / |V|
};

template <class Potential>
GHCurvature curvature_norms(const Potential& V, const Vec3& u, double harmonic_tolerance = 1e-6) {
    using J = Jet<3, 4>;
    const std::array<J, 3> x{J::variable(0, u[0]), J::variable(1, u[1]), J::variable(2, u[2])};
    const J v = V(x);
    if (!(v.value() > 0.0)) throw DomainError("Gibbons-Hawking potential is not positive at the sample point");
    GHCurvature out;
    out.laplacian_residual = std::abs(laplacian(v).value()) / std::abs(v.value());
    if (out.laplacian_residual > harmonic_tolerance)
        throw HarmonicityError("Laplacian of V relative to V is " + std::to_string(out.laplacian_residual));
    const double V0 = v.value();
    const J w = reciprocal(v);
    const double compact_sq = 0.5 / V0 * laplacian(laplacian(w)).value();
    std::array<J, 3> grad;
    J grad_sq;
    for (int a = 0; a < 3; ++a) {
        grad[a] = partial(v, a);
        grad_sq += grad[a] * grad[a];
    }
    double mixed = 0.0;
    for (int a = 0; a < 3; ++a) mixed += grad[a].value() * partial(grad_sq, a).value();
    const double g2 = grad_sq.value();
    const double expanded_sq =
        12.0 * g2 * g2 / std::pow(V0, 6) + laplacian(grad_sq).value() / std::pow(V0, 4) - 6.0 * mixed / std::pow(V0, 5);
    out.compact = std::sqrt(std::max(0.0, compact_sq));
    out.expanded = std::sqrt(std::max(0.0, expanded_sq));
    return out;
}

template <class Potential>
double curvature_norm(const GHField<Potential>& g, const Vec3& u) {
    return curvature_norms(g.V, u).compact;
}

// ----------------------------------------------------------------------------
// Taub-NUT family V = e + 1/(4 pi |u|)

struct TaubNutPotential {
    double e = 1.0;

    template <class T>
    T operator()(const std::array<T, 3>& u) const {
        using std::sqrt;
        const T r = sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
        return e + (1.0 / (4.0 * std::numbers::pi)) / r;
    }
};

// Monopole gauge with curl A = grad V, smooth off the negative u3 axis.
inline Vec3 taub_nut_connection(const Vec3& u) {
    const double r = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    if (!(r + u[2] > 0.0)) throw DomainError("monopole gauge is singular on the negative u3 axis");
    const double s = -1.0 / (4.0 * std::numbers::pi * r * (r + u[2]));
    return {-s * u[1], s * u[0], 0.0};
}

inline GHField<TaubNutPotential> taub_nut_field(double e) { return make_gh_field(TaubNutPotential{e}, taub_nut_connection); }

// ----------------------------------------------------------------------------
// Chart on C^2 \ 0, p(z1, z2) = (2 Re z1 z2, 2 Im z1 z2, |z1|^2 - |z2|^2), with
// theta0 = Im(conj z1 dz1 - conj z2 dz2) / (2 pi (|z1|^2 + |z2|^2)). Real chart
// coordinates are ordered (x1, y1, x2, y2), z_j = x_j + i y_j.

struct PoincareChart {
    Vec3 u;
    HyperkahlerTriple triple;  // pulled back to C^2
    Mat4 metric;               // pulled back to C^2
    double flat_form_error;    // distance to the explicit flat triple
};

// (1/pi)(dx2^dy1 - dx1^dy2), (1/pi)(dx1^dx2 - dy1^dy2), (1/pi)(dx1^dy1 + dx2^dy2).
inline HyperkahlerTriple flat_c2_triple() {
    HyperkahlerTriple t;
    const double k = 1.0 / std::numbers::pi;
    t.omega[0].set(2, 1, k);
    t.omega[0].set(0, 3, -k);
    t.omega[1].set(0, 2, k);
    t.omega[1].set(1, 3, -k);
    t.omega[2].set(0, 1, k);
    t.omega[2].set(2, 3, k);
    return t;
}

inline PoincareChart poincare_chart(double e, cplx z1, cplx z2) {
    const double R = std::norm(z1) + std::norm(z2);
    if (!(R > 0.0)) throw DomainError("the chart is undefined at the origin of C^2");
    const double x1 = z1.real(), y1 = z1.imag(), x2 = z2.real(), y2 = z2.imag();
    const cplx prod = z1 * z2;
    PoincareChart pc;
    pc.u = {2.0 * prod.real(), 2.0 * prod.imag(), std::norm(z1) - std::norm(z2)};
    std::array<Vec4, 3> du;
    du[0] = {2 * x2, -2 * y2, 2 * x1, -2 * y1};
    du[1] = {2 * y2, 2 * x2, 2 * y1, 2 * x1};
    du[2] = {2 * x1, 2 * y1, -2 * x2, -2 * y2};
    const double c = 1.0 / (2.0 * std::numbers::pi * R);
    const Vec4 theta{-y1 * c, x1 * c, y2 * c, -x2 * c};
    const double V = TaubNutPotential{e}(pc.u);
    pc.triple = gh_detail::triple_in(du, theta, V);
    pc.metric.setZero();
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) {
            double s = theta[p] * theta[q] / V;
            for (int a = 0; a < 3; ++a) s += V * du[a][p] * du[a][q];
            pc.metric(p, q) = s;
        }
    const HyperkahlerTriple flat = flat_c2_triple();
    pc.flat_form_error = 0.0;
    for (int i = 0; i < 3; ++i) pc.flat_form_error = std::max(pc.flat_form_error, (pc.triple.omega[i] - flat.omega[i]).max_abs());
    return pc;
}

// ----------------------------------------------------------------------------
// Canonical holomorphic coordinates for data periodic in u3 = u.
//
// With P(y, u) = int_{u_ref}^u V du and a holomorphic section sigma with
// Sigma' = sigma, the canonical coordinate satisfies x2 = -P(y, u) - Im Sigma(y),
// and W = 1/V, b = sigma + 2i d_y P.

// Fibre primitive by quadrature, for any GHField with a period.
template <class Potential>
struct QuadraturePrimitive {
    GHField<Potential> field;
    double u_ref = 0.0;

    double period() const { return *field.period; }
    double potential(cplx y, double u) const { return field.potential({y.real(), y.imag(), u}); }
    cplx potential_dy(cplx y, double u) const {
        using J = Jet<2, 1>;
        const std::array<J, 3> x{J::variable(0, y.real()), J::variable(1, y.imag()), J(u)};
        const J v = field.V(x);
        return 0.5 * cplx(v.derivative({1, 0}), -v.derivative({0, 1}));
    }
    double primitive(cplx y, double u) const {
        const double eps = period();
        const double k = std::floor((u - u_ref) / eps);
        const double rest = u - k * eps;
        auto f = [&](double s) { return potential(y, s); };
        const double full = k != 0.0 ? integrate_adaptive(f, u_ref, u_ref + eps) : 0.0;
        return k * full + integrate_adaptive(f, u_ref, rest);
    }
    cplx primitive_dy(cplx y, double u) const {
        const double eps = period();
        const double k = std::floor((u - u_ref) / eps);
        const double rest = u - k * eps;
        auto re = [&](double s) { return potential_dy(y, s).real(); };
        auto im = [&](double s) { return potential_dy(y, s).imag(); };
        cplx full{};
        if (k != 0.0) full = {integrate_adaptive(re, u_ref, u_ref + eps), integrate_adaptive(im, u_ref, u_ref + eps)};
        return k * full + cplx(integrate_adaptive(re, u_ref, rest), integrate_adaptive(im, u_ref, rest));
    }
};

// Relative mismatch of V under u -> u + period at the probe points.
template <class Potential>
void require_periodic(const GHField<Potential>& g, cplx y, double tolerance = 1e-9) {
    if (!g.period || !(*g.period > 0.0)) throw PeriodicityError("Gibbons-Hawking field has no positive u3 period");
    const double eps = *g.period;
    for (double s : {0.13, 0.5, 0.77}) {
        const double a = g.potential({y.real(), y.imag(), s * eps});
        const double b = g.potential({y.real(), y.imag(), (s + 1.0) * eps});
        if (std::abs(a - b) > tolerance * std::abs(a))
            throw PeriodicityError("V is not periodic in u3 with the declared period");
    }
}

// u solving P(y, u) = target; P is increasing since V > 0.
template <class Primitive>
double solve_fibre_height(const Primitive& prim, cplx y, double target) {
    const double eps = prim.period();
    const double slope = prim.primitive(y, prim.u_ref + eps) / eps;
    double u = prim.u_ref + target / slope;
    double lo = u - 2.0 * eps, hi = u + 2.0 * eps;
    while (prim.primitive(y, lo) > target) lo -= 2.0 * eps;
    while (prim.primitive(y, hi) < target) hi += 2.0 * eps;
    for (int it = 0; it < 100; ++it) {
        const double f = prim.primitive(y, u) - target;
        if (std::abs(f) <= 1e-14 * (1.0 + std::abs(target))) break;
        (f > 0 ? hi : lo) = u;
        double next = u - f / prim.potential(y, u);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - u) <= 1e-15 * (1.0 + std::abs(u))) {
            u = next;
            break;
        }
        u = next;
    }
    return u;
}

// (W, b) and the Gibbons-Hawking height u at a canonical point.
struct CanonicalSample {
    FrameMetric fm;
    double u;
};

template <class Primitive>
CanonicalSample canonical_sample(const Primitive& prim, const PeriodSeries& sigma, const Point& p) {
    const double target = -p.x.imag() - sigma.antiderivative(p.y).imag();
    const double u = solve_fibre_height(prim, p.y, target);
    return {{1.0 / prim.potential(p.y, u), sigma(p.y) + 2.0 * I_unit * prim.primitive_dy(p.y, u)}, u};
}

// b at Gibbons-Hawking coordinates (y, u).
template <class Primitive>
cplx gh_b(const Primitive& prim, const PeriodSeries& sigma, cplx y, double u) {
    return sigma(y) + 2.0 * I_unit * prim.primitive_dy(y, u);
}

template <class Primitive>
auto gh_to_holomorphic_from(Primitive prim, PeriodSeries sigma, double h, Patch patch) {
    return make_sampler(h, patch, [prim = std::move(prim), sigma = std::move(sigma)](const Point& p) {
        return canonical_sample(prim, sigma, p).fm;
    });
}

// Periodicity in u3 is checked at the base point of every sample.
template <class Potential>
auto gh_to_holomorphic(const GHField<Potential>& g, const PeriodSeries& sigma, double h, Patch patch,
                       double u_ref = 0.0) {
    if (!g.period || !(*g.period > 0.0)) throw PeriodicityError("Gibbons-Hawking field has no positive u3 period");
    return make_sampler(h, patch, [prim = QuadraturePrimitive<Potential>{g, u_ref}, sigma](const Point& p) {
        require_periodic(prim.field, p.y);
        return canonical_sample(prim, sigma, p).fm;
    });
}

// |-d_y V - (i/2) d_u b| with the u-derivative of b by centered differences.
template <class Primitive>
double vertical_compatibility_residual(const Primitive& prim, const PeriodSeries& sigma, cplx y, double u, double h) {
    const cplx db = (gh_b(prim, sigma, y, u + h) - gh_b(prim, sigma, y, u - h)) / (2.0 * h);
    return std::abs(-prim.potential_dy(y, u) - 0.5 * I_unit * db);
}

// ----------------------------------------------------------------------------
// sup over the fibre of |W Im tau / eps - 1| across a schedule of fibre volumes.

struct HarnackRow {
    double eps;
    double deviation;
};

// family(eps) returns {V as a function of u over one period, Im tau at the fibre}.
template <class Family>
std::vector<HarnackRow> harnack_collapse_check(const std::vector<double>& schedule, Family&& family, int samples = 64) {
    std::vector<HarnackRow> rows;
    for (double eps : schedule) {
        const auto [V, im_tau] = family(eps);
        double dev = 0.0;
        for (int k = 0; k < samples; ++k) {
            const double u = (k + 0.5) * eps / samples;
            dev = std::max(dev, std::abs(im_tau / (eps * V(u)) - 1.0));
        }
        rows.push_back({eps, dev});
    }
    return rows;
}

inline bool strictly_decreasing(const std::vector<HarnackRow>& rows) {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].deviation < rows[i - 1].deviation)) return false;
    return true;
}

}  // namespace hkc
