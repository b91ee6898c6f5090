#pragma once

// Semi-flat metrics built from a pair of holomorphic periods tau1, tau2 with
// tau(y) = c log y + sum_n a_n y^n.

#include "hkc/errors.hpp"
#include "hkc/geometry_core.hpp"
#include "hkc/jet.hpp"
#include "hkc/quadrature.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

namespace hkc {

// arg y is taken in (cut - 2 pi, cut], then shifted by 2 pi * sheet.
struct LogBranch {
    double cut_angle = std::numbers::pi;
    int sheet = 0;
};

inline cplx branch_log(cplx y, const LogBranch& br) {
    if (y == cplx(0.0)) throw BranchError("logarithm requested at its branch point y = 0");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double a = std::arg(y);
    while (a > br.cut_angle) a -= two_pi;
    while (a <= br.cut_angle - two_pi) a += two_pi;
    return {std::log(std::abs(y)), a + two_pi * br.sheet};
}

struct PeriodSeries {
    cplx log_coeff{};
    std::vector<cplx> coeffs;  // a_0, a_1, ...
    LogBranch branch{};

    bool has_log() const { return log_coeff != cplx(0.0); }

    template <class T>
    Cplx<T> value(const T& y1, const T& y2) const {
        const Cplx<T> y(y1, y2);
        Cplx<T> s(0.0);
        for (std::size_t n = coeffs.size(); n-- > 0;) s = s * y + Cplx<T>(coeffs[n]);
        if (has_log()) s = s + log_on_sheet(y, branch_log(y.value(), branch)) * Cplx<T>(log_coeff);
        return s;
    }
    cplx operator()(cplx y) const { return value<double>(y.real(), y.imag()).value(); }

    cplx derivative(cplx y) const {
        cplx s{};
        for (std::size_t n = coeffs.size(); n-- > 1;) s = s * y + static_cast<double>(n) * coeffs[n];
        if (has_log()) s += log_coeff / y;
        return s;
    }
    cplx second_derivative(cplx y) const {
        cplx s{};
        for (std::size_t n = coeffs.size(); n-- > 2;) s = s * y + static_cast<double>(n * (n - 1)) * coeffs[n];
        if (has_log()) s -= log_coeff / (y * y);
        return s;
    }
    // Antiderivative: c (y log y - y) + sum a_n y^(n+1) / (n+1).
    cplx antiderivative(cplx y) const {
        cplx s{};
        for (std::size_t n = coeffs.size(); n-- > 0;) s = s * y + coeffs[n] / static_cast<double>(n + 1);
        s *= y;
        if (has_log()) s += log_coeff * (y * branch_log(y, branch) - y);
        return s;
    }
    bool is_constant_one() const { return !has_log() && coeffs.size() == 1 && coeffs[0] == cplx(1.0); }
};

struct PeriodPair {
    PeriodSeries tau1, tau2;
};

// The local model at an I1 fibre: tau1 = 1, tau2 = (1/2 pi i) log y + i h (default h = 1).
inline PeriodPair i1_periods(cplx h_const = cplx(1.0), LogBranch branch = {}) {
    PeriodPair p;
    p.tau1.coeffs = {cplx(1.0)};
    p.tau2.log_coeff = 1.0 / (2.0 * std::numbers::pi * I_unit);
    p.tau2.coeffs = {I_unit * h_const};
    p.tau2.branch = branch;
    return p;
}

inline PeriodPair constant_periods(cplx tau2) {
    PeriodPair p;
    p.tau1.coeffs = {cplx(1.0)};
    p.tau2.coeffs = {tau2};
    return p;
}

struct SemiFlatMetric {
    PeriodPair periods;
    double eps = 1.0;
};

// Im(conj(tau1) tau2), the McLean base density; must be positive.
inline double period_area(const PeriodPair& p, cplx y) {
    const double a = (std::conj(p.tau1(y)) * p.tau2(y)).imag();
    if (!(a > 0.0)) throw DomainError("Im(conj(tau1) tau2) = " + std::to_string(a) + " is not positive");
    return a;
}

// W = eps / Im(conj tau1 tau2); b = -(W/eps)[Im(tau2 conj x) tau1' + Im(conj tau1 x) tau2'].
inline FrameMetric semiflat_data(const SemiFlatMetric& m, const Point& at) {
    if (!(m.eps > 0.0)) throw DomainError("semi-flat fibre area must be positive");
    const cplx y = at.y, x = at.x;
    const cplx t1 = m.periods.tau1(y), t2 = m.periods.tau2(y);
    const double area = (std::conj(t1) * t2).imag();
    if (!(area > 0.0)) throw DomainError("Im(conj(tau1) tau2) is not positive at the sample point");
    const double W = m.eps / area;
    const cplx b = -(W / m.eps) * ((t2 * std::conj(x)).imag() * m.periods.tau1.derivative(y) +
                                   (std::conj(t1) * x).imag() * m.periods.tau2.derivative(y));
    return {W, b};
}

inline auto semiflat_sampler(const SemiFlatMetric& m, double h, Patch patch) {
    return make_sampler(h, patch, [m](const Point& p) { return semiflat_data(m, p); });
}

// Integral of omega over the fundamental parallelogram {s tau1 + t tau2}.
inline double fibre_volume(const SemiFlatMetric& m, cplx y) {
    const cplx t1 = m.periods.tau1(y), t2 = m.periods.tau2(y);
    const std::array<cplx, 4> ds{t1.real(), t1.imag(), 0.0, 0.0};
    const std::array<cplx, 4> dt{t2.real(), t2.imag(), 0.0, 0.0};
    return integrate_gauss(
        [&](double s) {
            return integrate_gauss(
                [&](double t) {
                    const Point p{s * t1 + t * t2, y};
                    return apply(kahler_form(semiflat_data(m, p), p), ds, dt).real();
                },
                0.0, 1.0, 6);
        },
        0.0, 1.0, 6);
}

// Annular sector {r_min <= |y| <= r_max, arg_min <= arg y <= arg_max} on a fixed
// sheet; simply connected when the arg range avoids the branch cut.
struct BaseSector {
    double r_min = 0.1, r_max = 1.0;
    double arg_min = -3.0, arg_max = 3.0;

    bool contains(cplx y) const {
        const double r = std::abs(y), a = std::arg(y);
        return r >= r_min && r <= r_max && a >= arg_min && a <= arg_max;
    }
};

// Kahler potential with (i/2) d dbar phi = omega_SF on a simply connected sector.
inline double semiflat_potential(const SemiFlatMetric& m, const Point& at, const BaseSector& sector) {
    const auto& P = m.periods;
    auto crosses_cut = [](const PeriodSeries& s, const BaseSector& sec) {
        if (!s.has_log()) return false;
        const double cut = s.branch.cut_angle;
        for (int k = -2; k <= 2; ++k) {
            const double c = cut + 2.0 * std::numbers::pi * k;
            if (c >= sec.arg_min && c <= sec.arg_max) return true;
        }
        return false;
    };
    if (crosses_cut(P.tau1, sector) || crosses_cut(P.tau2, sector) || !sector.contains(at.y) ||
        (sector.r_min <= 0.0 && (P.tau1.has_log() || P.tau2.has_log())))
        throw BranchError("semiflat_potential: point outside the declared simply connected sector");
    const cplx y = at.y, x = at.x;
    const cplx t1 = P.tau1(y), t2 = P.tau2(y);
    const double area = (std::conj(t1) * t2).imag();
    const cplx phi1 = P.tau1.antiderivative(y), phi2 = P.tau2.antiderivative(y);
    const double fibre = (m.eps / area) * (std::norm(x) - (std::conj(x) * std::conj(x) * t1 / std::conj(t1)).real());
    const double base = -(phi1 * std::conj(phi2)).imag() / m.eps;
    return fibre + base;
}

// Translation by the flat section sigma = a1 tau1 + a2 tau2, and the deviation of
// T_sigma^* omega_SF from omega_SF at the source point.
struct TranslationCheck {
    Point image;
    double pullback_error;
};

inline TranslationCheck flat_translation(const SemiFlatMetric& m, double a1, double a2, const Point& at) {
    const cplx y = at.y;
    const cplx sigma = a1 * m.periods.tau1(y) + a2 * m.periods.tau2(y);
    const cplx dsigma = a1 * m.periods.tau1.derivative(y) + a2 * m.periods.tau2.derivative(y);
    const Point image{at.x + sigma, y};
    // (dx + b dy) pulls back to dx + (b(T p) + sigma') dy.
    FrameMetric pulled = semiflat_data(m, image);
    pulled.b += dsigma;
    const TwoForm diff = kahler_form(pulled, at) - kahler_form(semiflat_data(m, at), at);
    return {image, diff.max_abs()};
}

// Real coordinates (s, t) with x = s tau1 + t tau2.
inline std::array<double, 2> lattice_coordinates(const PeriodPair& p, const Point& at) {
    const cplx t1 = p.tau1(at.y), t2 = p.tau2(at.y);
    const double det = (std::conj(t1) * t2).imag();
    const double s = (at.x * std::conj(t2)).imag() / -det;
    const double t = (std::conj(t1) * at.x).imag() / det;
    return {s, t};
}

// |R| of the semi-flat metric in a chart with tau1 = 1, normalized as
// |R|^2 = (1/2) R_abcd R^abcd. With a = tau2', I = Im tau2:
// |R|^2 = (eps^2/2) I^-1 DD I^-1 = 4 eps^2 (|a'|^2 I^-4 - 3 Im(a^2 conj a') I^-5 + 3 |a|^4 I^-6).
inline double semiflat_curvature(const SemiFlatMetric& m, cplx y) {
    if (!m.periods.tau1.is_constant_one())
        throw DomainError("semiflat_curvature needs a chart with tau1 = 1");
    const double I = m.periods.tau2(y).imag();
    if (!(I > 0.0)) throw DomainError("Im tau2 must be positive");
    const cplx a = m.periods.tau2.derivative(y), da = m.periods.tau2.second_derivative(y);
    const double r2 = 4.0 * m.eps * m.eps *
                      (std::norm(da) / std::pow(I, 4) - 3.0 * (a * a * std::conj(da)).imag() / std::pow(I, 5) +
                       3.0 * std::pow(std::norm(a), 2) / std::pow(I, 6));
    return std::sqrt(std::max(0.0, r2));
}

// V = Im tau2 / eps on R^3 (independent of u3): the Gibbons-Hawking potential of
// the semi-flat metric when tau1 = 1.
struct SemiFlatPotential {
    PeriodSeries tau2;
    double eps = 1.0;

    template <class T>
    T operator()(const std::array<T, 3>& u) const {
        return tau2.value(u[0], u[1]).im * (1.0 / eps);
    }
};

}  // namespace hkc
