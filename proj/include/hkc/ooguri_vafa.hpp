#pragma once

// The periodic harmonic potential near an I1 fibre and the resulting
// Gibbons-Hawking metric. Coordinates on R^2 x R are (y1, y2, u) with y = y1 + i y2;
// V0 is periodic in u with period eps and has a 1/(4 pi dist) singularity at
// {0} x eps Z. The full potential is V = V0 + f/eps with f = Re h.

#include "hkc/errors.hpp"
#include "hkc/gibbons_hawking.hpp"
#include "hkc/jet.hpp"
#include "hkc/parallel.hpp"
#include "hkc/quadrature.hpp"
#include "hkc/semiflat.hpp"
#include "hkc/special_functions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace hkc {

struct OVConfig {
    double eps = 0.2;
    std::vector<cplx> h_coeffs{cplx(1.0)};  // h(y) = sum h_n y^n
    double radius = 0.9;
    int n_fold = 1;                          // the fibre circle has length n_fold * eps
    int lattice_terms = 64;
    LogBranch branch{};

    PeriodSeries h_series() const {
        PeriodSeries s;
        s.coeffs = h_coeffs;
        return s;
    }
    void validate() const {
        if (!(eps > 0.0)) throw ConfigError("OV fibre period eps must be positive");
        if (!(radius > 0.0 && radius < 1.0)) throw ConfigError("OV patch radius must lie in (0, 1)");
        if (n_fold < 1) throw ConfigError("n_fold must be a positive integer");
        if (lattice_terms < 1) throw ConfigError("lattice_terms must be at least 1");
        if (h_coeffs.empty()) throw ConfigError("h needs at least one coefficient");
    }
};

namespace ov_detail {

constexpr double kInvFourPi = 0.25 / std::numbers::pi;

template <class T>
T f_value(const OVConfig& cfg, const T& y1, const T& y2) {
    return cfg.h_series().value(y1, y2).re;
}

// Counterterm a_0 of the n = 0 lattice site.
inline double a0(double eps) { return 2.0 * (std::log(2.0 * eps) - euler_gamma()) / eps; }

// sum_{n > N} [1/|u + n eps| + 1/|u - n eps| - 2/(n eps)] (3D distances with rho^2),
// by the midpoint-rule Euler-Maclaurin expansion about S = (N + 1/2) eps. The
// integral is exact; the first omitted term is 7 eps^3/5760 g'''(S) = O(N^-6).
template <class T>
T lattice_tail(const T& u, const T& rho2, double eps, int N) {
    using std::log1p;
    using std::sqrt;
    const double S = (N + 0.5) * eps;
    const T rp = sqrt((u + S) * (u + S) + rho2), rm = sqrt((S - u) * (S - u) + rho2);
    const T qp = rho2 / (rp + S + u), qm = rho2 / (rm + S - u);
    const T integral = -(log1p((2.0 * u + qp) * (0.5 / S)) + log1p((qm - 2.0 * u) * (0.5 / S))) * (1.0 / eps);
    const T dg = -(u + S) / (rp * rp * rp) - (S - u) / (rm * rm * rm) + 2.0 / (S * S);
    return integral + dg * (eps / 24.0);
}

template <class T>
T reduce_period(const T& u, double eps) {
    return u - eps * std::round(value_of(u) / eps);
}

}  // namespace ov_detail

// Regularized lattice sum with pairs n, -n up to j_max and an Euler-Maclaurin tail.
// Only rho^2 = |y|^2 enters, so jets are smooth across y = 0 away from the nodes.
template <class T>
T v0_lattice(const T& u_in, const T& y1, const T& y2, double eps, int j_max = 64) {
    using std::sqrt;
    if (!(eps > 0.0)) throw DomainError("v0_lattice: eps must be positive");
    if (j_max < 1) throw DomainError("v0_lattice: j_max must be at least 1");
    const T u = ov_detail::reduce_period(u_in, eps);
    const T rho2 = y1 * y1 + y2 * y2;
    if (value_of(rho2) == 0.0 && value_of(u) == 0.0)
        throw DomainError("v0_lattice: evaluation at a singular point of the lattice");
    T sum = 1.0 / sqrt(u * u + rho2) - ov_detail::a0(eps);
    for (int n = 1; n <= j_max; ++n) {
        const double t = n * eps;
        sum += 1.0 / sqrt((u + t) * (u + t) + rho2) + 1.0 / sqrt((u - t) * (u - t) + rho2) - 2.0 / t;
    }
    sum += ov_detail::lattice_tail(u, rho2, eps, j_max);
    return sum * ov_detail::kInvFourPi;
}

inline double v0_lattice(double u, cplx y, double eps, int j_max = 64) {
    return v0_lattice<double>(u, y.real(), y.imag(), eps, j_max);
}

// Oscillating part of the Fourier-Bessel expansion, V0 minus its u-average.
// Terms stop once K0 falls below e^-50 absolutely and e^-40 relative to the first
// mode, unless m_max > 0 fixes the count.
template <class T>
T v0_oscillation(const T& u, const T& rho, double eps, int m_max = 0) {
    using std::cos;
    const double k = 2.0 * std::numbers::pi / eps;
    const double x_stop = std::max(50.0, value_of(rho) * k + 40.0);
    T sum(0.0);
    for (int m = 1; m_max > 0 ? m <= m_max : value_of(rho) * k * m <= x_stop; ++m)
        sum += cos(u * (k * m)) * bessel_k0(rho * (k * m)) * (1.0 / (std::numbers::pi * eps));
    return sum;
}

template <class T>
T v0_bessel(const T& u, const T& y1, const T& y2, double eps, int m_max = 0) {
    using std::log;
    using std::sqrt;
    const T rho2 = y1 * y1 + y2 * y2;
    if (!(value_of(rho2) > 0.0)) throw DomainError("v0_bessel: the expansion needs y != 0");
    return log(rho2) * (-ov_detail::kInvFourPi / eps) + v0_oscillation(u, sqrt(rho2), eps, m_max);
}

inline double v0_bessel(double u, cplx y, double eps, int m_max = 0) {
    return v0_bessel<double>(u, y.real(), y.imag(), eps, m_max);
}

// Bound on the discarded modes m > m_used: sum_m (1/pi eps) K0(m x), K0(z) <= sqrt(pi/2z) e^-z.
inline double v0_bessel_truncation_bound(cplx y, double eps, int m_used) {
    const double x = 2.0 * std::numbers::pi * std::abs(y) / eps;
    const double z = (m_used + 1) * x;
    return std::sqrt(std::numbers::pi / (2.0 * z)) * std::exp(-z) / (1.0 - std::exp(-x)) / (std::numbers::pi * eps);
}

inline double singular_fibre_constant() { return -2.0 * std::log(2.0) + 2.0 * euler_gamma() - 2.0; }

// eps * V0(s eps, 0) = (1/4pi) [2/(1 - s^2) + 1/s - 2 log eps + G + 2 g(s)].
inline double singular_fibre_profile(double s, double eps) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("singular_fibre_profile: need 0 < s < 1");
    if (!(eps > 0.0)) throw DomainError("singular_fibre_profile: eps must be positive");
    return ov_detail::kInvFourPi *
           (2.0 / (1.0 - s * s) + 1.0 / s - 2.0 * std::log(eps) + singular_fibre_constant() + 2.0 * odd_zeta_series(s));
}

// The same restriction through digamma: (1/4pi)(1/s - 2 log 2eps - psi(1+s) - psi(1-s)).
inline double singular_fibre_digamma(double s, double eps) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("singular_fibre_digamma: need 0 < s < 1");
    return ov_detail::kInvFourPi * (1.0 / s - 2.0 * std::log(2.0 * eps) - digamma(1.0 + s) - digamma(1.0 - s));
}

// V0 with the lattice sum below |y| = eps/pi and the Bessel expansion above.
template <class T>
T v0_value(const T& u, const T& y1, const T& y2, double eps, int j_max = 64) {
    const double rho = std::hypot(value_of(y1), value_of(y2));
    if (rho >= eps / std::numbers::pi) return v0_bessel(u, y1, y2, eps);
    if constexpr (std::is_same_v<T, double>) {
        if (rho == 0.0) {
            const double s = std::abs(ov_detail::reduce_period(u, eps)) / eps;
            if (s == 0.0) throw DomainError("V0 evaluated at a node of the singular fibre");
            return singular_fibre_digamma(s, eps) / eps;
        }
    }
    return v0_lattice(u, y1, y2, eps, j_max);
}

// V = V0 + f / eps on (y1, y2, u).
struct OVPotential {
    OVConfig config;

    template <class T>
    T operator()(const std::array<T, 3>& x) const {
        return v0_value(x[2], x[0], x[1], config.eps, config.lattice_terms) +
               ov_detail::f_value(config, x[0], x[1]) * (1.0 / config.eps);
    }
};

// Im tau per unit period: int_0^eps V du = -(1/2pi) log|y| + f.
inline double ov_fibre_height(cplx y, const OVConfig& cfg) {
    if (y == cplx(0.0)) throw BranchError("the fibre height diverges at y = 0");
    return -std::log(std::abs(y)) / (2.0 * std::numbers::pi) + ov_detail::f_value<double>(cfg, y.real(), y.imag());
}

// ----------------------------------------------------------------------------
// Positivity

struct BoundaryMinimum {
    double value;
    cplx y;
    double u;
};

// V is harmonic and periodic in u, so its minimum over D_r x R sits on the boundary circle.
inline BoundaryMinimum boundary_minimum(const OVConfig& cfg, int n_theta = 64, int n_u = 16) {
    const OVPotential V{cfg};
    BoundaryMinimum best{INFINITY, 0.0, 0.0};
    for (int i = 0; i < n_theta; ++i) {
        const cplx y = std::polar(cfg.radius, 2.0 * std::numbers::pi * i / n_theta);
        for (int j = 0; j <= n_u; ++j) {
            const double u = 0.5 * cfg.eps * j / n_u;  // V is even in u
            const double v = V(std::array<double, 3>{y.real(), y.imag(), u});
            if (v < best.value) best = {v, y, u};
        }
    }
    return best;
}

inline std::string describe(const BoundaryMinimum& m) {
    std::ostringstream os;
    os << "V = " << m.value << " at y = (" << m.y.real() << ", " << m.y.imag() << "), u = " << m.u;
    return os.str();
}

inline void check_positivity(const OVConfig& cfg) {
    cfg.validate();
    const BoundaryMinimum m = boundary_minimum(cfg);
    if (!(m.value > 0.0)) throw PositivityError("OV potential is not positive on the patch: minimum " + describe(m));
}

// Largest eps (to relative 1e-6) in (0, eps_max] for which the boundary minimum is positive.
inline double positivity_threshold(OVConfig cfg, double eps_max = 8.0) {
    auto positive = [&](double e) {
        cfg.eps = e;
        return boundary_minimum(cfg, 32, 8).value > 0.0;
    };
    if (positive(eps_max)) return eps_max;
    double lo = 1e-3, hi = eps_max;
    if (!positive(lo)) throw PositivityError("OV potential is not positive on the patch even for eps = 1e-3");
    while (hi / lo > 1.0 + 1e-6) {
        const double mid = std::sqrt(lo * hi);
        (positive(mid) ? lo : hi) = mid;
    }
    return lo;
}

// Pointwise V; a non-positive value reports the boundary minimum.
inline double ov_value(double u, cplx y, const OVConfig& cfg) {
    cfg.validate();
    if (std::abs(y) > cfg.radius) throw DomainError("ov_value: |y| exceeds the patch radius");
    const double v = OVPotential{cfg}(std::array<double, 3>{y.real(), y.imag(), u});
    if (!(v > 0.0))
        throw PositivityError("OV potential is not positive at the sample point; boundary minimum " +
                              describe(boundary_minimum(cfg)));
    return v;
}

// ----------------------------------------------------------------------------
// Periods: tau1 = 1, tau2 = n ((1/2 pi i) log y + i h).

inline PeriodSeries ov_tau_series(const OVConfig& cfg) {
    PeriodSeries s;
    const double n = cfg.n_fold;
    s.log_coeff = n / (2.0 * std::numbers::pi * I_unit);
    for (cplx c : cfg.h_coeffs) s.coeffs.push_back(n * I_unit * c);
    s.branch = cfg.branch;
    return s;
}

inline PeriodPair ov_period_pair(const OVConfig& cfg) {
    PeriodPair p;
    p.tau1.coeffs = {cplx(1.0)};
    p.tau2 = ov_tau_series(cfg);
    return p;
}

inline std::pair<cplx, cplx> ov_periods(cplx y, const OVConfig& cfg) {
    return {cplx(1.0), ov_tau_series(cfg)(y)};
}

// ----------------------------------------------------------------------------
// Fibre primitive P(y, u) = int_{eps/2}^u V du in closed form.

namespace ov_detail {

// asinh((u + t)/rho) + asinh((u - t)/rho) for t > |u|, without dividing by rho.
template <class T>
T pair_asinh(const T& u, double t, const T& rho2) {
    using std::asinh;
    using std::sqrt;
    const T rp = sqrt((u + t) * (u + t) + rho2), rm = sqrt((t - u) * (t - u) + rho2);
    return asinh(4.0 * t * u / ((u + t) * rm + (t - u) * rp));
}

// asinh(u/rho) - asinh(a/rho) for u >= 0, a > 0.
template <class T>
T centre_asinh(const T& u, double a, const T& rho2) {
    using std::asinh;
    using std::sqrt;
    return asinh((u * u - a * a) / (u * sqrt(rho2 + a * a) + a * sqrt(rho2 + u * u)));
}

// Primitive of V0 from eps/2 for u in [0, eps), lattice form.
template <class T>
T v0_primitive_lattice(double u, const T& rho2, double eps, int N) {
    const double ref = 0.5 * eps;
    const T uu(u);
    T sum = centre_asinh(uu, ref, rho2);
    double counter = a0(eps);
    for (int n = 1; n <= N; ++n) {
        const double t = n * eps;
        sum += pair_asinh(uu, t, rho2) - pair_asinh(T(ref), t, rho2);
        counter += 2.0 / t;
    }
    sum -= counter * (u - ref);
    sum += integrate_gauss([&](double w) { return lattice_tail(T(w), rho2, eps, N); }, ref, u, 8);
    return sum * kInvFourPi;
}

// Oscillating part of the primitive, Bessel form (vanishes at u = eps/2).
template <class T>
T v0_primitive_bessel_modes(double u, const T& rho, double eps) {
    const double k = 2.0 * std::numbers::pi / eps;
    const double x_stop = std::max(50.0, value_of(rho) * k + 40.0);
    T sum(0.0);
    for (int m = 1; value_of(rho) * k * m <= x_stop; ++m)
        sum += bessel_k0(rho * (k * m)) * (std::sin(k * m * u) / (2.0 * std::numbers::pi * std::numbers::pi * m));
    return sum;
}

}  // namespace ov_detail

struct OVPrimitive {
    OVConfig config;
    double u_ref = 0.0;

    explicit OVPrimitive(OVConfig cfg) : config(std::move(cfg)), u_ref(0.5 * config.eps) {}

    double period() const { return config.eps; }
    double potential(cplx y, double u) const { return OVPotential{config}(std::array<double, 3>{y.real(), y.imag(), u}); }
    cplx potential_dy(cplx y, double u) const {
        using J = Jet<2, 1>;
        const J v = OVPotential{config}(std::array<J, 3>{J::variable(0, y.real()), J::variable(1, y.imag()), J(u)});
        return 0.5 * cplx(v.derivative({1, 0}), -v.derivative({0, 1}));
    }

    template <class T>
    T primitive_t(const T& y1, const T& y2, double u) const {
        using std::log;
        using std::sqrt;
        const double eps = config.eps;
        const T rho2 = y1 * y1 + y2 * y2;
        if (!(value_of(rho2) > 0.0)) throw DomainError("the fibre primitive is undefined over y = 0");
        const T height = log(rho2) * (-ov_detail::kInvFourPi) + ov_detail::f_value(config, y1, y2);
        const double k = std::floor(u / eps);
        const double rest = u - k * eps;
        T p;
        if (std::sqrt(value_of(rho2)) >= eps / std::numbers::pi)
            p = height * ((rest - u_ref) / eps) + ov_detail::v0_primitive_bessel_modes(rest, sqrt(rho2), eps);
        else
            p = ov_detail::v0_primitive_lattice(rest, rho2, eps, config.lattice_terms) +
                ov_detail::f_value(config, y1, y2) * ((rest - u_ref) / eps);
        return p + height * k;
    }
    double primitive(cplx y, double u) const { return primitive_t<double>(y.real(), y.imag(), u); }
    cplx primitive_dy(cplx y, double u) const {
        using J = Jet<2, 1>;
        const J p = primitive_t(J::variable(0, y.real()), J::variable(1, y.imag()), u);
        return 0.5 * cplx(p.derivative({1, 0}), -p.derivative({0, 1}));
    }
};

// P minus its linear part (u - eps/2) Im tau / eps; summed directly from the Bessel
// modes where they apply, so exponentially small values keep their relative accuracy.
template <class T>
T ov_primitive_oscillation(const T& y1, const T& y2, double u, const OVConfig& cfg) {
    using std::log;
    using std::sqrt;
    const T rho2 = y1 * y1 + y2 * y2;
    const double eps = cfg.eps;
    const double rest = u - eps * std::floor(u / eps);
    if (std::sqrt(value_of(rho2)) >= eps / std::numbers::pi)
        return ov_detail::v0_primitive_bessel_modes(rest, sqrt(rho2), eps);
    const OVPrimitive prim(cfg);
    const T height = ov_detail::f_value(cfg, y1, y2) - log(rho2) * ov_detail::kInvFourPi;
    return prim.primitive_t(y1, y2, rest) - height * ((rest - prim.u_ref) / eps);
}

// Gibbons-Hawking field with A = (d2 P, -d1 P, 0): curl A = grad V because
// d_u V vanishes at u = eps/2. The u-period is n_fold * eps.
inline GHField<OVPotential> ov_metric(const OVConfig& cfg) {
    check_positivity(cfg);
    const OVPrimitive prim(cfg);
    auto A = [prim](const Vec3& x) {
        const cplx dP = prim.primitive_dy({x[0], x[1]}, x[2]);  // (d1 - i d2) P / 2
        return Vec3{-2.0 * dP.imag(), -2.0 * dP.real(), 0.0};
    };
    return make_gh_field(OVPotential{cfg}, A, cfg.n_fold * cfg.eps);
}

// (W, b) in canonical holomorphic coordinates with sigma = 0.
inline auto ov_canonical_sampler(const OVConfig& cfg, double h, Patch patch) {
    check_positivity(cfg);
    return gh_to_holomorphic_from(OVPrimitive(cfg), PeriodSeries{}, h, patch);
}

// ----------------------------------------------------------------------------
// Exponential decay of V0 towards its mean.

// The deviation V0 + log|y|^2/(4 pi eps) is summed directly as the oscillating
// modes; forming it as a difference would lose it to rounding once e^{-x} < 1e-16.
struct DecayReport {
    double constant = 0.0;        // max of eps e^{2 pi |y|/eps} |V0 + log|y|^2/(4 pi eps)|
    double worst_radius = 0.0;
    bool within_series_bound = true;  // deviation <= (2/pi eps) e^-x/(1 - e^-x), x = 2 pi |y|/eps
};

inline DecayReport decay_check(double eps, const std::vector<double>& radii, const std::vector<double>& u_fractions) {
    DecayReport rep;
    for (double r : radii) {
        if (!(r > 0.0)) throw DomainError("decay_check: radii must be positive");
        const double x = 2.0 * std::numbers::pi * r / eps;
        const double bound = 2.0 / (std::numbers::pi * eps) * std::exp(-x) / (1.0 - std::exp(-x));
        for (double s : u_fractions) {
            const double dev = std::abs(v0_oscillation(s * eps, r, eps));
            const double c = eps * std::exp(x) * dev;
            if (c > rep.constant) rep.constant = c, rep.worst_radius = r;
            if (dev > bound) rep.within_series_bound = false;
        }
    }
    return rep;
}

// ----------------------------------------------------------------------------
// Diameters

struct FibreDiameter {
    double half_loop = 0.0;  // (1/2) int over the circle of V^(1/2) du
    double orbit = 0.0;      // min over u of V^(-1/2), the shortest circle orbit
    double total() const { return half_loop + orbit; }
};

inline FibreDiameter fibre_diameter_parts(cplx y, const OVConfig& cfg) {
    cfg.validate();
    const double eps = cfg.eps;
    FibreDiameter d;
    if (y == cplx(0.0)) {
        const double f = ov_detail::f_value<double>(cfg, 0.0, 0.0);
        auto root = [&](double s) {
            const double v = (singular_fibre_digamma(s, eps) + f) / eps;
            if (!(v > 0.0)) throw PositivityError("OV potential is not positive on the singular fibre");
            return std::sqrt(v);
        };
        // The circle is n_fold copies of [-eps/2, eps/2], symmetric about 0.
        d.half_loop = cfg.n_fold * eps * integrate_endpoint_singular(root, 0.0, 0.5, 1e-12);
        d.orbit = 0.0;
        return d;
    }
    auto root = [&](double u) { return std::sqrt(ov_value(u, y, cfg)); };
    d.half_loop = cfg.n_fold * integrate_endpoint_singular(root, 0.0, 0.5 * eps, 1e-12);
    double vmax = 0.0;
    for (int j = 0; j <= 32; ++j) vmax = std::max(vmax, ov_value(0.5 * eps * j / 32, y, cfg));
    d.orbit = 1.0 / std::sqrt(vmax);
    return d;
}

inline double fibre_diameter(cplx y, const OVConfig& cfg) { return fibre_diameter_parts(y, cfg).total(); }

struct TotalDiameter {
    double inner = 0.0;      // int_0^eps of V(r e^{i theta}, eps/2)^(1/2) dr at the maximizing theta
    double outer = 0.0;      // int_eps^a of the same
    double fibre_max = 0.0;  // largest fibre diameter over |y| <= a
    double central = 0.0;    // diameter of the singular fibre
    double radial() const { return inner + outer; }
    // Any two points connect through the central fibre: two fibres, two radial lifts, the centre.
    double total() const { return 2.0 * radial() + 2.0 * fibre_max + central; }
};

inline TotalDiameter total_diameter(double a, const OVConfig& cfg, int n_theta = 8, int n_radii = 8) {
    cfg.validate();
    const double eps = cfg.eps;
    if (!(a > 0.0 && a <= cfg.radius)) throw DomainError("total_diameter: need 0 < a <= patch radius");
    if (eps > a) throw DomainError("total_diameter: needs eps <= a");
    TotalDiameter out;
    for (int i = 0; i < n_theta; ++i) {
        const cplx dir = std::polar(1.0, 2.0 * std::numbers::pi * i / n_theta);
        auto root = [&](double r) { return std::sqrt(ov_value(0.5 * eps, r * dir, cfg)); };
        const double in = integrate_adaptive(root, 0.0, eps, 1e-10);
        const double outr = integrate_adaptive(root, eps, a, 1e-10);
        if (in + outr > out.radial()) out.inner = in, out.outer = outr;
        for (int k = 1; k <= n_radii; ++k) out.fibre_max = std::max(out.fibre_max, fibre_diameter(a * k / n_radii * dir, cfg));
    }
    out.central = fibre_diameter(0.0, cfg);
    out.fibre_max = std::max(out.fibre_max, out.central);
    return out;
}

// ----------------------------------------------------------------------------
// Curvature over the rescaled grid s = u/eps, v = y/eps.

struct CurvatureGrid {
    int n_s = 16;       // cell-centred in s over (0, 1/2]; V is even and eps-periodic in u
    int n_inner = 16;   // cell-centred in |v| over (0, 1/2]
    int n_outer = 16;   // log-spaced in |v| over [1/2, a/eps]
    int n_theta = 1;
    double a = 0.6;
};

struct CurvatureRow {
    double eps = 0.0;
    double sup_norm = 0.0;
    double at_s = 0.0, at_v = 0.0;
    double scaled() const { return eps * sup_norm; }
};

inline CurvatureRow curvature_sup(const OVConfig& cfg, const CurvatureGrid& grid) {
    check_positivity(cfg);
    const double eps = cfg.eps;
    std::vector<double> radii;
    for (int i = 0; i < grid.n_inner; ++i) radii.push_back(0.5 * (i + 0.5) / grid.n_inner);
    const double vmax = grid.a / eps;
    if (vmax > 0.5)
        for (int i = 0; i < grid.n_outer; ++i)
            radii.push_back(0.5 * std::pow(2.0 * vmax, (i + 1.0) / grid.n_outer));
    const std::size_t per_r = static_cast<std::size_t>(grid.n_s) * grid.n_theta;
    std::vector<double> norms(radii.size() * per_r);
    const OVPotential V{cfg};
    parallel_for(norms.size(), [&](std::size_t idx) {
        const std::size_t ir = idx / per_r, rem = idx % per_r;
        const int is = static_cast<int>(rem / grid.n_theta), it = static_cast<int>(rem % grid.n_theta);
        const double s = 0.5 * (is + 0.5) / grid.n_s;
        const cplx y = eps * std::polar(radii[ir], 2.0 * std::numbers::pi * it / grid.n_theta);
        norms[idx] = curvature_norms(V, {y.real(), y.imag(), s * eps}).compact;
    });
    CurvatureRow row{eps, 0.0, 0.0, 0.0};
    for (std::size_t idx = 0; idx < norms.size(); ++idx)
        if (norms[idx] > row.sup_norm) {
            const std::size_t rem = idx % per_r;
            row.sup_norm = norms[idx];
            row.at_s = 0.5 * (static_cast<double>(rem / grid.n_theta) + 0.5) / grid.n_s;
            row.at_v = radii[idx / per_r];
        }
    return row;
}

inline std::vector<CurvatureRow> curvature_window(OVConfig cfg, const std::vector<double>& schedule,
                                                  const CurvatureGrid& grid = {}) {
    std::vector<CurvatureRow> rows;
    for (double eps : schedule) {
        cfg.eps = eps;
        rows.push_back(curvature_sup(cfg, grid));
    }
    return rows;
}

// eps sup|R| in [lower / (log 1/eps)^2, upper log(1/eps)], constants fitted on the first row.
struct CurvatureWindowFit {
    double lower = 0.0, upper = 0.0;

    static CurvatureWindowFit from(const CurvatureRow& row) {
        if (!(row.eps < 1.0)) throw DomainError("curvature window needs eps < 1");
        const double L = std::log(1.0 / row.eps);
        return {row.scaled() * L * L, row.scaled() / L};
    }
    bool contains(const CurvatureRow& row, double rel_slack = 1e-9) const {
        const double L = std::log(1.0 / row.eps);
        return row.scaled() >= lower / (L * L) * (1.0 - rel_slack) && row.scaled() <= upper * L * (1.0 + rel_slack);
    }
};

// ----------------------------------------------------------------------------
// Family for harnack_collapse_check at a fixed fibre.

inline auto ov_harnack_family(OVConfig cfg, cplx y0) {
    return [cfg, y0](double eps) mutable {
        cfg.eps = eps;
        const OVConfig c = cfg;
        auto V = [c, y0](double u) { return ov_value(u, y0, c); };
        return std::pair{std::function<double(double)>(V), ov_fibre_height(y0, c)};
    };
}

}  // namespace hkc
