#pragma once

// K0, digamma, odd zeta values and Euler's constant.
//
// bessel_k0 is templated so the Bessel expansion of the periodic potential can be
// differentiated exactly with jets; the rest are double-only.

#include "hkc/errors.hpp"
#include "hkc/jet.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace hkc {

constexpr double euler_gamma() { return 0.57721566490153286060651209008240243; }

namespace special_detail {

// x < 2: K0 = -(log(x/2) + gamma) I0(x) + sum_k q^k/(k!)^2 H_k,  q = x^2/4 <= 1.
// Term k is bounded by H_k/(k!)^2; k = 18 leaves < 1e-30, so the tail is below
// rounding for every derivative order used (factor ~k^D with D <= 4).
template <class T>
T k0_series(const T& x) {
    using std::log;
    const T q = x * x * 0.25;
    T term(1.0);    // q^k / (k!)^2
    T i0(1.0), rest(0.0);
    double harmonic = 0.0;
    for (int k = 1; k <= 18; ++k) {
        term = term * q * (1.0 / (static_cast<double>(k) * k));
        harmonic += 1.0 / k;
        i0 += term;
        rest += term * harmonic;
    }
    return rest - (log(x * 0.5) + euler_gamma()) * i0;
}

// x >= 2: K0(x) = int_0^inf exp(-x cosh t) dt by the trapezoid rule. The
// integrand is entire and even, so the rule converges like exp(-2 pi a / h) with
// a the usable strip half-width; near t = 0 the integrand is a Gaussian of width
// x^(-1/2), which fixes h <= 0.5 x^(-1/2) (error ~ exp(-2 pi^2 / 0.25) = e^-79).
// Terms stop once x (cosh t - 1) > 50, i.e. relative contribution < e^-50.
template <class T>
T k0_trapezoid(const T& x) {
    using std::exp;
    const double xv = value_of(x);
    const double h = std::min(0.1, 0.5 / std::sqrt(xv));
    T sum(0.5);
    for (int k = 1;; ++k) {
        const double t = k * h;
        const double s = std::sinh(0.5 * t);
        const double cm1 = 2.0 * s * s;  // cosh t - 1 without cancellation
        if (xv * cm1 > 50.0) break;
        sum += exp(x * (-cm1));
    }
    return exp(-x) * sum * h;
}

// Bernoulli numbers B_2 .. B_20 for the digamma asymptotic series.
inline constexpr std::array<double, 10> kBernoulliEven = {
    1.0 / 6.0,      -1.0 / 30.0,  1.0 / 42.0,         -1.0 / 30.0,    5.0 / 66.0,
    -691.0 / 2730.0, 7.0 / 6.0,   -3617.0 / 510.0,    43867.0 / 798.0, -174611.0 / 330.0};

// sum_{k >= N} k^-n by Euler-Maclaurin; the first omitted term is
// B_8/8! n(n+1)...(n+6) N^(-n-7), below 1e-19 for N = 64, n >= 2.
inline double power_tail(int n, double N) {
    const double a = std::pow(N, -n);
    const double dn = n;
    return N * a / (dn - 1.0) + 0.5 * a + dn / 12.0 * a / N
         - dn * (dn + 1) * (dn + 2) / 720.0 * a / (N * N * N)
         + dn * (dn + 1) * (dn + 2) * (dn + 3) * (dn + 4) / 30240.0 * a / (N * N * N * N * N);
}

inline constexpr int kZetaCutoff = 64;

}  // namespace special_detail

template <class T>
T bessel_k0(const T& x) {
    const double xv = value_of(x);
    if (!(xv > 0.0)) throw DomainError("bessel_k0: argument must be positive, got " + std::to_string(xv));
    if (xv > 745.0) return T(0.0);  // exp(-x) underflows
    return xv < 2.0 ? special_detail::k0_series(x) : special_detail::k0_trapezoid(x);
}

inline double digamma(double x) {
    if (x <= 0.0 && x == std::floor(x))
        throw DomainError("digamma: pole at non-positive integer " + std::to_string(x));
    if (x < 0.0) return digamma(1.0 - x) - std::numbers::pi / std::tan(std::numbers::pi * x);
    double shift = 0.0;
    while (x < 6.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    // Asymptotic series through B_20; at x >= 6 the first omitted term
    // |B_22| / (22 x^22) is below 2e-15.
    const double inv2 = 1.0 / (x * x);
    double series = 0.0, p = inv2;
    for (int k = 0; k < 10; ++k) {
        series += special_detail::kBernoulliEven[k] / (2.0 * (k + 1)) * p;
        p *= inv2;
    }
    return shift + std::log(x) - 0.5 / x - series;
}

// zeta(n) - 1 for integer n >= 2, without the cancellation of forming zeta(n) first.
inline double zeta_minus_one(int n) {
    if (n < 2) throw DomainError("zeta_minus_one: need n >= 2, got " + std::to_string(n));
    const int N = special_detail::kZetaCutoff;
    double s = special_detail::power_tail(n, N);
    for (int k = N - 1; k >= 2; --k) s += std::pow(static_cast<double>(k), -n);  // small terms first
    return s;
}

inline double zeta_odd(int n) {
    if (n < 3 || n % 2 == 0) throw DomainError("zeta_odd: need odd n >= 3, got " + std::to_string(n));
    return 1.0 + zeta_minus_one(n);
}

// g(s) = sum_{n>=1} (zeta(2n+1) - 1) s^(2n). zeta(2n+1) - 1 < 1.5 * 2^(-2n-1), so
// for |s| <= 1 the tail after n terms is below 4^-n; 40 terms suffice.
// Valid for |s| < 2 (more terms are taken as |s| grows).
inline double odd_zeta_series(double s) {
    if (!(std::abs(s) < 2.0)) throw DomainError("odd_zeta_series: need |s| < 2");
    static const std::array<double, 200> coeff = [] {
        std::array<double, 200> c{};
        for (int n = 1; n <= 200; ++n) c[n - 1] = zeta_minus_one(2 * n + 1);
        return c;
    }();
    const double s2 = s * s;
    double sum = 0.0, p = s2;
    for (int n = 1; n <= 200; ++n) {
        const double term = coeff[n - 1] * p;
        sum += term;
        if (term < 1e-18 * (sum + 1e-300) && n > 3) break;
        p *= s2;
    }
    return sum;
}

}  // namespace hkc
