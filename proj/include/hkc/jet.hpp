#pragma once

// Truncated multivariate Taylor jets.
//
// Jet<N, D> holds the Taylor coefficients c_a = (d^a f)(p) / a! of a function of
// N variables at a point p, for every multi-index a with |a| <= D. Arithmetic is
// exact in the truncated polynomial ring, so derivatives up to order D of any
// composition of the supported operations come out to rounding error.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace hkc {

namespace jet_detail {

constexpr int binomial(int n, int k) {
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return static_cast<int>(r);
}

struct ProductTerm {
    std::uint16_t left, right, out;
};

template <int N, int D>
struct Layout {
    static constexpr int size = binomial(N + D, D);
    std::array<std::array<int, N>, size> index{};
    std::array<int, size> degree{};
    std::vector<ProductTerm> products;

    Layout() {
        // Graded order; inside a degree, lexicographically descending, so the
        // degree-1 slots are e_0, ..., e_{N-1} at positions 1..N.
        int pos = 0;
        for (int d = 0; d <= D; ++d) {
            std::array<int, N> a{};
            enumerate(a, 0, d, d, pos);
        }
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j) {
                if (degree[i] + degree[j] > D) continue;
                std::array<int, N> s{};
                for (int v = 0; v < N; ++v) s[v] = index[i][v] + index[j][v];
                products.push_back({static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(j),
                                    static_cast<std::uint16_t>(find(s))});
            }
    }

    int find(const std::array<int, N>& a) const {
        for (int i = 0; i < size; ++i)
            if (index[i] == a) return i;
        return -1;
    }

private:
    void enumerate(std::array<int, N>& a, int var, int left, int d, int& pos) {
        if (var == N - 1) {
            a[var] = left;
            index[pos] = a;
            degree[pos] = d;
            ++pos;
            return;
        }
        for (int k = left; k >= 0; --k) {
            a[var] = k;
            enumerate(a, var + 1, left - k, d, pos);
        }
    }
};

template <int N, int D>
const Layout<N, D>& layout() {
    static const Layout<N, D> instance;
    return instance;
}

}  // namespace jet_detail

template <int N, int D>
class Jet {
public:
    static constexpr int vars = N;
    static constexpr int order = D;
    static constexpr int size = jet_detail::binomial(N + D, D);
    using MultiIndex = std::array<int, N>;

    std::array<double, size> c{};

    Jet() = default;
    Jet(double v) { c[0] = v; }  // NOLINT(google-explicit-constructor): constants promote freely

    static Jet variable(int i, double v) {
        Jet r(v);
        if constexpr (D >= 1) r.c[1 + i] = 1.0;
        return r;
    }

    double value() const { return c[0]; }

    double coefficient(const MultiIndex& a) const {
        const int k = jet_detail::layout<N, D>().find(a);
        return k < 0 ? 0.0 : c[k];
    }

    // Partial derivative d^a f at the expansion point.
    double derivative(const MultiIndex& a) const {
        double fact = 1.0;
        for (int v = 0; v < N; ++v)
            for (int k = 2; k <= a[v]; ++k) fact *= k;
        return coefficient(a) * fact;
    }

    Jet& operator+=(const Jet& o) {
        for (int i = 0; i < size; ++i) c[i] += o.c[i];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (int i = 0; i < size; ++i) c[i] -= o.c[i];
        return *this;
    }
    Jet& operator+=(double s) {
        c[0] += s;
        return *this;
    }
    Jet& operator-=(double s) {
        c[0] -= s;
        return *this;
    }
    Jet& operator*=(double s) {
        for (auto& v : c) v *= s;
        return *this;
    }
    Jet& operator/=(double s) {
        for (auto& v : c) v /= s;
        return *this;
    }
    Jet& operator*=(const Jet& o) { return *this = *this * o; }
    Jet& operator/=(const Jet& o) { return *this = *this / o; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r;
        for (const auto& t : jet_detail::layout<N, D>().products) r.c[t.out] += a.c[t.left] * b.c[t.right];
        return r;
    }
    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator-(Jet a) {
        for (auto& v : a.c) v = -v;
        return a;
    }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a -= s; }
    friend Jet operator-(double s, const Jet& a) { return -a + s; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator/(Jet a, double s) { return a /= s; }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
    friend Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }

    // Comparisons look at the value only; they drive branch selection.
    friend bool operator<(const Jet& a, double s) { return a.c[0] < s; }
    friend bool operator>(const Jet& a, double s) { return a.c[0] > s; }
    friend bool operator<=(const Jet& a, double s) { return a.c[0] <= s; }
    friend bool operator>=(const Jet& a, double s) { return a.c[0] >= s; }

    // f(a0 + n) = sum_k taylor[k] n^k with n the nilpotent part; Horner in n.
    friend Jet compose(const Jet& x, const std::array<double, D + 1>& taylor) {
        Jet n = x;
        n.c[0] = 0.0;
        Jet r(taylor[D]);
        for (int k = D - 1; k >= 0; --k) {
            r = r * n;
            r.c[0] += taylor[k];
        }
        return r;
    }

    friend Jet reciprocal(const Jet& x) {
        const double a = x.c[0];
        std::array<double, D + 1> t{};
        double p = 1.0 / a;
        for (int k = 0; k <= D; ++k) {
            t[k] = p;
            p *= -1.0 / a;
        }
        return compose(x, t);
    }
    friend Jet exp(const Jet& x) {
        std::array<double, D + 1> t{};
        t[0] = std::exp(x.c[0]);
        for (int k = 1; k <= D; ++k) t[k] = t[k - 1] / k;
        return compose(x, t);
    }
    friend Jet log(const Jet& x) {
        const double a = x.c[0];
        std::array<double, D + 1> t{};
        t[0] = std::log(a);
        double p = 1.0;
        for (int k = 1; k <= D; ++k) {
            p /= a;
            t[k] = ((k % 2) ? 1.0 : -1.0) * p / k;
        }
        return compose(x, t);
    }
    // log(1 + x), accurate when the value of x is tiny.
    friend Jet log1p(const Jet& x) {
        const double a = 1.0 + x.c[0];
        std::array<double, D + 1> t{};
        t[0] = std::log1p(x.c[0]);
        double p = 1.0;
        for (int k = 1; k <= D; ++k) {
            p /= a;
            t[k] = ((k % 2) ? 1.0 : -1.0) * p / k;
        }
        return compose(x, t);
    }
    friend Jet pow(const Jet& x, double m) {
        const double a = x.c[0];
        std::array<double, D + 1> t{};
        t[0] = std::pow(a, m);
        for (int k = 1; k <= D; ++k) t[k] = t[k - 1] * (m - (k - 1)) / (k * a);
        return compose(x, t);
    }
    friend Jet sqrt(const Jet& x) { return pow(x, 0.5); }
    friend Jet sin(const Jet& x) {
        std::array<double, D + 1> t{};
        const double s = std::sin(x.c[0]), co = std::cos(x.c[0]);
        double f = 1.0;
        for (int k = 0; k <= D; ++k) {
            if (k > 0) f /= k;
            const double d = (k % 4 == 0) ? s : (k % 4 == 1) ? co : (k % 4 == 2) ? -s : -co;
            t[k] = d * f;
        }
        return compose(x, t);
    }
    friend Jet cos(const Jet& x) {
        std::array<double, D + 1> t{};
        const double s = std::sin(x.c[0]), co = std::cos(x.c[0]);
        double f = 1.0;
        for (int k = 0; k <= D; ++k) {
            if (k > 0) f /= k;
            const double d = (k % 4 == 0) ? co : (k % 4 == 1) ? -s : (k % 4 == 2) ? -co : s;
            t[k] = d * f;
        }
        return compose(x, t);
    }
    // asinh: integrate the univariate series of (1 + (a + t)^2)^(-1/2).
    friend Jet asinh(const Jet& x) {
        const double a = x.c[0];
        std::array<double, D + 1> q{};
        q[0] = 1.0 + a * a;
        if constexpr (D >= 1) q[1] = 2.0 * a;
        if constexpr (D >= 2) q[2] = 1.0;
        // p = q^m with m = -1/2 via the J.C.P. Miller power recurrence.
        const double m = -0.5;
        std::array<double, D + 1> p{};
        p[0] = std::pow(q[0], m);
        for (int k = 1; k <= D; ++k) {
            double s = 0.0;
            for (int j = 1; j <= k; ++j) s += ((m + 1.0) * j - k) * q[j] * p[k - j];
            p[k] = s / (k * q[0]);
        }
        std::array<double, D + 1> t{};
        t[0] = std::asinh(a);
        for (int k = 1; k <= D; ++k) t[k] = p[k - 1] / k;
        return compose(x, t);
    }
};

// Scalar helpers so templated evaluators can branch on values.
inline double value_of(double x) { return x; }
template <int N, int D>
double value_of(const Jet<N, D>& x) {
    return x.value();
}

// Drop the nilpotent part: freeze a quantity as a constant.
inline double constant_of(double x) { return x; }

template <int N, int D>
Jet<N, D> partial(const Jet<N, D>& f, int var) {
    const auto& L = jet_detail::layout<N, D>();
    Jet<N, D> r;
    for (int i = 0; i < Jet<N, D>::size; ++i) {
        if (L.degree[i] == D) continue;
        auto a = L.index[i];
        a[var] += 1;
        r.c[i] = a[var] * f.c[L.find(a)];
    }
    return r;
}

template <int N, int D>
Jet<N, D> laplacian(const Jet<N, D>& f) {
    Jet<N, D> r;
    for (int v = 0; v < N; ++v) r += partial(partial(f, v), v);
    return r;
}

// Complex numbers over a real scalar type that need not be a floating type.
template <class T>
struct Cplx {
    T re{}, im{};

    Cplx() = default;
    Cplx(T r, T i) : re(std::move(r)), im(std::move(i)) {}
    Cplx(double r) : re(r), im(0.0) {}  // NOLINT(google-explicit-constructor)
    Cplx(std::complex<double> z) : re(z.real()), im(z.imag()) {}  // NOLINT

    std::complex<double> value() const { return {value_of(re), value_of(im)}; }

    friend Cplx operator+(const Cplx& a, const Cplx& b) { return {a.re + b.re, a.im + b.im}; }
    friend Cplx operator-(const Cplx& a, const Cplx& b) { return {a.re - b.re, a.im - b.im}; }
    friend Cplx operator-(const Cplx& a) { return {-a.re, -a.im}; }
    friend Cplx operator*(const Cplx& a, const Cplx& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Cplx operator*(const Cplx& a, const T& s) { return {a.re * s, a.im * s}; }
    friend Cplx operator/(const Cplx& a, const Cplx& b) {
        const T d = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }
    friend Cplx conj(const Cplx& a) { return {a.re, -a.im}; }
    friend T norm2(const Cplx& a) { return a.re * a.re + a.im * a.im; }
};

// log z on the sheet where log(value(z)) = log_at_value; exact for jets via the
// series of log(1 + w), w = z/value(z) - 1 nilpotent.
template <class T>
Cplx<T> log_on_sheet(const Cplx<T>& z, std::complex<double> log_at_value) {
    if constexpr (std::is_same_v<T, double>) {
        (void)z;
        return Cplx<T>(log_at_value);
    } else {
        const std::complex<double> z0 = z.value();
        const Cplx<T> w = z / Cplx<T>(z0) - Cplx<T>(1.0);
        Cplx<T> r(0.0);
        for (int k = T::order; k >= 1; --k) r = r * w + Cplx<T>(((k % 2) ? 1.0 : -1.0) / k);
        r = r * w;
        r.re += log_at_value.real();
        r.im += log_at_value.imag();
        return r;
    }
}

}  // namespace hkc
