#pragma once

// Quadrature helpers. Fixed Gauss-Legendre rules work for any scalar type the
// integrand returns (including jets); adaptive rules are double-only.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace hkc {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

inline const GaussRule& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GaussRule rule;
    // Boost returns the nonnegative zeros; weights 2 / ((1 - x^2) P_n'(x)^2).
    const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(n);
    std::vector<std::pair<double, double>> nw;
    for (double x : zeros) {
        const double dp = boost::math::legendre_p_prime<double>(n, x);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nw.emplace_back(x, w);
        if (x != 0.0) nw.emplace_back(-x, w);
    }
    std::sort(nw.begin(), nw.end());
    for (auto [x, w] : nw) {
        rule.nodes.push_back(x);
        rule.weights.push_back(w);
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

// Composite Gauss-Legendre on [a, b] with `panels` equal panels of `n` nodes.
template <class F>
auto integrate_gauss(F&& f, double a, double b, int n = 16, int panels = 1) {
    const GaussRule& rule = gauss_legendre(n);
    const double width = (b - a) / panels;
    using R = decltype(f(a));
    R sum(0.0);
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double mid = lo + 0.5 * width, half = 0.5 * width;
        R part(0.0);
        for (int i = 0; i < n; ++i) part += f(mid + half * rule.nodes[i]) * rule.weights[i];
        sum += part * half;
    }
    return sum;
}

// Adaptive Gauss-Kronrod (15-point) for smooth double integrands.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-12) {
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 20, rel_tol);
}

// Tanh-sinh for integrands with integrable endpoint singularities.
template <class F>
double integrate_endpoint_singular(F&& f, double a, double b, double rel_tol = 1e-12) {
    static thread_local boost::math::quadrature::tanh_sinh<double> rule(12);
    return rule.integrate(f, a, b, rel_tol);
}

}  // namespace hkc
