#pragma once

// Metric-space measurements on fibred metrics: graph geodesics on the base and in
// the total space, the McLean base metric, Gromov-Hausdorff distortion of a pair of
// maps, and the collapse of the glued metrics eps * g onto the base.
//
// Total-space charts use coordinates (y1, y2, u, x1): u is the Gibbons-Hawking height
// (period eps, x2 = -P(y, u)) and x1 the circle coordinate. Going once around u
// identifies (y, u + eps, x1) with (y, u, x1 + Re tau2(y)).

#include "hkc/errors.hpp"
#include "hkc/geometry_core.hpp"
#include "hkc/gluing.hpp"
#include "hkc/ooguri_vafa.hpp"
#include "hkc/parallel.hpp"
#include "hkc/quadrature.hpp"
#include "hkc/semiflat.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace hkc {

using Mat2 = Eigen::Matrix2d;

// ----------------------------------------------------------------------------
// Finite metric spaces and distortion

struct SampledMetricSpace {
    Eigen::MatrixXd d;  // symmetric, zero diagonal

    int size() const { return static_cast<int>(d.rows()); }
};

// max of sup |d_X(a, b) - d_Y(f a, f b)|, sup |d_Y(c, e) - d_X(g c, g e)|,
// sup d_X(a, g f a) and sup d_Y(c, f g c).
inline double gh_distortion(const SampledMetricSpace& X, const SampledMetricSpace& Y, const std::vector<int>& f,
                            const std::vector<int>& g) {
    if (static_cast<int>(f.size()) != X.size() || static_cast<int>(g.size()) != Y.size())
        throw DomainError("gh_distortion: maps must be defined on every sample point");
    double out = 0.0;
    for (int a = 0; a < X.size(); ++a) {
        out = std::max(out, X.d(a, g[f[a]]));
        for (int b = 0; b < X.size(); ++b) out = std::max(out, std::abs(X.d(a, b) - Y.d(f[a], f[b])));
    }
    for (int c = 0; c < Y.size(); ++c) {
        out = std::max(out, Y.d(c, f[g[c]]));
        for (int e = 0; e < Y.size(); ++e) out = std::max(out, std::abs(Y.d(c, e) - X.d(g[c], g[e])));
    }
    return out;
}

// Largest excess d(a, c) - d(a, b) - d(b, c) over all triples of the first max_points points.
inline double triangle_violation(const SampledMetricSpace& X, int max_points = 200) {
    const int n = std::min(X.size(), max_points);
    double worst = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) worst = std::max(worst, X.d(a, c) - X.d(a, b) - X.d(b, c));
    return worst;
}

// ----------------------------------------------------------------------------
// Shortest paths

namespace diag_detail {

// Primitive steps (a, b) with max(|a|, |b|) <= 3; the largest angular gap is about
// 18 degrees, so straight-line distances are overestimated by at most 1.3%.
inline const std::vector<std::array<int, 2>>& stencil() {
    static const std::vector<std::array<int, 2>> s = [] {
        std::vector<std::array<int, 2>> out;
        for (int a = -3; a <= 3; ++a)
            for (int b = -3; b <= 3; ++b)
                if ((a != 0 || b != 0) && std::gcd(a, b) == 1) out.push_back({a, b});
        return out;
    }();
    return s;
}

// Dijkstra over an implicit graph; neighbours(v, visit) calls visit(w, length).
template <class Neighbours>
std::vector<double> dijkstra(int n, const std::vector<std::pair<int, double>>& sources, Neighbours&& neighbours) {
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> q;
    for (auto [s, d0] : sources)
        if (d0 < dist[s]) {
            dist[s] = d0;
            q.push({d0, s});
        }
    while (!q.empty()) {
        const auto [d, v] = q.top();
        q.pop();
        if (d > dist[v]) continue;
        neighbours(v, [&](int w, double len) {
            if (d + len < dist[w]) {
                dist[w] = d + len;
                q.push({dist[w], w});
            }
        });
    }
    return dist;
}

inline double quad_length(const Mat2& G, double a, double b) {
    return std::sqrt(std::max(0.0, G(0, 0) * a * a + 2.0 * G(0, 1) * a * b + G(1, 1) * b * b));
}

// Length of a straight segment by Simpson's rule on the metric at ends and midpoint.
inline double simpson_length(const Mat2& G0, const Mat2& Gm, const Mat2& G1, double a, double b) {
    return (quad_length(G0, a, b) + 4.0 * quad_length(Gm, a, b) + quad_length(G1, a, b)) / 6.0;
}

}  // namespace diag_detail

// Shortest paths on a square grid of cell centres covering the disc |y| <= R,
// with the metric tensor tabulated at nodes and half-grid midpoints.
class BaseGraph {
public:
    template <class MetricFn>  // cplx -> Mat2
    BaseGraph(double R, int n, MetricFn&& metric) : R_(R), n_(n), h_(2.0 * R / n) {
        if (n < 4 || n % 2 != 0) throw DomainError("BaseGraph: n must be even and at least 4");
        id_.assign(n_ * n_, -1);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if (std::abs(position(2 * i + 1, 2 * j + 1)) <= R_ + 1e-12) {
                    id_[i * n_ + j] = static_cast<int>(nodes_.size());
                    nodes_.push_back({i, j});
                }
        const int m = 2 * n_ + 1;
        table_.assign(m * m, Mat2::Constant(std::numeric_limits<double>::quiet_NaN()));
        std::vector<int> needed;
        for (int p = 0; p < m; ++p)
            for (int q = 0; q < m; ++q)
                if (std::abs(position(p, q)) <= R_ + h_) needed.push_back(p * m + q);
        parallel_for(needed.size(), [&](std::size_t k) {
            const int p = needed[k] / m, q = needed[k] % m;
            cplx y = position(p, q);
            if (std::abs(y) < 1e-6 * h_) y = 1e-6 * h_;  // a corner may sit on a singular point
            table_[needed[k]] = metric(y);
        });
    }

    int size() const { return static_cast<int>(nodes_.size()); }
    double spacing() const { return h_; }
    cplx node(int v) const { return position(2 * nodes_[v][0] + 1, 2 * nodes_[v][1] + 1); }

    int nearest(cplx y) const {
        int best = -1;
        double bd = INFINITY;
        for (int v = 0; v < size(); ++v) {
            const double d = std::abs(node(v) - y);
            if (d < bd) bd = d, best = v;
        }
        return best;
    }

    std::vector<double> distances_from(int v) const { return run({{v, 0.0}}); }

    // Distances from an arbitrary point joined to the nodes within three cells by
    // straight segments measured with `metric` at Gauss-Legendre nodes.
    template <class MetricFn>
    std::vector<double> distances_from_point(cplx y, MetricFn&& metric) const {
        return run(attach(y, metric));
    }

    // Distance between two arbitrary points of the disc.
    template <class MetricFn>
    double distance(cplx a, cplx b, MetricFn&& metric) const {
        if (a == b) return 0.0;
        const std::vector<double> d = distances_from_point(a, metric);
        double best = INFINITY;
        if (std::abs(a - b) <= 3.0 * h_) best = segment_length(a, b, metric);
        for (auto [v, len] : attach(b, metric)) best = std::min(best, d[v] + len);
        return best;
    }

private:
    cplx position(int p, int q) const { return {-R_ + 0.5 * p * h_, -R_ + 0.5 * q * h_}; }
    const Mat2& at(int p, int q) const { return table_[p * (2 * n_ + 1) + q]; }

    template <class MetricFn>
    static double segment_length(cplx a, cplx b, MetricFn& metric) {
        const cplx d = b - a;
        return integrate_gauss(
            [&](double t) {
                cplx y = a + t * d;
                if (std::abs(y) == 0.0) y = 1e-300;
                return diag_detail::quad_length(metric(y), d.real(), d.imag());
            },
            0.0, 1.0, 8, 2);
    }

    template <class MetricFn>
    std::vector<std::pair<int, double>> attach(cplx y, MetricFn& metric) const {
        std::vector<std::pair<int, double>> out;
        for (int v = 0; v < size(); ++v)
            if (std::abs(node(v) - y) <= 3.0 * h_) out.push_back({v, segment_length(y, node(v), metric)});
        if (out.empty()) throw DomainError("BaseGraph: point lies outside the sampled disc");
        return out;
    }

    std::vector<double> run(const std::vector<std::pair<int, double>>& sources) const {
        return diag_detail::dijkstra(size(), sources, [&](int v, auto&& visit) {
            const int i = nodes_[v][0], j = nodes_[v][1];
            for (auto [a, b] : diag_detail::stencil()) {
                const int i2 = i + a, j2 = j + b;
                if (i2 < 0 || j2 < 0 || i2 >= n_ || j2 >= n_) continue;
                const int w = id_[i2 * n_ + j2];
                if (w < 0) continue;
                const double len = diag_detail::simpson_length(at(2 * i + 1, 2 * j + 1), at(2 * i + 1 + a, 2 * j + 1 + b),
                                                               at(2 * i2 + 1, 2 * j2 + 1), a * h_, b * h_);
                visit(w, len);
            }
        });
    }

    double R_;
    int n_;
    double h_;
    std::vector<std::array<int, 2>> nodes_;
    std::vector<int> id_;
    std::vector<Mat2> table_;
};

// ----------------------------------------------------------------------------
// The McLean metric Im(conj tau1 tau2) |dy|^2 on the base

struct McLeanBase {
    PeriodPair periods;

    double density(cplx y) const { return (std::conj(periods.tau1(y)) * periods.tau2(y)).imag(); }
    Mat2 metric(cplx y) const {
        const double d = density(y);
        if (!(d > 0.0)) throw DomainError("McLean density is not positive at the sample point");
        return d * Mat2::Identity();
    }
};

// Graph geodesic distance in the McLean metric; endpoints may be singular points.
inline double base_distance(cplx a, cplx b, const McLeanBase& base, int n = 96) {
    const double R = 1.05 * std::max({std::abs(a), std::abs(b), 1e-3});
    auto metric = [&](cplx y) { return base.metric(y); };
    const BaseGraph g(R, n, metric);
    return 0.5 * (g.distance(a, b, metric) + g.distance(b, a, metric));
}

// ----------------------------------------------------------------------------
// Charts on total spaces, all in the rescaled metric eps * g.

namespace diag_detail {

// Pullback of a canonical-coordinate metric to (y1, y2, u, x1) given x2 = -P(y, u).
inline Mat4 chart_pullback(const Mat4& g, double V, double P1, double P2) {
    Mat4 J = Mat4::Zero();
    J(1, 0) = -P1;
    J(2, 0) = 1.0;
    J(1, 1) = -P2;
    J(3, 1) = 1.0;
    J(1, 2) = -V;
    J(0, 3) = 1.0;
    return J.transpose() * g * J;
}

}  // namespace diag_detail

class GluedChart {
public:
    explicit GluedChart(const GluedMetric& gm) : gm_(&gm) {}

    double period() const { return gm_->eps(); }
    double zero_height() const { return 0.5 * gm_->eps(); }
    double scale() const { return gm_->eps(); }
    double twist(cplx y) const { return gm_->semiflat().periods.tau2(y).real(); }
    Mat4 metric(cplx y, double u) const {
        const OVPrimitive& prim = gm_->primitive();
        const cplx dP = prim.primitive_dy(y, u);
        const Mat4 g = metric_from_form(gm_->form_at_u(y, u));
        return gm_->eps() * diag_detail::chart_pullback(g, prim.potential(y, u), 2.0 * dP.real(), -2.0 * dP.imag());
    }

private:
    const GluedMetric* gm_;
};

// Semi-flat metric with tau1 = 1, parametrized by x2 = -(u - eps/2) Im tau2 / eps.
class SemiFlatChart {
public:
    explicit SemiFlatChart(SemiFlatMetric sf) : sf_(std::move(sf)) {}

    double period() const { return sf_.eps; }
    double zero_height() const { return 0.5 * sf_.eps; }
    double scale() const { return sf_.eps; }
    double twist(cplx y) const { return sf_.periods.tau2(y).real(); }
    Mat4 metric(cplx y, double u) const {
        const double eps = sf_.eps;
        const double I = sf_.periods.tau2(y).imag();
        const cplx t = sf_.periods.tau2.derivative(y);
        const double c = (u - 0.5 * eps) / eps;
        const Point p{cplx(0.0, -c * I), y};
        const Mat4 g = metric_from_form(kahler_form(semiflat_data(sf_, p), p));
        return eps * diag_detail::chart_pullback(g, I / eps, c * t.imag(), c * t.real());
    }

private:
    SemiFlatMetric sf_;
};

// Shortest paths on the fibre torus over y: grid (u_k, x1_l) = (k eps / n_u, l / n_x).
// The metric restricted to a fibre depends on u only and is eps-periodic.
class FibreGraph {
public:
    template <class Chart>
    FibreGraph(const Chart& chart, cplx y, int n_u, int n_x)
        : nu_(n_u), nx_(n_x), du_(chart.period() / n_u), dx_(1.0 / n_x), twist_(chart.twist(y)) {
        if (n_u < 2 || n_x < 2) throw DomainError("FibreGraph: need at least 2 nodes per direction");
        table_.resize(2 * n_u);
        for (int m = 0; m < 2 * n_u; ++m) table_[m] = chart.metric(y, 0.5 * m * du_).template block<2, 2>(2, 2);
    }

    int size() const { return nu_ * nx_; }
    int index(int k, int l) const { return ((k % nu_ + nu_) % nu_) * nx_ + ((l % nx_ + nx_) % nx_); }

    std::vector<double> distances_from(int k, int l) const {
        return diag_detail::dijkstra(size(), {{index(k, l), 0.0}}, [&](int v, auto&& visit) {
            const int k0 = v / nx_, l0 = v % nx_;
            for (auto [a, b] : diag_detail::stencil()) {
                const int k1 = k0 + a;
                const Mat2& G0 = metric_at(2 * k0);
                const Mat2& Gm = metric_at(2 * k0 + a);
                const Mat2& G1 = metric_at(2 * k1);
                if (k1 >= 0 && k1 < nu_) {
                    visit(index(k1, l0 + b), diag_detail::simpson_length(G0, Gm, G1, a * du_, b * dx_));
                    continue;
                }
                // (u + eps, x1) ~ (u, x1 + Re tau2): land between two x1 nodes
                const double shift = k1 >= nu_ ? twist_ : -twist_;
                const double target = (l0 + b) * dx_ + shift;
                const int lo = static_cast<int>(std::floor(target / dx_));
                for (int l1 : {lo, lo + 1}) {
                    const double dx1 = l1 * dx_ - shift - l0 * dx_;
                    visit(index(k1, l1), diag_detail::simpson_length(G0, Gm, G1, a * du_, dx1));
                }
            }
        });
    }

private:
    const Mat2& metric_at(int m) const { return table_[((m % (2 * nu_)) + 2 * nu_) % (2 * nu_)]; }

    int nu_, nx_;
    double du_, dx_, twist_;
    std::vector<Mat2> table_;
};

// Largest fibre distance from the zero section over y, an estimate of the fibre radius.
template <class Chart>
double fibre_radius(const Chart& chart, cplx y, int n_u = 16, int n_x = 8) {
    const FibreGraph g(chart, y, n_u, n_x);
    const std::vector<double> d = g.distances_from(n_u / 2, 0);
    return *std::max_element(d.begin(), d.end());
}

// ----------------------------------------------------------------------------
// Total-space distance

enum class DistanceMethod { product_graph, via_zero_section };

inline std::string to_string(DistanceMethod m) {
    return m == DistanceMethod::product_graph ? "product_graph" : "via_zero_section";
}

struct TotalDistance {
    double value = 0.0;
    DistanceMethod method = DistanceMethod::product_graph;
    double product_graph = 0.0;
    double via_zero_section = 0.0;
};

struct ChartPoint {
    cplx y;
    double u = 0.0;
    double x1 = 0.0;
};

struct TotalGraphGrid {
    int n_base = 12;   // base nodes per side of the box
    int n_u = 8;
    int n_x = 4;
    double margin = 0.1;
};

// Shortest path on a product grid (base box x fibre torus) with base, fibre and mixed
// steps, compared with the route fibre -> zero section -> zero section -> fibre.
// Both are upper bounds for the geodesic distance; the smaller is reported.
template <class Chart>
TotalDistance total_space_distance(const Chart& chart, const ChartPoint& p, const ChartPoint& q,
                                   const TotalGraphGrid& grid = {}) {
    const double eps = chart.period();
    const int nb = grid.n_base, nu = grid.n_u, nx = grid.n_x;
    if (nb < 7) throw DomainError("total_space_distance: need at least 7 base nodes per side");
    // Two margin cells on each side; both endpoints fall on nodes.
    auto axis = [&](double a, double b) {
        const double span = std::abs(b - a);
        const double h = span > 0.0 ? span / (nb - 5) : 0.5 * grid.margin;
        return std::pair{std::min(a, b) - (span > 0.0 ? 2.0 : 0.5 * (nb - 1)) * h, h};
    };
    const auto [lo1, h1] = axis(p.y.real(), q.y.real());
    const auto [lo2, h2] = axis(p.y.imag(), q.y.imag());
    const double du = eps / nu, dx = 1.0 / nx;
    auto wrap = [](int a, int n) { return ((a % n) + n) % n; };
    auto id = [&](int i, int j, int k, int l) { return ((i * nb + j) * nu + wrap(k, nu)) * nx + wrap(l, nx); };
    // Metric at half-grid points in (y1, y2, u); wrapping steps reach half-index c in [-2, 2 nu + 2].
    const int m1 = 2 * nb - 1, mu = 2 * nu + 5;
    std::vector<Mat4> table(static_cast<std::size_t>(m1) * m1 * mu);
    parallel_for(static_cast<std::size_t>(m1) * m1, [&](std::size_t ij) {
        const int a = static_cast<int>(ij) / m1, b = static_cast<int>(ij) % m1;
        const cplx y(lo1 + 0.5 * a * h1, lo2 + 0.5 * b * h2);
        for (int c = 0; c < mu; ++c) table[ij * mu + c] = chart.metric(y, 0.5 * (c - 2) * du);
    });
    auto metric_at = [&](int a, int b, int c) -> const Mat4& { return table.at((a * m1 + b) * mu + c + 2); };
    auto length = [&](int a, int b, int c, int da, int db, int dc, double dx1) {
        const Eigen::Vector4d v(0.5 * da * h1, 0.5 * db * h2, 0.5 * dc * du, dx1);
        auto q = [&](const Mat4& G) { return std::sqrt(std::max(0.0, v.dot(G * v))); };
        return (q(metric_at(a, b, c)) + 4.0 * q(metric_at(a + da / 2, b + db / 2, c + dc / 2)) +
                q(metric_at(a + da, b + db, c + dc))) / 6.0;
    };
    const int n = nb * nb * nu * nx;
    auto snap = [&](const ChartPoint& r) {
        const int i = static_cast<int>(std::lround((r.y.real() - lo1) / h1));
        const int j = static_cast<int>(std::lround((r.y.imag() - lo2) / h2));
        const int k = static_cast<int>(std::lround(r.u / du));
        const int l = static_cast<int>(std::lround(r.x1 / dx));
        return id(i, j, k, l);
    };
    const std::vector<double> dist = diag_detail::dijkstra(n, {{snap(p), 0.0}}, [&](int v, auto&& visit) {
        const int l = v % nx, k = (v / nx) % nu, j = (v / (nx * nu)) % nb, i = v / (nx * nu * nb);
        for (int si = -1; si <= 1; ++si)
            for (int sj = -1; sj <= 1; ++sj)
                for (int sk = -1; sk <= 1; ++sk)
                    for (int sl = -1; sl <= 1; ++sl) {
                        if (!si && !sj && !sk && !sl) continue;
                        const int i2 = i + si, j2 = j + sj, k2 = k + sk;
                        if (i2 < 0 || j2 < 0 || i2 >= nb || j2 >= nb) continue;
                        const bool wraps = k2 < 0 || k2 >= nu;
                        if (wraps && (si || sj)) continue;
                        const double L = length(2 * i, 2 * j, 2 * k, 2 * si, 2 * sj, 2 * sk, sl * dx);
                        if (!wraps) {
                            visit(id(i2, j2, k2, l + sl), L);
                            continue;
                        }
                        const double shift = k2 >= nu ? chart.twist(cplx(lo1 + i * h1, lo2 + j * h2))
                                                      : -chart.twist(cplx(lo1 + i * h1, lo2 + j * h2));
                        const double target = (l + sl) * dx + shift;
                        const int base_l = static_cast<int>(std::floor(target / dx));
                        for (int l2 : {base_l, base_l + 1}) {
                            const double dx1 = l2 * dx - shift - l * dx;
                            visit(id(i2, j2, k2, l2), length(2 * i, 2 * j, 2 * k, 0, 0, 2 * sk, dx1));
                        }
                    }
    });
    TotalDistance out;
    out.product_graph = dist[snap(q)];
    // Via the zero section: fibre legs plus the zero-section curve length on the base box.
    const int gu = std::max(4, 2 * nu), gx = std::max(4, 2 * nx);
    auto fibre_leg = [&](const ChartPoint& r) {
        const FibreGraph fg(chart, r.y, gu, gx);
        const std::vector<double> d = fg.distances_from(gu / 2, 0);
        return d[fg.index(static_cast<int>(std::lround(r.u / (eps / gu))), static_cast<int>(std::lround(r.x1 * gx)))];
    };
    auto section_metric = [&](cplx y) -> Mat2 { return chart.metric(y, chart.zero_height()).template block<2, 2>(0, 0); };
    const cplx centre = 0.5 * (p.y + q.y);
    const double R = 0.5 * std::abs(p.y - q.y) + grid.margin;
    auto shifted_metric = [&](cplx z) { return section_metric(z + centre); };
    const BaseGraph sg(R, 2 * nb, shifted_metric);
    out.via_zero_section = fibre_leg(p) + sg.distance(p.y - centre, q.y - centre, shifted_metric) + fibre_leg(q);
    out.value = std::min(out.product_graph, out.via_zero_section);
    out.method = out.product_graph <= out.via_zero_section ? DistanceMethod::product_graph : DistanceMethod::via_zero_section;
    return out;
}

// ----------------------------------------------------------------------------
// Collapse of (X, eps g) onto the McLean base

struct CollapseConfig {
    int samples = 2000;         // total-space sample points
    int fibre_samples = 8;      // per base point
    std::uint64_t seed = 1;
    int base_grid = 48;         // graph nodes per side of the base square
    int fibre_u = 16;
    int fibre_x = 8;
    int lower_u = 8;            // fibre heights for the projection lower bound
    double near_radius = 0.1;   // base nodes this close to the singular point are always sampled
    double far_distance = 0.1;  // pairs compared in the section test stay this far from it
};

struct CollapseRow {
    double eps = 0.0;
    double delta = 0.0;           // distortion bound for (projection, zero section)
    double pair_term = 0.0;       // sup |d_X - d_B| over sample pairs (upper bound)
    double fibre_term = 0.0;      // sup d_X(p, zero section over f(p))
    double section_term = 0.0;    // sup |d_B - d_X(sigma0, sigma0)| (upper bound)
    double projection_gap = 0.0;  // sup (d_B - lower bound for d_X)
    double section_relative = 0.0;  // max |d_section - d_B| / d_B over far pairs
};

// d_X between samples is bracketed by the projection lower bound (base graph of the
// smallest horizontal part of eps g over each fibre) and the route through the zero
// section; each distortion term is bounded by the worse side of the bracket.
template <class Chart>
CollapseRow collapse_measure(const Chart& chart, const McLeanBase& base, double radius, const CollapseConfig& cfg) {
    if (cfg.fibre_samples < 1 || cfg.samples < cfg.fibre_samples) throw ConfigError("collapse: bad sample counts");
    auto mclean = [&](cplx y) { return base.metric(y); };
    auto section = [&](cplx y) -> Mat2 { return chart.metric(y, chart.zero_height()).template block<2, 2>(0, 0); };
    auto lower = [&](cplx y) -> Mat2 {
        double lo = INFINITY;
        for (int k = 0; k < cfg.lower_u; ++k) {
            const Mat4 G = chart.metric(y, (k + 0.5) * chart.period() / cfg.lower_u);
            const Mat2 S = G.template block<2, 2>(0, 0) -
                           G.template block<2, 2>(0, 2) * G.template block<2, 2>(2, 2).inverse() * G.template block<2, 2>(2, 0);
            lo = std::min(lo, Eigen::SelfAdjointEigenSolver<Mat2>(S).eigenvalues()(0));
        }
        return lo * Mat2::Identity();
    };
    const BaseGraph gB(radius, cfg.base_grid, mclean), gS(radius, cfg.base_grid, section), gL(radius, cfg.base_grid, lower);

    // Stratified sample: nodes near the singular point first, the rest drawn with the seed.
    const int n_base = std::min(gB.size(), cfg.samples / cfg.fibre_samples);
    std::vector<int> order(gB.size());
    for (int v = 0; v < gB.size(); ++v) order[v] = v;
    std::mt19937_64 rng(cfg.seed);
    for (int v = gB.size() - 1; v > 0; --v) std::swap(order[v], order[rng() % (v + 1)]);
    std::stable_partition(order.begin(), order.end(), [&](int v) { return std::abs(gB.node(v)) < cfg.near_radius; });
    order.resize(n_base);

    // Fibre distances to the zero section at the sampled fibre nodes.
    std::vector<double> fib(n_base);
    std::vector<std::vector<std::pair<int, int>>> picks(n_base);
    for (int a = 0; a < n_base; ++a)
        for (int s = 0; s < cfg.fibre_samples; ++s)
            picks[a].push_back({static_cast<int>(rng() % cfg.fibre_u), static_cast<int>(rng() % cfg.fibre_x)});
    parallel_for(n_base, [&](std::size_t a) {
        const FibreGraph fg(chart, gB.node(order[a]), cfg.fibre_u, cfg.fibre_x);
        const std::vector<double> d = fg.distances_from(cfg.fibre_u / 2, 0);
        double m = 0.0;
        for (auto [k, l] : picks[a]) m = std::max(m, d[fg.index(k, l)]);
        fib[a] = m;
    });

    std::vector<CollapseRow> part(n_base);
    parallel_for(n_base, [&](std::size_t a) {
        const std::vector<double> dB = gB.distances_from(order[a]), dS = gS.distances_from(order[a]),
                                  dL = gL.distances_from(order[a]);
        CollapseRow r;
        for (int b = 0; b < n_base; ++b) {
            const int w = order[b];
            const double up = fib[a] + dS[w] + fib[b];
            const double low = b == static_cast<int>(a) ? 0.0 : dL[w];
            r.pair_term = std::max({r.pair_term, up - dB[w], dB[w] - low});
            r.section_term = std::max({r.section_term, dS[w] - dB[w], dB[w] - dL[w]});
            r.projection_gap = std::max(r.projection_gap, dB[w] - dL[w]);
            const bool far = std::abs(gB.node(order[a])) >= cfg.far_distance && std::abs(gB.node(w)) >= cfg.far_distance;
            if (far && dB[w] > 0.0) r.section_relative = std::max(r.section_relative, std::abs(dS[w] - dB[w]) / dB[w]);
        }
        part[a] = r;
    });
    CollapseRow out;
    for (int a = 0; a < n_base; ++a) {
        out.pair_term = std::max(out.pair_term, part[a].pair_term);
        out.section_term = std::max(out.section_term, part[a].section_term);
        out.projection_gap = std::max(out.projection_gap, part[a].projection_gap);
        out.section_relative = std::max(out.section_relative, part[a].section_relative);
        out.fibre_term = std::max(out.fibre_term, fib[a]);
    }
    out.eps = chart.period();
    out.delta = std::max({out.pair_term, out.fibre_term, out.section_term});
    return out;
}

inline std::vector<CollapseRow> collapse_scan(const OVConfig& ov, const GlueConfig& glue, const std::vector<double>& schedule,
                                              const CollapseConfig& cfg) {
    std::vector<CollapseRow> rows;
    const McLeanBase base{ov_period_pair(ov)};
    for (double e : schedule) {
        OVConfig c = ov;
        c.eps = e;
        const GluedMetric gm = GluedMetric(c, glue).normalized();
        rows.push_back(collapse_measure(GluedChart(gm), base, ov.radius, cfg));
    }
    return rows;
}

inline bool strictly_decreasing(const std::vector<CollapseRow>& rows) {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].delta < rows[i - 1].delta)) return false;
    return true;
}

}  // namespace hkc
