#pragma once

// The five scan kinds behind `hkc scan`: each runs over the eps schedule of a
// RunConfig and produces a CSV table, fitted constants and named invariant checks.

#include "hkc/config.hpp"
#include "hkc/diagnostics.hpp"
#include "hkc/fitting.hpp"
#include "hkc/gibbons_hawking.hpp"
#include "hkc/gluing.hpp"
#include "hkc/ooguri_vafa.hpp"
#include "hkc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace hkc {

struct InvariantCheck {
    std::string invariant;
    bool passed = false;
    std::string detail;
};

struct ScanResult {
    std::string kind;
    CsvTable table;
    ordered_json fits = ordered_json::object();
    std::vector<InvariantCheck> checks;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.passed; });
    }
};

inline const std::vector<std::string>& scan_kinds() {
    static const std::vector<std::string> k{"ov", "glue", "curvature", "diameter", "collapse"};
    return k;
}

namespace scan_detail {

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return out;
}

inline std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

template <class Row, class Key>
bool strictly_monotone(const std::vector<Row>& rows, Key key, bool increasing) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double a = key(rows[i - 1]), b = key(rows[i]);
        if (increasing ? !(b > a) : !(b < a)) return false;
    }
    return true;
}

}  // namespace scan_detail

// ----------------------------------------------------------------------------
// ov: positivity margin, exponential decay of V0 to its mean, lattice/Bessel
// agreement and the semi-flat limit of the potential at a fixed fibre.

struct OVScanRow {
    double eps = 0.0;
    double boundary_min = 0.0;
    double decay_constant = 0.0;
    bool decay_within_bound = false;
    double lattice_bessel_max = 0.0;
    double fibre_deviation = 0.0;
};

inline std::vector<OVScanRow> ov_scan_rows(const RunConfig& c) {
    const json& dec = c.acceptance.at("decay");
    const std::vector<double> radii =
        scan_detail::linspace(dec.at("r_min").get<double>(), dec.at("r_max").get<double>(), dec.at("n_r").get<int>());
    const std::vector<double> fractions = scan_detail::linspace(0.0, 0.5, dec.at("n_u").get<int>());
    const json& fc = c.acceptance.at("fibre_collapse");
    const cplx fibre(fc.at("fibre")[0].get<double>(), fc.at("fibre")[1].get<double>());
    const auto harnack =
        harnack_collapse_check(c.epsilons, ov_harnack_family(c.ov(c.epsilons.front()), fibre), fc.at("samples").get<int>());
    std::vector<OVScanRow> rows;
    for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
        const double eps = c.epsilons[i];
        const OVConfig ov = c.ov(eps);
        OVScanRow r;
        r.eps = eps;
        r.boundary_min = boundary_minimum(ov).value;
        const DecayReport d = decay_check(eps, radii, fractions);
        r.decay_constant = d.constant;
        r.decay_within_bound = d.within_series_bound;
        // Both expansions on the Bessel side of the crossover, 8 radii x 8 angles x 4 heights.
        for (double rad : scan_detail::linspace(std::max(eps / std::numbers::pi, 0.05), c.fibration.radius, 8))
            for (int a = 0; a < 8; ++a)
                for (int k = 0; k < 4; ++k) {
                    const cplx y = std::polar(rad, 2.0 * std::numbers::pi * (a + 0.5) / 8);
                    const double u = eps * (k + 0.5) / 8;
                    r.lattice_bessel_max = std::max(r.lattice_bessel_max, std::abs(v0_lattice(u, y, eps) - v0_bessel(u, y, eps)));
                }
        r.fibre_deviation = harnack[i].deviation;
        rows.push_back(r);
    }
    return rows;
}

inline ScanResult scan_ov(const RunConfig& c) {
    const auto rows = ov_scan_rows(c);
    ScanResult s{"ov",
                 CsvTable({"eps", "boundary_min_v", "decay_constant", "decay_within_bound", "lattice_bessel_max_diff",
                           "fibre_deviation"}),
                 ordered_json::object(),
                 {}};
    double cmin = INFINITY, cmax = 0.0, lb = 0.0;
    bool positive = true;
    for (const auto& r : rows) {
        s.table.add({r.eps, r.boundary_min, r.decay_constant, r.decay_within_bound, r.lattice_bessel_max, r.fibre_deviation});
        cmin = std::min(cmin, r.decay_constant), cmax = std::max(cmax, r.decay_constant);
        lb = std::max(lb, r.lattice_bessel_max);
        positive = positive && r.boundary_min > 0.0;
    }
    const double max_ratio = c.acceptance.at("decay").at("max_ratio").get<double>();
    const double lb_tol = c.acceptance.at("lattice_bessel").at("tolerance").get<double>();
    s.fits["decay_constant_min"] = json_number(cmin);
    s.fits["decay_constant_max"] = json_number(cmax);
    s.checks.push_back({"ov potential positive on the patch boundary", positive, ""});
    s.checks.push_back({"decay constant stable within factor " + scan_detail::short_number(max_ratio), cmax <= max_ratio * cmin,
                        "ratio " + scan_detail::sci(cmax / cmin)});
    s.checks.push_back({"lattice and Bessel expansions agree", lb <= lb_tol, "max " + scan_detail::sci(lb)});
    s.checks.push_back({"fibre potential deviation strictly decreasing",
                        scan_detail::strictly_monotone(rows, [](const OVScanRow& r) { return r.fibre_deviation; }, false), ""});
    return s;
}

// ----------------------------------------------------------------------------
// glue

inline std::vector<GlueRow> glue_scan_rows(const RunConfig& c) {
    std::vector<GlueRow> rows;
    for (double eps : c.epsilons) rows.push_back(glue_row(c.ov(eps), c.annulus, c.grid));
    return rows;
}

struct GlueAssessment {
    bool positive = true;
    double worst_min_eigenvalue = INFINITY;
    bool zero_outside = true;
    bool fit_available = false;
    LineFit fit{};
    double volume_error = 0.0;
};

inline GlueAssessment assess_glue(const RunConfig& c, const std::vector<GlueRow>& rows) {
    const json& a = c.acceptance.at("glued_metric");
    const double pos_max = a.at("positivity_max_eps").get<double>();
    const std::vector<double> fit_eps = a.at("fit_epsilons").get<std::vector<double>>();
    GlueAssessment out;
    std::vector<double> fe, fv;
    for (const GlueRow& r : rows) {
        if (r.eps <= pos_max) {
            out.positive = out.positive && r.min_eigenvalue > 0.0;
            out.worst_min_eigenvalue = std::min(out.worst_min_eigenvalue, r.min_eigenvalue);
        }
        out.zero_outside = out.zero_outside && r.sup_defect_outside == 0.0;
        out.volume_error = std::max(out.volume_error, r.fibre_volume_error);
        if (std::find(fit_eps.begin(), fit_eps.end(), r.eps) != fit_eps.end() && r.sup_defect > 0.0)
            fe.push_back(r.eps), fv.push_back(r.sup_defect);
    }
    if (fe.size() >= 2) {
        out.fit = fit_exponential_decay(fe, fv);
        out.fit_available = true;
    }
    return out;
}

inline ScanResult scan_glue(const RunConfig& c) {
    const auto rows = glue_scan_rows(c);
    ScanResult s{"glue",
                 CsvTable({"eps", "sup_alpha", "sup_beta", "sup_gamma", "sup_phi", "sup_ricci_defect",
                           "sup_ricci_defect_outside", "min_eigenvalue", "volume_mismatch_relative",
                           "volume_mismatch_after_relative", "fibre_volume_error"}),
                 ordered_json::object(),
                 {}};
    for (const GlueRow& r : rows)
        s.table.add({r.eps, r.sups.alpha, r.sups.beta, r.sups.gamma, r.sups.phi, r.sup_defect, r.sup_defect_outside,
                     r.min_eigenvalue, r.mismatch_relative, r.mismatch_after_relative, r.fibre_volume_error});
    const GlueAssessment g = assess_glue(c, rows);
    const json& a = c.acceptance.at("glued_metric");
    if (g.fit_available) {
        s.fits["log_sup_defect_vs_inverse_eps"] = {{"slope", json_number(g.fit.slope)},
                                                   {"intercept", json_number(g.fit.intercept)},
                                                   {"r_squared", json_number(g.fit.r_squared)}};
    }
    s.checks.push_back({"glued metric positive definite for eps <= " + scan_detail::short_number(a.at("positivity_max_eps").get<double>()),
                        g.positive, "min eigenvalue " + scan_detail::sci(g.worst_min_eigenvalue)});
    s.checks.push_back({"Ricci defect identically zero outside the annulus", g.zero_outside, ""});
    const double r2min = a.at("r_squared_min").get<double>();
    s.checks.push_back({"log sup Ricci defect decays linearly in 1/eps",
                        g.fit_available && g.fit.slope < 0.0 && g.fit.r_squared >= r2min,
                        g.fit_available ? "slope " + scan_detail::sci(g.fit.slope) + ", R^2 " + scan_detail::sci(g.fit.r_squared)
                                        : "fewer than two fit epsilons in the schedule"});
    s.checks.push_back({"fibre volume equals eps", g.volume_error <= a.at("volume_tolerance").get<double>(),
                        "max relative error " + scan_detail::sci(g.volume_error)});
    return s;
}

// ----------------------------------------------------------------------------
// curvature

struct CurvatureAssessment {
    std::vector<CurvatureRow> rows;
    CurvatureWindowFit fit;
    double fit_eps = 0.0;
    bool in_window = true;
    bool increasing = true;
    LineFit growth{};
};

// The window constants come from the row at fit_eps (computed if absent from the schedule).
inline CurvatureAssessment assess_curvature(const RunConfig& c, double fit_eps) {
    CurvatureAssessment out;
    out.fit_eps = fit_eps;
    std::vector<double> schedule = c.epsilons;
    if (std::find(schedule.begin(), schedule.end(), fit_eps) == schedule.end()) {
        schedule.push_back(fit_eps);
        std::sort(schedule.rbegin(), schedule.rend());
    }
    out.rows = curvature_window(c.ov(schedule.front()), schedule, c.curvature);
    for (const CurvatureRow& r : out.rows)
        if (r.eps == fit_eps) out.fit = CurvatureWindowFit::from(r);
    std::vector<double> le, ls;
    for (const CurvatureRow& r : out.rows) {
        out.in_window = out.in_window && out.fit.contains(r);
        le.push_back(std::log(r.eps)), ls.push_back(std::log(r.sup_norm));
    }
    out.increasing = scan_detail::strictly_monotone(out.rows, [](const CurvatureRow& r) { return r.sup_norm; }, true);
    if (le.size() >= 2) out.growth = fit_line(le, ls);
    return out;
}

inline ScanResult scan_curvature(const RunConfig& c) {
    const CurvatureAssessment a = assess_curvature(c, c.acceptance.at("curvature_window").at("fit_eps").get<double>());
    ScanResult s{"curvature",
                 CsvTable({"eps", "sup_norm", "eps_sup_norm", "at_s", "at_v", "window_lower", "window_upper", "in_window"}),
                 ordered_json::object(),
                 {}};
    for (const CurvatureRow& r : a.rows) {
        const double L = std::log(1.0 / r.eps);
        s.table.add({r.eps, r.sup_norm, r.scaled(), r.at_s, r.at_v, a.fit.lower / (L * L), a.fit.upper * L, a.fit.contains(r)});
    }
    s.fits["window_fit_eps"] = a.fit_eps;
    s.fits["window_lower_constant"] = json_number(a.fit.lower);
    s.fits["window_upper_constant"] = json_number(a.fit.upper);
    s.fits["log_sup_vs_log_eps"] = {{"slope", json_number(a.growth.slope)}, {"r_squared", json_number(a.growth.r_squared)}};
    s.checks.push_back({"eps sup|R| inside the fitted window", a.in_window, ""});
    s.checks.push_back({"sup|R| strictly increasing as eps decreases", a.increasing, ""});
    return s;
}

// ----------------------------------------------------------------------------
// diameter

struct DiameterRow {
    double eps = 0.0;
    double singular = 0.0;
    double smooth = 0.0;
    double total = 0.0;
};

inline std::vector<DiameterRow> diameter_rows(const RunConfig& c) {
    std::vector<DiameterRow> rows;
    for (double eps : c.epsilons) {
        const OVConfig ov = c.ov(eps);
        DiameterRow r{eps, fibre_diameter(cplx(0.0), ov), fibre_diameter(c.diameter.smooth_fibre, ov), 0.0};
        r.total = eps <= c.diameter.total_radius ? total_diameter(c.diameter.total_radius, ov).total() : NAN;
        rows.push_back(r);
    }
    return rows;
}

// Regression slope of log d(0) against log(eps log 1/eps).
inline LineFit singular_diameter_fit(const std::vector<double>& eps, const std::vector<double>& diam) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        x.push_back(std::log(eps[i] * std::log(1.0 / eps[i])));
        y.push_back(std::log(diam[i]));
    }
    return fit_line(x, y);
}

inline ScanResult scan_diameter(const RunConfig& c) {
    const auto rows = diameter_rows(c);
    const double a = c.diameter.total_radius;
    ScanResult s{"diameter",
                 CsvTable({"eps", "singular_fibre_diameter", "smooth_fibre_diameter", "smooth_over_sqrt_eps",
                           "total_diameter", "total_times_sqrt_eps_over_a"}),
                 ordered_json::object(),
                 {}};
    std::vector<double> e, d, scaled;
    for (const DiameterRow& r : rows) {
        const double ts = r.total * std::sqrt(r.eps / a);
        s.table.add({r.eps, r.singular, r.smooth, r.smooth / std::sqrt(r.eps), r.total, ts});
        e.push_back(r.eps), d.push_back(r.singular);
        if (std::isfinite(ts)) scaled.push_back(ts);
    }
    if (e.size() >= 2) {
        const LineFit f = singular_diameter_fit(e, d);
        s.fits["singular_diameter_vs_eps_log_inverse_eps"] = {{"slope", json_number(f.slope)},
                                                              {"intercept", json_number(f.intercept)},
                                                              {"r_squared", json_number(f.r_squared)}};
    }
    s.checks.push_back({"smooth fibre diameter strictly decreasing",
                        scan_detail::strictly_monotone(rows, [](const DiameterRow& r) { return r.smooth; }, false), ""});
    s.checks.push_back({"singular fibre diameter strictly decreasing",
                        scan_detail::strictly_monotone(rows, [](const DiameterRow& r) { return r.singular; }, false), ""});
    if (!scaled.empty()) {
        const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
        s.fits["total_diameter_scaled_min"] = json_number(*lo);
        s.fits["total_diameter_scaled_max"] = json_number(*hi);
        s.checks.push_back({"total diameter times sqrt(eps/a) stable within factor 2", *hi < 2.0 * *lo, ""});
    }
    return s;
}

// ----------------------------------------------------------------------------
// collapse

inline ScanResult scan_collapse(const RunConfig& c) {
    const auto rows = collapse_scan(c.ov(c.epsilons.front()), c.annulus, c.epsilons, c.collapse);
    ScanResult s{"collapse",
                 CsvTable({"eps", "delta", "pair_term", "fibre_term", "section_term", "projection_gap",
                           "section_relative_error", "delta_decreasing"}),
                 ordered_json::object(),
                 {}};
    const bool decreasing = strictly_decreasing(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const CollapseRow& r = rows[i];
        const bool step = i == 0 || r.delta < rows[i - 1].delta;
        s.table.add({r.eps, r.delta, r.pair_term, r.fibre_term, r.section_term, r.projection_gap, r.section_relative, step});
    }
    if (rows.size() >= 2) {
        std::vector<double> le, ld;
        for (const CollapseRow& r : rows) le.push_back(std::log(r.eps)), ld.push_back(std::log(r.delta));
        const LineFit f = fit_line(le, ld);
        s.fits["log_delta_vs_log_eps"] = {{"slope", json_number(f.slope)}, {"r_squared", json_number(f.r_squared)}};
    }
    const json& a = c.acceptance.at("collapse");
    const double tol = a.at("section_tolerance").get<double>();
    s.fits["samples"] = c.collapse.samples;
    s.fits["seed"] = c.collapse.seed;
    s.checks.push_back({"collapse distortion strictly decreasing", decreasing, ""});
    s.checks.push_back({"zero-section distances match the base metric at the smallest eps",
                        !rows.empty() && rows.back().section_relative <= tol,
                        rows.empty() ? "" : "relative error " + scan_detail::sci(rows.back().section_relative)});
    return s;
}

inline ScanResult run_scan(const std::string& kind, const RunConfig& c) {
    if (kind == "ov") return scan_ov(c);
    if (kind == "glue") return scan_glue(c);
    if (kind == "curvature") return scan_curvature(c);
    if (kind == "diameter") return scan_diameter(c);
    if (kind == "collapse") return scan_collapse(c);
    throw ConfigError("unknown scan kind '" + kind + "' (expected ov, glue, curvature, diameter or collapse)");
}

inline ordered_json scan_summary(const ScanResult& s, const RunConfig& c) {
    ordered_json j;
    j["report"] = "scan";
    j["version"] = kReportVersion;
    j["kind"] = s.kind;
    j["seed"] = c.seed;
    j["epsilons"] = c.epsilons;
    j["rows"] = s.table.size();
    j["columns"] = s.table.header();
    j["fits"] = s.fits;
    ordered_json checks = ordered_json::array();
    for (const InvariantCheck& ch : s.checks)
        checks.push_back({{"invariant", ch.invariant}, {"passed", ch.passed}, {"detail", ch.detail}});
    j["checks"] = checks;
    j["passed"] = s.passed();
    return j;
}

}  // namespace hkc
