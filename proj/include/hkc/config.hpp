#pragma once

// Run configuration. A user document is merged over the bundled default, so every
// physical default lives in config/default.json; keys absent from the default are
// rejected, and every error names the offending field.

#include "hkc/diagnostics.hpp"
#include "hkc/errors.hpp"
#include "hkc/gluing.hpp"
#include "hkc/ooguri_vafa.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef HKC_DEFAULT_CONFIG
#define HKC_DEFAULT_CONFIG "config/default.json"
#endif

namespace hkc {

using json = nlohmann::json;

struct FibrationConfig {
    std::vector<cplx> singular_points;
    std::vector<cplx> h_coeffs;
    int n_fold = 0;
    double radius = 0.0;
    int lattice_terms = 0;
};

struct FiniteDifferenceConfig {
    double h = 0.0;
    std::vector<double> order_steps;
};

struct DiameterConfig {
    cplx smooth_fibre;
    double total_radius = 0.0;
};

struct RunConfig {
    FibrationConfig fibration;
    std::vector<double> epsilons;
    std::uint64_t seed = 0;
    std::string out_dir;
    GlueConfig annulus;
    GlueScanGrid grid;
    FiniteDifferenceConfig fd;
    CurvatureGrid curvature;
    DiameterConfig diameter;
    CollapseConfig collapse;
    json acceptance;  // per-criterion parameters, read by the acceptance suite
    json document;    // the merged document, echoed into reports

    OVConfig ov(double eps) const {
        OVConfig c;
        c.eps = eps;
        c.h_coeffs = fibration.h_coeffs;
        c.radius = fibration.radius;
        c.n_fold = fibration.n_fold;
        c.lattice_terms = fibration.lattice_terms;
        return c;
    }
};

namespace config_detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') ++line, col = 1;
        else ++col;
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline json parse_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // e.byte is the 1-based offset of the offending character.
        const std::string what = e.what();
        const auto col = what.find("column");
        const auto colon = col == std::string::npos ? std::string::npos : what.find(": ", col);
        const std::string reason = colon == std::string::npos ? what : what.substr(colon + 2);
        throw ConfigError(source + ": parse error at " + line_col(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + reason);
    }
}

inline std::string type_name(const json& j) {
    if (j.is_number()) return "number";
    return j.type_name();
}

// Every key of `doc` must exist in `schema` with a compatible JSON type.
inline void check_shape(const json& doc, const json& schema, const std::string& path) {
    if (schema.is_object()) {
        if (!doc.is_object()) throw ConfigError(path + ": expected an object");
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            if (!schema.contains(it.key())) throw ConfigError(path + "." + it.key() + ": unknown key");
            check_shape(it.value(), schema.at(it.key()), path + "." + it.key());
        }
        return;
    }
    if (type_name(doc) != type_name(schema))
        throw ConfigError(path + ": expected " + type_name(schema) + ", got " + type_name(doc));
}

class Reader {
public:
    explicit Reader(const json& root) : root_(root) {}

    const json& node(const std::string& path) const {
        const json* j = &root_;
        std::string::size_type start = 0;
        while (start <= path.size()) {
            const auto dot = path.find('.', start);
            const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!j->is_object() || !j->contains(key)) throw ConfigError(path + ": missing");
            j = &j->at(key);
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        return *j;
    }

    double number(const std::string& path) const {
        const json& j = node(path);
        if (!j.is_number()) throw ConfigError(path + ": expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v)) throw ConfigError(path + ": must be finite");
        return v;
    }
    double positive(const std::string& path) const {
        const double v = number(path);
        if (!(v > 0.0)) throw ConfigError(path + ": must be positive");
        return v;
    }
    int integer(const std::string& path, int min_value) const {
        const json& j = node(path);
        if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
        const auto v = j.get<long long>();
        if (v < min_value || v > 1'000'000'000) throw ConfigError(path + ": must be at least " + std::to_string(min_value));
        return static_cast<int>(v);
    }
    std::vector<double> numbers(const std::string& path) const {
        const json& j = node(path);
        if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]: expected a number");
            out.push_back(j[i].get<double>());
        }
        return out;
    }
    cplx complex_number(const json& j, const std::string& path) const {
        if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
            throw ConfigError(path + ": expected [re, im]");
        return {j[0].get<double>(), j[1].get<double>()};
    }
    cplx complex_at(const std::string& path) const { return complex_number(node(path), path); }
    std::vector<cplx> complexes(const std::string& path) const {
        const json& j = node(path);
        if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty array of [re, im] pairs");
        std::vector<cplx> out;
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(complex_number(j[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

private:
    const json& root_;
};

inline void require_decreasing(const std::vector<double>& s, const std::string& path) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0)) throw ConfigError(path + ": entries must be positive");
        if (i > 0 && !(s[i] < s[i - 1])) throw ConfigError(path + ": schedule must be strictly decreasing");
    }
}

// The base density Im(conj tau1 tau2) = -log|y| / 2 pi + Re h(y) is harmonic off the
// singular point and tends to +inf there, so its minimum over the patch is on the
// boundary circle.
inline void check_base_density(const std::vector<cplx>& h, double radius) {
    OVConfig ov;
    ov.h_coeffs = h;
    const PeriodPair p = ov_period_pair(ov);
    for (int k = 0; k < 256; ++k) {
        const cplx y = std::polar(radius, 2.0 * std::numbers::pi * k / 256);
        const double d = (std::conj(p.tau1(y)) * p.tau2(y)).imag();
        if (!(d > 0.0)) {
            std::ostringstream os;
            os << "fibration: invariant Im(conj(tau1) tau2) > 0 fails: value " << d << " at y = (" << y.real() << ", "
               << y.imag() << ")";
            throw ConfigError(os.str());
        }
    }
}

}  // namespace config_detail

inline json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return config_detail::parse_text(ss.str(), path);
}

inline json default_config_document() { return load_json_file(HKC_DEFAULT_CONFIG); }

// Build a RunConfig from a document merged over the default.
inline RunConfig make_run_config(const json& user, const json& defaults = default_config_document()) {
    config_detail::check_shape(user, defaults, "config");
    json doc = defaults;
    doc.merge_patch(user);
    const config_detail::Reader r(doc);
    RunConfig c;
    c.document = doc;

    c.fibration.singular_points = r.complexes("fibration.singular_points");
    c.fibration.h_coeffs = r.complexes("fibration.h_coeffs");
    c.fibration.n_fold = r.integer("fibration.n_fold", 1);
    c.fibration.radius = r.number("fibration.radius");
    c.fibration.lattice_terms = r.integer("fibration.lattice_terms", 1);
    if (!(c.fibration.radius > 0.0 && c.fibration.radius < 1.0)) throw ConfigError("fibration.radius: must lie in (0, 1)");
    const auto& sp = c.fibration.singular_points;
    for (std::size_t i = 0; i < sp.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(sp[i] - sp[j]) < 2.0 * c.fibration.radius)
                throw ConfigError("fibration.singular_points: patches of radius " + std::to_string(c.fibration.radius) +
                                  " around singular points must be disjoint");
    config_detail::check_base_density(c.fibration.h_coeffs, c.fibration.radius);

    c.epsilons = r.numbers("epsilons");
    config_detail::require_decreasing(c.epsilons, "epsilons");
    c.seed = static_cast<std::uint64_t>(r.integer("seed", 0));
    if (!r.node("output.dir").is_string()) throw ConfigError("output.dir: expected a string");
    c.out_dir = r.node("output.dir").get<std::string>();

    c.annulus.r1 = r.number("annulus.r1");
    c.annulus.r2 = r.number("annulus.r2");
    c.annulus.n_r = r.integer("annulus.n_r", 4);
    c.annulus.n_theta = r.integer("annulus.n_theta", 1);
    c.annulus.fibre_modes = r.integer("annulus.fibre_modes", 1);
    c.annulus.fibre_samples = r.integer("annulus.fibre_samples", 4);
    try {
        c.annulus.validate(c.fibration.radius);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("annulus: ") + e.what());
    }

    c.grid.n_grid = r.integer("grid.n", 2);
    c.grid.n_u = r.integer("grid.n_u", 1);
    c.fd.h = r.positive("finite_difference.h");
    c.fd.order_steps = r.numbers("finite_difference.order_steps");
    config_detail::require_decreasing(c.fd.order_steps, "finite_difference.order_steps");
    if (c.fd.order_steps.size() < 2) throw ConfigError("finite_difference.order_steps: need at least two steps");

    c.curvature.n_s = r.integer("curvature.n_s", 1);
    c.curvature.n_inner = r.integer("curvature.n_inner", 1);
    c.curvature.n_outer = r.integer("curvature.n_outer", 1);
    c.curvature.n_theta = r.integer("curvature.n_theta", 1);
    c.curvature.a = r.positive("curvature.a");

    c.diameter.smooth_fibre = r.complex_at("diameter.smooth_fibre");
    c.diameter.total_radius = r.positive("diameter.total_radius");
    if (c.diameter.total_radius > c.fibration.radius) throw ConfigError("diameter.total_radius: exceeds the patch radius");

    c.collapse.samples = r.integer("collapse.samples", 1);
    c.collapse.fibre_samples = r.integer("collapse.fibre_samples", 1);
    c.collapse.base_grid = r.integer("collapse.base_grid", 4);
    if (c.collapse.base_grid % 2 != 0) throw ConfigError("collapse.base_grid: must be even");
    c.collapse.fibre_u = r.integer("collapse.fibre_u", 2);
    if (c.collapse.fibre_u % 2 != 0) throw ConfigError("collapse.fibre_u: must be even");
    c.collapse.fibre_x = r.integer("collapse.fibre_x", 2);
    c.collapse.lower_u = r.integer("collapse.lower_u", 1);
    c.collapse.near_radius = r.number("collapse.near_radius");
    c.collapse.far_distance = r.number("collapse.far_distance");
    if (c.collapse.samples < c.collapse.fibre_samples) throw ConfigError("collapse.samples: fewer than fibre_samples");
    c.collapse.seed = c.seed;

    c.acceptance = doc.at("acceptance");
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    return make_run_config(path.empty() ? json::object() : load_json_file(path));
}

// Positivity of the OV potential for every eps of the schedule; the error carries the
// boundary minimum.
inline void check_schedule_positivity(const RunConfig& c) {
    for (double e : c.epsilons) check_positivity(c.ov(e));
}

}  // namespace hkc
