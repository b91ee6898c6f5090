// hkc: verify the acceptance suite, run parameter scans, evaluate point quantities.
//
// Exit codes: 0 pass, 1 invariant failure, 2 configuration or usage error.

#include "hkc/acceptance.hpp"
#include "hkc/config.hpp"
#include "hkc/report.hpp"
#include "hkc/scans.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

namespace {

using hkc::cplx;

constexpr int kPass = 0, kInvariantFailure = 1, kConfigError = 2;

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string epsilons;
    std::string kind;
    std::string quantity;
    std::string y = "0.5,0";
    std::string x = "0,0";
    double u = 0.0;
    double eps = 0.0;
    std::string model = "ov";
};

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw hkc::ConfigError(what + ": '" + item + "' is not a number");
        }
    }
    if (out.empty()) throw hkc::ConfigError(what + ": empty list");
    return out;
}

cplx parse_complex(const std::string& s, const std::string& what) {
    const auto v = parse_list(s, what);
    if (v.size() != 2) throw hkc::ConfigError(what + ": expected re,im");
    return {v[0], v[1]};
}

hkc::RunConfig load(const Options& o) {
    hkc::json user = o.config.empty() ? hkc::json::object() : hkc::load_json_file(o.config);
    if (!user.is_object()) throw hkc::ConfigError(o.config + ": top level must be an object");
    if (o.seed_set) user["seed"] = o.seed;
    if (!o.epsilons.empty()) user["epsilons"] = parse_list(o.epsilons, "--epsilons");
    return hkc::make_run_config(user);
}

std::filesystem::path out_dir(const Options& o, const hkc::RunConfig& c) { return o.out.empty() ? c.out_dir : o.out; }

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_verify(const Options& o) {
    const hkc::RunConfig c = load(o);
    hkc::check_schedule_positivity(c);
    const auto t0 = std::chrono::steady_clock::now();
    const hkc::AcceptanceReport rep = hkc::run_acceptance(c, &std::cout);
    const auto dir = out_dir(o, c);
    hkc::write_text_file(dir / "verify.csv", hkc::acceptance_table(rep).str());
    hkc::write_json_file(dir / "verify.json", hkc::acceptance_summary(rep, c));
    std::cerr << "verify: " << elapsed(t0) << " s, reports in " << dir.string() << "\n";
    return rep.ok() ? kPass : kInvariantFailure;
}

int cmd_scan(const Options& o) {
    const hkc::RunConfig c = load(o);
    const auto& kinds = hkc::scan_kinds();
    if (std::find(kinds.begin(), kinds.end(), o.kind) == kinds.end())
        throw hkc::ConfigError("unknown scan kind '" + o.kind + "' (expected ov, glue, curvature, diameter or collapse)");
    hkc::check_schedule_positivity(c);
    const auto t0 = std::chrono::steady_clock::now();
    const hkc::ScanResult s = hkc::run_scan(o.kind, c);
    const auto dir = out_dir(o, c);
    hkc::write_text_file(dir / ("scan_" + o.kind + ".csv"), s.table.str());
    hkc::write_json_file(dir / ("scan_" + o.kind + ".json"), hkc::scan_summary(s, c));
    for (const auto& ch : s.checks)
        std::cout << (ch.passed ? "PASS " : "FAIL ") << ch.invariant << (ch.detail.empty() ? "" : ": " + ch.detail) << "\n";
    std::cerr << "scan " << o.kind << ": " << elapsed(t0) << " s, reports in " << dir.string() << "\n";
    return s.passed() ? kPass : kInvariantFailure;
}

// Constant potential: flat Gibbons-Hawking metric.
struct ConstantPotential {
    template <class T>
    T operator()(const std::array<T, 3>&) const {
        return T(1.0);
    }
};

int cmd_eval(const Options& o) {
    const hkc::RunConfig c = load(o);
    const double eps = o.eps > 0.0 ? o.eps : c.epsilons.front();
    const hkc::OVConfig ov = c.ov(eps);
    const cplx y = parse_complex(o.y, "--y"), x = parse_complex(o.x, "--x");
    hkc::CsvTable t({"quantity", "value", "method"});
    const std::string& q = o.quantity;
    if (q == "v0") {
        const double lat = hkc::v0_lattice(o.u, y, eps), bes = hkc::v0_bessel(o.u, y, eps);
        t.add({std::string("v0_lattice"), lat, std::string("paired lattice sum with tail correction")});
        t.add({std::string("v0_bessel"), bes, std::string("Fourier-Bessel expansion")});
        t.add({std::string("v0_difference"), lat - bes, std::string("lattice minus Bessel")});
        const bool lattice_side = std::abs(y) < eps / std::numbers::pi;
        t.add({std::string("v0"), lattice_side ? lat : bes,
               std::string(lattice_side ? "lattice (|y| < eps/pi)" : "Bessel (|y| >= eps/pi)")});
    } else if (q == "ov-value") {
        t.add({std::string("V"), hkc::ov_value(o.u, y, ov), std::string("V0 + f/eps")});
    } else if (q == "frame") {
        const hkc::Point p{x, y};
        const hkc::FrameMetric fm = hkc::canonical_sample(hkc::OVPrimitive(ov), hkc::PeriodSeries{}, p).fm;
        const hkc::FrameMetric sf = hkc::semiflat_data(hkc::SemiFlatMetric{hkc::ov_period_pair(ov), eps}, p);
        t.add({std::string("W"), fm.W, std::string("Ooguri-Vafa, canonical coordinates")});
        t.add({std::string("b_re"), fm.b.real(), std::string("Ooguri-Vafa, canonical coordinates")});
        t.add({std::string("b_im"), fm.b.imag(), std::string("Ooguri-Vafa, canonical coordinates")});
        t.add({std::string("W_semiflat"), sf.W, std::string("semi-flat closed form")});
        t.add({std::string("b_semiflat_re"), sf.b.real(), std::string("semi-flat closed form")});
        t.add({std::string("b_semiflat_im"), sf.b.imag(), std::string("semi-flat closed form")});
    } else if (q == "f-epsilon") {
        const hkc::GluedMetric gm = hkc::GluedMetric(ov, c.annulus).normalized();
        static const char* names[] = {"Ooguri-Vafa region (exact)", "annulus", "semi-flat region (exact)"};
        t.add({std::string("ricci_defect"), gm.ricci_defect(hkc::Point{x, y}),
               std::string(names[static_cast<int>(gm.region(y))])});
    } else if (q == "curvature-norm") {
        const hkc::Vec3 at{y.real(), y.imag(), o.u};
        double v = 0.0;
        if (o.model == "ov") v = hkc::curvature_norms(hkc::OVPotential{ov}, at).compact;
        else if (o.model == "taub-nut") v = hkc::curvature_norms(hkc::TaubNutPotential{1.0}, at).compact;
        else if (o.model == "constant") v = hkc::curvature_norms(ConstantPotential{}, at).compact;
        else throw hkc::ConfigError("--model: expected ov, taub-nut or constant");
        t.add({std::string("curvature_norm"), v, "Gibbons-Hawking compact formula, model " + o.model});
    } else if (q == "fibre-diameter") {
        t.add({std::string("fibre_diameter"), hkc::fibre_diameter(y, ov), std::string("half loop plus shortest orbit")});
    } else {
        throw hkc::ConfigError("unknown quantity '" + q + "' (expected v0, ov-value, frame, f-epsilon, curvature-norm or fibre-diameter)");
    }
    std::cout << t.str();
    return kPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperkaehler metrics on elliptic fibrations: verification, scans and point evaluation"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "JSON config merged over the bundled default");
    app.add_option("--out", o.out, "output directory (default: output.dir of the config)");
    app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { o.seed = s, o.seed_set = true; }, "random seed");
    app.add_option("--threads", o.threads, "maximum worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--epsilons", o.epsilons, "eps schedule as a comma-separated, strictly decreasing list");

    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    auto* scan = app.add_subcommand("scan", "run a parameter scan and write CSV/JSON reports");
    scan->add_option("kind", o.kind, "ov | glue | curvature | diameter | collapse")->required();
    auto* eval = app.add_subcommand("eval", "evaluate a quantity at a point");
    eval->add_option("quantity", o.quantity, "v0 | ov-value | frame | f-epsilon | curvature-norm | fibre-diameter")
        ->required();
    eval->add_option("--y", o.y, "base point re,im");
    eval->add_option("--x", o.x, "fibre point re,im (canonical coordinates)");
    eval->add_option("--u", o.u, "Gibbons-Hawking height");
    eval->add_option("--eps", o.eps, "fibre period (default: first eps of the schedule)");
    eval->add_option("--model", o.model, "curvature-norm potential: ov | taub-nut | constant");
    for (auto* sub : {verify, scan, eval}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kConfigError;
    }
    hkc::set_thread_count(o.threads);
    try {
        if (*verify) return cmd_verify(o);
        if (*scan) return cmd_scan(o);
        return cmd_eval(o);
    } catch (const hkc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const hkc::PositivityError& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const hkc::OutputError& e) {
        std::cerr << "output error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return kConfigError;
}
