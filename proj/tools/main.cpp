#include "mhrn/audit.hpp"
#include "mhrn/config.hpp"
#include "mhrn/diagnostics.hpp"
#include "mhrn/error.hpp"
#include "mhrn/evolution.hpp"
#include "mhrn/fields.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mhrn;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// relative / default paths land in MHRN_OUTPUT_DIR when that is set
fs::path resolve_output(const std::string& configured, const char* fallback) {
    fs::path p = configured.empty() ? fs::path(fallback) : fs::path(configured);
    if (p.is_relative())
        if (const char* dir = std::getenv("MHRN_OUTPUT_DIR"); dir && *dir)
            p = fs::path(dir) / p;
    return p;
}

void write_text(const fs::path& p, const std::string& text, bool force) {
    if (!force && fs::exists(p))
        throw ConfigError("refusing to overwrite " + p.string() + " (pass --force)");
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + p.string() + " for writing");
    f << text;
    f.flush();
    if (!f) throw ConfigError("short write to " + p.string());
}

// every RunConfig key doubles as a --kebab-case flag; flags beat file values
// only when actually given, so the option set and the applied overrides are
// tracked together
struct ConfigArgs {
    std::string config_file;
    RunConfig flags;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> appliers;

    void attach(CLI::App& sub) {
        sub.fallthrough(); // global --threads / --force may follow the subcommand
        sub.add_option("config", config_file, "flat key = value config file");
        auto opt = [&](const char* name, auto RunConfig::*field, const char* desc) {
            CLI::Option* o = sub.add_option(name, flags.*field, desc);
            appliers.emplace_back(o, [this, field](RunConfig& c) { c.*field = flags.*field; });
        };
        opt("--mass", &RunConfig::mass, "background mass M");
        opt("--charge", &RunConfig::charge, "background charge Q, |Q| < M");
        opt("--rstar-min", &RunConfig::rstar_min, "left edge of the tortoise-coordinate domain");
        opt("--rstar-max", &RunConfig::rstar_max, "right edge of the tortoise-coordinate domain");
        opt("--n-points", &RunConfig::n_points, "radial grid nodes");
        opt("--n-theta", &RunConfig::n_theta, "polar grid nodes (coupled path)");
        opt("--m", &RunConfig::m, "azimuthal mode number");
        opt("--ell", &RunConfig::ell, "spherical-harmonic index (mode path)");
        opt("--shape", &RunConfig::shape, "initial data shape: gaussian | none");
        opt("--center", &RunConfig::center, "pulse center in r*");
        opt("--width", &RunConfig::width, "pulse width in r*");
        opt("--amplitude", &RunConfig::amplitude, "scalar-sector amplitude");
        opt("--spin-amplitude", &RunConfig::spin_amplitude,
            "Maxwell perturbation on top of the Coulomb point");
        opt("--direction", &RunConfig::direction,
            "pulse direction: symmetric | outgoing | ingoing");
        opt("--constraint-solved", &RunConfig::constraint_solved,
            "solve the radial constraint for the middle spin scalar");
        opt("--q-a", &RunConfig::q_A, "gauge background charge");
        opt("--epsilon", &RunConfig::epsilon, "multiplier scale");
        opt("--sigma", &RunConfig::sigma, "multiplier decay exponent");
        opt("--cfl", &RunConfig::cfl, "time step as a fraction of the grid limit");
        opt("--t-final", &RunConfig::t_final, "evolution end time");
        opt("--report-cadence", &RunConfig::report_cadence, "CSV row spacing in time");
        opt("--snapshot-cadence", &RunConfig::snapshot_cadence, "identity-sample spacing");
        opt("--boundary", &RunConfig::boundary, "mode-path boundary: frozen | sommerfeld");
        opt("--csv-path", &RunConfig::csv_path, "report CSV output path");
        opt("--json-path", &RunConfig::json_path, "audit JSON output path");
    }

    RunConfig resolve() const {
        RunConfig c;
        if (!config_file.empty()) c = parse_config(read_file(config_file));
        for (const auto& [o, apply] : appliers)
            if (o->count() > 0) apply(c);
        validate_config(c);
        return c;
    }
};

int cmd_run(const ConfigArgs& args, bool coupled, bool force) {
    const RunConfig c = args.resolve();
    const RunHistory h = coupled ? evolve_coupled(c) : evolve_mode(c);
    const fs::path path = resolve_output(c.csv_path, coupled ? "run_coupled.csv" : "run_mode.csv");
    write_text(path, format_reports_csv(h.reports), force);
    const EnergyReport& last = h.reports.back();
    std::cout << "wrote " << path.string() << " (" << h.reports.size() << " reports to t = "
              << last.time << ")\n"
              << "E(0) = " << h.initial_energy << "  E(end) = " << last.E << "\n";
    return 0;
}

int cmd_audit(const ConfigArgs& args, const std::string& history_path, bool coupled, bool force) {
    const RunConfig c = args.resolve();
    RunHistory h;
    if (!history_path.empty()) {
        // stored series: reconstruct what the CSV carries, leave the rest zero
        h.reports = parse_reports_csv(read_file(history_path));
        h.multiplier = MultiplierParams::make(c.epsilon, c.sigma);
        h.ell = c.ell;
        h.m = c.m;
        h.initial_energy = h.reports.front().E;
        h.initial_conformal = h.reports.front().E_C;
    } else {
        h = coupled ? evolve_coupled(c) : evolve_mode(c);
        if (!c.csv_path.empty())
            write_text(resolve_output(c.csv_path, "audit.csv"), format_reports_csv(h.reports),
                       force);
    }
    const std::vector<AuditReport> reports = run_standard_audits(h);
    const fs::path path = resolve_output(c.json_path, "audit.json");
    write_text(path, audit_reports_to_json(reports), force);
    bool all_pass = true;
    for (const AuditReport& r : reports) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.id
                  << "  worst_ratio = " << r.worst_ratio << "\n";
        all_pass = all_pass && r.pass;
    }
    std::cout << "wrote " << path.string() << "\n";
    return all_pass ? 0 : 1;
}

int cmd_converge(const ConfigArgs& args, bool force) {
    const RunConfig c = args.resolve();
    const AuditReport r = convergence_study(c);
    const fs::path path = resolve_output(c.json_path, "converge.json");
    write_text(path, audit_reports_to_json({r}), force);
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.id;
    if (r.constants.count("p")) std::cout << "  order = " << r.constants.at("p");
    std::cout << "\nwrote " << path.string() << "\n";
    return r.pass ? 0 : 1;
}

int cmd_coulomb(const ConfigArgs& args, double tolerance) {
    RunConfig c = args.resolve();
    // pin the exact fixed point regardless of configured initial data
    c.shape = "none";
    c.amplitude = 0.0;
    c.spin_amplitude = 0.0;
    const CoupledState s = evolve_coupled_final(c);
    const cplx target(c.q_A, 0.0);
    double drift = 0.0, spin_drift = 0.0;
    for (const cplx& v : s.spin.phi_0.v) drift = std::max(drift, std::abs(v - target));
    for (const cplx& v : s.spin.phi_plus1.v) spin_drift = std::max(spin_drift, std::abs(v));
    for (const cplx& v : s.spin.phi_minus1.v) spin_drift = std::max(spin_drift, std::abs(v));
    std::cout << "max |Phi_0 - q_A| = " << drift << " at t = " << s.time << "\n"
              << "max |Phi_+1|, |Phi_-1| = " << spin_drift << "\n";
    const bool pass = drift <= tolerance && spin_drift <= tolerance;
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " tolerance " << tolerance << "\n";
    return pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maxwell-Higgs evolution and audit harness on a Reissner-Nordstrom exterior"};
    app.require_subcommand(1);
    int threads = 0;
    bool force = false;
    app.add_option("--threads", threads, "worker threads (1 = bit-exact; default: hardware)");
    app.add_flag("--force", force, "overwrite existing output files");

    ConfigArgs run_mode_args, run_coupled_args, audit_args, converge_args, coulomb_args;
    CLI::App* p_run_mode =
        app.add_subcommand("run-mode", "evolve one (ell, m) mode and write the report CSV");
    run_mode_args.attach(*p_run_mode);
    CLI::App* p_run_coupled =
        app.add_subcommand("run-coupled", "evolve the coupled system and write the report CSV");
    run_coupled_args.attach(*p_run_coupled);

    std::string history_path;
    bool audit_coupled = false;
    CLI::App* p_audit =
        app.add_subcommand("audit", "run the audit battery and write the JSON report");
    audit_args.attach(*p_audit);
    p_audit->add_option("--history", history_path, "audit a stored report CSV instead of running");
    p_audit->add_flag("--coupled", audit_coupled, "audit a coupled run (default: mode)");

    CLI::App* p_converge =
        app.add_subcommand("converge", "three-resolution order study of the mode evolution");
    converge_args.attach(*p_converge);

    double coulomb_tol = 1e-12;
    CLI::App* p_coulomb =
        app.add_subcommand("coulomb-check", "hold the Coulomb fixed point and report the drift");
    coulomb_args.attach(*p_coulomb);
    p_coulomb->add_option("--tolerance", coulomb_tol, "pass threshold for the drift");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    try {
        if (p_run_mode->parsed()) return cmd_run(run_mode_args, false, force);
        if (p_run_coupled->parsed()) return cmd_run(run_coupled_args, true, force);
        if (p_audit->parsed()) return cmd_audit(audit_args, history_path, audit_coupled, force);
        if (p_converge->parsed()) return cmd_converge(converge_args, force);
        if (p_coulomb->parsed()) return cmd_coulomb(coulomb_args, coulomb_tol);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical fault: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
