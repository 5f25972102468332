#include "mhrn/config.hpp"
#include "mhrn/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <vector>

namespace mhrn {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(int line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v, int line, const std::string& key) {
    const char* s = v.c_str();
    char* end = nullptr;
    double x = std::strtod(s, &end);
    if (end != s + v.size() || v.empty()) bad(line, key + ": expected a number, got '" + v + "'");
    if (!std::isfinite(x)) bad(line, key + ": value must be finite");
    return x;
}

int parse_int(const std::string& v, int line, const std::string& key) {
    const char* s = v.c_str();
    char* end = nullptr;
    long x = std::strtol(s, &end, 10);
    if (end != s + v.size() || v.empty()) bad(line, key + ": expected an integer, got '" + v + "'");
    return static_cast<int>(x);
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad(line, key + ": expected true/false, got '" + v + "'");
}

std::string fmt(double x) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

} // namespace

void validate_config(const RunConfig& c) {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (!(c.mass > 0.0)) fail("mass must be positive");
    if (!(std::abs(c.charge) < c.mass)) fail("charge: require |charge| < mass (extremal and naked cases rejected)");
    if (!(c.rstar_max > c.rstar_min)) fail("rstar_max must exceed rstar_min");
    if (c.n_points < 16) fail("n_points must be at least 16");
    if (c.n_theta < 8) fail("n_theta must be at least 8");
    if (c.ell < 0) fail("ell must be non-negative");
    if (std::abs(c.m) > c.ell) fail("m: require |m| <= ell");
    if (c.shape != "gaussian" && c.shape != "none") fail("shape must be gaussian or none");
    if (!(c.width > 0.0)) fail("width must be positive");
    if (c.direction != "symmetric" && c.direction != "outgoing" && c.direction != "ingoing")
        fail("direction must be symmetric, outgoing or ingoing");
    if (!(c.epsilon > 0.0)) fail("epsilon must be positive");
    if (!(c.sigma >= 1.0 && c.sigma <= 2.0)) fail("sigma must lie in [1, 2]");
    if (!(c.cfl > 0.0 && c.cfl <= 0.75)) fail("cfl must lie in (0, 0.75]");
    if (!(c.t_final >= 0.0)) fail("t_final must be non-negative");
    if (!(c.report_cadence > 0.0)) fail("report_cadence must be positive");
    if (!(c.snapshot_cadence > 0.0)) fail("snapshot_cadence must be positive");
    double ratio = c.report_cadence / c.snapshot_cadence;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || ratio < 1.0 - 1e-9)
        fail("snapshot_cadence must divide report_cadence");
    if (c.boundary != "frozen" && c.boundary != "sommerfeld")
        fail("boundary must be frozen or sommerfeld");
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string raw;
    std::set<std::string> seen;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        size_t hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos) bad(line, "expected key = value, got '" + trim(raw) + "'");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty()) bad(line, "empty key");
        if (!seen.insert(key).second) bad(line, "duplicate key '" + key + "'");

        if (key == "mass") c.mass = parse_double(val, line, key);
        else if (key == "charge") c.charge = parse_double(val, line, key);
        else if (key == "rstar_min") c.rstar_min = parse_double(val, line, key);
        else if (key == "rstar_max") c.rstar_max = parse_double(val, line, key);
        else if (key == "n_points") c.n_points = parse_int(val, line, key);
        else if (key == "n_theta") c.n_theta = parse_int(val, line, key);
        else if (key == "m") c.m = parse_int(val, line, key);
        else if (key == "ell") c.ell = parse_int(val, line, key);
        else if (key == "shape") c.shape = val;
        else if (key == "center") c.center = parse_double(val, line, key);
        else if (key == "width") c.width = parse_double(val, line, key);
        else if (key == "amplitude") c.amplitude = parse_double(val, line, key);
        else if (key == "spin_amplitude") c.spin_amplitude = parse_double(val, line, key);
        else if (key == "direction") c.direction = val;
        else if (key == "constraint_solved") c.constraint_solved = parse_bool(val, line, key);
        else if (key == "q_A") c.q_A = parse_double(val, line, key);
        else if (key == "epsilon") c.epsilon = parse_double(val, line, key);
        else if (key == "sigma") c.sigma = parse_double(val, line, key);
        else if (key == "cfl") c.cfl = parse_double(val, line, key);
        else if (key == "t_final") c.t_final = parse_double(val, line, key);
        else if (key == "report_cadence") c.report_cadence = parse_double(val, line, key);
        else if (key == "snapshot_cadence") c.snapshot_cadence = parse_double(val, line, key);
        else if (key == "boundary") c.boundary = val;
        else if (key == "csv_path") c.csv_path = val;
        else if (key == "json_path") c.json_path = val;
        else bad(line, "unknown key '" + key + "'");
    }
    validate_config(c);
    return c;
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    out << "mass = " << fmt(c.mass) << "\n";
    out << "charge = " << fmt(c.charge) << "\n";
    out << "rstar_min = " << fmt(c.rstar_min) << "\n";
    out << "rstar_max = " << fmt(c.rstar_max) << "\n";
    out << "n_points = " << c.n_points << "\n";
    out << "n_theta = " << c.n_theta << "\n";
    out << "m = " << c.m << "\n";
    out << "ell = " << c.ell << "\n";
    out << "shape = " << c.shape << "\n";
    out << "center = " << fmt(c.center) << "\n";
    out << "width = " << fmt(c.width) << "\n";
    out << "amplitude = " << fmt(c.amplitude) << "\n";
    out << "spin_amplitude = " << fmt(c.spin_amplitude) << "\n";
    out << "direction = " << c.direction << "\n";
    out << "constraint_solved = " << (c.constraint_solved ? "true" : "false") << "\n";
    out << "q_A = " << fmt(c.q_A) << "\n";
    out << "epsilon = " << fmt(c.epsilon) << "\n";
    out << "sigma = " << fmt(c.sigma) << "\n";
    out << "cfl = " << fmt(c.cfl) << "\n";
    out << "t_final = " << fmt(c.t_final) << "\n";
    out << "report_cadence = " << fmt(c.report_cadence) << "\n";
    out << "snapshot_cadence = " << fmt(c.snapshot_cadence) << "\n";
    out << "boundary = " << c.boundary << "\n";
    out << "csv_path = " << c.csv_path << "\n";
    out << "json_path = " << c.json_path << "\n";
    return out.str();
}

} // namespace mhrn
