#pragma once

#include <string>

namespace mhrn {

// flat key = value run configuration; every field has a CLI flag twin
struct RunConfig {
    // background
    double mass = 1.0;
    double charge = 0.5;
    // grid
    double rstar_min = -100.0;
    double rstar_max = 100.0;
    int n_points = 2048;
    int n_theta = 32;
    int m = 0;
    // mode (1D path)
    int ell = 2;
    // initial data
    std::string shape = "gaussian"; // gaussian | none
    double center = 10.0;
    double width = 12.0;
    double amplitude = 1.0;       // scalar-sector amplitude
    double spin_amplitude = 0.0;  // Maxwell-sector perturbation on top of the Coulomb point
    std::string direction = "symmetric"; // symmetric | outgoing | ingoing
    bool constraint_solved = true;
    // gauge background
    double q_A = 0.1;
    // multiplier
    double epsilon = 1.0;
    double sigma = 1.0;
    // stepping
    double cfl = 0.25;
    double t_final = 50.0;
    double report_cadence = 1.0;
    double snapshot_cadence = 0.25;
    std::string boundary = "frozen"; // frozen | sommerfeld
    // outputs
    std::string csv_path;
    std::string json_path;
};

// parse the flat key = value format ('#' comments, blank lines ignored);
// unknown keys, bad types, duplicates and range violations all throw
// ConfigError naming the line
RunConfig parse_config(const std::string& text);

// full-precision round-trip serialization (parse(serialize(c)) == c)
std::string serialize_config(const RunConfig& c);

// range validation shared by parser and CLI overrides
void validate_config(const RunConfig& c);

} // namespace mhrn
