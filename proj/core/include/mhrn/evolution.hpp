#pragma once
#include "mhrn/config.hpp"
#include "mhrn/diagnostics.hpp"
#include "mhrn/fields.hpp"
#include "mhrn/geometry.hpp"

#include <vector>

namespace mhrn {

enum class Boundary { frozen, sommerfeld };

// single azimuthal/polar mode reduced to the radial line
struct ModeState {
    CVec u, u_t;
    int ell = 0;
    double time = 0.0;
};

struct ModeDeriv {
    CVec u, u_t;
};

struct ModeWorkspace {
    ModeDeriv k1, k2, k3, k4;
    ModeState stage;
    explicit ModeWorkspace(int n);
};

// du = u_t, du_t = d1^2 u - l(l+1) V u; the boundary condition is part of
// the right-hand side (frozen: zero at the two one-sided nodes per end,
// sommerfeld: first-order outflow advection there)
void mode_rhs(const ModeState& s, const RadialGrid& rg, Boundary bc, ModeDeriv& out);

// full 2D state: Maxwell spin triple + charged scalar on a static gauge
// background. scalar_active is decided once from the initial data; a run
// that starts with a zero scalar keeps the Maxwell sector source-free.
struct CoupledState {
    SpinTriple spin;
    ScalarState scalar;
    double time = 0.0;
    bool scalar_active = false;
};

struct CoupledDeriv {
    SpinTriple spin;
    Field2D phi, pi;
};

struct CoupledWorkspace {
    CoupledDeriv k1, k2, k3, k4;
    CoupledState stage; // carries a copy of the gauge background
    Field2D dplus, dminus, a_plus, a_minus, b_plus, b_minus;
    explicit CoupledWorkspace(const CoupledState& proto);
};

//   d_t Phi_+1 = +d1 Phi_+1 + V M Phi_0    + i f B2 + i (f/sin) B3
//   d_t Phi_-1 = -d1 Phi_-1 + V Mbar Phi_0 + i f B2 + i (f/sin) B3
//   d_t Phi_0  = (Mbar Phi_+1 - M1 Phi_-1)/2 + i r^2 (B0 + B1)
//   d_t phi = pi, d_t pi = scalar wave operator
// with B_dir the scalar bilinear D_dir phi conj(phi) - phi conj(D_dir phi).
// Boundary rows are frozen (two per end).
void coupled_rhs(const CoupledState& s, const RadialGrid& rg, const AngularGrid& ag,
                 CoupledWorkspace& w, CoupledDeriv& out);
CoupledDeriv coupled_rhs(const CoupledState& s, const RadialGrid& rg, const AngularGrid& ag);

// L2 norm (radial Gregory x angular x 2 pi) of d1 Phi_0 - (Mbar Phi_+1 + M1 Phi_-1)/2
double constraint_residual(const CoupledState& s, const RadialGrid& rg, const AngularGrid& ag);

// largest stable step scaled by the cfl factor: mode path cfl*h, coupled
// path cfl*min(h, h_theta/sqrt(max V))
double cfl_dt(const RadialGrid& rg, double cfl);
double cfl_dt(const RadialGrid& rg, const AngularGrid& ag, double cfl);

// classical RK4; refuses steps beyond 0.75x the grid limit
void step_rk4(ModeState& s, double dt, const RadialGrid& rg, Boundary bc, ModeWorkspace& w);
void step_rk4(CoupledState& s, double dt, const RadialGrid& rg, const AngularGrid& ag,
              CoupledWorkspace& w);

// cumulative antiderivative on a uniform grid, out[0] = 0; each interval
// integrates the quartic interpolant through the five nearest nodes
std::vector<double> cumulative_integral(const std::vector<double>& y, double h);
CVec cumulative_integral(const CVec& y, double h);

ModeState mode_initial_data(const RunConfig& c, const RadialGrid& rg);
// Coulomb point + optional scalar gaussian (amplitude, sin^|m| theta profile)
// + optional Maxwell perturbation (spin_amplitude, degree-ell shapes); with
// constraint_solved the middle component is rebuilt by radial integration of
// the constraint right-hand side
CoupledState coupled_initial_data(const RunConfig& c, const RadialGrid& rg, const AngularGrid& ag);

// full runs: build grids and data from the config, march to t_final, record
// an identity sample every snapshot_cadence and an energy report every
// report_cadence (t_final = 0 records the initial instant only)
RunHistory evolve_mode(const RunConfig& c);
RunHistory evolve_coupled(const RunConfig& c);

// same march as evolve_mode but returns the final field state instead of
// the recorded history (resolution studies compare states directly)
ModeState evolve_mode_final(const RunConfig& c);
CoupledState evolve_coupled_final(const RunConfig& c);

} // namespace mhrn
