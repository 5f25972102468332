#pragma once

#include "mhrn/angular.hpp"
#include "mhrn/fields.hpp"
#include "mhrn/geometry.hpp"

#include <string>
#include <vector>

namespace mhrn {

// ---------------------------------------------------------------- quadrature

// deterministic reduction independent of thread count
double pairwise_sum(const double* x, size_t n);

// 4th-order end-corrected trapezoid weights {3/8, 7/6, 23/24, 1, ...} * h;
// falls back to plain trapezoid below 8 nodes
std::vector<double> radial_weights(int n, double h);

double integrate_radial(const std::vector<double>& y, double h);
// inclusive node window [i0, i1]
double integrate_radial_window(const double* y, int i0, int i1, double h);

// composite Simpson over uniformly spaced samples (3/8 rule absorbs an odd
// tail); fewer than two intervals is refused
double integrate_time_samples(const std::vector<double>& y, double dt);

// ------------------------------------------------------- multiplier family

struct MultiplierParams {
    double epsilon = 1.0;
    double sigma = 1.0;
    static MultiplierParams make(double epsilon, double sigma); // validates ranges
};

// h(x) = int_0^x (1+(eps y)^2)^(-sigma) dy and derivatives; closed form for
// sigma = 1, adaptive quadrature otherwise
struct HJet {
    double h, d1, d2, d3;
};
HJet multiplier_h(double rstar, const MultiplierParams& p);

// C-infinity bump: 1 on [-1/2, 1/2], 0 outside (-3/4, 3/4)
struct MuJet {
    double mu, d1, d2, d3;
};
MuJet bump_mu(double tau);

// g(t, x) = (t/x) mu(x/t) h(x) with the removable x = 0 singularity handled
// by the Taylor expansion of h(x)/x; partials wanted by the identity checks
struct GJet {
    double g, gx, gxx, gxxx, gt, gtx;
};
GJet radial_g(double t, double rstar, const MultiplierParams& p);

// ------------------------------------------------------- reports / history

struct EnergyReport {
    double time = 0;
    double E = 0, E_C = 0, E_l = 0, E_gamma = 0;
    double constraint_l2 = 0;
    double linf_phi_loc = 0, linf_A_loc = 0;
    double h4_phi_loc = 0, h4_A_loc = 0;
    double l2_phi_loc = 0; // growth audits; not a CSV column
};

// slice reductions stored per snapshot so the exact-identity residuals are
// pure functions of the history
struct IdentitySample {
    double time = 0;
    double E = 0, E_C = 0, E_l = 0, E_gamma = 0;
    double morawetz_flux = 0; // int t V I |angular-gradient u|^2
    double morawetz_q = 0;    // source pairing of the conformal balance
    double egamma_rhs = 0;    // full right side of the radial-multiplier identity
};

struct RunHistory {
    std::vector<EnergyReport> reports;
    std::vector<IdentitySample> samples;
    MultiplierParams multiplier;
    int ell = 0, m = 0;
    double initial_energy = 0;      // E[u](0)
    double initial_conformal = 0;   // E_C(0)
    double initial_bilaplacian = 0; // E[(angular laplacian)^2 u](0)
};

// fixed schema: t,E,E_C,E_l,E_gamma,constraint_l2,linf_phi_loc,linf_A_loc,
// h4_phi_loc,h4_A_loc; shortest round-trip floats; strictly increasing t
std::string format_reports_csv(const std::vector<EnergyReport>& reports);

// inverse of format_reports_csv; malformed input throws ConfigError naming
// the offending line
std::vector<EnergyReport> parse_reports_csv(const std::string& text);

// --------------------------------------------------- mode-path diagnostics

// e = |u_t|^2 + |u'|^2 + l(l+1) V |u|^2
std::vector<double> mode_energy_density(const CVec& u, const CVec& u_t, int ell, const RadialGrid& rg);
double mode_total_energy(const CVec& u, const CVec& u_t, int ell, const RadialGrid& rg);
// e_C = (1/2)(t^2+x^2) e + 2 t x Re(u_t conj u') + e, E_C = (1/2) int e_C;
// pointwise non-negativity is asserted
double mode_conformal_energy(const CVec& u, const CVec& u_t, int ell, double t, const RadialGrid& rg);
// e-integral over {|x| <= max(3t/4, 1)}
double mode_local_energy(const CVec& u, const CVec& u_t, int ell, double t, const RadialGrid& rg);
// E_gamma = int Re[(g u' + (1/2) g_x u) conj u_t]; 0 before the t >= 1 regime
double mode_e_gamma(const CVec& u, const CVec& u_t, double t, const RadialGrid& rg, const MultiplierParams& p);

EnergyReport mode_report(const CVec& u, const CVec& u_t, int ell, double t, const RadialGrid& rg,
                         const MultiplierParams& p);
IdentitySample mode_identity_sample(const CVec& u, const CVec& u_t, const CVec* rho, int ell, double t,
                                    const RadialGrid& rg, const MultiplierParams& p);

// ------------------------------------------------- coupled-path diagnostics

// e adds the scalar's covariant-gradient terms; u is the middle spin scalar
// and u_t its evolution right side
Real2D coupled_energy_density(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                              const RadialGrid& rg, const AngularGrid& ag);
double coupled_total_energy(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                            const RadialGrid& rg, const AngularGrid& ag);
double coupled_conformal_energy(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                                double t, const RadialGrid& rg, const AngularGrid& ag);
double coupled_local_energy(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                            double t, const RadialGrid& rg, const AngularGrid& ag);

EnergyReport coupled_report(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                            double t, const RadialGrid& rg, const AngularGrid& ag, const MultiplierParams& p);
IdentitySample coupled_identity_sample(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                                       const Field2D* rho, double t, const RadialGrid& rg, const AngularGrid& ag,
                                       const MultiplierParams& p);

// --------------------------------------------------------- local norms

struct LocalNorms {
    double linf = 0, l2 = 0, h4 = 0;
};
// slice norms over the annulus {t/2 <= |x| <= 3t/4}; empty region gives zeros
LocalNorms mode_local_norms(const CVec& u, double t, const RadialGrid& rg);
LocalNorms field_local_norms(const Field2D& u, int m, double t, const RadialGrid& rg, const AngularGrid& ag);
// spacetime window [t1, t2] x annulus, assembled from the stored reports with
// measure dt dr* (angular measure already inside the slice norms)
struct WindowNorms {
    LocalNorms phi, A;
};
WindowNorms window_local_norms(const RunHistory& h, double t1, double t2);

// ----------------------------------------------------- identity residuals

// |E_C(t2) - E_C(t1) - int_{t1}^{t2} (flux + Q) dt|; t1, t2 must be snapshot
// times and enclose at least two snapshot intervals
double morawetz_balance_residual(const RunHistory& h, double t1, double t2);
// |2 E_gamma(t2) - 2 E_gamma(t1) - int rhs dt| with the stored multiplier;
// t1 >= 1 required, params must match the history's
double egamma_identity_residual(const RunHistory& h, double t1, double t2, const MultiplierParams& p);

} // namespace mhrn
