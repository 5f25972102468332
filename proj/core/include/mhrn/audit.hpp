#pragma once
#include "mhrn/config.hpp"
#include "mhrn/diagnostics.hpp"

#include <map>
#include <string>
#include <vector>

namespace mhrn {

// outcome of one audit check; worst_ratio <= 1 means the measured quantity
// stayed inside tolerance
struct AuditReport {
    std::string id;
    bool pass = false;
    std::map<std::string, double> constants;
    double worst_ratio = 0.0;
    long samples = 0;
    double tolerance = 0.0;
};

// drift of the total energy across the reports, relative when the initial
// energy is nonzero, absolute otherwise
AuditReport check_energy_conservation(const RunHistory& h, double tolerance = 1e-6);

// weighted Hardy inequality on a deterministic 100-profile family:
//   int u^2 (1+x^2)^-(sigma+1) <= C [ int u'^2 (1+x^2)^-sigma + int_{|x|<=eps} u^2 ]
// the minimal C is fitted on the even-indexed half and the odd half must hold
// with 1.05 slack
AuditReport check_hardy(double sigma, double epsilon = 0.75);

// interpolation inequality between angular-derivative energies: per-mode the
// eigenvalue relations are exact, two-mode mixtures obey
//   sum lam_i e_i <= (sum e_i)^(3/4) (sum lam_i^4 e_i)^(1/4)
AuditReport check_holder_interpolation();

// fits the smallest C compatible with E_C(t2) - E_C(t1) <= C int (s^3+s^2) E_C ds
// over every report pair, then requires the envelope
//   E_C(t) <= E_C(t0) exp(C [(t-t0)^4 + (t-t0)^3])
// to dominate every report; fewer than two reports pass vacuously
AuditReport check_gronwall_envelope(const RunHistory& h);

// log-log slope of E_C against (1+t) over the last half of the reports must
// not exceed 2.2; the normalized ratio E_C / [(1+t)^2 (E_C(0)+E[lap^2 u](0)+E(0))]
// is recorded
AuditReport check_conformal_growth(const RunHistory& h);

// local-slice growth of the scalar columns: sup of linf_phi_loc/(1+t) and
// l2_phi_loc/(1+t) over the second half of the run must stay within 1.5x the
// first half
AuditReport check_linf_growth(const RunHistory& h);

// local energy against the conformal bound: C = max over the first half of
// E_l / (E_C/t^2 + E(0)) for t >= 1; the second half must stay within 1.05 C
AuditReport check_el_vs_ec(const RunHistory& h);

// three-resolution Richardson order of the mode evolution at shared nodes;
// passes when |p - 4| <= 0.5, non-monotone errors are flagged inconclusive
AuditReport convergence_study(const RunConfig& base);

// the history-driven battery in a fixed order
std::vector<AuditReport> run_standard_audits(const RunHistory& h);

// JSON array of {id, pass, constants, worst_ratio, samples, tolerance}
std::string audit_reports_to_json(const std::vector<AuditReport>& reports);

} // namespace mhrn
