#pragma once
#include <complex>
#include <vector>

namespace mhrn {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

// Polar-angle grid for a single azimuthal mode e^{i m phi} (so d/dphi -> i m).
// Pole-offset nodes theta_j = (j + 1/2) pi / n_theta keep 1/sin(theta) finite.
//
// Quadrature weights are the exact sin(theta) mass of each cell,
// w_j = 2 sin(h/2) sin(theta_j); they are positive and sum to exactly 2.
struct AngularGrid {
    int n_theta = 0;
    int azimuthal_mode = 0;
    double spacing = 0.0;
    std::vector<double> theta, sin_theta, cos_theta, cot_theta, weights;

    static AngularGrid make(int n_theta, int azimuthal_mode = 0);
};

// Angular derivative operators. Centered 4th-order stencils; ghost values
// across the poles are filled by parity (-1)^{m + s} where s is the spin
// weight of the profile (0 for scalars, +/-1 for the spin-raised/lowered
// Maxwell components). Regularity on the sphere requires the spin offset:
// with plain (-1)^m the spin-1 profiles kink at the poles and the coupled
// evolution blows up.
//
// All routines write n_theta values to out; out must not alias u.
void angular_d1(const AngularGrid& g, const cplx* u, int m, cplx* out, int spin_weight = 0);        // pure d/dtheta
void angular_d2(const AngularGrid& g, const cplx* u, int m, cplx* out, int spin_weight = 0);        // pure d2/dtheta2
void apply_M(const AngularGrid& g, const cplx* u, int m, cplx* out, int spin_weight = 0);           // d_theta u - (m/sin) u
void apply_Mbar(const AngularGrid& g, const cplx* u, int m, cplx* out, int spin_weight = 0);        // d_theta u + (m/sin) u
void apply_M1(const AngularGrid& g, const cplx* u, int m, cplx* out, int spin_weight = 0);          // apply_M + cot(theta) u
void apply_laplacian_S(const AngularGrid& g, const cplx* u, int m, cplx* out, int spin_weight = 0); // d2 - m^2/sin^2 + cot d1

// convenience copies for tests and setup code
CVec apply_M(const AngularGrid& g, const CVec& u, int m, int spin_weight = 0);
CVec apply_Mbar(const AngularGrid& g, const CVec& u, int m, int spin_weight = 0);
CVec apply_M1(const AngularGrid& g, const CVec& u, int m, int spin_weight = 0);
CVec apply_laplacian_S(const AngularGrid& g, const CVec& u, int m, int spin_weight = 0);

} // namespace mhrn
