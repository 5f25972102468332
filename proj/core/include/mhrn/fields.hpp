#pragma once
#include "mhrn/angular.hpp"
#include "mhrn/geometry.hpp"

#include <complex>
#include <vector>

namespace mhrn {

// 2D grid function on the (r*, theta) lattice; theta is the contiguous index:
// (i, j) -> i*nth + j
template <typename T>
struct Table2D {
    int nr = 0, nth = 0;
    std::vector<T> v;

    Table2D() = default;
    Table2D(int nr_, int nth_) : nr(nr_), nth(nth_), v(static_cast<size_t>(nr_) * nth_) {}

    T& at(int i, int j) { return v[static_cast<size_t>(i) * nth + j]; }
    const T& at(int i, int j) const { return v[static_cast<size_t>(i) * nth + j]; }
    T* row(int i) { return v.data() + static_cast<size_t>(i) * nth; }
    const T* row(int i) const { return v.data() + static_cast<size_t>(i) * nth; }
    size_t size() const { return v.size(); }
    bool same_shape(const Table2D& o) const { return nr == o.nr && nth == o.nth; }
};

using Field2D = Table2D<cplx>;
using Real2D = Table2D<double>;

// spin components of the Maxwell field on the 2D lattice
struct SpinTriple {
    Field2D phi_plus1, phi_0, phi_minus1;

    SpinTriple() = default;
    SpinTriple(int nr, int nth) : phi_plus1(nr, nth), phi_0(nr, nth), phi_minus1(nr, nth) {}
};

// static background gauge potential in (t, r*, theta, phi) components.
// Derivative caches feed the expanded charged-scalar wave operator.
struct GaugePotential {
    double coupling_charge = 0.0;
    Real2D A0, A1, A2, A3;
    Real2D dA1_dr, dA2_dth;
    bool is_zero = true;

    static GaugePotential zero(int nr, int nth);
    // A0 = q_A / r, other components zero
    static GaugePotential coulomb(const RadialGrid& rg, int nth, double q_A);
    // recompute caches after editing components by hand
    void finalize(const RadialGrid& rg, const AngularGrid& ag);
};

struct ScalarState {
    Field2D phi; // field value
    Field2D pi;  // time derivative
    GaugePotential gauge;

    ScalarState() = default;
    ScalarState(int nr, int nth) : phi(nr, nth), pi(nr, nth), gauge(GaugePotential::zero(nr, nth)) {}
};

// antisymmetric Faraday components in coordinates (0,1,2,3) = (t, r*, theta, phi)
struct FaradayTable {
    Real2D F01, F02, F03, F12, F13, F23;

    FaradayTable() = default;
    FaradayTable(int nr, int nth)
        : F01(nr, nth), F02(nr, nth), F03(nr, nth), F12(nr, nth), F13(nr, nth), F23(nr, nth) {}
};

// spin scalars from Faraday components:
//   Phi_0  = (r^2/f) F_{t r*} + (i/sin) F_{theta phi}
//   Phi_1  = F02 + (i/sin) F03 + F12 + (i/sin) F13
//   Phi_-1 = F02 - (i/sin) F03 - F12 + (i/sin) F13
// (sign of the Phi_0 radial term fixed so a Coulomb field F_{tr} = q/r^2
// maps to Phi_0 = +q)
SpinTriple spin_from_faraday(const FaradayTable& F, const RadialGrid& rg, const AngularGrid& ag);

// D_mu phi = d_mu phi - i A_mu phi; direction 0..3 = (t, r*, theta, phi);
// d_t phi is read from pi, d_phi maps to i*m
Field2D covariant_derivative(const ScalarState& s, int direction, const RadialGrid& rg, const AngularGrid& ag);

// gauge-invariant current J_dir = -i (D phi conj(phi) - phi conj(D phi)); real up to rounding
Field2D current(const ScalarState& s, int direction, const RadialGrid& rg, const AngularGrid& ag);

// d_t pi from the charged-scalar wave equation expanded on the background:
//   d_t pi = 2 i A0 pi + A0^2 phi
//          + d1^2 phi + (2f/r - 2 i A1) d1 phi - (i d1A1 + 2 i (f/r) A1 + A1^2) phi
//          + (f/r^2) [ d2^2 phi + (cot - 2 i A2) d2 phi
//                      - (i d2A2 + i cot A2 + A2^2 + (m - A3)^2/sin^2) phi ]
// with d1 = d/dr*, d2 = d/dtheta
Field2D scalar_pi_rhs(const ScalarState& s, const RadialGrid& rg, const AngularGrid& ag);

// current source of the middle-component wave equation:
//   rho = -M1( i f B2 + i (f/sin) B3 ) + (d_t + d_r*)( i r^2 (B0 + B1) )
// with B_dir = D_dir phi conj(phi) - phi conj(D_dir phi); the d_t part is
// evaluated by substituting pi and the scalar equation of motion (no time
// differencing)
Field2D source_rho(const ScalarState& s, const RadialGrid& rg, const AngularGrid& ag);

// exact stationary solution Phi_0 = q_F, Phi_{+-1} = 0
SpinTriple coulomb_reference(const RadialGrid& rg, const AngularGrid& ag, double q_F);

} // namespace mhrn
