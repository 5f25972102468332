#include "mhrn/fields.hpp"
#include "mhrn/error.hpp"
#include "mhrn/stencil.hpp"

#include <cmath>

namespace mhrn {

namespace {

bool all_zero(const Real2D& a) {
    for (double x : a.v)
        if (x != 0.0) return false;
    return true;
}

// d/dtheta of every radial row of a 2D field
void d_theta_2d(const AngularGrid& ag, const Field2D& u, int m, Field2D& out, int spin_weight) {
    for (int i = 0; i < u.nr; ++i)
        angular_d1(ag, u.row(i), m, out.row(i), spin_weight);
}

} // namespace

GaugePotential GaugePotential::zero(int nr, int nth) {
    GaugePotential a;
    a.A0 = Real2D(nr, nth);
    a.A1 = Real2D(nr, nth);
    a.A2 = Real2D(nr, nth);
    a.A3 = Real2D(nr, nth);
    a.dA1_dr = Real2D(nr, nth);
    a.dA2_dth = Real2D(nr, nth);
    a.is_zero = true;
    return a;
}

GaugePotential GaugePotential::coulomb(const RadialGrid& rg, int nth, double q_A) {
    GaugePotential a = zero(rg.size(), nth);
    a.coupling_charge = q_A;
    for (int i = 0; i < rg.size(); ++i)
        for (int j = 0; j < nth; ++j) a.A0.at(i, j) = q_A / rg.r[i];
    a.is_zero = (q_A == 0.0);
    return a;
}

void GaugePotential::finalize(const RadialGrid& rg, const AngularGrid& ag) {
    stencil_d1_radial(A1.v.data(), A1.nr, A1.nth, rg.spacing, dA1_dr.v.data());
    // theta-derivative of the real A2 rows; the background is axisymmetric and
    // A2 is the theta-component of a one-form from a regular scalar, so it
    // reflects oddly at the poles regardless of the matter field's mode
    Field2D tmp(A2.nr, A2.nth), dtmp(A2.nr, A2.nth);
    for (size_t k = 0; k < A2.v.size(); ++k) tmp.v[k] = A2.v[k];
    d_theta_2d(ag, tmp, 0, dtmp, 1);
    for (size_t k = 0; k < A2.v.size(); ++k) dA2_dth.v[k] = dtmp.v[k].real();
    is_zero = all_zero(A0) && all_zero(A1) && all_zero(A2) && all_zero(A3);
}

SpinTriple spin_from_faraday(const FaradayTable& F, const RadialGrid& rg, const AngularGrid& ag) {
    const int nr = F.F01.nr, nth = F.F01.nth;
    SpinTriple s(nr, nth);
    for (int i = 0; i < nr; ++i) {
        const double r2_over_f = rg.r[i] * rg.r[i] / rg.f[i];
        for (int j = 0; j < nth; ++j) {
            const double inv_sin = 1.0 / ag.sin_theta[j];
            const cplx i_over_sin(0.0, inv_sin);
            s.phi_0.at(i, j) = r2_over_f * F.F01.at(i, j) + i_over_sin * F.F23.at(i, j);
            s.phi_plus1.at(i, j) = F.F02.at(i, j) + i_over_sin * F.F03.at(i, j)
                                   + F.F12.at(i, j) + i_over_sin * F.F13.at(i, j);
            s.phi_minus1.at(i, j) = F.F02.at(i, j) - i_over_sin * F.F03.at(i, j)
                                    - F.F12.at(i, j) + i_over_sin * F.F13.at(i, j);
        }
    }
    return s;
}

Field2D covariant_derivative(const ScalarState& s, int direction, const RadialGrid& rg, const AngularGrid& ag) {
    const int nr = s.phi.nr, nth = s.phi.nth;
    const int m = ag.azimuthal_mode;
    Field2D out(nr, nth);
    const cplx I(0.0, 1.0);
    switch (direction) {
    case 0:
        for (size_t k = 0; k < out.v.size(); ++k)
            out.v[k] = s.pi.v[k] - I * s.gauge.A0.v[k] * s.phi.v[k];
        break;
    case 1:
        stencil_d1_radial(s.phi.v.data(), nr, nth, rg.spacing, out.v.data());
        for (size_t k = 0; k < out.v.size(); ++k)
            out.v[k] -= I * s.gauge.A1.v[k] * s.phi.v[k];
        break;
    case 2:
        d_theta_2d(ag, s.phi, m, out, 0);
        for (size_t k = 0; k < out.v.size(); ++k)
            out.v[k] -= I * s.gauge.A2.v[k] * s.phi.v[k];
        break;
    case 3:
        for (size_t k = 0; k < out.v.size(); ++k)
            out.v[k] = I * (double(m) - s.gauge.A3.v[k]) * s.phi.v[k];
        break;
    default:
        throw Error("covariant_derivative: direction must be 0..3");
    }
    return out;
}

Field2D current(const ScalarState& s, int direction, const RadialGrid& rg, const AngularGrid& ag) {
    Field2D d = covariant_derivative(s, direction, rg, ag);
    Field2D out(s.phi.nr, s.phi.nth);
    const cplx mI(0.0, -1.0);
    for (size_t k = 0; k < out.v.size(); ++k) {
        cplx z = d.v[k] * std::conj(s.phi.v[k]);
        out.v[k] = mI * (z - std::conj(z));
    }
    return out;
}

Field2D scalar_pi_rhs(const ScalarState& s, const RadialGrid& rg, const AngularGrid& ag) {
    const int nr = s.phi.nr, nth = s.phi.nth;
    const int m = ag.azimuthal_mode;
    const cplx I(0.0, 1.0);
    const GaugePotential& A = s.gauge;

    Field2D d1(nr, nth), d2(nr, nth), t1(nr, nth), t2(nr, nth), out(nr, nth);
    stencil_d1_radial(s.phi.v.data(), nr, nth, rg.spacing, d1.v.data());
    stencil_d2_radial(s.phi.v.data(), nr, nth, rg.spacing, d2.v.data());
    for (int i = 0; i < nr; ++i) {
        angular_d1(ag, s.phi.row(i), m, t1.row(i), 0);
        angular_d2(ag, s.phi.row(i), m, t2.row(i), 0);
    }

    for (int i = 0; i < nr; ++i) {
        const double r = rg.r[i], f = rg.f[i];
        const double two_f_over_r = 2.0 * f / r;
        const double f_over_r2 = f / (r * r);
        for (int j = 0; j < nth; ++j) {
            const double st = ag.sin_theta[j], ct = ag.cot_theta[j];
            const cplx phi = s.phi.at(i, j);
            cplx acc = d2.at(i, j) + two_f_over_r * d1.at(i, j)
                       + f_over_r2 * (t2.at(i, j) + ct * t1.at(i, j)
                                      - (double(m) * m / (st * st)) * phi);
            if (!A.is_zero) {
                const double a0 = A.A0.at(i, j), a1 = A.A1.at(i, j);
                const double a2 = A.A2.at(i, j), a3 = A.A3.at(i, j);
                acc += 2.0 * I * a0 * s.pi.at(i, j) + a0 * a0 * phi;
                acc += -2.0 * I * a1 * d1.at(i, j)
                       - (I * A.dA1_dr.at(i, j) + I * two_f_over_r * a1 + a1 * a1) * phi;
                acc += f_over_r2 * (-2.0 * I * a2 * t1.at(i, j)
                                    - (I * A.dA2_dth.at(i, j) + I * ct * a2 + a2 * a2) * phi);
                // shift of the azimuthal term: (m - A3)^2 replaces m^2
                acc += f_over_r2 * ((double(m) * m - (double(m) - a3) * (double(m) - a3)) / (st * st)) * phi;
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

Field2D source_rho(const ScalarState& s, const RadialGrid& rg, const AngularGrid& ag) {
    const int nr = s.phi.nr, nth = s.phi.nth;
    const cplx I(0.0, 1.0);

    auto bracket = [&](const Field2D& d, Field2D& out) {
        for (size_t k = 0; k < out.v.size(); ++k) {
            cplx z = d.v[k] * std::conj(s.phi.v[k]);
            out.v[k] = z - std::conj(z);
        }
    };

    Field2D D0 = covariant_derivative(s, 0, rg, ag);
    Field2D D1 = covariant_derivative(s, 1, rg, ag);
    Field2D D2 = covariant_derivative(s, 2, rg, ag);
    Field2D D3 = covariant_derivative(s, 3, rg, ag);
    Field2D B0(nr, nth), B1(nr, nth), B2(nr, nth), B3(nr, nth);
    bracket(D0, B0);
    bracket(D1, B1);
    bracket(D2, B2);
    bracket(D3, B3);

    // angular part: -M1( i f B2 + i (f/sin) B3 ); the integrand carries one
    // theta-derivative worth of pole parity (spin weight 1)
    Field2D S(nr, nth), rho(nr, nth);
    for (int i = 0; i < nr; ++i) {
        const double f = rg.f[i];
        for (int j = 0; j < nth; ++j)
            S.at(i, j) = I * f * B2.at(i, j) + I * (f / ag.sin_theta[j]) * B3.at(i, j);
    }
    for (int i = 0; i < nr; ++i)
        apply_M1(ag, S.row(i), 0, rho.row(i), 1);
    for (size_t k = 0; k < rho.v.size(); ++k) rho.v[k] = -rho.v[k];

    // transport part: (d_t + d_r*) of G = i r^2 (B0 + B1); d_t via the
    // equation of motion, d_r* by stencil
    Field2D G(nr, nth);
    for (int i = 0; i < nr; ++i) {
        const double r2 = rg.r[i] * rg.r[i];
        for (int j = 0; j < nth; ++j)
            G.at(i, j) = I * r2 * (B0.at(i, j) + B1.at(i, j));
    }
    Field2D dG(nr, nth);
    stencil_d1_radial(G.v.data(), nr, nth, rg.spacing, dG.v.data());

    Field2D pidot = scalar_pi_rhs(s, rg, ag);
    Field2D dpi(nr, nth);
    stencil_d1_radial(s.pi.v.data(), nr, nth, rg.spacing, dpi.v.data());

    for (int i = 0; i < nr; ++i) {
        const double r2 = rg.r[i] * rg.r[i];
        for (int j = 0; j < nth; ++j) {
            const cplx phi = s.phi.at(i, j), pi = s.pi.at(i, j);
            const cplx dD0 = pidot.at(i, j) - I * s.gauge.A0.at(i, j) * pi;
            const cplx dD1 = dpi.at(i, j) - I * s.gauge.A1.at(i, j) * pi;
            // pair the conjugate terms so the time derivatives of the
            // brackets come out exactly imaginary, like the brackets
            const cplx t0 = dD0 * std::conj(phi) + D0.at(i, j) * std::conj(pi);
            const cplx t1 = dD1 * std::conj(phi) + D1.at(i, j) * std::conj(pi);
            const cplx dB0 = t0 - std::conj(t0);
            const cplx dB1 = t1 - std::conj(t1);
            rho.at(i, j) += I * r2 * (dB0 + dB1) + dG.at(i, j);
        }
    }
    return rho;
}

SpinTriple coulomb_reference(const RadialGrid& rg, const AngularGrid& ag, double q_F) {
    SpinTriple s(rg.size(), ag.n_theta);
    for (auto& z : s.phi_0.v) z = cplx(q_F, 0.0);
    return s;
}

} // namespace mhrn
