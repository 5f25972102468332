#include <doctest.h>

#include "mhrn/fields.hpp"
#include "mhrn/error.hpp"
#include "mhrn/stencil.hpp"

#include <array>
#include <cmath>
#include <random>

using namespace mhrn;

namespace {

const cplx I(0.0, 1.0);

// theta-derivative of real rows through the complex angular kernel
Real2D dtheta_rows(const AngularGrid& ag, const Real2D& a, int m, int spin) {
    Field2D tmp(a.nr, a.nth), d(a.nr, a.nth);
    for (size_t k = 0; k < a.v.size(); ++k) tmp.v[k] = a.v[k];
    for (int i = 0; i < a.nr; ++i) angular_d1(ag, tmp.row(i), m, d.row(i), spin);
    Real2D out(a.nr, a.nth);
    for (size_t k = 0; k < a.v.size(); ++k) out.v[k] = d.v[k].real();
    return out;
}

// F = dA for a static axisymmetric potential with A3 = 0
FaradayTable faraday_from_potential(const GaugePotential& A, const RadialGrid& rg, const AngularGrid& ag) {
    const int nr = A.A0.nr, nth = A.A0.nth;
    FaradayTable F(nr, nth);
    Real2D dA0(nr, nth), dA2(nr, nth);
    stencil_d1_radial(A.A0.v.data(), nr, nth, rg.spacing, dA0.v.data());
    stencil_d1_radial(A.A2.v.data(), nr, nth, rg.spacing, dA2.v.data());
    Real2D dA0_th = dtheta_rows(ag, A.A0, 0, 0);
    Real2D dA1_th = dtheta_rows(ag, A.A1, 0, 0);
    for (size_t k = 0; k < F.F01.v.size(); ++k) {
        F.F01.v[k] = -dA0.v[k];
        F.F02.v[k] = -dA0_th.v[k];
        F.F12.v[k] = dA2.v[k] - dA1_th.v[k];
    }
    return F;
}

double max_abs(const Field2D& a) {
    double m = 0.0;
    for (const cplx& z : a.v) m = std::max(m, std::abs(z));
    return m;
}

double max_diff(const Field2D& a, const Field2D& b) {
    double m = 0.0;
    for (size_t k = 0; k < a.v.size(); ++k) m = std::max(m, std::abs(a.v[k] - b.v[k]));
    return m;
}

} // namespace

TEST_CASE("coulomb reference and coulomb faraday table agree") {
    auto bg = Background::make(1.0, 0.5);
    auto rg = RadialGrid::make(bg, -20.0, 40.0, 128);
    auto ag = AngularGrid::make(16);
    const double q = 0.37;

    auto ref = coulomb_reference(rg, ag, q);
    for (const cplx& z : ref.phi_0.v) CHECK(z == cplx(q, 0.0));
    CHECK(max_abs(ref.phi_plus1) == 0.0);
    CHECK(max_abs(ref.phi_minus1) == 0.0);

    // F_{t r*} = q f / r^2 is the exact Coulomb field strength
    FaradayTable F(rg.size(), ag.n_theta);
    for (int i = 0; i < rg.size(); ++i)
        for (int j = 0; j < ag.n_theta; ++j)
            F.F01.at(i, j) = q * rg.f[i] / (rg.r[i] * rg.r[i]);
    auto s = spin_from_faraday(F, rg, ag);
    CHECK(max_diff(s.phi_0, ref.phi_0) < 1e-13);
    CHECK(max_abs(s.phi_plus1) == 0.0);
    CHECK(max_abs(s.phi_minus1) == 0.0);
}

TEST_CASE("spin scalars pick up each faraday slot with the right weight") {
    auto bg = Background::make(1.0, 0.0);
    auto rg = RadialGrid::make(bg, 0.0, 10.0, 32);
    auto ag = AngularGrid::make(8);
    const int nr = rg.size(), nth = ag.n_theta;

    auto one_slot = [&](auto fill) {
        FaradayTable F(nr, nth);
        fill(F);
        return spin_from_faraday(F, rg, ag);
    };

    // F23 = sin(theta) feeds only phi_0, through i/sin
    auto s = one_slot([&](FaradayTable& F) {
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nth; ++j) F.F23.at(i, j) = ag.sin_theta[j];
    });
    for (const cplx& z : s.phi_0.v) CHECK(std::abs(z - I) < 1e-14);
    CHECK(max_abs(s.phi_plus1) == 0.0);
    CHECK(max_abs(s.phi_minus1) == 0.0);

    // F02 = 1 enters both transverse scalars with plus signs
    s = one_slot([&](FaradayTable& F) { for (auto& x : F.F02.v) x = 1.0; });
    for (const cplx& z : s.phi_plus1.v) CHECK(z == cplx(1.0, 0.0));
    for (const cplx& z : s.phi_minus1.v) CHECK(z == cplx(1.0, 0.0));
    CHECK(max_abs(s.phi_0) == 0.0);

    // F12 = 1 flips sign between them
    s = one_slot([&](FaradayTable& F) { for (auto& x : F.F12.v) x = 1.0; });
    for (const cplx& z : s.phi_plus1.v) CHECK(z == cplx(1.0, 0.0));
    for (const cplx& z : s.phi_minus1.v) CHECK(z == cplx(-1.0, 0.0));

    // F03 = sin(theta): +i in phi_1, -i in phi_-1
    s = one_slot([&](FaradayTable& F) {
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nth; ++j) F.F03.at(i, j) = ag.sin_theta[j];
    });
    for (const cplx& z : s.phi_plus1.v) CHECK(std::abs(z - I) < 1e-14);
    for (const cplx& z : s.phi_minus1.v) CHECK(std::abs(z + I) < 1e-14);

    // F13 = sin(theta): +i in both
    s = one_slot([&](FaradayTable& F) {
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nth; ++j) F.F13.at(i, j) = ag.sin_theta[j];
    });
    for (const cplx& z : s.phi_plus1.v) CHECK(std::abs(z - I) < 1e-14);
    for (const cplx& z : s.phi_minus1.v) CHECK(std::abs(z - I) < 1e-14);
}

TEST_CASE("gauge-shifted coulomb potential lands back on the coulomb point") {
    // A = (q/r, d chi) with chi = c sin(2 pi k (r*-a)/L) cos(theta); the
    // faraday table assembled numerically from A must reproduce phi_0 = q up
    // to truncation, and the transverse scalars must vanish at scheme order
    auto bg = Background::make(1.0, 0.5);
    const double q = 0.8, c = 0.4, a = -20.0, b = 60.0, L = b - a;
    const int k = 2;

    auto run = [&](int nr, int nth) {
        auto rg = RadialGrid::make(bg, a, b, nr);
        auto ag = AngularGrid::make(nth);
        auto A = GaugePotential::zero(nr, nth);
        for (int i = 0; i < nr; ++i) {
            double arg = 2.0 * M_PI * k * (rg.rstar[i] - a) / L;
            double s = std::sin(arg), ds = 2.0 * M_PI * k / L * std::cos(arg);
            for (int j = 0; j < nth; ++j) {
                A.A0.at(i, j) = q / rg.r[i];
                A.A1.at(i, j) = c * ds * ag.cos_theta[j];
                A.A2.at(i, j) = -c * s * ag.sin_theta[j];
            }
        }
        auto F = faraday_from_potential(A, rg, ag);
        auto sp = spin_from_faraday(F, rg, ag);
        double e0 = 0.0;
        for (const cplx& z : sp.phi_0.v) e0 = std::max(e0, std::abs(z - q));
        return std::array<double, 3>{e0, max_abs(sp.phi_plus1), max_abs(sp.phi_minus1)};
    };

    auto lo = run(192, 16);
    auto hi = run(384, 32);
    CHECK(lo[0] < 1e-3);
    CHECK(hi[0] < lo[0] / 10.0); // 4th order => 16x, allow slack
    CHECK(lo[1] < 1e-4);
    CHECK(hi[1] < lo[1] / 10.0);
    CHECK(lo[2] < 1e-4);
    CHECK(hi[2] < lo[2] / 10.0);
}

TEST_CASE("covariant derivative directions and gauge terms") {
    auto bg = Background::make(1.0, 0.5);
    auto rg = RadialGrid::make(bg, -20.0, 40.0, 256);
    auto ag = AngularGrid::make(48, 1);
    const int nr = rg.size(), nth = ag.n_theta;

    ScalarState s(nr, nth);
    for (int i = 0; i < nr; ++i) {
        double g = std::exp(-std::pow((rg.rstar[i] - 10.0) / 6.0, 2));
        for (int j = 0; j < nth; ++j) {
            s.phi.at(i, j) = (0.7 + 0.2 * I) * g * ag.sin_theta[j];
            s.pi.at(i, j) = (0.1 - 0.4 * I) * g * ag.sin_theta[j];
        }
    }

    // zero gauge: D0 = pi, D3 = i m phi, both exact
    auto d0 = covariant_derivative(s, 0, rg, ag);
    for (size_t kk = 0; kk < d0.v.size(); ++kk) CHECK(d0.v[kk] == s.pi.v[kk]);
    auto d3 = covariant_derivative(s, 3, rg, ag);
    for (size_t kk = 0; kk < d3.v.size(); ++kk) CHECK(d3.v[kk] == I * s.phi.v[kk]);

    // D1 matches the analytic radial derivative of the gaussian profile
    auto d1 = covariant_derivative(s, 1, rg, ag);
    double e1 = 0.0;
    for (int i = 0; i < nr; ++i) {
        double x = rg.rstar[i];
        double dg = -2.0 * (x - 10.0) / 36.0 * std::exp(-std::pow((x - 10.0) / 6.0, 2));
        for (int j = 0; j < nth; ++j)
            e1 = std::max(e1, std::abs(d1.at(i, j) - (0.7 + 0.2 * I) * dg * ag.sin_theta[j]));
    }
    CHECK(e1 < 1e-5);

    // D2 matches d/dtheta of sin(theta) for the odd m=1 profile
    auto d2 = covariant_derivative(s, 2, rg, ag);
    double e2 = 0.0;
    for (int i = 0; i < nr; ++i) {
        double g = std::exp(-std::pow((rg.rstar[i] - 10.0) / 6.0, 2));
        for (int j = 0; j < nth; ++j)
            e2 = std::max(e2, std::abs(d2.at(i, j) - (0.7 + 0.2 * I) * g * ag.cos_theta[j]));
    }
    CHECK(e2 < 1e-5);

    // coulomb background shifts D0 by -i A0 phi, exactly
    ScalarState sc = s;
    sc.gauge = GaugePotential::coulomb(rg, nth, 0.25);
    auto d0c = covariant_derivative(sc, 0, rg, ag);
    double e0 = 0.0;
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nth; ++j)
            e0 = std::max(e0, std::abs(d0c.at(i, j) - (s.pi.at(i, j) - I * (0.25 / rg.r[i]) * s.phi.at(i, j))));
    CHECK(e0 < 1e-15);

    CHECK_THROWS_AS((void)covariant_derivative(s, 4, rg, ag), Error);
    CHECK_THROWS_AS((void)covariant_derivative(s, -1, rg, ag), Error);
}

TEST_CASE("current of a harmonically rotating profile is real and proportional to the frequency") {
    auto bg = Background::make(1.0, 0.0);
    auto rg = RadialGrid::make(bg, -10.0, 30.0, 128);
    auto ag = AngularGrid::make(8);
    const int nr = rg.size(), nth = ag.n_theta;
    const double omega = 0.7;

    ScalarState s(nr, nth);
    for (int i = 0; i < nr; ++i) {
        cplx g = (0.6 - 0.3 * I) * std::exp(-std::pow((rg.rstar[i] - 8.0) / 5.0, 2));
        for (int j = 0; j < nth; ++j) {
            s.phi.at(i, j) = g;
            s.pi.at(i, j) = I * omega * g;
        }
    }
    auto j0 = current(s, 0, rg, ag);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nth; ++j) {
            CHECK(j0.at(i, j).imag() == 0.0); // real by construction, exactly
            double w = std::norm(s.phi.at(i, j));
            CHECK(j0.at(i, j).real() == doctest::Approx(2.0 * omega * w).epsilon(1e-13).scale(1.0));
        }
}

TEST_CASE("current is gauge covariant") {
    // J computed from (phi, A) and from (e^{i chi} phi, A + d chi) agree up
    // to stencil truncation; directions 0 and 3 agree to rounding
    auto bg = Background::make(1.0, 0.5);
    const double a = -15.0, b = 45.0, L = b - a;
    auto rg = RadialGrid::make(bg, a, b, 512);
    auto ag = AngularGrid::make(24);
    const int nr = rg.size(), nth = ag.n_theta;

    ScalarState s(nr, nth);
    for (int i = 0; i < nr; ++i) {
        cplx g = (0.5 + 0.5 * I) * std::exp(-std::pow((rg.rstar[i] - 12.0) / 7.0, 2));
        for (int j = 0; j < nth; ++j) {
            s.phi.at(i, j) = g * (1.0 + 0.3 * ag.cos_theta[j]);
            s.pi.at(i, j) = (0.2 - 0.1 * I) * g;
        }
    }

    std::mt19937 rng(20260814);
    std::uniform_real_distribution<double> amp(-0.3, 0.3);
    std::uniform_int_distribution<int> wav(1, 3);
    for (int trial = 0; trial < 10; ++trial) {
        double c0 = amp(rng), c1 = amp(rng);
        int k = wav(rng);
        ScalarState st(nr, nth);
        st.gauge = GaugePotential::zero(nr, nth);
        for (int i = 0; i < nr; ++i) {
            double arg = 2.0 * M_PI * k * (rg.rstar[i] - a) / L;
            double sn = std::sin(arg), ds = 2.0 * M_PI * k / L * std::cos(arg);
            for (int j = 0; j < nth; ++j) {
                double chi = sn * (c0 + c1 * ag.cos_theta[j]);
                cplx phase = std::exp(I * chi);
                st.phi.at(i, j) = phase * s.phi.at(i, j);
                st.pi.at(i, j) = phase * s.pi.at(i, j);
                st.gauge.A1.at(i, j) = ds * (c0 + c1 * ag.cos_theta[j]);
                st.gauge.A2.at(i, j) = -sn * c1 * ag.sin_theta[j];
            }
        }
        st.gauge.finalize(rg, ag);
        for (int dir = 0; dir < 4; ++dir) {
            // stencil directions carry the O(h^4) mismatch between the
            // differentiated phase and the analytic potential
            double tol = (dir == 0 || dir == 3) ? 1e-13 : 1e-4;
            CHECK(max_diff(current(s, dir, rg, ag), current(st, dir, rg, ag)) < tol);
        }
    }
}

TEST_CASE("scalar wave operator on polynomial radial data is exact") {
    auto bg = Background::make(1.0, 0.3);
    auto rg = RadialGrid::make(bg, 5.0, 25.0, 64);
    auto ag = AngularGrid::make(8);
    const int nr = rg.size(), nth = ag.n_theta;

    // theta-independent quartic: d2 and d1 stencils are exact, angular part
    // vanishes identically, so the result is the closed form to rounding
    ScalarState s(nr, nth);
    for (int i = 0; i < nr; ++i) {
        double x = rg.rstar[i];
        cplx val = cplx(2.0, -1.0) * (x * x * x * x - 3.0 * x * x * x);
        for (int j = 0; j < nth; ++j) s.phi.at(i, j) = val;
    }
    auto out = scalar_pi_rhs(s, rg, ag);
    double err = 0.0, scale = 0.0;
    for (int i = 0; i < nr; ++i) {
        double x = rg.rstar[i];
        cplx dd = cplx(2.0, -1.0) * (12.0 * x * x - 18.0 * x);
        cplx d = cplx(2.0, -1.0) * (4.0 * x * x * x - 9.0 * x * x);
        cplx want = dd + 2.0 * rg.f[i] / rg.r[i] * d;
        for (int j = 0; j < nth; ++j) {
            err = std::max(err, std::abs(out.at(i, j) - want));
            scale = std::max(scale, std::abs(want));
        }
    }
    CHECK(err < 1e-9 * scale);
}

TEST_CASE("scalar wave operator reproduces the spherical eigenvalue") {
    // phi = R(r*) cos(theta): the angular block contributes -2 f/r^2 phi
    auto bg = Background::make(1.0, 0.0);
    auto rg = RadialGrid::make(bg, 2.0, 22.0, 64);
    auto ag = AngularGrid::make(48);
    const int nr = rg.size(), nth = ag.n_theta;

    ScalarState s(nr, nth);
    for (int i = 0; i < nr; ++i) {
        double x = rg.rstar[i];
        for (int j = 0; j < nth; ++j) s.phi.at(i, j) = (x * x) * ag.cos_theta[j];
    }
    auto out = scalar_pi_rhs(s, rg, ag);
    double err = 0.0;
    for (int i = 0; i < nr; ++i) {
        double x = rg.rstar[i], f = rg.f[i], r = rg.r[i];
        for (int j = 0; j < nth; ++j) {
            cplx want = (2.0 + 2.0 * f / r * 2.0 * x - f / (r * r) * 2.0 * x * x) * ag.cos_theta[j];
            err = std::max(err, std::abs(out.at(i, j) - want));
        }
    }
    CHECK(err < 1e-5);
}

TEST_CASE("coulomb gauge terms enter the wave operator with the expected coefficients") {
    auto bg = Background::make(1.0, 0.5);
    auto rg = RadialGrid::make(bg, -10.0, 30.0, 128);
    auto ag = AngularGrid::make(8);
    const int nr = rg.size(), nth = ag.n_theta;
    const double q = 0.3;

    ScalarState s(nr, nth), sc(nr, nth);
    for (int i = 0; i < nr; ++i) {
        cplx g = (0.9 + 0.1 * I) * std::exp(-std::pow((rg.rstar[i] - 10.0) / 6.0, 2));
        for (int j = 0; j < nth; ++j) {
            s.phi.at(i, j) = sc.phi.at(i, j) = g;
            s.pi.at(i, j) = sc.pi.at(i, j) = 0.4 * I * g;
        }
    }
    sc.gauge = GaugePotential::coulomb(rg, nth, q);
    auto base = scalar_pi_rhs(s, rg, ag);
    auto coul = scalar_pi_rhs(sc, rg, ag);
    double err = 0.0;
    for (int i = 0; i < nr; ++i) {
        double a0 = q / rg.r[i];
        for (int j = 0; j < nth; ++j) {
            cplx want = base.at(i, j) + 2.0 * I * a0 * s.pi.at(i, j) + a0 * a0 * s.phi.at(i, j);
            err = std::max(err, std::abs(coul.at(i, j) - want));
        }
    }
    CHECK(err < 1e-12);
}

TEST_CASE("scalar wave operator is gauge covariant") {
    auto bg = Background::make(1.0, 0.5);
    const double a = -15.0, b = 45.0, L = b - a;
    const int k = 2;
    const double c0 = 0.25, c1 = 0.15;

    auto run = [&](int nr, int nth, int m) {
        auto rg = RadialGrid::make(bg, a, b, nr);
        auto ag = AngularGrid::make(nth, m);
        ScalarState s(nr, nth), st(nr, nth);
        st.gauge = GaugePotential::zero(nr, nth);
        for (int i = 0; i < nr; ++i) {
            cplx g = (0.8 - 0.3 * I) * std::exp(-std::pow((rg.rstar[i] - 12.0) / 7.0, 2));
            double arg = 2.0 * M_PI * k * (rg.rstar[i] - a) / L;
            double sn = std::sin(arg), ds = 2.0 * M_PI * k / L * std::cos(arg);
            for (int j = 0; j < nth; ++j) {
                double prof = (m == 0) ? (1.0 + 0.3 * ag.cos_theta[j]) : ag.sin_theta[j];
                cplx phi = g * prof, pi = (0.2 + 0.4 * I) * g * prof;
                double chi = sn * (c0 + c1 * ag.cos_theta[j]);
                cplx phase = std::exp(I * chi);
                s.phi.at(i, j) = phi;
                s.pi.at(i, j) = pi;
                st.phi.at(i, j) = phase * phi;
                st.pi.at(i, j) = phase * pi;
                st.gauge.A1.at(i, j) = ds * (c0 + c1 * ag.cos_theta[j]);
                st.gauge.A2.at(i, j) = -sn * c1 * ag.sin_theta[j];
            }
        }
        st.gauge.finalize(rg, ag);
        auto base = scalar_pi_rhs(s, rg, ag);
        auto gauged = scalar_pi_rhs(st, rg, ag);
        // compare away from a fixed angular collar at the poles: the
        // cot-scaled pieces lose one order there, and the collar has to be a
        // fixed angle (not a fixed index) or the lost order leaks into the
        // refinement ratio
        double err = 0.0;
        for (int i = 0; i < nr; ++i) {
            double arg = 2.0 * M_PI * k * (rg.rstar[i] - a) / L;
            double sn = std::sin(arg);
            for (int j = 0; j < nth; ++j) {
                if (ag.theta[j] < 0.35 || ag.theta[j] > M_PI - 0.35) continue;
                cplx phase = std::exp(I * sn * (c0 + c1 * ag.cos_theta[j]));
                err = std::max(err, std::abs(gauged.at(i, j) - phase * base.at(i, j)));
            }
        }
        return err;
    };

    // two doublings: the single-step ratio wobbles while the max-error
    // location hops between peaks, the 4x span does not
    for (int m : {0, 1}) {
        double lo = run(256, 24, m);
        double hi = run(1024, 96, m);
        CHECK(lo < 2e-4);
        CHECK(hi < lo / 100.0);
    }
}

TEST_CASE("charge source vanishes for trivial and real data") {
    auto bg = Background::make(1.0, 0.5);
    auto rg = RadialGrid::make(bg, -10.0, 30.0, 64);
    auto ag = AngularGrid::make(8);
    const int nr = rg.size(), nth = ag.n_theta;

    ScalarState s(nr, nth);
    auto rho = source_rho(s, rg, ag);
    CHECK(max_abs(rho) == 0.0);

    // real field, zero gauge: every bracket is z - conj(z) with z real
    for (int i = 0; i < nr; ++i) {
        double g = std::exp(-std::pow((rg.rstar[i] - 8.0) / 5.0, 2));
        for (int j = 0; j < nth; ++j) {
            s.phi.at(i, j) = g * (1.0 + 0.2 * ag.cos_theta[j]);
            s.pi.at(i, j) = 0.3 * g;
        }
    }
    rho = source_rho(s, rg, ag);
    CHECK(max_abs(rho) == 0.0);
}

TEST_CASE("charge source scales quadratically, bitwise") {
    auto bg = Background::make(1.0, 0.5);
    const double a = -10.0, b = 30.0, L = b - a;
    auto rg = RadialGrid::make(bg, a, b, 96);
    auto ag = AngularGrid::make(12);
    const int nr = rg.size(), nth = ag.n_theta;

    ScalarState s(nr, nth), s2(nr, nth);
    auto gauge = GaugePotential::zero(nr, nth);
    for (int i = 0; i < nr; ++i) {
        cplx g = (0.4 + 0.6 * I) * std::exp(-std::pow((rg.rstar[i] - 8.0) / 5.0, 2));
        double arg = 2.0 * M_PI * (rg.rstar[i] - a) / L;
        for (int j = 0; j < nth; ++j) {
            cplx phi = g * (1.0 + 0.2 * ag.cos_theta[j]);
            cplx pi = (0.1 - 0.5 * I) * g;
            s.phi.at(i, j) = phi;
            s.pi.at(i, j) = pi;
            s2.phi.at(i, j) = 2.0 * phi;
            s2.pi.at(i, j) = 2.0 * pi;
            gauge.A0.at(i, j) = 0.2 / rg.r[i];
            gauge.A1.at(i, j) = 0.1 * std::sin(arg);
            gauge.A2.at(i, j) = -0.05 * std::cos(arg) * ag.sin_theta[j];
        }
    }
    gauge.finalize(rg, ag);
    s.gauge = gauge;
    s2.gauge = gauge;

    auto r1 = source_rho(s, rg, ag);
    auto r2 = source_rho(s2, rg, ag);
    for (size_t k = 0; k < r1.v.size(); ++k) CHECK(r2.v[k] == 4.0 * r1.v[k]);
}

TEST_CASE("charge source matches the closed form for a rotating radial profile") {
    // phi = g(r*), pi = i k g, zero gauge, m = 0: the angular brackets vanish
    // and the transport part reduces to derivatives of |g|^2 bilinears
    auto bg = Background::make(1.0, 0.5);
    const double k = 0.5, c = 10.0, w = 6.0;

    auto run = [&](int nr) {
        auto rg = RadialGrid::make(bg, -30.0, 50.0, nr);
        auto ag = AngularGrid::make(8);
        const int nth = ag.n_theta;
        ScalarState s(nr, nth);
        for (int i = 0; i < nr; ++i) {
            cplx g = (0.8 + 0.5 * I) * std::exp(-std::pow((rg.rstar[i] - c) / w, 2));
            for (int j = 0; j < nth; ++j) {
                s.phi.at(i, j) = g;
                s.pi.at(i, j) = I * k * g;
            }
        }
        auto rho = source_rho(s, rg, ag);
        double err = 0.0;
        for (int i = 0; i < nr; ++i) {
            double x = rg.rstar[i], r = rg.r[i], f = rg.f[i];
            cplx g = (0.8 + 0.5 * I) * std::exp(-std::pow((x - c) / w, 2));
            cplx dg = -2.0 * (x - c) / (w * w) * g;
            cplx ddg = (-2.0 / (w * w) + 4.0 * (x - c) * (x - c) / (w * w * w * w)) * g;
            double n2 = std::norm(g);
            double im1 = (dg * std::conj(g)).imag();
            double im2 = (ddg * std::conj(g)).imag();
            double re1 = (dg * std::conj(g)).real();
            // d_t(B0+B1) = 2i Im((g'' + 2f/r g') conj g); B0 = 2ik|g|^2,
            // B1 = 2i Im(g' conj g); d_r*(r^2) = 2 r f
            cplx want = I * (r * r) * 2.0 * I * (im2 + 2.0 * f / r * im1)
                      + I * (2.0 * r * f * (2.0 * I * k * n2 + 2.0 * I * im1)
                             + r * r * (2.0 * I * k * 2.0 * re1 + 2.0 * I * im2));
            for (int j = 0; j < nth; ++j)
                err = std::max(err, std::abs(rho.at(i, j) - want));
        }
        return err;
    };

    double lo = run(256), hi = run(512);
    CHECK(lo < 2e-3);
    CHECK(hi < lo / 10.0);
}

TEST_CASE("gauge potential derivative caches match analytic derivatives") {
    auto bg = Background::make(1.0, 0.5);
    const double a = -10.0, b = 30.0, L = b - a;
    auto rg = RadialGrid::make(bg, a, b, 256);
    auto ag = AngularGrid::make(32);
    const int nr = rg.size(), nth = ag.n_theta;

    auto A = GaugePotential::zero(nr, nth);
    for (int i = 0; i < nr; ++i) {
        double arg = 2.0 * M_PI * (rg.rstar[i] - a) / L;
        for (int j = 0; j < nth; ++j) {
            A.A1.at(i, j) = std::sin(arg);
            A.A2.at(i, j) = std::cos(arg) * ag.sin_theta[j];
        }
    }
    A.finalize(rg, ag);
    CHECK_FALSE(A.is_zero);

    double e1 = 0.0, e2 = 0.0;
    for (int i = 0; i < nr; ++i) {
        double arg = 2.0 * M_PI * (rg.rstar[i] - a) / L;
        for (int j = 0; j < nth; ++j) {
            e1 = std::max(e1, std::abs(A.dA1_dr.at(i, j) - 2.0 * M_PI / L * std::cos(arg)));
            e2 = std::max(e2, std::abs(A.dA2_dth.at(i, j) - std::cos(arg) * ag.cos_theta[j]));
        }
    }
    CHECK(e1 < 1e-6);
    CHECK(e2 < 1e-5);

    auto Z = GaugePotential::zero(nr, nth);
    Z.finalize(rg, ag);
    CHECK(Z.is_zero);
}
