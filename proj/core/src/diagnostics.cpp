#include "mhrn/diagnostics.hpp"
#include "mhrn/error.hpp"
#include "mhrn/stencil.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string_view>
#include <utility>

namespace mhrn {

namespace {

constexpr double kPi = 3.14159265358979323846;

// inclusive index range of nodes with lo <= rstar <= hi; empty -> i0 > i1
std::pair<int, int> index_window(const RadialGrid& rg, double lo, double hi) {
    const double h = rg.spacing, x0 = rg.rstar_min;
    const double eps = 1e-9 * h;
    int i0 = static_cast<int>(std::ceil((lo - x0 - eps) / h));
    int i1 = static_cast<int>(std::floor((hi - x0 + eps) / h));
    i0 = std::max(i0, 0);
    i1 = std::min(i1, rg.size() - 1);
    return {i0, i1};
}

// -------- third-order jets for the bump construction --------

struct Jet3 {
    double v = 0, d1 = 0, d2 = 0, d3 = 0;
};

Jet3 operator+(const Jet3& a, const Jet3& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2, a.d3 + b.d3}; }

Jet3 operator*(const Jet3& a, const Jet3& b) {
    return {a.v * b.v,
            a.d1 * b.v + a.v * b.d1,
            a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2,
            a.d3 * b.v + 3.0 * a.d2 * b.d1 + 3.0 * a.d1 * b.d2 + a.v * b.d3};
}

Jet3 operator/(const Jet3& a, const Jet3& b) {
    Jet3 q;
    q.v = a.v / b.v;
    q.d1 = (a.d1 - q.v * b.d1) / b.v;
    q.d2 = (a.d2 - 2.0 * q.d1 * b.d1 - q.v * b.d2) / b.v;
    q.d3 = (a.d3 - 3.0 * q.d2 * b.d1 - 3.0 * q.d1 * b.d2 - q.v * b.d3) / b.v;
    return q;
}

Jet3 jet_exp(const Jet3& a) {
    const double E = std::exp(a.v);
    return {E, a.d1 * E, (a.d2 + a.d1 * a.d1) * E, (a.d3 + 3.0 * a.d1 * a.d2 + a.d1 * a.d1 * a.d1) * E};
}

// rho(y) = exp(-1/y) for y > 0, flat zero continuation; the guard keeps the
// 1/y jets from overflowing where exp underflows to zero anyway
Jet3 cutoff_rho(const Jet3& y) {
    if (y.v <= 1e-3) return {0.0, 0.0, 0.0, 0.0};
    return jet_exp(Jet3{-1.0, 0.0, 0.0, 0.0} / y);
}

double sum_weighted(const std::vector<double>& w, const std::vector<double>& y) {
    std::vector<double> prod(y.size());
    for (size_t i = 0; i < y.size(); ++i) prod[i] = w[i] * y[i];
    return pairwise_sum(prod.data(), prod.size());
}

// per-row angular d/dtheta of a 2D field (alternating ghost parity handled by
// the caller through spin_weight)
void dtheta_2d(const AngularGrid& ag, const Field2D& u, int m, int spin_weight, Field2D& out) {
    for (int i = 0; i < u.nr; ++i) angular_d1(ag, u.row(i), m, out.row(i), spin_weight);
}

// angular reduction per radial node: s_i = 2 pi sum_j w_j y(i,j)
std::vector<double> angular_reduce(const AngularGrid& ag, const Real2D& y) {
    std::vector<double> s(y.nr);
    std::vector<double> prod(y.nth);
    for (int i = 0; i < y.nr; ++i) {
        const double* row = y.row(i);
        for (int j = 0; j < y.nth; ++j) prod[j] = ag.weights[j] * row[j];
        s[i] = 2.0 * kPi * pairwise_sum(prod.data(), prod.size());
    }
    return s;
}

double abs2(const cplx& z) { return z.real() * z.real() + z.imag() * z.imag(); }

void check_conformal_sign(double val, double scale, double t) {
    if (val < -1e-12 * scale)
        throw NumericalError("conformal energy density went negative at t = " + std::to_string(t));
}

} // namespace

// ---------------------------------------------------------------- quadrature

double pairwise_sum(const double* x, size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

std::vector<double> radial_weights(int n, double h) {
    if (n < 2) return std::vector<double>(std::max(n, 0), 0.0);
    std::vector<double> w(n, h);
    if (n < 8) {
        w[0] = w[n - 1] = 0.5 * h; // plain trapezoid on short windows
        return w;
    }
    w[0] = w[n - 1] = (3.0 / 8.0) * h;
    w[1] = w[n - 2] = (7.0 / 6.0) * h;
    w[2] = w[n - 3] = (23.0 / 24.0) * h;
    return w;
}

double integrate_radial(const std::vector<double>& y, double h) {
    return sum_weighted(radial_weights(static_cast<int>(y.size()), h), y);
}

double integrate_radial_window(const double* y, int i0, int i1, double h) {
    const int len = i1 - i0 + 1;
    if (len < 2) return 0.0;
    const std::vector<double> w = radial_weights(len, h);
    std::vector<double> prod(len);
    for (int k = 0; k < len; ++k) prod[k] = w[k] * y[i0 + k];
    return pairwise_sum(prod.data(), prod.size());
}

double integrate_time_samples(const std::vector<double>& y, double dt) {
    const int n = static_cast<int>(y.size()) - 1; // interval count
    if (n < 2) throw Error("time quadrature needs at least two snapshot intervals");
    std::vector<double> w(y.size(), 0.0);
    const int nsimp = (n % 2 == 0) ? n : n - 3; // even remainder for Simpson
    if (nsimp > 0) {
        w[0] += 1.0;
        w[nsimp] += 1.0;
        for (int i = 1; i < nsimp; ++i) w[i] += (i % 2) ? 4.0 : 2.0;
        for (int i = 0; i <= nsimp; ++i) w[i] *= dt / 3.0;
    }
    if (nsimp != n) { // 3/8 rule on the odd tail
        const double c = 3.0 * dt / 8.0;
        w[n - 3] += c;
        w[n - 2] += 3.0 * c;
        w[n - 1] += 3.0 * c;
        w[n] += c;
    }
    return sum_weighted(w, y);
}

// ------------------------------------------------------- multiplier family

MultiplierParams MultiplierParams::make(double epsilon, double sigma) {
    if (!(epsilon > 0.0)) throw Error("multiplier epsilon must be positive");
    if (!(sigma >= 1.0 && sigma <= 2.0)) throw Error("multiplier sigma must lie in [1, 2]");
    return {epsilon, sigma};
}

HJet multiplier_h(double rstar, const MultiplierParams& p) {
    const double e = p.epsilon, s = p.sigma;
    const double ex = e * rstar;
    const double w = 1.0 + ex * ex;
    HJet out;
    out.d1 = std::pow(w, -s);
    out.d2 = -2.0 * s * e * e * rstar * std::pow(w, -s - 1.0);
    out.d3 = -2.0 * s * e * e * std::pow(w, -s - 2.0) * (1.0 - (2.0 * s + 1.0) * ex * ex);
    if (s == 1.0) {
        out.h = std::atan(ex) / e;
    } else {
        // odd by construction: integrate on [0, |x|] and restore the sign
        const double ax = std::abs(rstar);
        double val = 0.0;
        if (ax > 0.0) {
            auto f = [e, s](double y) {
                const double t = e * y;
                return std::pow(1.0 + t * t, -s);
            };
            val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, ax, 12, 1e-13);
        }
        out.h = (rstar < 0.0) ? -val : val;
    }
    return out;
}

MuJet bump_mu(double tau) {
    const double a = std::abs(tau);
    if (a <= 0.5) return {1.0, 0.0, 0.0, 0.0};
    if (a >= 0.75) return {0.0, 0.0, 0.0, 0.0};
    // transition variable x = 4(3/4 - a) in (0, 1); jets carried in a = |tau|
    const Jet3 x{4.0 * (0.75 - a), -4.0, 0.0, 0.0};
    const Jet3 xc{1.0 - x.v, 4.0, 0.0, 0.0};
    const Jet3 ra = cutoff_rho(x);
    const Jet3 rb = cutoff_rho(xc);
    const Jet3 sj = ra / (ra + rb);
    MuJet out{sj.v, sj.d1, sj.d2, sj.d3};
    if (tau < 0.0) { // even function: odd derivative orders flip
        out.d1 = -out.d1;
        out.d3 = -out.d3;
    }
    return out;
}

GJet radial_g(double t, double rstar, const MultiplierParams& p) {
    if (!(t > 0.0)) throw Error("radial multiplier g requires t > 0");
    const double x = rstar;
    const double e = p.epsilon, s = p.sigma;

    // q(x) = h(x)/x and x-derivatives; Taylor branch removes the 0/0 at the axis
    double q, q1, q2, q3;
    if (std::abs(e * x) < 1e-4) {
        const double a = -s * e * e / 3.0;
        const double b = s * (s + 1.0) * e * e * e * e / 10.0;
        const double x2 = x * x;
        q = 1.0 + a * x2 + b * x2 * x2;
        q1 = 2.0 * a * x + 4.0 * b * x2 * x;
        q2 = 2.0 * a + 12.0 * b * x2;
        q3 = 24.0 * b * x;
    } else {
        const HJet H = multiplier_h(x, p);
        const double ix = 1.0 / x;
        q = H.h * ix;
        q1 = (H.d1 - q) * ix;
        q2 = (H.d2 - 2.0 * q1) * ix;
        q3 = (H.d3 - 3.0 * q2) * ix;
    }

    const double tau = x / t;
    const MuJet M = bump_mu(tau); // derivatives with respect to tau

    GJet g;
    g.g = t * M.mu * q;
    g.gx = M.d1 * q + t * M.mu * q1;
    g.gxx = M.d2 * q / t + 2.0 * M.d1 * q1 + t * M.mu * q2;
    g.gxxx = M.d3 * q / (t * t) + 3.0 * M.d2 * q1 / t + 3.0 * M.d1 * q2 + t * M.mu * q3;
    g.gt = q * (M.mu - tau * M.d1);
    g.gtx = q1 * (M.mu - tau * M.d1) - (tau / t) * M.d2 * q;
    return g;
}

// --------------------------------------------------- mode-path diagnostics

std::vector<double> mode_energy_density(const CVec& u, const CVec& u_t, int ell, const RadialGrid& rg) {
    const int n = rg.size();
    const double W = static_cast<double>(ell) * (ell + 1);
    CVec du(n);
    stencil_d1(u.data(), n, rg.spacing, du.data());
    std::vector<double> e(n);
    for (int i = 0; i < n; ++i) e[i] = abs2(u_t[i]) + abs2(du[i]) + W * rg.V[i] * abs2(u[i]);
    return e;
}

double mode_total_energy(const CVec& u, const CVec& u_t, int ell, const RadialGrid& rg) {
    return 0.5 * integrate_radial(mode_energy_density(u, u_t, ell, rg), rg.spacing);
}

double mode_conformal_energy(const CVec& u, const CVec& u_t, int ell, double t, const RadialGrid& rg) {
    const int n = rg.size();
    const std::vector<double> e = mode_energy_density(u, u_t, ell, rg);
    CVec du(n);
    stencil_d1(u.data(), n, rg.spacing, du.data());
    std::vector<double> ec(n);
    for (int i = 0; i < n; ++i) {
        const double x = rg.rstar[i];
        const double cross = 2.0 * t * x * (u_t[i].real() * du[i].real() + u_t[i].imag() * du[i].imag());
        const double val = 0.5 * (t * t + x * x) * e[i] + cross + e[i];
        check_conformal_sign(val, 0.5 * (t * t + x * x) * e[i] + std::abs(cross) + e[i], t);
        ec[i] = val;
    }
    return 0.5 * integrate_radial(ec, rg.spacing);
}

double mode_local_energy(const CVec& u, const CVec& u_t, int ell, double t, const RadialGrid& rg) {
    const double a = std::max(0.75 * t, 1.0);
    const auto [i0, i1] = index_window(rg, -a, a);
    if (i0 > i1) return 0.0;
    const std::vector<double> e = mode_energy_density(u, u_t, ell, rg);
    return 0.5 * integrate_radial_window(e.data(), i0, i1, rg.spacing);
}

double mode_e_gamma(const CVec& u, const CVec& u_t, double t, const RadialGrid& rg, const MultiplierParams& p) {
    if (t < 1.0) return 0.0;
    const int n = rg.size();
    CVec du(n);
    stencil_d1(u.data(), n, rg.spacing, du.data());
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        const GJet G = radial_g(t, rg.rstar[i], p);
        const cplx gamma = G.g * du[i] + 0.5 * G.gx * u[i];
        y[i] = gamma.real() * u_t[i].real() + gamma.imag() * u_t[i].imag();
    }
    return integrate_radial(y, rg.spacing);
}

LocalNorms mode_local_norms(const CVec& u, double t, const RadialGrid& rg) {
    LocalNorms out;
    const int n = rg.size();
    const double h = rg.spacing;
    const auto left = index_window(rg, -0.75 * t, -0.5 * t);
    const auto right = index_window(rg, 0.5 * t, 0.75 * t);

    std::vector<double> a2(n);
    for (int i = 0; i < n; ++i) a2[i] = abs2(u[i]);
    double l2sq = 0.0, h4sq = 0.0;
    for (const auto& w : {left, right}) {
        if (w.first > w.second) continue;
        for (int i = w.first; i <= w.second; ++i) out.linf = std::max(out.linf, std::sqrt(a2[i]));
        l2sq += integrate_radial_window(a2.data(), w.first, w.second, h);
    }
    // H^4 proxy: L^2 of the derivative chain d^k u, k = 0..4
    CVec dk = u, tmp(n);
    h4sq = l2sq;
    for (int k = 1; k <= 4; ++k) {
        stencil_d1(dk.data(), n, h, tmp.data());
        dk.swap(tmp);
        for (int i = 0; i < n; ++i) a2[i] = abs2(dk[i]);
        for (const auto& w : {left, right})
            if (w.first <= w.second) h4sq += integrate_radial_window(a2.data(), w.first, w.second, h);
    }
    out.l2 = std::sqrt(l2sq);
    out.h4 = std::sqrt(h4sq);
    return out;
}

EnergyReport mode_report(const CVec& u, const CVec& u_t, int ell, double t, const RadialGrid& rg,
                         const MultiplierParams& p) {
    EnergyReport rep;
    rep.time = t;
    rep.E = mode_total_energy(u, u_t, ell, rg);
    rep.E_C = mode_conformal_energy(u, u_t, ell, t, rg);
    rep.E_l = mode_local_energy(u, u_t, ell, t, rg);
    rep.E_gamma = mode_e_gamma(u, u_t, t, rg, p);
    rep.constraint_l2 = 0.0;
    const LocalNorms ln = mode_local_norms(u, t, rg);
    rep.linf_A_loc = ln.linf;
    rep.h4_A_loc = ln.h4;
    rep.linf_phi_loc = 0.0;
    rep.h4_phi_loc = 0.0;
    rep.l2_phi_loc = 0.0;
    return rep;
}

IdentitySample mode_identity_sample(const CVec& u, const CVec& u_t, const CVec* rho, int ell, double t,
                                    const RadialGrid& rg, const MultiplierParams& p) {
    const int n = rg.size();
    const double h = rg.spacing;
    const double W = static_cast<double>(ell) * (ell + 1);
    CVec du(n);
    stencil_d1(u.data(), n, h, du.data());

    IdentitySample s;
    s.time = t;
    s.E = mode_total_energy(u, u_t, ell, rg);
    s.E_C = mode_conformal_energy(u, u_t, ell, t, rg);
    s.E_l = mode_local_energy(u, u_t, ell, t, rg);
    s.E_gamma = mode_e_gamma(u, u_t, t, rg, p);

    // conformal balance: dE_C/dt = int t V I W |u|^2 + source pairings
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = t * rg.V[i] * rg.morawetz[i] * W * abs2(u[i]);
    s.morawetz_flux = integrate_radial(y, h);
    if (rho) {
        const CVec& r = *rho;
        for (int i = 0; i < n; ++i) {
            const double x = rg.rstar[i];
            const double rd = r[i].real() * u_t[i].real() + r[i].imag() * u_t[i].imag();
            const double rp = r[i].real() * du[i].real() + r[i].imag() * du[i].imag();
            y[i] = 0.5 * (t * t + x * x) * rd + t * x * rp + rd;
        }
        s.morawetz_q = integrate_radial(y, h);
    }

    // d(2 E_gamma)/dt = -2 int g_x |u'|^2 + (1/2) int g_xxx |u|^2 + int g W_x |u|^2
    //                   + 2 int g_t Re(u' conj u_t) + int g_tx Re(u conj u_t) + 2 int Re(gamma conj rho)
    if (t >= 1.0) {
        for (int i = 0; i < n; ++i) {
            const GJet G = radial_g(t, rg.rstar[i], p);
            const double re_du_ut = du[i].real() * u_t[i].real() + du[i].imag() * u_t[i].imag();
            const double re_u_ut = u[i].real() * u_t[i].real() + u[i].imag() * u_t[i].imag();
            double v = -2.0 * G.gx * abs2(du[i]) + 0.5 * G.gxxx * abs2(u[i]) + G.g * W * rg.dV[i] * abs2(u[i]) +
                       2.0 * G.gt * re_du_ut + G.gtx * re_u_ut;
            if (rho) {
                const cplx gamma = G.g * du[i] + 0.5 * G.gx * u[i];
                const cplx& r = (*rho)[i];
                v += 2.0 * (gamma.real() * r.real() + gamma.imag() * r.imag());
            }
            y[i] = v;
        }
        s.egamma_rhs = integrate_radial(y, h);
    }
    return s;
}

// ------------------------------------------------- coupled-path diagnostics

Real2D coupled_energy_density(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                              const RadialGrid& rg, const AngularGrid& ag) {
    const int nr = rg.size(), nth = ag.n_theta;
    const int m = ag.azimuthal_mode;
    const Field2D& u = spin.phi_0;

    Field2D du(nr, nth), duth(nr, nth);
    stencil_d1_radial(u.v.data(), nr, nth, rg.spacing, du.v.data());
    dtheta_2d(ag, u, m, 0, duth);

    const Field2D D0 = covariant_derivative(scalar, 0, rg, ag);
    const Field2D D1 = covariant_derivative(scalar, 1, rg, ag);
    const Field2D D2 = covariant_derivative(scalar, 2, rg, ag);
    const Field2D D3 = covariant_derivative(scalar, 3, rg, ag);

    Real2D e(nr, nth);
    for (int i = 0; i < nr; ++i) {
        const double V = rg.V[i];
        for (int j = 0; j < nth; ++j) {
            const double is2 = 1.0 / (ag.sin_theta[j] * ag.sin_theta[j]);
            const double eA = abs2(phi0_dt.at(i, j)) + abs2(du.at(i, j)) +
                              V * (abs2(duth.at(i, j)) + m * m * is2 * abs2(u.at(i, j)));
            const double ephi = abs2(D0.at(i, j)) + abs2(D1.at(i, j)) +
                                V * (abs2(D2.at(i, j)) + is2 * abs2(D3.at(i, j)));
            e.at(i, j) = eA + ephi;
        }
    }
    return e;
}

double coupled_total_energy(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                            const RadialGrid& rg, const AngularGrid& ag) {
    const Real2D e = coupled_energy_density(spin, phi0_dt, scalar, rg, ag);
    return 0.5 * integrate_radial(angular_reduce(ag, e), rg.spacing);
}

double coupled_conformal_energy(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                                double t, const RadialGrid& rg, const AngularGrid& ag) {
    const int nr = rg.size(), nth = ag.n_theta;
    const Real2D e = coupled_energy_density(spin, phi0_dt, scalar, rg, ag);
    Field2D du(nr, nth);
    stencil_d1_radial(spin.phi_0.v.data(), nr, nth, rg.spacing, du.v.data());
    Real2D ec(nr, nth);
    for (int i = 0; i < nr; ++i) {
        const double x = rg.rstar[i];
        for (int j = 0; j < nth; ++j) {
            const cplx ut = phi0_dt.at(i, j), up = du.at(i, j);
            const double cross = 2.0 * t * x * (ut.real() * up.real() + ut.imag() * up.imag());
            const double val = 0.5 * (t * t + x * x) * e.at(i, j) + cross + e.at(i, j);
            check_conformal_sign(val, 0.5 * (t * t + x * x) * e.at(i, j) + std::abs(cross) + e.at(i, j), t);
            ec.at(i, j) = val;
        }
    }
    return 0.5 * integrate_radial(angular_reduce(ag, ec), rg.spacing);
}

double coupled_local_energy(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                            double t, const RadialGrid& rg, const AngularGrid& ag) {
    const double a = std::max(0.75 * t, 1.0);
    const auto [i0, i1] = index_window(rg, -a, a);
    if (i0 > i1) return 0.0;
    const Real2D e = coupled_energy_density(spin, phi0_dt, scalar, rg, ag);
    const std::vector<double> s = angular_reduce(ag, e);
    return 0.5 * integrate_radial_window(s.data(), i0, i1, rg.spacing);
}

LocalNorms field_local_norms(const Field2D& u, int m, double t, const RadialGrid& rg, const AngularGrid& ag) {
    LocalNorms out;
    const int nr = rg.size(), nth = ag.n_theta;
    const double h = rg.spacing;
    const auto left = index_window(rg, -0.75 * t, -0.5 * t);
    const auto right = index_window(rg, 0.5 * t, 0.75 * t);

    Real2D a2(nr, nth);
    auto fill_a2 = [&](const Field2D& f) {
        for (size_t k = 0; k < f.v.size(); ++k) a2.v[k] = abs2(f.v[k]);
    };
    auto window_l2sq = [&](void) {
        const std::vector<double> s = angular_reduce(ag, a2);
        double acc = 0.0;
        for (const auto& w : {left, right})
            if (w.first <= w.second) acc += integrate_radial_window(s.data(), w.first, w.second, h);
        return acc;
    };

    fill_a2(u);
    for (const auto& w : {left, right})
        for (int i = w.first; i <= w.second; ++i)
            for (int j = 0; j < nth; ++j) out.linf = std::max(out.linf, std::sqrt(a2.at(i, j)));
    const double l2sq = window_l2sq();
    double h4sq = l2sq;

    // radial derivative chain k = 1..4
    Field2D dk = u, tmp(nr, nth);
    for (int k = 1; k <= 4; ++k) {
        stencil_d1_radial(dk.v.data(), nr, nth, h, tmp.v.data());
        dk.v.swap(tmp.v);
        fill_a2(dk);
        h4sq += window_l2sq();
    }
    // angular derivative chain k = 1..4 (parity of d_theta^k alternates)
    dk = u;
    for (int k = 1; k <= 4; ++k) {
        dtheta_2d(ag, dk, m, (k - 1) % 2, tmp);
        dk.v.swap(tmp.v);
        fill_a2(dk);
        h4sq += window_l2sq();
    }
    out.l2 = std::sqrt(l2sq);
    out.h4 = std::sqrt(h4sq);
    return out;
}

EnergyReport coupled_report(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                            double t, const RadialGrid& rg, const AngularGrid& ag, const MultiplierParams& p) {
    const int m = ag.azimuthal_mode;
    EnergyReport rep;
    rep.time = t;
    rep.E = coupled_total_energy(spin, phi0_dt, scalar, rg, ag);
    rep.E_C = coupled_conformal_energy(spin, phi0_dt, scalar, t, rg, ag);
    rep.E_l = coupled_local_energy(spin, phi0_dt, scalar, t, rg, ag);

    // E_gamma pairs the radial multiplier with the middle spin scalar
    if (t >= 1.0) {
        const int nr = rg.size(), nth = ag.n_theta;
        Field2D du(nr, nth);
        stencil_d1_radial(spin.phi_0.v.data(), nr, nth, rg.spacing, du.v.data());
        Real2D y(nr, nth);
        for (int i = 0; i < nr; ++i) {
            const GJet G = radial_g(t, rg.rstar[i], p);
            for (int j = 0; j < nth; ++j) {
                const cplx gamma = G.g * du.at(i, j) + 0.5 * G.gx * spin.phi_0.at(i, j);
                const cplx ut = phi0_dt.at(i, j);
                y.at(i, j) = gamma.real() * ut.real() + gamma.imag() * ut.imag();
            }
        }
        rep.E_gamma = integrate_radial(angular_reduce(ag, y), rg.spacing);
    }

    const LocalNorms lphi = field_local_norms(scalar.phi, m, t, rg, ag);
    rep.linf_phi_loc = lphi.linf;
    rep.h4_phi_loc = lphi.h4;
    rep.l2_phi_loc = lphi.l2;

    const LocalNorms lp = field_local_norms(spin.phi_plus1, m, t, rg, ag);
    const LocalNorms l0 = field_local_norms(spin.phi_0, m, t, rg, ag);
    const LocalNorms lm = field_local_norms(spin.phi_minus1, m, t, rg, ag);
    rep.linf_A_loc = std::max({lp.linf, l0.linf, lm.linf});
    rep.h4_A_loc = std::sqrt(lp.h4 * lp.h4 + l0.h4 * l0.h4 + lm.h4 * lm.h4);
    // constraint_l2 is filled by the evolution loop (needs the pm1 components' operators)
    return rep;
}

IdentitySample coupled_identity_sample(const SpinTriple& spin, const Field2D& phi0_dt, const ScalarState& scalar,
                                       const Field2D* rho, double t, const RadialGrid& rg, const AngularGrid& ag,
                                       const MultiplierParams& p) {
    const int nr = rg.size(), nth = ag.n_theta;
    const int m = ag.azimuthal_mode;
    const Field2D& u = spin.phi_0;
    const double h = rg.spacing;

    Field2D du(nr, nth), duth(nr, nth);
    stencil_d1_radial(u.v.data(), nr, nth, h, du.v.data());
    dtheta_2d(ag, u, m, 0, duth);

    IdentitySample s;
    s.time = t;
    s.E = coupled_total_energy(spin, phi0_dt, scalar, rg, ag);
    s.E_C = coupled_conformal_energy(spin, phi0_dt, scalar, t, rg, ag);
    s.E_l = coupled_local_energy(spin, phi0_dt, scalar, t, rg, ag);

    Real2D y(nr, nth);
    for (int i = 0; i < nr; ++i) {
        const double c = t * rg.V[i] * rg.morawetz[i];
        for (int j = 0; j < nth; ++j) {
            const double is2 = 1.0 / (ag.sin_theta[j] * ag.sin_theta[j]);
            y.at(i, j) = c * (abs2(duth.at(i, j)) + m * m * is2 * abs2(u.at(i, j)));
        }
    }
    s.morawetz_flux = integrate_radial(angular_reduce(ag, y), h);

    if (rho) {
        for (int i = 0; i < nr; ++i) {
            const double x = rg.rstar[i];
            for (int j = 0; j < nth; ++j) {
                const cplx r = rho->at(i, j), ut = phi0_dt.at(i, j), up = du.at(i, j);
                const double rd = r.real() * ut.real() + r.imag() * ut.imag();
                const double rp = r.real() * up.real() + r.imag() * up.imag();
                y.at(i, j) = 0.5 * (t * t + x * x) * rd + t * x * rp + rd;
            }
        }
        s.morawetz_q = integrate_radial(angular_reduce(ag, y), h);
    }

    if (t >= 1.0) {
        Real2D yg(nr, nth);
        for (int i = 0; i < nr; ++i) {
            const GJet G = radial_g(t, rg.rstar[i], p);
            for (int j = 0; j < nth; ++j) {
                const double is2 = 1.0 / (ag.sin_theta[j] * ag.sin_theta[j]);
                const cplx ut = phi0_dt.at(i, j), up = du.at(i, j);
                const double grad2 = abs2(duth.at(i, j)) + m * m * is2 * abs2(u.at(i, j));
                const double re_du_ut = up.real() * ut.real() + up.imag() * ut.imag();
                const double re_u_ut = u.at(i, j).real() * ut.real() + u.at(i, j).imag() * ut.imag();
                double v = -2.0 * G.gx * abs2(up) + 0.5 * G.gxxx * abs2(u.at(i, j)) + G.g * rg.dV[i] * grad2 +
                           2.0 * G.gt * re_du_ut + G.gtx * re_u_ut;
                if (rho) {
                    const cplx gamma = G.g * up + 0.5 * G.gx * u.at(i, j);
                    const cplx r = rho->at(i, j);
                    v += 2.0 * (gamma.real() * r.real() + gamma.imag() * r.imag());
                }
                yg.at(i, j) = v;
            }
        }
        s.egamma_rhs = integrate_radial(angular_reduce(ag, yg), h);
        // slice E_gamma itself
        for (int i = 0; i < nr; ++i) {
            const GJet G = radial_g(t, rg.rstar[i], p);
            for (int j = 0; j < nth; ++j) {
                const cplx gamma = G.g * du.at(i, j) + 0.5 * G.gx * u.at(i, j);
                const cplx ut = phi0_dt.at(i, j);
                y.at(i, j) = gamma.real() * ut.real() + gamma.imag() * ut.imag();
            }
        }
        s.E_gamma = integrate_radial(angular_reduce(ag, y), h);
    }
    return s;
}

// --------------------------------------------------------- window norms

WindowNorms window_local_norms(const RunHistory& h, double t1, double t2) {
    WindowNorms out;
    std::vector<const EnergyReport*> in;
    for (const auto& r : h.reports)
        if (r.time >= t1 - 1e-9 && r.time <= t2 + 1e-9) in.push_back(&r);
    if (in.empty()) return out;
    if (in.size() == 1) {
        out.phi = {in[0]->linf_phi_loc, in[0]->l2_phi_loc, in[0]->h4_phi_loc};
        out.A = {in[0]->linf_A_loc, 0.0, in[0]->h4_A_loc};
        return out;
    }
    double l2p = 0.0, h4p = 0.0, h4a = 0.0;
    for (size_t k = 0; k + 1 < in.size(); ++k) {
        const double dt = in[k + 1]->time - in[k]->time;
        l2p += 0.5 * dt * (in[k]->l2_phi_loc * in[k]->l2_phi_loc + in[k + 1]->l2_phi_loc * in[k + 1]->l2_phi_loc);
        h4p += 0.5 * dt * (in[k]->h4_phi_loc * in[k]->h4_phi_loc + in[k + 1]->h4_phi_loc * in[k + 1]->h4_phi_loc);
        h4a += 0.5 * dt * (in[k]->h4_A_loc * in[k]->h4_A_loc + in[k + 1]->h4_A_loc * in[k + 1]->h4_A_loc);
    }
    for (const auto* r : in) {
        out.phi.linf = std::max(out.phi.linf, r->linf_phi_loc);
        out.A.linf = std::max(out.A.linf, r->linf_A_loc);
    }
    out.phi.l2 = std::sqrt(l2p);
    out.phi.h4 = std::sqrt(h4p);
    out.A.h4 = std::sqrt(h4a);
    return out;
}

// ----------------------------------------------------- identity residuals

namespace {

int sample_index(const RunHistory& h, double t) {
    for (size_t i = 0; i < h.samples.size(); ++i)
        if (std::abs(h.samples[i].time - t) <= 1e-9 * std::max(1.0, std::abs(t))) return static_cast<int>(i);
    throw Error("requested time is not a stored snapshot");
}

double sample_dt(const RunHistory& h, int i1, int i2) {
    const double dt = h.samples[i1 + 1].time - h.samples[i1].time;
    for (int i = i1; i < i2; ++i) {
        const double gap = h.samples[i + 1].time - h.samples[i].time;
        if (std::abs(gap - dt) > 1e-9 * std::max(1.0, dt)) throw Error("snapshot spacing is not uniform");
    }
    return dt;
}

} // namespace

double morawetz_balance_residual(const RunHistory& h, double t1, double t2) {
    const int i1 = sample_index(h, t1), i2 = sample_index(h, t2);
    if (i2 - i1 < 2) throw Error("balance window must span at least two snapshot intervals");
    const double dt = sample_dt(h, i1, i2);
    std::vector<double> y(i2 - i1 + 1);
    for (int i = i1; i <= i2; ++i) y[i - i1] = h.samples[i].morawetz_flux + h.samples[i].morawetz_q;
    const double integral = integrate_time_samples(y, dt);
    return std::abs(h.samples[i2].E_C - h.samples[i1].E_C - integral);
}

double egamma_identity_residual(const RunHistory& h, double t1, double t2, const MultiplierParams& p) {
    if (p.epsilon != h.multiplier.epsilon || p.sigma != h.multiplier.sigma)
        throw Error("multiplier parameters must match the ones the run recorded");
    if (t1 < 1.0) throw Error("the radial-multiplier identity starts at t = 1");
    const int i1 = sample_index(h, t1), i2 = sample_index(h, t2);
    if (i2 - i1 < 2) throw Error("balance window must span at least two snapshot intervals");
    const double dt = sample_dt(h, i1, i2);
    std::vector<double> y(i2 - i1 + 1);
    for (int i = i1; i <= i2; ++i) y[i - i1] = h.samples[i].egamma_rhs;
    const double integral = integrate_time_samples(y, dt);
    return std::abs(2.0 * h.samples[i2].E_gamma - 2.0 * h.samples[i1].E_gamma - integral);
}

// --------------------------------------------------------------- formatting

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

} // namespace

std::string format_reports_csv(const std::vector<EnergyReport>& reports) {
    std::string out = "t,E,E_C,E_l,E_gamma,constraint_l2,linf_phi_loc,linf_A_loc,h4_phi_loc,h4_A_loc\n";
    double prev = -1e300;
    for (const auto& r : reports) {
        if (!(r.time > prev)) throw Error("report times must increase strictly");
        prev = r.time;
        const double cols[10] = {r.time,          r.E,           r.E_C,        r.E_l,        r.E_gamma,
                                 r.constraint_l2, r.linf_phi_loc, r.linf_A_loc, r.h4_phi_loc, r.h4_A_loc};
        for (int k = 0; k < 10; ++k) {
            if (k) out.push_back(',');
            append_double(out, cols[k]);
        }
        out.push_back('\n');
    }
    return out;
}

std::vector<EnergyReport> parse_reports_csv(const std::string& text) {
    std::vector<EnergyReport> reports;
    size_t pos = 0;
    int line_no = 0;
    double prev = -1e300;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "t,E,E_C,E_l,E_gamma,constraint_l2,linf_phi_loc,linf_A_loc,h4_phi_loc,h4_A_loc")
                throw ConfigError("history csv line 1: unexpected header");
            continue;
        }
        double cols[10];
        const char* p = line.data();
        const char* stop = line.data() + line.size();
        for (int k = 0; k < 10; ++k) {
            if (k) {
                if (p >= stop || *p != ',')
                    throw ConfigError("history csv line " + std::to_string(line_no) +
                                      ": expected 10 comma-separated values");
                ++p;
            }
            const auto res = std::from_chars(p, stop, cols[k]);
            if (res.ec != std::errc())
                throw ConfigError("history csv line " + std::to_string(line_no) +
                                  ": bad number in column " + std::to_string(k + 1));
            p = res.ptr;
        }
        if (p != stop)
            throw ConfigError("history csv line " + std::to_string(line_no) +
                              ": trailing characters after 10 columns");
        if (!(cols[0] > prev))
            throw ConfigError("history csv line " + std::to_string(line_no) +
                              ": times must increase strictly");
        prev = cols[0];
        EnergyReport r;
        r.time = cols[0];
        r.E = cols[1];
        r.E_C = cols[2];
        r.E_l = cols[3];
        r.E_gamma = cols[4];
        r.constraint_l2 = cols[5];
        r.linf_phi_loc = cols[6];
        r.linf_A_loc = cols[7];
        r.h4_phi_loc = cols[8];
        r.h4_A_loc = cols[9];
        reports.push_back(r);
    }
    if (reports.empty()) throw ConfigError("history csv: no data rows");
    return reports;
}

} // namespace mhrn
