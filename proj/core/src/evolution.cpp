#include "mhrn/evolution.hpp"

#include "mhrn/error.hpp"
#include "mhrn/stencil.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mhrn {

namespace {

constexpr cplx I{0.0, 1.0};

// panel coefficients for the cumulative quartic integrator: row o integrates
// the interpolant over [s_o, s_{o+1}] with nodes s = 0..4 (exact through x^4)
constexpr double kPanel[4][5] = {
    {251.0 / 720, 646.0 / 720, -264.0 / 720, 106.0 / 720, -19.0 / 720},
    {-19.0 / 720, 346.0 / 720, 456.0 / 720, -74.0 / 720, 11.0 / 720},
    {11.0 / 720, -74.0 / 720, 456.0 / 720, 346.0 / 720, -19.0 / 720},
    {-19.0 / 720, 106.0 / 720, -264.0 / 720, 646.0 / 720, 251.0 / 720},
};

template <typename T>
std::vector<T> cumulative_impl(const std::vector<T>& y, double h) {
    const int n = static_cast<int>(y.size());
    if (n < 5) throw Error("cumulative integral needs at least five nodes");
    std::vector<T> out(n);
    out[0] = T{};
    for (int j = 0; j + 1 < n; ++j) {
        const int k = std::clamp(j - 2, 0, n - 5);
        const double* c = kPanel[j - k];
        const T panel = c[0] * y[k] + c[1] * y[k + 1] + c[2] * y[k + 2] + c[3] * y[k + 3] +
                        c[4] * y[k + 4];
        out[j + 1] = out[j] + h * panel;
    }
    return out;
}

void zero_row(Field2D& f, int i) {
    cplx* p = f.row(i);
    std::fill(p, p + f.nth, cplx{0.0, 0.0});
}

void freeze_rows(CoupledDeriv& d, int nr) {
    for (int i : {0, 1, nr - 2, nr - 1}) {
        zero_row(d.spin.phi_plus1, i);
        zero_row(d.spin.phi_0, i);
        zero_row(d.spin.phi_minus1, i);
        zero_row(d.phi, i);
        zero_row(d.pi, i);
    }
}

void axpy(const Field2D& base, const Field2D& k, double c, Field2D& out) {
    const long long n = static_cast<long long>(base.v.size());
#pragma omp parallel for schedule(static)
    for (long long t = 0; t < n; ++t) out.v[t] = base.v[t] + c * k.v[t];
}

void combine(Field2D& y, const Field2D& k1, const Field2D& k2, const Field2D& k3,
             const Field2D& k4, double w) {
    const long long n = static_cast<long long>(y.v.size());
#pragma omp parallel for schedule(static)
    for (long long t = 0; t < n; ++t)
        y.v[t] += w * (k1.v[t] + 2.0 * k2.v[t] + 2.0 * k3.v[t] + k4.v[t]);
}

bool all_finite(const cplx* p, size_t n) {
    for (size_t t = 0; t < n; ++t)
        if (!std::isfinite(p[t].real()) || !std::isfinite(p[t].imag())) return false;
    return true;
}

bool state_finite(const ModeState& s) {
    return all_finite(s.u.data(), s.u.size()) && all_finite(s.u_t.data(), s.u_t.size());
}

bool state_finite(const CoupledState& s) {
    return all_finite(s.spin.phi_plus1.v.data(), s.spin.phi_plus1.v.size()) &&
           all_finite(s.spin.phi_0.v.data(), s.spin.phi_0.v.size()) &&
           all_finite(s.spin.phi_minus1.v.data(), s.spin.phi_minus1.v.size()) &&
           all_finite(s.scalar.phi.v.data(), s.scalar.phi.v.size()) &&
           all_finite(s.scalar.pi.v.data(), s.scalar.pi.v.size());
}

void check_step_size(double dt, double limit) {
    if (!(dt > 0.0)) throw Error("step size must be positive");
    if (dt > 0.75 * limit)
        throw Error("step size " + std::to_string(dt) + " exceeds 0.75x the grid limit " +
                    std::to_string(limit));
}

// number of snapshots per report, inner steps per snapshot, and the snapped dt
struct Cadence {
    double dt = 0.0;
    int per_snap = 1;
    int snaps_per_report = 1;
    long n_snaps = 0;
};

Cadence make_cadence(const RunConfig& c, double dt_raw) {
    Cadence cd;
    cd.per_snap = std::max(1, static_cast<int>(std::ceil(c.snapshot_cadence / dt_raw - 1e-9)));
    cd.dt = c.snapshot_cadence / cd.per_snap;
    cd.snaps_per_report = static_cast<int>(std::llround(c.report_cadence / c.snapshot_cadence));
    const long n_reports =
        (c.t_final <= 0.0) ? 0 : static_cast<long>(std::ceil(c.t_final / c.report_cadence - 1e-9));
    cd.n_snaps = n_reports * cd.snaps_per_report;
    return cd;
}

[[noreturn]] void throw_nonfinite(long step, double t) {
    throw NumericalError("non-finite field value at step " + std::to_string(step) +
                         " (t = " + std::to_string(t) + ")");
}

} // namespace

// ------------------------------------------------------------ mode path

ModeWorkspace::ModeWorkspace(int n)
    : k1{CVec(n), CVec(n)}, k2{CVec(n), CVec(n)}, k3{CVec(n), CVec(n)}, k4{CVec(n), CVec(n)} {
    stage.u.resize(n);
    stage.u_t.resize(n);
}

void mode_rhs(const ModeState& s, const RadialGrid& rg, Boundary bc, ModeDeriv& out) {
    const int n = rg.size();
    const double W = static_cast<double>(s.ell) * (s.ell + 1);
    out.u.resize(n);
    out.u_t.resize(n);
    std::copy(s.u_t.begin(), s.u_t.end(), out.u.begin());
    stencil_d2(s.u.data(), n, rg.spacing, out.u_t.data());
    for (int i = 0; i < n; ++i) out.u_t[i] -= W * rg.V[i] * s.u[i];
    if (bc == Boundary::frozen) {
        for (int i : {0, 1, n - 2, n - 1}) {
            out.u[i] = 0.0;
            out.u_t[i] = 0.0;
        }
    } else {
        // one-sided d/dr* of u_t at the edge nodes; left edge carries
        // left-going waves (d_t = +d_x), right edge right-going (d_t = -d_x)
        const double c = 1.0 / (12.0 * rg.spacing);
        const cplx* v = s.u_t.data();
        out.u_t[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) * c;
        out.u_t[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) * c;
        out.u_t[n - 2] =
            -(3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]) * c;
        out.u_t[n - 1] =
            -(25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] + 3.0 * v[n - 5]) *
            c;
    }
}

double cfl_dt(const RadialGrid& rg, double cfl) { return cfl * rg.spacing; }

double cfl_dt(const RadialGrid& rg, const AngularGrid& ag, double cfl) {
    double vmax = 0.0;
    for (double v : rg.V) vmax = std::max(vmax, v);
    return cfl * std::min(rg.spacing, ag.spacing / std::sqrt(vmax));
}

void step_rk4(ModeState& s, double dt, const RadialGrid& rg, Boundary bc, ModeWorkspace& w) {
    check_step_size(dt, rg.spacing);
    const int n = rg.size();
    w.stage.ell = s.ell;
    auto stage_from = [&](const ModeDeriv& k, double c) {
        for (int i = 0; i < n; ++i) {
            w.stage.u[i] = s.u[i] + c * k.u[i];
            w.stage.u_t[i] = s.u_t[i] + c * k.u_t[i];
        }
        w.stage.time = s.time + c;
    };
    mode_rhs(s, rg, bc, w.k1);
    stage_from(w.k1, 0.5 * dt);
    mode_rhs(w.stage, rg, bc, w.k2);
    stage_from(w.k2, 0.5 * dt);
    mode_rhs(w.stage, rg, bc, w.k3);
    stage_from(w.k3, dt);
    mode_rhs(w.stage, rg, bc, w.k4);
    const double c = dt / 6.0;
    for (int i = 0; i < n; ++i) {
        s.u[i] += c * (w.k1.u[i] + 2.0 * w.k2.u[i] + 2.0 * w.k3.u[i] + w.k4.u[i]);
        s.u_t[i] += c * (w.k1.u_t[i] + 2.0 * w.k2.u_t[i] + 2.0 * w.k3.u_t[i] + w.k4.u_t[i]);
    }
    s.time += dt;
}

// --------------------------------------------------------- coupled path

namespace {
CoupledDeriv make_deriv(int nr, int nth) {
    CoupledDeriv d;
    d.spin = SpinTriple(nr, nth);
    d.phi = Field2D(nr, nth);
    d.pi = Field2D(nr, nth);
    return d;
}
} // namespace

CoupledWorkspace::CoupledWorkspace(const CoupledState& proto) {
    const int nr = proto.spin.phi_0.nr, nth = proto.spin.phi_0.nth;
    k1 = make_deriv(nr, nth);
    k2 = make_deriv(nr, nth);
    k3 = make_deriv(nr, nth);
    k4 = make_deriv(nr, nth);
    stage.spin = SpinTriple(nr, nth);
    stage.scalar = ScalarState(nr, nth);
    stage.scalar.gauge = proto.scalar.gauge;
    stage.scalar_active = proto.scalar_active;
    dplus = Field2D(nr, nth);
    dminus = Field2D(nr, nth);
    a_plus = Field2D(nr, nth);
    a_minus = Field2D(nr, nth);
    b_plus = Field2D(nr, nth);
    b_minus = Field2D(nr, nth);
}

void coupled_rhs(const CoupledState& s, const RadialGrid& rg, const AngularGrid& ag,
                 CoupledWorkspace& w, CoupledDeriv& out) {
    const int nr = s.spin.phi_0.nr, nth = s.spin.phi_0.nth;
    const int m = ag.azimuthal_mode;
    stencil_d1_radial(s.spin.phi_plus1.v.data(), nr, nth, rg.spacing, w.dplus.v.data());
    stencil_d1_radial(s.spin.phi_minus1.v.data(), nr, nth, rg.spacing, w.dminus.v.data());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nr; ++i) {
        apply_M(ag, s.spin.phi_0.row(i), m, w.a_plus.row(i), 0);
        apply_Mbar(ag, s.spin.phi_0.row(i), m, w.a_minus.row(i), 0);
        apply_Mbar(ag, s.spin.phi_plus1.row(i), m, w.b_plus.row(i), 1);
        apply_M1(ag, s.spin.phi_minus1.row(i), m, w.b_minus.row(i), -1);
    }
    if (s.scalar_active) {
        const Field2D D0 = covariant_derivative(s.scalar, 0, rg, ag);
        const Field2D D1 = covariant_derivative(s.scalar, 1, rg, ag);
        const Field2D D2 = covariant_derivative(s.scalar, 2, rg, ag);
        const Field2D D3 = covariant_derivative(s.scalar, 3, rg, ag);
        out.pi = scalar_pi_rhs(s.scalar, rg, ag);
        std::copy(s.scalar.pi.v.begin(), s.scalar.pi.v.end(), out.phi.v.begin());
#pragma omp parallel for schedule(static)
        for (int i = 0; i < nr; ++i) {
            const double V = rg.V[i], f = rg.f[i], r2 = rg.r[i] * rg.r[i];
            for (int j = 0; j < nth; ++j) {
                const cplx ph = s.scalar.phi.at(i, j);
                auto bilinear = [&](const cplx& d) {
                    const cplx z = d * std::conj(ph);
                    return z - std::conj(z);
                };
                const cplx S = I * f * bilinear(D2.at(i, j)) +
                               I * (f / ag.sin_theta[j]) * bilinear(D3.at(i, j));
                const cplx T = I * r2 * (bilinear(D0.at(i, j)) + bilinear(D1.at(i, j)));
                out.spin.phi_plus1.at(i, j) = w.dplus.at(i, j) + V * w.a_plus.at(i, j) + S;
                out.spin.phi_minus1.at(i, j) = -w.dminus.at(i, j) + V * w.a_minus.at(i, j) + S;
                out.spin.phi_0.at(i, j) = 0.5 * (w.b_plus.at(i, j) - w.b_minus.at(i, j)) + T;
            }
        }
    } else {
        std::fill(out.phi.v.begin(), out.phi.v.end(), cplx{0.0, 0.0});
        std::fill(out.pi.v.begin(), out.pi.v.end(), cplx{0.0, 0.0});
#pragma omp parallel for schedule(static)
        for (int i = 0; i < nr; ++i) {
            const double V = rg.V[i];
            for (int j = 0; j < nth; ++j) {
                out.spin.phi_plus1.at(i, j) = w.dplus.at(i, j) + V * w.a_plus.at(i, j);
                out.spin.phi_minus1.at(i, j) = -w.dminus.at(i, j) + V * w.a_minus.at(i, j);
                out.spin.phi_0.at(i, j) = 0.5 * (w.b_plus.at(i, j) - w.b_minus.at(i, j));
            }
        }
    }
    freeze_rows(out, nr);
}

CoupledDeriv coupled_rhs(const CoupledState& s, const RadialGrid& rg, const AngularGrid& ag) {
    CoupledWorkspace w(s);
    CoupledDeriv out = make_deriv(s.spin.phi_0.nr, s.spin.phi_0.nth);
    coupled_rhs(s, rg, ag, w, out);
    return out;
}

double constraint_residual(const CoupledState& s, const RadialGrid& rg, const AngularGrid& ag) {
    const int nr = s.spin.phi_0.nr, nth = s.spin.phi_0.nth;
    const int m = ag.azimuthal_mode;
    Field2D d0(nr, nth), bp(nr, nth), bm(nr, nth);
    stencil_d1_radial(s.spin.phi_0.v.data(), nr, nth, rg.spacing, d0.v.data());
    for (int i = 0; i < nr; ++i) {
        apply_Mbar(ag, s.spin.phi_plus1.row(i), m, bp.row(i), 1);
        apply_M1(ag, s.spin.phi_minus1.row(i), m, bm.row(i), -1);
    }
    const std::vector<double> wr = radial_weights(nr, rg.spacing);
    std::vector<double> rowsum(nth), radial(nr);
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nth; ++j) {
            const cplx res = d0.at(i, j) - 0.5 * (bp.at(i, j) + bm.at(i, j));
            rowsum[j] = ag.weights[j] * std::norm(res);
        }
        radial[i] = wr[i] * pairwise_sum(rowsum.data(), rowsum.size());
    }
    const double pi = 3.14159265358979323846;
    return std::sqrt(2.0 * pi * pairwise_sum(radial.data(), radial.size()));
}

void step_rk4(CoupledState& s, double dt, const RadialGrid& rg, const AngularGrid& ag,
              CoupledWorkspace& w) {
    double vmax = 0.0;
    for (double v : rg.V) vmax = std::max(vmax, v);
    check_step_size(dt, std::min(rg.spacing, ag.spacing / std::sqrt(vmax)));
    auto stage_from = [&](const CoupledDeriv& k, double c) {
        axpy(s.spin.phi_plus1, k.spin.phi_plus1, c, w.stage.spin.phi_plus1);
        axpy(s.spin.phi_0, k.spin.phi_0, c, w.stage.spin.phi_0);
        axpy(s.spin.phi_minus1, k.spin.phi_minus1, c, w.stage.spin.phi_minus1);
        axpy(s.scalar.phi, k.phi, c, w.stage.scalar.phi);
        axpy(s.scalar.pi, k.pi, c, w.stage.scalar.pi);
        w.stage.time = s.time + c;
    };
    coupled_rhs(s, rg, ag, w, w.k1);
    stage_from(w.k1, 0.5 * dt);
    coupled_rhs(w.stage, rg, ag, w, w.k2);
    stage_from(w.k2, 0.5 * dt);
    coupled_rhs(w.stage, rg, ag, w, w.k3);
    stage_from(w.k3, dt);
    coupled_rhs(w.stage, rg, ag, w, w.k4);
    const double c = dt / 6.0;
    combine(s.spin.phi_plus1, w.k1.spin.phi_plus1, w.k2.spin.phi_plus1, w.k3.spin.phi_plus1,
            w.k4.spin.phi_plus1, c);
    combine(s.spin.phi_0, w.k1.spin.phi_0, w.k2.spin.phi_0, w.k3.spin.phi_0, w.k4.spin.phi_0, c);
    combine(s.spin.phi_minus1, w.k1.spin.phi_minus1, w.k2.spin.phi_minus1, w.k3.spin.phi_minus1,
            w.k4.spin.phi_minus1, c);
    combine(s.scalar.phi, w.k1.phi, w.k2.phi, w.k3.phi, w.k4.phi, c);
    combine(s.scalar.pi, w.k1.pi, w.k2.pi, w.k3.pi, w.k4.pi, c);
    s.time += dt;
}

// ---------------------------------------------------- cumulative integral

std::vector<double> cumulative_integral(const std::vector<double>& y, double h) {
    return cumulative_impl(y, h);
}

CVec cumulative_integral(const CVec& y, double h) { return cumulative_impl(y, h); }

// ----------------------------------------------------------- initial data

ModeState mode_initial_data(const RunConfig& c, const RadialGrid& rg) {
    const int n = rg.size();
    ModeState s;
    s.ell = c.ell;
    s.u.assign(n, cplx{0.0, 0.0});
    s.u_t.assign(n, cplx{0.0, 0.0});
    if (c.shape == "gaussian" && c.amplitude != 0.0) {
        const double w2 = c.width * c.width;
        for (int i = 0; i < n; ++i) {
            const double dx = rg.rstar[i] - c.center;
            const double g = c.amplitude * std::exp(-dx * dx / w2);
            s.u[i] = g;
            if (c.direction == "outgoing")
                s.u_t[i] = 2.0 * dx / w2 * g; // -d1 of the profile
            else if (c.direction == "ingoing")
                s.u_t[i] = -2.0 * dx / w2 * g;
        }
    }
    return s;
}

CoupledState coupled_initial_data(const RunConfig& c, const RadialGrid& rg, const AngularGrid& ag) {
    const int nr = rg.size(), nth = ag.n_theta;
    const int mm = std::abs(c.m);
    CoupledState s;
    s.spin = coulomb_reference(rg, ag, c.q_A);
    s.scalar = ScalarState(nr, nth);
    if (c.q_A != 0.0) s.scalar.gauge = GaugePotential::coulomb(rg, nth, c.q_A);

    const double w2 = c.width * c.width;
    if (c.shape == "gaussian" && c.amplitude != 0.0) {
        for (int i = 0; i < nr; ++i) {
            const double dx = rg.rstar[i] - c.center;
            const double g = c.amplitude * std::exp(-dx * dx / w2);
            const double gx = -2.0 * dx / w2 * g;
            for (int j = 0; j < nth; ++j) {
                const double prof = (mm == 0) ? 1.0 : std::pow(ag.sin_theta[j], mm);
                s.scalar.phi.at(i, j) = g * prof;
                if (c.direction == "outgoing")
                    s.scalar.pi.at(i, j) = -gx * prof;
                else if (c.direction == "ingoing")
                    s.scalar.pi.at(i, j) = gx * prof;
            }
        }
        s.scalar_active = true;
    }

    if (c.spin_amplitude != 0.0) {
        // degree-ell shapes: P the associated Legendre profile, sp/sm its
        // spin-raised and spin-lowered partners
        std::vector<double> P(nth), sp(nth), sm(nth);
        for (int j = 0; j < nth; ++j) {
            const double x = ag.cos_theta[j], sn = ag.sin_theta[j];
            const double p = std::assoc_legendre(c.ell, mm, x);
            const double pm1 = (c.ell >= 1 && c.ell - 1 >= mm)
                                   ? std::assoc_legendre(c.ell - 1, mm, x)
                                   : 0.0;
            const double dp = -(c.ell * x * p - (c.ell + mm) * pm1) / sn;
            P[j] = p;
            sp[j] = dp - mm / sn * p;
            sm[j] = dp + mm / sn * p;
        }
        for (int i = 0; i < nr; ++i) {
            const double dx = rg.rstar[i] - c.center;
            const double g = c.spin_amplitude * std::exp(-dx * dx / w2);
            for (int j = 0; j < nth; ++j) {
                s.spin.phi_plus1.at(i, j) += g * sp[j];
                s.spin.phi_minus1.at(i, j) += g * sm[j];
            }
        }
        if (c.constraint_solved) {
            // rebuild the middle component so d1 Phi_0 matches the
            // angular divergence of the outer components
            Field2D bp(nr, nth), bm(nr, nth);
            for (int i = 0; i < nr; ++i) {
                apply_Mbar(ag, s.spin.phi_plus1.row(i), c.m, bp.row(i), 1);
                apply_M1(ag, s.spin.phi_minus1.row(i), c.m, bm.row(i), -1);
            }
            CVec column(nr);
            for (int j = 0; j < nth; ++j) {
                for (int i = 0; i < nr; ++i) column[i] = 0.5 * (bp.at(i, j) + bm.at(i, j));
                const CVec cum = cumulative_integral(column, rg.spacing);
                for (int i = 0; i < nr; ++i) s.spin.phi_0.at(i, j) = c.q_A + cum[i];
            }
        } else {
            for (int i = 0; i < nr; ++i) {
                const double dx = rg.rstar[i] - c.center;
                const double g = c.spin_amplitude * std::exp(-dx * dx / w2);
                for (int j = 0; j < nth; ++j) s.spin.phi_0.at(i, j) += g * P[j];
            }
        }
    }
    return s;
}

// ------------------------------------------------------------- full runs

RunHistory evolve_mode(const RunConfig& c) {
    validate_config(c);
    const Background bg = Background::make(c.mass, c.charge);
    const RadialGrid rg = RadialGrid::make(bg, c.rstar_min, c.rstar_max, c.n_points);
    const MultiplierParams mp = MultiplierParams::make(c.epsilon, c.sigma);
    const Boundary bc = (c.boundary == "sommerfeld") ? Boundary::sommerfeld : Boundary::frozen;

    ModeState s = mode_initial_data(c, rg);
    RunHistory h;
    h.multiplier = mp;
    h.ell = c.ell;
    h.m = c.m;
    h.initial_energy = mode_total_energy(s.u, s.u_t, s.ell, rg);
    h.initial_conformal = mode_conformal_energy(s.u, s.u_t, s.ell, 0.0, rg);
    const double ll1 = static_cast<double>(c.ell) * (c.ell + 1);
    h.initial_bilaplacian = ll1 * ll1 * ll1 * ll1 * h.initial_energy;

    const Cadence cd = make_cadence(c, cfl_dt(rg, c.cfl));
    ModeWorkspace w(rg.size());
    auto record = [&](long snap) {
        h.samples.push_back(mode_identity_sample(s.u, s.u_t, nullptr, s.ell, s.time, rg, mp));
        if (snap % cd.snaps_per_report == 0)
            h.reports.push_back(mode_report(s.u, s.u_t, s.ell, s.time, rg, mp));
    };
    record(0);
    long step = 0;
    for (long k = 1; k <= cd.n_snaps; ++k) {
        for (int q = 0; q < cd.per_snap; ++q) {
            step_rk4(s, cd.dt, rg, bc, w);
            ++step;
            s.time = cd.dt * static_cast<double>(step);
            if (!state_finite(s)) throw_nonfinite(step, s.time);
        }
        record(k);
    }
    return h;
}

ModeState evolve_mode_final(const RunConfig& c) {
    validate_config(c);
    const Background bg = Background::make(c.mass, c.charge);
    const RadialGrid rg = RadialGrid::make(bg, c.rstar_min, c.rstar_max, c.n_points);
    const Boundary bc = (c.boundary == "sommerfeld") ? Boundary::sommerfeld : Boundary::frozen;
    ModeState s = mode_initial_data(c, rg);
    const Cadence cd = make_cadence(c, cfl_dt(rg, c.cfl));
    ModeWorkspace w(rg.size());
    long step = 0;
    const long total = cd.n_snaps * cd.per_snap;
    while (step < total) {
        step_rk4(s, cd.dt, rg, bc, w);
        ++step;
        s.time = cd.dt * static_cast<double>(step);
        if (!state_finite(s)) throw_nonfinite(step, s.time);
    }
    return s;
}

namespace {

// energy of the twice theta-laplaced middle component (zero scalar sector)
double bilaplacian_energy(const SpinTriple& spin, const Field2D& phi0_dt, const RadialGrid& rg,
                          const AngularGrid& ag) {
    const int nr = spin.phi_0.nr, nth = spin.phi_0.nth;
    const int m = ag.azimuthal_mode;
    auto lap2 = [&](const Field2D& f) {
        Field2D once(nr, nth), twice(nr, nth);
        for (int i = 0; i < nr; ++i) apply_laplacian_S(ag, f.row(i), m, once.row(i), 0);
        for (int i = 0; i < nr; ++i) apply_laplacian_S(ag, once.row(i), m, twice.row(i), 0);
        return twice;
    };
    SpinTriple probe(nr, nth);
    probe.phi_0 = lap2(spin.phi_0);
    const Field2D probe_dt = lap2(phi0_dt);
    const ScalarState silent(nr, nth);
    return coupled_total_energy(probe, probe_dt, silent, rg, ag);
}

} // namespace

RunHistory evolve_coupled(const RunConfig& c) {
    validate_config(c);
    if (c.boundary == "sommerfeld")
        throw ConfigError("config: sommerfeld boundary is only available on the mode path");
    const Background bg = Background::make(c.mass, c.charge);
    const RadialGrid rg = RadialGrid::make(bg, c.rstar_min, c.rstar_max, c.n_points);
    const AngularGrid ag = AngularGrid::make(c.n_theta, c.m);
    const MultiplierParams mp = MultiplierParams::make(c.epsilon, c.sigma);

    CoupledState s = coupled_initial_data(c, rg, ag);
    CoupledWorkspace w(s);
    RunHistory h;
    h.multiplier = mp;
    h.ell = c.ell;
    h.m = c.m;

    Field2D rho_store;
    auto record = [&](long snap, const Cadence& cd) {
        coupled_rhs(s, rg, ag, w, w.k1);
        const Field2D& phi0_dt = w.k1.spin.phi_0;
        const Field2D* rho = nullptr;
        if (s.scalar_active) {
            rho_store = source_rho(s.scalar, rg, ag);
            rho = &rho_store;
        }
        h.samples.push_back(
            coupled_identity_sample(s.spin, phi0_dt, s.scalar, rho, s.time, rg, ag, mp));
        if (snap % cd.snaps_per_report == 0) {
            EnergyReport rep = coupled_report(s.spin, phi0_dt, s.scalar, s.time, rg, ag, mp);
            rep.constraint_l2 = constraint_residual(s, rg, ag);
            h.reports.push_back(rep);
        }
    };

    {
        coupled_rhs(s, rg, ag, w, w.k1);
        h.initial_energy = coupled_total_energy(s.spin, w.k1.spin.phi_0, s.scalar, rg, ag);
        h.initial_conformal =
            coupled_conformal_energy(s.spin, w.k1.spin.phi_0, s.scalar, 0.0, rg, ag);
        h.initial_bilaplacian = bilaplacian_energy(s.spin, w.k1.spin.phi_0, rg, ag);
    }

    const Cadence cd = make_cadence(c, cfl_dt(rg, ag, c.cfl));
    record(0, cd);
    long step = 0;
    for (long k = 1; k <= cd.n_snaps; ++k) {
        for (int q = 0; q < cd.per_snap; ++q) {
            step_rk4(s, cd.dt, rg, ag, w);
            ++step;
            s.time = cd.dt * static_cast<double>(step);
            if (!state_finite(s)) throw_nonfinite(step, s.time);
        }
        record(k, cd);
    }
    return h;
}

CoupledState evolve_coupled_final(const RunConfig& c) {
    validate_config(c);
    if (c.boundary == "sommerfeld")
        throw ConfigError("config: sommerfeld boundary is only available on the mode path");
    const Background bg = Background::make(c.mass, c.charge);
    const RadialGrid rg = RadialGrid::make(bg, c.rstar_min, c.rstar_max, c.n_points);
    const AngularGrid ag = AngularGrid::make(c.n_theta, c.m);

    CoupledState s = coupled_initial_data(c, rg, ag);
    CoupledWorkspace w(s);
    const Cadence cd = make_cadence(c, cfl_dt(rg, ag, c.cfl));
    long step = 0;
    const long total = cd.n_snaps * cd.per_snap;
    while (step < total) {
        step_rk4(s, cd.dt, rg, ag, w);
        ++step;
        s.time = cd.dt * static_cast<double>(step);
        if (!state_finite(s)) throw_nonfinite(step, s.time);
    }
    return s;
}

} // namespace mhrn
