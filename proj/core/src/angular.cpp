#include "mhrn/angular.hpp"
#include "mhrn/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mhrn {

AngularGrid AngularGrid::make(int n_theta, int azimuthal_mode) {
    if (n_theta < 8)
        throw ConfigError("angular grid: n_theta must be >= 8, got " + std::to_string(n_theta));
    AngularGrid g;
    g.n_theta = n_theta;
    g.azimuthal_mode = azimuthal_mode;
    g.spacing = std::numbers::pi / n_theta;
    g.theta.resize(n_theta);
    g.sin_theta.resize(n_theta);
    g.cos_theta.resize(n_theta);
    g.cot_theta.resize(n_theta);
    g.weights.resize(n_theta);
    const double wfac = 2.0 * std::sin(0.5 * g.spacing);
    for (int j = 0; j < n_theta; ++j) {
        g.theta[j] = (j + 0.5) * g.spacing;
        g.sin_theta[j] = std::sin(g.theta[j]);
        g.cos_theta[j] = std::cos(g.theta[j]);
        g.cot_theta[j] = g.cos_theta[j] / g.sin_theta[j];
        g.weights[j] = wfac * g.sin_theta[j];
    }
    return g;
}

namespace {

// mirror across theta=0 maps j -> -1-j, across theta=pi maps j -> 2n-1-j
inline cplx ghost(const cplx* u, int j, int n, double psign) {
    if (j < 0) return psign * u[-1 - j];
    if (j >= n) return psign * u[2 * n - 1 - j];
    return u[j];
}

inline double parity_sign(int m, int spin_weight) {
    int p = ((m + spin_weight) % 2 + 2) % 2;
    return p ? -1.0 : 1.0;
}

} // namespace

void angular_d1(const AngularGrid& g, const cplx* u, int m, cplx* out, int s) {
    const int n = g.n_theta;
    const double ps = parity_sign(m, s);
    const double c1 = 1.0 / (12.0 * g.spacing);
    for (int j = 0; j < n; ++j)
        out[j] = (ghost(u, j - 2, n, ps) - 8.0 * ghost(u, j - 1, n, ps)
                  + 8.0 * ghost(u, j + 1, n, ps) - ghost(u, j + 2, n, ps)) * c1;
}

void angular_d2(const AngularGrid& g, const cplx* u, int m, cplx* out, int s) {
    const int n = g.n_theta;
    const double ps = parity_sign(m, s);
    const double c2 = 1.0 / (12.0 * g.spacing * g.spacing);
    for (int j = 0; j < n; ++j)
        out[j] = (-ghost(u, j - 2, n, ps) + 16.0 * ghost(u, j - 1, n, ps) - 30.0 * u[j]
                  + 16.0 * ghost(u, j + 1, n, ps) - ghost(u, j + 2, n, ps)) * c2;
}

void apply_M(const AngularGrid& g, const cplx* u, int m, cplx* out, int s) {
    const int n = g.n_theta;
    const double ps = parity_sign(m, s);
    const double c1 = 1.0 / (12.0 * g.spacing);
    for (int j = 0; j < n; ++j) {
        cplx d1 = (ghost(u, j - 2, n, ps) - 8.0 * ghost(u, j - 1, n, ps)
                   + 8.0 * ghost(u, j + 1, n, ps) - ghost(u, j + 2, n, ps)) * c1;
        out[j] = d1 - (m / g.sin_theta[j]) * u[j];
    }
}

void apply_Mbar(const AngularGrid& g, const cplx* u, int m, cplx* out, int s) {
    const int n = g.n_theta;
    const double ps = parity_sign(m, s);
    const double c1 = 1.0 / (12.0 * g.spacing);
    for (int j = 0; j < n; ++j) {
        cplx d1 = (ghost(u, j - 2, n, ps) - 8.0 * ghost(u, j - 1, n, ps)
                   + 8.0 * ghost(u, j + 1, n, ps) - ghost(u, j + 2, n, ps)) * c1;
        out[j] = d1 + (m / g.sin_theta[j]) * u[j];
    }
}

void apply_M1(const AngularGrid& g, const cplx* u, int m, cplx* out, int s) {
    apply_M(g, u, m, out, s);
    for (int j = 0; j < g.n_theta; ++j)
        out[j] += g.cot_theta[j] * u[j];
}

void apply_laplacian_S(const AngularGrid& g, const cplx* u, int m, cplx* out, int s) {
    const int n = g.n_theta;
    const double ps = parity_sign(m, s);
    const double c1 = 1.0 / (12.0 * g.spacing);
    const double c2 = 1.0 / (12.0 * g.spacing * g.spacing);
    const double m2 = double(m) * m;
    for (int j = 0; j < n; ++j) {
        cplx um2 = ghost(u, j - 2, n, ps), um1 = ghost(u, j - 1, n, ps);
        cplx up1 = ghost(u, j + 1, n, ps), up2 = ghost(u, j + 2, n, ps);
        cplx d1 = (um2 - 8.0 * um1 + 8.0 * up1 - up2) * c1;
        cplx d2 = (-um2 + 16.0 * um1 - 30.0 * u[j] + 16.0 * up1 - up2) * c2;
        out[j] = d2 - (m2 / (g.sin_theta[j] * g.sin_theta[j])) * u[j] + g.cot_theta[j] * d1;
    }
}

namespace {
template <typename F>
CVec lift(const AngularGrid& g, const CVec& u, F&& f) {
    if (static_cast<int>(u.size()) != g.n_theta)
        throw Error("angular operator: profile length does not match grid");
    CVec out(u.size());
    f(u.data(), out.data());
    return out;
}
} // namespace

CVec apply_M(const AngularGrid& g, const CVec& u, int m, int s) {
    return lift(g, u, [&](const cplx* a, cplx* b) { apply_M(g, a, m, b, s); });
}
CVec apply_Mbar(const AngularGrid& g, const CVec& u, int m, int s) {
    return lift(g, u, [&](const cplx* a, cplx* b) { apply_Mbar(g, a, m, b, s); });
}
CVec apply_M1(const AngularGrid& g, const CVec& u, int m, int s) {
    return lift(g, u, [&](const cplx* a, cplx* b) { apply_M1(g, a, m, b, s); });
}
CVec apply_laplacian_S(const AngularGrid& g, const CVec& u, int m, int s) {
    return lift(g, u, [&](const cplx* a, cplx* b) { apply_laplacian_S(g, a, m, b, s); });
}

} // namespace mhrn
