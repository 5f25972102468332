#include "mhrn/geometry.hpp"
#include "mhrn/error.hpp"

#include <cmath>
#include <string>

namespace mhrn {

Background Background::make(double mass, double charge, double tortoise_anchor) {
    if (!(mass > 0.0))
        throw ConfigError("background: mass must be positive, got " + std::to_string(mass));
    if (std::abs(charge) > mass)
        throw ConfigError("background: |charge| > mass is a naked singularity (|Q| <= M required)");
    Background bg;
    bg.mass = mass;
    bg.charge = charge;
    bg.tortoise_anchor = tortoise_anchor;
    const double disc = std::sqrt(std::max(0.0, mass * mass - charge * charge));
    bg.r_plus = mass + disc;
    bg.r_minus = mass - disc;
    return bg;
}

double Background::metric_factor(double r) const {
    if (!(r > 0.0)) throw Error("metric_factor: r must be positive");
    // product form: exactly zero at both horizons, no cancellation for r >> r_plus either
    return (r - r_plus) * (r - r_minus) / (r * r);
}

double Background::metric_factor_deriv(double r) const {
    if (!(r > 0.0)) throw Error("metric_factor_deriv: r must be positive");
    return 2.0 * mass / (r * r) - 2.0 * charge * charge / (r * r * r);
}

double Background::surface_gravity() const {
    return (r_plus - r_minus) / (2.0 * r_plus * r_plus);
}

double Background::tortoise_from_delta(double delta) const {
    if (!(delta > 0.0)) throw Error("tortoise: radius must exceed r_plus");
    if (extremal()) throw Error("tortoise: undefined closed form at extremality |Q| = M");
    const double gap = r_plus - r_minus;
    const double A = r_plus * r_plus / gap;
    const double r = r_plus + delta;
    double rs = r + A * std::log(delta / r_plus);
    if (r_minus > 0.0) {
        const double B = r_minus * r_minus / gap;
        rs -= B * std::log((delta + gap) / r_minus);
    }
    return rs + tortoise_anchor;
}

double Background::tortoise_from_radius(double r) const {
    if (!(r > r_plus)) throw Error("tortoise: radius must exceed r_plus");
    return tortoise_from_delta(r - r_plus);
}

double Background::delta_from_tortoise(double rstar) const {
    if (extremal()) throw Error("tortoise inversion: undefined at extremality |Q| = M");
    const double gap = r_plus - r_minus;
    const double A = r_plus * r_plus / gap;

    // Newton in x = ln(delta): monotone residual, derivative d(r*)/dx = (r_plus+delta)^2/(delta+gap)
    double x;
    if (rstar < r_plus + 1.0 + tortoise_anchor)
        x = (rstar - tortoise_anchor - r_plus) / A + std::log(r_plus); // near-horizon asymptote
    else
        x = std::log(rstar - tortoise_anchor - r_plus); // r ~ r* far out

    // bracket for the bisection safeguard; clamp ln(delta) above the underflow floor
    x = std::max(x, -700.0);
    double xlo = x, xhi = x;
    auto resid = [&](double xx) { return tortoise_from_delta(std::exp(std::max(xx, -700.0))) - rstar; };
    double flo = resid(xlo), fhi = flo;
    for (int k = 0; k < 2000 && flo > 0.0; ++k) { xlo -= 1.0; flo = resid(xlo); }
    for (int k = 0; k < 2000 && fhi < 0.0; ++k) { xhi += 1.0; fhi = resid(xhi); }
    if (flo > 0.0 || fhi < 0.0)
        throw NumericalError("tortoise inversion: failed to bracket root");

    const double tol = 1e-13 * std::max(1.0, std::abs(rstar));
    for (int it = 0; it < 200; ++it) {
        const double delta = std::exp(x);
        const double r = r_plus + delta;
        const double F = tortoise_from_delta(delta) - rstar;
        if (std::abs(F) <= tol) return delta;
        if (F > 0.0) xhi = x; else xlo = x;
        const double dFdx = r * r / (delta + gap);
        double xn = x - F / dFdx;
        if (!(xn > xlo && xn < xhi)) xn = 0.5 * (xlo + xhi); // Newton left bracket: bisect
        if (xn == x) return delta;                           // bracket collapsed to rounding
        x = xn;
    }
    throw NumericalError("tortoise inversion: no convergence after iteration cap");
}

double Background::radius_from_tortoise(double rstar) const {
    return r_plus + delta_from_tortoise(rstar);
}

double Background::potential(double r) const {
    return metric_factor(r) / (r * r);
}

double Background::potential_deriv(double r) const {
    const double f = metric_factor(r);
    return f * (metric_factor_deriv(r) * r - 2.0 * f) / (r * r * r);
}

double Background::morawetz_factor(double r) const {
    if (!(r > r_plus)) throw Error("morawetz_factor: radius must exceed r_plus");
    const double f = metric_factor(r);
    return 1.0 + tortoise_from_radius(r) * (0.5 * metric_factor_deriv(r) - f / r);
}

RadialGrid RadialGrid::make(const Background& bg, double rstar_min, double rstar_max, int n_points) {
    if (bg.extremal())
        throw ConfigError("radial grid: extremal background |Q| = M not evolvable");
    if (n_points < 16)
        throw ConfigError("radial grid: n_points must be >= 16, got " + std::to_string(n_points));
    if (!(rstar_max > rstar_min))
        throw ConfigError("radial grid: rstar_max must exceed rstar_min");

    RadialGrid g;
    g.bg = bg;
    g.rstar_min = rstar_min;
    g.rstar_max = rstar_max;
    g.spacing = (rstar_max - rstar_min) / (n_points - 1);
    g.rstar.resize(n_points);
    g.r.resize(n_points);
    g.delta.resize(n_points);
    g.f.resize(n_points);
    g.df.resize(n_points);
    g.V.resize(n_points);
    g.dV.resize(n_points);
    g.morawetz.resize(n_points);
    for (int i = 0; i < n_points; ++i) {
        const double s = rstar_min + g.spacing * i;
        const double d = bg.delta_from_tortoise(s);
        const double r = bg.r_plus + d;
        const double f = d * (d + bg.r_plus - bg.r_minus) / (r * r); // product form in delta
        g.rstar[i] = s;
        g.delta[i] = d;
        g.r[i] = r;
        g.f[i] = f;
        g.df[i] = bg.metric_factor_deriv(r);
        g.V[i] = f / (r * r);
        g.dV[i] = f * (g.df[i] * r - 2.0 * f) / (r * r * r);
        g.morawetz[i] = 1.0 + s * (0.5 * g.df[i] - f / r);
    }
    return g;
}

} // namespace mhrn
