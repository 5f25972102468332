#pragma once
#include <vector>

namespace mhrn {

// Reissner-Nordstrom exterior background in geometric units.
// f(r) = 1 - 2M/r + Q^2/r^2 = (r - r_plus)(r - r_minus)/r^2.
struct Background {
    double mass = 1.0;
    double charge = 0.0;
    double r_plus = 2.0;
    double r_minus = 0.0;
    double tortoise_anchor = 0.0; // additive constant in r*

    // validates M > 0 and |Q| <= M (|Q| = M constructible but rejected by
    // tortoise/grid routines: the closed-form r* degenerates at extremality)
    static Background make(double mass, double charge, double tortoise_anchor = 0.0);

    bool extremal() const { return r_plus == r_minus; }

    double metric_factor(double r) const;        // f(r), requires r > 0
    double metric_factor_deriv(double r) const;  // f'(r) = 2M/r^2 - 2Q^2/r^3
    double surface_gravity() const;              // kappa = f'(r_plus)/2

    // r* with dr*/dr = 1/f, fixed by the closed form
    //   r* = r + A ln((r-r+)/r+) - B ln((r-r-)/r-),  A = r+^2/(r+-r-), B = r-^2/(r+-r-)
    // (Schwarzschild branch r* = r + 2M ln((r-2M)/2M)), plus tortoise_anchor.
    double tortoise_from_radius(double r) const;     // requires r > r_plus
    double tortoise_from_delta(double delta) const;  // delta = r - r_plus > 0; accurate near horizon

    // inverse map, relative tolerance 1e-13; Newton in ln(delta) with bisection safeguard
    double radius_from_tortoise(double rstar) const;
    double delta_from_tortoise(double rstar) const;

    double potential(double r) const;        // V = f/r^2
    double potential_deriv(double r) const;  // dV/dr* = f (f' r - 2 f)/r^3
    double morawetz_factor(double r) const;  // 1 + r* (f'/2 - f/r)
};

// uniform lattice in r* with per-node background data cached.
// delta = r - r_plus is kept alongside r: near the horizon r itself loses all
// digits of r - r_plus, while delta stays accurate down to ~1e-300.
struct RadialGrid {
    double rstar_min = 0.0;
    double rstar_max = 0.0;
    double spacing = 0.0;
    Background bg;
    std::vector<double> rstar, r, delta, f, df, V, dV, morawetz;

    static RadialGrid make(const Background& bg, double rstar_min, double rstar_max, int n_points);

    int size() const { return static_cast<int>(rstar.size()); }
};

} // namespace mhrn
