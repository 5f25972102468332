// microbenchmarks for the hot paths: right-hand sides, RK4 steps, the
// cumulative quadrature, and the tortoise inversion
#include "mhrn/config.hpp"
#include "mhrn/diagnostics.hpp"
#include "mhrn/evolution.hpp"

#include <benchmark/benchmark.h>

using namespace mhrn;

namespace {

RadialGrid radial(int n, double half = 200.0) {
    return RadialGrid::make(Background::make(1.0, 0.5), -half, half, n);
}

void BM_radius_from_tortoise(benchmark::State& state) {
    const Background bg = Background::make(1.0, 0.5);
    double rstar = -200.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(bg.radius_from_tortoise(rstar));
        rstar += 0.37;
        if (rstar > 200.0) rstar = -200.0;
    }
}
BENCHMARK(BM_radius_from_tortoise);

void BM_mode_rhs(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    RadialGrid rg = radial(n);
    RunConfig c;
    c.n_points = n;
    ModeState s = mode_initial_data(c, rg);
    ModeDeriv d{CVec(n), CVec(n)};
    for (auto _ : state) {
        mode_rhs(s, rg, Boundary::frozen, d);
        benchmark::DoNotOptimize(d.u_t.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_mode_rhs)->Arg(1024)->Arg(4096);

void BM_step_rk4_mode(benchmark::State& state) {
    const int n = 4096;
    RadialGrid rg = radial(n);
    RunConfig c;
    c.n_points = n;
    ModeState s = mode_initial_data(c, rg);
    ModeWorkspace w(n);
    const double dt = 0.5 * cfl_dt(rg, 0.25);
    for (auto _ : state) step_rk4(s, dt, rg, Boundary::frozen, w);
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_step_rk4_mode);

void BM_coupled_rhs(benchmark::State& state) {
    RunConfig c;
    c.rstar_min = -100;
    c.rstar_max = 100;
    c.n_points = 512;
    c.n_theta = 32;
    c.amplitude = 0.01;
    c.q_A = 0.1;
    RadialGrid rg = radial(512, 100.0);
    AngularGrid ag = AngularGrid::make(32, c.m);
    CoupledState s = coupled_initial_data(c, rg, ag);
    CoupledWorkspace w(s);
    CoupledDeriv d = coupled_rhs(s, rg, ag);
    for (auto _ : state) {
        coupled_rhs(s, rg, ag, w, d);
        benchmark::DoNotOptimize(d.phi.v.data());
    }
    state.SetItemsProcessed(state.iterations() * 512 * 32);
}
BENCHMARK(BM_coupled_rhs);

void BM_step_rk4_coupled(benchmark::State& state) {
    RunConfig c;
    c.rstar_min = -100;
    c.rstar_max = 100;
    c.n_points = 512;
    c.n_theta = 32;
    c.amplitude = 0.01;
    c.q_A = 0.1;
    RadialGrid rg = radial(512, 100.0);
    AngularGrid ag = AngularGrid::make(32, c.m);
    CoupledState s = coupled_initial_data(c, rg, ag);
    CoupledWorkspace w(s);
    const double dt = 0.5 * cfl_dt(rg, ag, 0.25);
    for (auto _ : state) step_rk4(s, dt, rg, ag, w);
    state.SetItemsProcessed(state.iterations() * 512 * 32);
}
BENCHMARK(BM_step_rk4_coupled);

void BM_cumulative_integral(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(0.01 * i);
    for (auto _ : state) benchmark::DoNotOptimize(cumulative_integral(y, 0.1).data());
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_cumulative_integral)->Arg(4096);

void BM_multiplier_h_quadrature(benchmark::State& state) {
    const auto p = MultiplierParams::make(1.0, 1.5); // off the closed-form branch
    double x = -50.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(multiplier_h(x, p).h);
        x += 0.73;
        if (x > 50.0) x = -50.0;
    }
}
BENCHMARK(BM_multiplier_h_quadrature);

} // namespace

BENCHMARK_MAIN();
