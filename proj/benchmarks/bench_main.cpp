// microbenchmarks for the hot paths: the pair sweep (both strategies) and the
// full integrator step; run with --benchmark_min_time=... for tighter numbers
#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "thermoeq/force_field.hpp"
#include "thermoeq/integrator.hpp"
#include "thermoeq/rng.hpp"

using namespace thermoeq;

namespace {

struct Bench {
    SystemSpec spec;
    ForceFieldSpec ffield;
    ThermostatMode mode;
    IntegratorConfig cfg;
    PhasePoint x0;

    explicit Bench(int n, ThermostatKind kind = ThermostatKind::Isokinetic) {
        spec.wall_dims = 0;
        spec.torus_dims = 2;
        spec.particle_count = n;
        const double box_len = std::sqrt(n / 0.4);
        spec.box = {box_len, box_len};
        ffield.pair_epsilon = 1.0;
        ffield.pair_range = 1.0;
        ffield.xi = {0.5, 0.0};
        mode.kind = kind;
        cfg.constraint_target = 1.5 * n;
        x0 = initialize(20260801u, spec, ffield, mode, cfg);
    }
};

void bm_pair_sweep(benchmark::State& state, PairPath path) {
    Bench b(static_cast<int>(state.range(0)));
    ForceField field(b.spec, b.ffield);
    std::vector<double> grad(b.x0.q.size());
    for (auto _ : state) {
        double v = field.potential_and_gradient(b.x0.q, grad, path);
        benchmark::DoNotOptimize(v);
        benchmark::DoNotOptimize(grad.data());
    }
    state.SetComplexityN(state.range(0));
}

void bm_pair_sweep_loop(benchmark::State& state) { bm_pair_sweep(state, PairPath::DoubleLoop); }
void bm_pair_sweep_cells(benchmark::State& state) { bm_pair_sweep(state, PairPath::CellList); }

void bm_step(benchmark::State& state, ThermostatKind kind) {
    Bench b(static_cast<int>(state.range(0)), kind);
    Simulator sim(b.spec, b.ffield, b.mode, b.cfg);
    PhasePoint x = b.x0;
    for (auto _ : state) {
        sim.step(x);
        benchmark::DoNotOptimize(x.p.data());
    }
    state.SetComplexityN(state.range(0));
}

void bm_step_kinetic_constraint(benchmark::State& state) {
    bm_step(state, ThermostatKind::Isokinetic);
}
void bm_step_energy_constraint(benchmark::State& state) {
    bm_step(state, ThermostatKind::Isoenergetic);
}

} // namespace

BENCHMARK(bm_pair_sweep_loop)->Arg(16)->Arg(64)->Arg(256)->Arg(1024)->Complexity();
BENCHMARK(bm_pair_sweep_cells)->Arg(16)->Arg(64)->Arg(256)->Arg(1024)->Complexity();
BENCHMARK(bm_step_kinetic_constraint)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(bm_step_energy_constraint)->Arg(16)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
