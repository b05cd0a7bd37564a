// Serial reference against the OpenMP kernels.
//
//   fibernet_bench --benchmark_filter=rod
//   OMP_NUM_THREADS=4 fibernet_bench

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "fibernet/kernels.hpp"

using namespace fibernet;

namespace {

struct Rods {
    std::vector<Points> x;
    std::vector<std::vector<double>> rest;
    std::vector<Points> forces;
    std::vector<kernels::RodSlice> slices;
};

// `count` jiggled straight rods of `nodes` nodes each.
Rods make_rods(int count, int nodes) {
    const MaterialParams m = MaterialParams::reference();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-1e-4, 1e-4);
    Rods r;
    r.x.resize(static_cast<std::size_t>(count));
    r.rest.resize(static_cast<std::size_t>(count));
    r.forces.resize(static_cast<std::size_t>(count));
    for (std::size_t f = 0; f < r.x.size(); ++f) {
        for (int i = 0; i < nodes; ++i) r.x[f].emplace_back(0.01 * i + d(rng), d(rng));
        r.rest[f].assign(static_cast<std::size_t>(nodes - 1), 0.01);
        r.forces[f].assign(static_cast<std::size_t>(nodes), Vec2::Zero());
    }
    for (std::size_t f = 0; f < r.x.size(); ++f)
        r.slices.push_back({r.x[f], r.rest[f], m.axial_stiffness(), m.bending_stiffness(), r.forces[f]});
    return r;
}

template <void (*Kernel)(std::span<const kernels::RodSlice>)>
void BM_rod_forces(benchmark::State& state) {
    Rods r = make_rods(static_cast<int>(state.range(0)), 29);
    for (auto _ : state) {
        Kernel(r.slices);
        benchmark::DoNotOptimize(r.forces.front().front());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <Eigen::MatrixXd (*Kernel)(const Eigen::Ref<const Eigen::MatrixXd>&)>
void BM_gram(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d;
    Eigen::MatrixXd x(20000, state.range(0));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = d(rng);
    for (auto _ : state) {
        Eigen::MatrixXd g = Kernel(x);
        benchmark::DoNotOptimize(g.data());
    }
}

}  // namespace

BENCHMARK_TEMPLATE(BM_rod_forces, kernels::serial::rod_forces)->Arg(12)->Arg(64)->Arg(256);
BENCHMARK_TEMPLATE(BM_rod_forces, kernels::omp::rod_forces)->Arg(12)->Arg(64)->Arg(256);
BENCHMARK_TEMPLATE(BM_gram, kernels::serial::gram)->Arg(32)->Arg(112)->Arg(240)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_gram, kernels::omp::gram)->Arg(32)->Arg(112)->Arg(240)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
