// OpenMP kernels against their serial references. Arg(1) selects the parallel build.

#include <benchmark/benchmark.h>

#include <random>

#include "deflation/kernels.hpp"

using namespace deflation;

namespace {

std::vector<double> samples(int n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 15.0);
  std::vector<double> z(n);
  for (double& v : z) v = nd(rng);
  return z;
}

void BM_MixtureLogDensity(benchmark::State& state) {
  const MixtureTarget target = default_vi_target();
  const auto z = samples(static_cast<int>(state.range(0)));
  std::vector<double> lp(z.size()), sc(z.size());
  for (auto _ : state) {
    if (state.range(1)) kernels::mixture_log_density_batch(target, z, lp, sc);
    else kernels::serial::mixture_log_density_batch(target, z, lp, sc);
    benchmark::DoNotOptimize(lp.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MixtureLogDensity)->ArgsProduct({{1 << 10, 1 << 16}, {0, 1}});

void BM_AssembleStiffness(benchmark::State& state) {
  const int nx = static_cast<int>(state.range(0));
  const TrussModel model = make_truss_model(nx, nx / 2, 0.3);
  const Vec x = Vec::Constant(model.num_elements(), 0.3);
  for (auto _ : state) {
    Mat K = state.range(1) ? kernels::assemble_stiffness(model, x) : kernels::serial::assemble_stiffness(model, x);
    benchmark::DoNotOptimize(K.data());
  }
}
BENCHMARK(BM_AssembleStiffness)->ArgsProduct({{10, 30}, {0, 1}});

void BM_MemberStrainEnergy(benchmark::State& state) {
  const int nx = static_cast<int>(state.range(0));
  const TrussModel model = make_truss_model(nx, nx / 2, 0.3);
  const Vec u = model.displacement(Vec::Constant(model.num_elements(), 0.3));
  for (auto _ : state) {
    Vec e = state.range(1) ? kernels::member_strain_energy(model, u) : kernels::serial::member_strain_energy(model, u);
    benchmark::DoNotOptimize(e.data());
  }
}
BENCHMARK(BM_MemberStrainEnergy)->ArgsProduct({{10, 30}, {0, 1}});

void BM_DeflationValueBatch(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<Vec> pool_pts(8, Vec(20)), pts(static_cast<std::size_t>(state.range(0)), Vec(20));
  for (auto& p : pool_pts)
    for (auto& v : p) v = u(rng);
  for (auto& p : pts)
    for (auto& v : p) v = u(rng);
  const DeflationFunction fn{PowerNorm{2.0}, 2.0, 1.0, 0.0};
  const DeflationPool pool(pool_pts, Aggregation::Product);
  for (auto _ : state) {
    auto out = state.range(1) ? kernels::deflation_value_batch(fn, pool, pts)
                              : kernels::serial::deflation_value_batch(fn, pool, pts);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DeflationValueBatch)->ArgsProduct({{256, 8192}, {0, 1}});

}  // namespace

BENCHMARK_MAIN();
