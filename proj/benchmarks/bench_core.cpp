#include <benchmark/benchmark.h>

#include "selrad/dynamics.hpp"
#include "selrad/ensemble.hpp"
#include "selrad/green.hpp"
#include "selrad/spectral.hpp"

using namespace selrad;

namespace {

PhysicalParams params_for(const CloudSpec& c) {
  PhysicalParams p;
  p.g0 = 1.0;
  p.z_ref = c.center.z() * p.wavelength();
  return p;
}

void BM_Green(benchmark::State& state) {
  Vec3 dr(0.3, 1.7, -0.4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(free_space_green(dr, 1.0));
    dr.x() += 1e-9;
  }
}
BENCHMARK(BM_Green);

void BM_BuildMatrix(benchmark::State& state) {
  CloudSpec c;
  c.n_atoms = static_cast<int>(state.range(0));
  const PhysicalParams p = params_for(c);
  const AtomEnsemble e = sample_positions(c, 1);
  for (auto _ : state) benchmark::DoNotOptimize(build_coupling_matrix(e, p));
}
BENCHMARK(BM_BuildMatrix)->Arg(10)->Arg(50)->Arg(100);

void BM_Eigendecompose(benchmark::State& state) {
  CloudSpec c;
  c.n_atoms = static_cast<int>(state.range(0));
  const PhysicalParams p = params_for(c);
  const CouplingMatrix m = build_coupling_matrix(sample_positions(c, 2), p);
  for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(m));
}
BENCHMARK(BM_Eigendecompose)->Arg(10)->Arg(50)->Arg(100);

void BM_RunConfiguration(benchmark::State& state) {
  CloudSpec c;
  c.n_atoms = 50;
  const PhysicalParams p = params_for(c);
  Protocol proto;
  proto.kind = static_cast<ProtocolKind>(state.range(0));
  const std::vector<double> grid = linear_time_grid(8.0, 401);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_configuration(c, p, proto, grid, ++seed));
}
BENCHMARK(BM_RunConfiguration)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
