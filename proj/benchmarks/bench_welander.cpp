#include <benchmark/benchmark.h>

#include "welander/simulate.hpp"

namespace bm = benchmark;
using namespace welander;

namespace {

WelanderParams worked(double eps) { return {0.8, 0.5, eps, 0.0, 1.0}; }

}  // namespace

static void BM_Psi(bm::State& st) {
  double t = 0.37;
  for (auto _ : st) {
    bm::DoNotOptimize(psi(-0.5, -1.0, t));
    t += 1e-9;
  }
}

static void BM_LeftMap(bm::State& st) {
  const WelanderParams p = worked(-0.01);
  const double y0 = 0.01 * static_cast<double>(st.range(0));
  for (auto _ : st) bm::DoNotOptimize(left_map(p, y0));
}

static void BM_RightMapInverse(bm::State& st) {
  const WelanderParams p = worked(-0.01);
  for (auto _ : st) bm::DoNotOptimize(right_map_inverse(p, 0.04));
}

static void BM_FindCycle(bm::State& st) {
  const WelanderParams p = worked(-1e-3 * static_cast<double>(st.range(0)));
  for (auto _ : st) bm::DoNotOptimize(find_cycle(p));
}

static void BM_PartitionSigma(bm::State& st) {
  const PiecewiseAffineSystem pws = canonical_system(worked(-0.01));
  for (auto _ : st) bm::DoNotOptimize(partition_sigma(pws));
}

// Exact hybrid integration against the RK4 oracle over the same horizon.
static void BM_IntegrateExact(bm::State& st) {
  const WelanderParams p = worked(-0.01);
  const PiecewiseAffineSystem raw = raw_system(p);
  for (auto _ : st) bm::DoNotOptimize(integrate(raw, {0.05, 0.4}, 20.0, 1.0));
}

static void BM_IntegrateOracle(bm::State& st) {
  const WelanderParams p = worked(-0.01);
  OracleOptions opt;
  opt.record_samples = false;
  for (auto _ : st) bm::DoNotOptimize(oracle_rk4(Nonsmooth{}, p, {0.05, 0.4}, 20.0, 1e-4, opt));
}

static void BM_ScanEpsilon(bm::State& st) {
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(-0.05 + 0.005 * k);
  for (auto _ : st) bm::DoNotOptimize(scan_epsilon(worked(0.0), grid));
}

BENCHMARK(BM_Psi);
BENCHMARK(BM_LeftMap)->Arg(1)->Arg(10)->Arg(100);
BENCHMARK(BM_RightMapInverse);
BENCHMARK(BM_FindCycle)->Arg(1)->Arg(10)->Arg(50)->Unit(bm::kMicrosecond);
BENCHMARK(BM_PartitionSigma);
BENCHMARK(BM_IntegrateExact)->Unit(bm::kMicrosecond);
BENCHMARK(BM_IntegrateOracle)->Unit(bm::kMillisecond);
BENCHMARK(BM_ScanEpsilon)->Unit(bm::kMillisecond);
BENCHMARK_MAIN();
