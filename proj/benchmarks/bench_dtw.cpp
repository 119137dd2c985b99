#include "imu_guard/dtw.hpp"
#include "imu_guard/ins.hpp"
#include "imu_guard/sim.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using namespace imu_guard;

dtw::Series random_series(std::mt19937_64& rng, std::size_t rows, std::size_t dims) {
  std::normal_distribution<double> normal;
  dtw::Series::Matrix m(rows, dims);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return dtw::Series(std::move(m));
}

void BM_DtwRolling(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = random_series(rng, n, 3), q = random_series(rng, n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(dtw::dtw_distance(p, q));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DtwRolling)->RangeMultiplier(2)->Range(10, 160)->Complexity(benchmark::oNSquared);

void BM_DtwFullMatrix(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = random_series(rng, n, 3), q = random_series(rng, n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(dtw::dtw_distance_full(p, q));
}
BENCHMARK(BM_DtwFullMatrix)->RangeMultiplier(2)->Range(10, 160);

// k = 10 templates, N = M = 40, d = 3; argument is the parallelism level.
void BM_BestMatch(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<dtw::Series> templates;
  for (int i = 0; i < 10; ++i) templates.push_back(random_series(rng, 40, 3));
  const auto query = random_series(rng, 40, 3);
  const auto parallelism = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dtw::best_match(query, templates, parallelism));
}
BENCHMARK(BM_BestMatch)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->UseRealTime()->Unit(benchmark::kMicrosecond);

void BM_Integrate(benchmark::State& state) {
  const auto truth = sim::generate_truth({});
  const auto stream = sim::synthesize_imu(truth, {}, {}, {}, 200.0);
  const auto initial = truth.at(stream.front().t).nav();
  ins::IntegratorConfig cfg;
  cfg.method = state.range(0) == 0 ? ins::Method::euler : ins::Method::midpoint;
  for (auto _ : state) benchmark::DoNotOptimize(ins::integrate(initial, stream, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.size()));
}
BENCHMARK(BM_Integrate)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
