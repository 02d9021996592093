#include <map>
#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include "hsepsr/filter.hpp"
#include "hsepsr/gramops.hpp"
#include "hsepsr/kernels.hpp"
#include "hsepsr/learner.hpp"
#include "hsepsr/predict.hpp"
#include "hsepsr/simbench.hpp"

using namespace hsepsr;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

Trajectory synthetic(Eigen::Index n) {
  SynthConfig c;
  c.n_steps = n;
  c.seed = 1;
  return simulate_system(c);
}

// Trained models are cached per size; the benchmarks below only time the
// filter-side work.
const HsePsrModel& model_of_size(Eigen::Index T) {
  static std::map<Eigen::Index, std::unique_ptr<HsePsrModel>> cache;
  auto& slot = cache[T];
  if (!slot) {
    TrainingOptions o;
    o.regularizer = 1e-3;
    slot = std::make_unique<HsePsrModel>(train(synthetic(T + 20), o));
  }
  return *slot;
}

void BM_Gram(benchmark::State& state) {
  const Eigen::Index T = state.range(0);
  const Eigen::MatrixXd X = gaussian(T, 20, 1);
  KernelSpec k;
  k.dimension = 20;
  k.bandwidth = 4.0;
  for (auto _ : state) benchmark::DoNotOptimize(gram(k, X, X));
  state.SetComplexityN(T);
}
BENCHMARK(BM_Gram)->RangeMultiplier(2)->Range(64, 512)->Complexity();

void BM_MedianTrick(benchmark::State& state) {
  const Eigen::MatrixXd X = gaussian(state.range(0), 20, 2);
  for (auto _ : state) benchmark::DoNotOptimize(resolve_bandwidth(X));
}
BENCHMARK(BM_MedianTrick)->Arg(128)->Arg(512);

void BM_RidgeSolve(benchmark::State& state) {
  const Eigen::Index T = state.range(0);
  const Eigen::MatrixXd B = gaussian(T, T, 3);
  const Eigen::MatrixXd M = B * B.transpose() / static_cast<double>(T);
  for (auto _ : state) benchmark::DoNotOptimize(ridge_solve(M, 0.1, M));
  state.SetComplexityN(T);
}
BENCHMARK(BM_RidgeSolve)->RangeMultiplier(2)->Range(64, 512)->Complexity();

void BM_ConditioningTensor(benchmark::State& state) {
  const Eigen::Index T = state.range(0);
  const Eigen::MatrixXd B = gaussian(T, T, 4);
  const Eigen::MatrixXd G = B * B.transpose() / static_cast<double>(T);
  const Eigen::MatrixXd W = history_weights(G, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_conditioning_tensor(TensorRole::test_action, W, G, 0.1));
  }
}
BENCHMARK(BM_ConditioningTensor)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Train(benchmark::State& state) {
  const Trajectory t = synthetic(state.range(0) + 20);
  TrainingOptions o;
  o.regularizer = 1e-3;
  for (auto _ : state) benchmark::DoNotOptimize(train(t, o));
}
BENCHMARK(BM_Train)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_FilterStep(benchmark::State& state) {
  const HsePsrModel& m = model_of_size(state.range(0));
  const Trajectory q = synthetic(300);
  BeliefState b = feasible_state(m);
  Eigen::Index k = 0;
  for (auto _ : state) {
    const StepResult r = update(m, b, q.actions.row(k).transpose(), q.observations.row(k).transpose());
    b = r.degenerate ? feasible_state(m) : r.state;
    k = (k + 1) % q.length();
  }
}
BENCHMARK(BM_FilterStep)->Arg(60)->Arg(120)->Arg(240)->Unit(benchmark::kMicrosecond);

void BM_RolloutBatch(benchmark::State& state) {
  const HsePsrModel& m = model_of_size(120);
  const Trajectory q = synthetic(300);
  const FilterRun run = filter_trajectory(m, feasible_state(m), q.actions, q.observations);
  const Eigen::Index B = state.range(0);
  std::vector<BeliefState> beliefs;
  std::vector<Eigen::MatrixXd> futures;
  for (Eigen::Index b = 0; b < B; ++b) {
    beliefs.push_back(run.states[static_cast<std::size_t>(50 + b)]);
    futures.push_back(q.actions.middleRows(51 + b, 30));
  }
  const std::vector<Eigen::Index> horizons{1, 5, 10, 20, 30};
  for (auto _ : state) benchmark::DoNotOptimize(rollout_predict_batch(m, beliefs, futures, horizons));
}
BENCHMARK(BM_RolloutBatch)->Arg(1)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
