#include <benchmark/benchmark.h>

#include <random>

#include "slmdp/agents.hpp"
#include "slmdp/env.hpp"
#include "slmdp/oracle.hpp"
#include "slmdp/safety.hpp"

namespace {

using namespace slmdp;

Vec random_unit_vec(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = gauss(rng);
  return v / v.norm();
}

void BM_RidgeUpdateSolve(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  RidgeState ridge(d, 1.0);
  const Vec x = random_unit_vec(d, rng);
  for (auto _ : state) {
    ridge.update(x, 0.5);
    benchmark::DoNotOptimize(ridge.solve());
  }
  state.SetComplexityN(d);
}
BENCHMARK(BM_RidgeUpdateSolve)->Arg(5)->Arg(25)->Arg(100)->Complexity();

void BM_CostUcb(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  SafetyState safety(random_unit_vec(d, rng) * 0.8, 0.5, 0.2, 1.0, 1.0);
  for (int i = 0; i < 50; ++i) safety.update(random_unit_vec(d, rng), 0.1);
  const Vec probe = random_unit_vec(d, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(safety.cost_ucb(probe));
  }
}
BENCHMARK(BM_CostUcb)->Arg(5)->Arg(25)->Arg(100);

void BM_SafePolicyMax(benchmark::State& state) {
  const int actions = static_cast<int>(state.range(0));
  const int d = 8;
  std::mt19937_64 rng(3);
  const Vec anchor = random_unit_vec(d, rng) * 0.8;
  SafetyState safety(anchor, 0.5, 0.1, 1.0, 1.0);
  for (int i = 0; i < 30; ++i) safety.update(random_unit_vec(d, rng), 0.1);
  std::vector<Vec> feats{anchor};
  std::vector<double> q{0.2};
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int a = 1; a < actions; ++a) {
    feats.push_back(random_unit_vec(d, rng));
    q.push_back(unif(rng));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(safe_policy_max(safety, q, feats, 0));
  }
}
BENCHMARK(BM_SafePolicyMax)->Arg(4)->Arg(16)->Arg(64);

void BM_SlucbEpisode(benchmark::State& state) {
  SyntheticParams params;
  params.seed = 4;
  const LinearMdpSpec spec = gen_synthetic(params);
  AgentConfig cfg;
  cfg.sigma = spec.sigma;
  SlucbQviAgent agent(agent_view(spec), cfg, 1.0);
  std::mt19937_64 rng(5);
  for (auto _ : state) {
    agent.begin_episode();
    int s = spec.initial_state;
    for (int h = 0; h < spec.horizon; ++h) {
      const ChosenAction action = agent.act(s, h, rng);
      const StepObservation obs = sample_step(spec, s, action.feature, h, rng);
      agent.observe(h, s, action, obs.reward, obs.noisy_cost, obs.next_state);
      s = obs.next_state;
    }
    agent.end_episode();
  }
}
BENCHMARK(BM_SlucbEpisode);

void BM_SafeOptimalDp(benchmark::State& state) {
  SyntheticParams params;
  params.seed = 6;
  const LinearMdpSpec spec = gen_synthetic(params);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimal_safe_dp(spec));
  }
}
BENCHMARK(BM_SafeOptimalDp);

}  // namespace

BENCHMARK_MAIN();
