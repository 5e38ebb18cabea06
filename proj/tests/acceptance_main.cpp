// Acceptance suite: end-to-end checks of the simulator at the reference
// experiment scales. Prints one PASS/FAIL line per criterion; the exit code
// is the number of failed criteria.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "slmdp/harness.hpp"

using namespace slmdp;

namespace {

// ---- pinned experiment scales -------------------------------------------

constexpr int kEpisodes = 2000;
constexpr int kSeedCount = 20;
constexpr std::uint64_t kEnvSeed = 7;
// Exploration radius for the regret/baseline runs; the schedule-derived
// radius clips every value to the horizon at this scale, so these runs treat
// the radius as a tuning knob, matching how the reference experiments were
// configured.
constexpr double kTunedBeta = 0.1;
// The known-cost baseline explores the true safe set directly and needs a
// wider radius to stay optimistic about under-sampled directions.
constexpr double kKnownBeta = 3.0;
// Frozen-lake knobs: wide cost-confidence radius over a weak 1e-4 cost prior
// (the pooled stream tightens it within one unit), value-side ridge 1e-2,
// unit kappa, and a 200-step effective horizon for the stationary values.
constexpr double kLakeBeta = 1.0;
constexpr double kLakeKappa = 1.0;
constexpr double kLakeValueLambda = 1e-2;
constexpr double kLakeCostLambda = 1e-4;
constexpr int kLakeEffectiveHorizon = 200;

const char* kLakeMap =
    "S.........\n"
    "..........\n"
    "..DD......\n"
    "..DD......\n"
    "......DD..\n"
    "......DD..\n"
    "..........\n"
    "...DD.....\n"
    "...DD.....\n"
    ".........G\n";

struct Criterion {
  bool pass = false;
  std::string detail;
};

RunConfig synthetic_base(const std::string& agent) {
  RunConfig cfg;
  cfg.experiment = "synthetic";
  cfg.agent = agent;
  cfg.episodes = kEpisodes;
  cfg.seeds.clear();
  for (std::uint64_t s = 1; s <= kSeedCount; ++s) cfg.seeds.push_back(s);
  cfg.env_seed = kEnvSeed;
  cfg.agent_cfg.lambda = 1.0;
  cfg.agent_cfg.delta = 0.01;
  cfg.agent_cfg.sigma = 0.01;
  cfg.synthetic = SyntheticParams{};  // d=5, H=3, |S|=10, N=100, tau=0.5
  cfg.synthetic.sigma = cfg.agent_cfg.sigma;
  cfg.synthetic.seed = kEnvSeed;
  cfg.gridworld.seed = kEnvSeed;
  return cfg;
}

double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Least-squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

std::vector<double> ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> rank(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double shared = 0.5 * (i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = shared;
    i = j + 1;
  }
  return rank;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

// ---- criterion 1: zero violations under the schedule radius --------------

Criterion criterion_zero_violations(const RunResult& slucb_schedule) {
  int e1_failures = 0;
  long violations_in_e1_runs = 0;
  for (const SeedResult& seed : slucb_schedule.seeds) {
    if (!seed.e1_all) {
      ++e1_failures;
      continue;
    }
    violations_in_e1_runs += seed.violations_total;
  }
  const double n = static_cast<double>(kSeedCount);
  const double delta = 0.01;
  const int allowed = static_cast<int>(
      std::floor((delta + 3.0 * std::sqrt(delta * (1.0 - delta) / n)) * n));
  std::ostringstream detail;
  detail << "violations in event-held runs: " << violations_in_e1_runs << ", event failures: "
         << e1_failures << "/" << kSeedCount << " (allowed " << allowed << ")";
  return {violations_in_e1_runs == 0 && e1_failures <= allowed, detail.str()};
}

// ---- criterion 2: randomized expected-cost budget -------------------------

Criterion criterion_randomized_budget(const RunConfig& base) {
  RunConfig cfg = base;
  cfg.agent = "rslucb";
  cfg.eval_regret = false;
  const RunResult result = run_experiment(cfg);
  int e1_failures = 0;
  double worst_excess = -1e300;
  long bad_steps = 0;
  for (const SeedResult& seed : result.seeds) {
    if (!seed.e1_all) {
      ++e1_failures;
      continue;
    }
    for (const EpisodeRecord& episode : seed.episodes) {
      for (const StepRecord& step : episode.steps) {
        worst_excess = std::max(worst_excess, step.expected_cost - result.spec.tau);
        if (step.expected_cost > result.spec.tau + 1e-9) ++bad_steps;
      }
    }
  }
  const double n = static_cast<double>(kSeedCount);
  const int allowed = static_cast<int>(
      std::floor((0.01 + 3.0 * std::sqrt(0.01 * 0.99 / n)) * n));
  std::ostringstream detail;
  detail << "steps over budget: " << bad_steps << ", max excess: " << worst_excess
         << ", event failures: " << e1_failures << "/" << kSeedCount;
  return {bad_steps == 0 && e1_failures <= allowed, detail.str()};
}

// ---- criterion 3: sublinear regret growth ---------------------------------

Criterion criterion_sublinear_regret(const RunResult& slucb_tuned) {
  const std::vector<int> checkpoints{250, 500, 1000, 2000};
  std::vector<double> slopes;
  for (const SeedResult& seed : slucb_tuned.seeds) {
    std::vector<double> log_k, log_r;
    for (int k : checkpoints) {
      log_k.push_back(std::log(static_cast<double>(k)));
      log_r.push_back(std::log(std::max(seed.cum_regret[k - 1], 1e-12)));
    }
    slopes.push_back(slope(log_k, log_r));
  }
  const double mean_slope = mean(slopes);
  std::ostringstream detail;
  detail << "mean log-log slope over seeds: " << mean_slope << " (threshold 0.85)";
  return {mean_slope <= 0.85, detail.str()};
}

// ---- criterion 4: baseline ordering ----------------------------------------

double mean_last_quarter_reward(const RunResult& result) {
  std::vector<double> rewards;
  for (const SeedResult& seed : result.seeds) {
    const std::size_t n = seed.episodes.size();
    for (std::size_t k = n - n / 4; k < n; ++k) {
      rewards.push_back(seed.episodes[k].episode_return);
    }
  }
  return mean(rewards);
}

Criterion criterion_baseline_ordering(const RunConfig& base, const RunResult& slucb_tuned) {
  RunConfig known_cfg = base;
  known_cfg.agent = "lsvi_known_gamma";
  known_cfg.agent_cfg.beta_override = kKnownBeta;
  known_cfg.eval_regret = false;
  known_cfg.check_e1 = false;
  const RunResult known = run_experiment(known_cfg);

  const double slucb_reward = mean_last_quarter_reward(slucb_tuned);
  const double known_reward = mean_last_quarter_reward(known);

  const std::vector<double> lambda_primes{0.8, 0.85, 0.9, 0.95};
  std::vector<double> violation_means;
  bool all_positive = true;
  for (double lp : lambda_primes) {
    RunConfig penalty_cfg = base;
    penalty_cfg.agent = "lsvi_penalty";
    penalty_cfg.lambda_prime = lp;
    penalty_cfg.agent_cfg.beta_override = kTunedBeta;
    penalty_cfg.eval_regret = false;
    penalty_cfg.check_e1 = false;
    const RunResult penalty = run_experiment(penalty_cfg);
    double total = 0.0;
    for (const SeedResult& seed : penalty.seeds) total += static_cast<double>(seed.violations_total);
    const double mean_violations = total / static_cast<double>(penalty.seeds.size());
    violation_means.push_back(mean_violations);
    if (!(mean_violations > 0.0)) all_positive = false;
  }
  const double trend = spearman(lambda_primes, violation_means);

  std::ostringstream detail;
  detail << "last-quarter reward known-cost " << known_reward << " vs safe " << slucb_reward
         << "; penalty violations";
  for (double v : violation_means) detail << ' ' << v;
  detail << "; spearman " << trend;
  return {known_reward >= slucb_reward && all_positive && trend <= 0.0, detail.str()};
}

// ---- criterion 5: oracle equivalence ---------------------------------------

Vec random_simplex(int d, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = expo(rng);
  return v / v.sum();
}

LinearMdpSpec random_finite_spec(int d, int states, int actions, int horizon,
                                 std::mt19937_64& rng, double reward_spread = 1.0) {
  LinearMdpSpec spec;
  spec.d = d;
  spec.horizon = horizon;
  spec.num_states = states;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int h = 0; h < horizon; ++h) {
    Mat m(d, states);
    for (int i = 0; i < d; ++i) m.row(i) = random_simplex(states, rng).transpose();
    spec.mu.push_back(m);
    Vec theta(d), gamma(d);
    for (int i = 0; i < d; ++i) theta[i] = gauss(rng);
    for (int i = 0; i < d; ++i) gamma[i] = gauss(rng);
    const auto remap = [](Vec v) {
      return Vec((v.array() - v.minCoeff()) / (v.maxCoeff() - v.minCoeff()));
    };
    spec.theta.push_back(remap(theta) * reward_spread);
    spec.gamma.push_back(remap(gamma));
  }
  double max_anchor_cost = 0.0;
  for (int s = 0; s < states; ++s) {
    FiniteActions fin;
    for (int a = 0; a < actions; ++a) fin.features.push_back(random_simplex(d, rng));
    double best = 1e300;
    for (int a = 0; a < actions; ++a) {
      double worst = 0.0;
      for (int h = 0; h < horizon; ++h) worst = std::max(worst, spec.gamma[h].dot(fin.features[a]));
      if (worst < best) {
        best = worst;
        fin.anchor_index = a;
      }
    }
    max_anchor_cost = std::max(max_anchor_cost, best);
    spec.actions.emplace_back(std::move(fin));
  }
  spec.tau = max_anchor_cost + 0.1;
  spec.tau_anchor = Mat(horizon, states);
  for (int h = 0; h < horizon; ++h) {
    for (int s = 0; s < states; ++s) {
      const auto& fin = std::get<FiniteActions>(spec.actions[s]);
      spec.tau_anchor(h, s) = spec.gamma[h].dot(fin.features[fin.anchor_index]);
    }
  }
  return spec;
}

Criterion criterion_oracle_equivalence() {
  std::mt19937_64 rng(2024);
  double worst_gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int states = 2 + static_cast<int>(rng() % 2);
    const int actions = 2 + static_cast<int>(rng() % 2);
    const int horizon = 1 + static_cast<int>(rng() % 3);
    const LinearMdpSpec spec = random_finite_spec(3, states, actions, horizon, rng);
    const OptimalSolution sol = optimal_safe_dp(spec);
    const Mat brute = brute_force_safe_optimal(spec);
    worst_gap = std::max(worst_gap, (sol.values - brute).cwiseAbs().maxCoeff());
  }
  if (worst_gap > 1e-10) {
    return {false, "deterministic DP deviates from enumeration by " + std::to_string(worst_gap)};
  }

  double worst_grid_gap = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const LinearMdpSpec spec = random_finite_spec(3, 1, 4, 1, rng, 0.04);
    const OptimalSolution sol = optimal_safe_dp_randomized(spec);
    const auto& fin = std::get<FiniteActions>(spec.actions[0]);
    std::vector<double> q(4), c(4);
    for (int a = 0; a < 4; ++a) {
      q[a] = sol.w[0].dot(fin.features[a]);
      c[a] = spec.gamma[0].dot(fin.features[a]);
    }
    double best = -1e300;
    const int ticks = 500;  // step 0.002
    for (int i = 0; i <= ticks; ++i) {
      for (int j = 0; j + i <= ticks; ++j) {
        for (int k = 0; k + j + i <= ticks; ++k) {
          const double t0 = i / 500.0, t1 = j / 500.0, t2 = k / 500.0;
          const double t3 = 1.0 - t0 - t1 - t2;
          const double cost = t0 * c[0] + t1 * c[1] + t2 * c[2] + t3 * c[3];
          if (cost > spec.tau) continue;
          best = std::max(best, t0 * q[0] + t1 * q[1] + t2 * q[2] + t3 * q[3]);
        }
      }
    }
    worst_grid_gap = std::max(worst_grid_gap, std::abs(sol.values(0, 0) - best));
  }
  std::ostringstream detail;
  detail << "enumeration gap " << worst_gap << ", grid gap " << worst_grid_gap;
  return {worst_grid_gap <= 1e-4, detail.str()};
}

// ---- criterion 6: endpoint rule vs dense alpha grid ------------------------

Criterion criterion_endpoint_rule() {
  SyntheticParams params;
  params.d = 5;
  params.num_states = 5;
  params.num_segments = 20;
  params.seed = 12;
  const LinearMdpSpec spec = gen_synthetic(params);
  AgentConfig cfg;
  cfg.sigma = spec.sigma;
  SlucbQviAgent agent(agent_view(spec), cfg, 0.8);
  std::mt19937_64 rng(5);

  int snapshots = 0;
  double worst_loss = 0.0;
  for (int k = 0; k < 40 && snapshots < 100; ++k) {
    agent.begin_episode();
    if (k >= 2) {
      for (int s = 0; s < spec.num_states && snapshots < 100; ++s) {
        const int h = static_cast<int>(rng() % spec.horizon);
        const ChosenAction chosen = agent.select(s, h);
        const double chosen_value = agent.q_value(h, s, chosen.feature);
        const auto& star = std::get<StarConvexActions>(spec.actions[s]);
        const SafetyState* safety = agent.safety(h, s);
        double grid_best = -1e300;
        for (std::size_t i = 0; i < star.endpoints.size(); ++i) {
          const double max_alpha = safety->max_safe_alpha(star.endpoints[i]);
          for (int t = 0; t <= 1000; ++t) {
            grid_best = std::max(grid_best, agent.q_value(h, s, star.feature(static_cast<int>(i),
                                                                             max_alpha * t / 1000.0)));
          }
        }
        worst_loss = std::max(worst_loss, grid_best - chosen_value);
        ++snapshots;
      }
    }
    int s = spec.initial_state;
    for (int h = 0; h < spec.horizon; ++h) {
      const ChosenAction action = agent.act(s, h, rng);
      const StepObservation obs = sample_step(spec, s, action.feature, h, rng);
      agent.observe(h, s, action, obs.reward, obs.noisy_cost, obs.next_state);
      s = obs.next_state;
    }
    agent.end_episode();
  }
  std::ostringstream detail;
  detail << snapshots << " snapshots, worst grid advantage " << worst_loss;
  return {snapshots == 100 && worst_loss <= 1e-9, detail.str()};
}

// ---- criterion 7: warm-start stopping-time bounds ---------------------------

Criterion criterion_warm_start() {
  std::mt19937_64 rng(31337);
  std::normal_distribution<double> noise(0.0, 0.01);
  int inside = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const TauEstimate est =
        warm_start_tau([&]() { return 0.2 + noise(rng); }, 0.5, 10000, 0.05);
    if (est.samples >= 1637 && est.samples <= 6550) ++inside;
  }
  std::ostringstream detail;
  detail << inside << "/" << trials << " stopping times inside [1637, 6550]";
  return {inside >= 98, detail.str()};
}

// ---- criterion 8: frozen lake ----------------------------------------------

Criterion criterion_frozen_lake() {
  RunConfig cfg;
  cfg.experiment = "gridworld";
  cfg.agent = "rslucb";
  cfg.episodes = 10;
  cfg.seeds.clear();
  for (std::uint64_t s = 1; s <= 15; ++s) cfg.seeds.push_back(s);  // 5 agents x 3 repeats
  cfg.env_seed = 2;
  cfg.map_inline = kLakeMap;
  cfg.agent_cfg.sigma = 0.01;
  cfg.agent_cfg.lambda = kLakeValueLambda;
  cfg.agent_cfg.lambda_cost = kLakeCostLambda;
  cfg.agent_cfg.stationary = true;
  cfg.agent_cfg.share_safety = true;
  cfg.agent_cfg.effective_horizon = kLakeEffectiveHorizon;
  cfg.agent_cfg.beta_override = kLakeBeta;
  cfg.agent_cfg.kappa_override = kLakeKappa;
  cfg.gridworld.horizon = 1000;
  cfg.gridworld.tau = 0.1;
  cfg.gridworld.sigma = cfg.agent_cfg.sigma;
  cfg.gridworld.seed = cfg.env_seed;
  // The designated safe actions: a zero-danger funnel along the top row and
  // the right column; every other cell climbs back toward it.
  cfg.gridworld.safe_action_grid = {
      "RRRRRRRRRD", "UUUUUUUUUD", "ULUURUUUUD", "ULUURUUUUD", "UUDDULUURD",
      "UUUUULUURD", "UUUUUUDDUD", "UULUURUUUD", "UULUURUUUD", "RRRDDRRRRU"};
  const RunResult result = run_experiment(cfg);

  const FrozenLakeReport report = frozen_lake_report(result.seeds);
  bool non_decreasing = true;
  for (std::size_t u = 1; u < report.success_rate.size(); ++u) {
    if (report.success_rate[u] < report.success_rate[u - 1]) non_decreasing = false;
  }
  const double final_rate = report.success_rate.back();

  double worst_expected_cost = 0.0;
  for (const SeedResult& seed : result.seeds) {
    for (const EpisodeRecord& episode : seed.episodes) {
      for (const StepRecord& step : episode.steps) {
        worst_expected_cost = std::max(worst_expected_cost, step.expected_cost);
      }
    }
  }
  std::ostringstream detail;
  detail << "success per unit:";
  for (double s : report.success_rate) detail << ' ' << s;
  detail << "; worst expected danger " << worst_expected_cost << " (budget " << cfg.gridworld.tau
         << ")";
  return {non_decreasing && final_rate >= 0.5 && worst_expected_cost <= cfg.gridworld.tau,
          detail.str()};
}

// ---- criterion 9: property batteries ----------------------------------------

Vec random_vec(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = gauss(rng);
  return v;
}

bool battery_projection(std::mt19937_64& rng, std::string& why) {
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 3 + static_cast<int>(rng() % 6);
    const Vec x = random_vec(d, rng);
    Vec anchor = random_vec(d, rng);
    if (anchor.norm() < 1e-8) continue;
    const ProjectionSplit split = project_onto_anchor(x, anchor);
    if ((split.parallel + split.orthogonal - x).cwiseAbs().maxCoeff() > 1e-12 ||
        std::abs(split.orthogonal.dot(normalize(anchor))) > 1e-10) {
      why = "projection identity violated";
      return false;
    }
  }
  return true;
}

bool battery_norm_domination(std::mt19937_64& rng, std::string& why) {
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 4 + static_cast<int>(rng() % 4);
    Vec anchor = random_vec(d, rng);
    if (anchor.norm() < 1e-8) continue;
    const Vec unit = normalize(anchor);
    RidgeState full(d, 1.0);
    RidgeState orth(d, 1.0);
    for (int i = 0; i < 10; ++i) {
      const Vec phi = random_vec(d, rng);
      full.update(phi, 0.0);
      orth.update(phi - unit.dot(phi) * unit, 0.0);
    }
    const Vec y = random_vec(d, rng);
    const Vec y_orth = y - unit.dot(y) * unit;
    if (full.inv_weighted_norm(y) < orth.inv_weighted_norm(y_orth) - 1e-10) {
      why = "orthogonal-complement norm exceeded the full norm";
      return false;
    }
  }
  return true;
}

bool battery_ridge_refit(std::mt19937_64& rng, std::string& why) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 9);
    RidgeState incremental(d, 1.0);
    Mat dense = Mat::Identity(d, d);
    Vec rhs = Vec::Zero(d);
    for (int i = 0; i < 20; ++i) {
      const Vec x = random_vec(d, rng);
      const double y = gauss(rng);
      incremental.update(x, y);
      dense += x * x.transpose();
      rhs += y * x;
    }
    if ((incremental.solve() - Vec(dense.llt().solve(rhs))).norm() > 1e-9) {
      why = "incremental ridge deviates from a dense refit";
      return false;
    }
  }
  return true;
}

bool battery_cost_affinity(std::mt19937_64& rng, std::string& why) {
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 4;
    Vec anchor = random_vec(d, rng);
    anchor = anchor / anchor.norm() * 0.8;
    Vec gamma = random_vec(d, rng);
    while (!(gamma.dot(anchor) < 0.45)) gamma = random_vec(d, rng);
    SafetyState state(anchor, 0.5, gamma.dot(anchor), 1.0, 1.0);
    for (int i = 0; i < 8; ++i) {
      Vec phi = random_vec(d, rng);
      phi /= std::max(1.0, phi.norm());
      state.update(phi, gamma.dot(phi));
    }
    Vec x = random_vec(d, rng);
    x /= std::max(1.0, x.norm());
    const double at_x = state.cost_ucb(x);
    for (double alpha : {0.2, 0.6, 0.9}) {
      const double mixed = state.cost_ucb(alpha * x + (1.0 - alpha) * anchor);
      const double expected = state.tau_anchor() + alpha * (at_x - state.tau_anchor());
      if (std::abs(mixed - expected) > 1e-10) {
        why = "cost bound is not affine along an anchor segment";
        return false;
      }
    }
  }
  return true;
}

bool battery_optimism(std::mt19937_64& rng, std::string& why) {
  int event_failures = 0;
  const int runs = 100;
  for (int run = 0; run < runs; ++run) {
    SyntheticParams params;
    params.d = 3;
    params.horizon = 2;
    params.num_states = 3;
    params.num_segments = 3;
    params.sigma = 0.01;
    params.seed = 1000 + run;
    LinearMdpSpec spec;
    try {
      spec = gen_synthetic(params);
    } catch (const std::exception&) {
      continue;  // infeasible draw; not part of the optimism budget
    }
    const OptimalSolution opt = optimal_safe_dp(spec);

    AgentConfig cfg;
    cfg.sigma = params.sigma;
    const int episodes = 40;
    const double beta = cfg.resolve_beta(spec.d, spec.horizon, episodes);
    SlucbQviAgent agent(agent_view(spec), cfg, beta);
    std::mt19937_64 run_rng(900 + run);
    bool events_held = true;
    for (int k = 0; k < episodes; ++k) {
      agent.begin_episode();
      if (!check_event_e1(spec, agent)) events_held = false;
      int s = spec.initial_state;
      for (int h = 0; h < spec.horizon; ++h) {
        const ChosenAction action = agent.act(s, h, run_rng);
        // surrogate domination check at the visited pair
        if (agent.q_value(h, s, action.feature) < opt.w[h].dot(action.feature) - 1e-9) {
          events_held = false;
        }
        if (events_held && agent.continuation(s, h) < opt.values(h, s) - 1e-6) {
          why = "value estimate fell below the safe optimum while the events held";
          return false;
        }
        const StepObservation obs = sample_step(spec, s, action.feature, h, run_rng);
        agent.observe(h, s, action, obs.reward, obs.noisy_cost, obs.next_state);
        s = obs.next_state;
      }
      agent.end_episode();
    }
    if (!events_held) ++event_failures;
  }
  const int allowed = static_cast<int>(
      std::floor((0.02 + 3.0 * std::sqrt(0.02 * 0.98 / runs)) * runs));
  if (event_failures > allowed) {
    why = "confidence events failed in " + std::to_string(event_failures) + " runs (allowed " +
          std::to_string(allowed) + ")";
    return false;
  }
  return true;
}

Criterion criterion_property_batteries() {
  std::mt19937_64 rng(606);
  std::string why;
  struct Battery {
    const char* name;
    std::function<bool(std::mt19937_64&, std::string&)> run;
  };
  const std::vector<Battery> batteries{
      {"projection", battery_projection},
      {"norm-domination", battery_norm_domination},
      {"ridge-refit", battery_ridge_refit},
      {"cost-affinity", battery_cost_affinity},
      {"optimism", battery_optimism},
  };
  std::ostringstream detail;
  bool pass = true;
  for (const Battery& battery : batteries) {
    std::string reason;
    const bool ok = battery.run(rng, reason);
    detail << battery.name << (ok ? " ok; " : " FAILED (" + reason + "); ");
    pass = pass && ok;
  }
  return {pass, detail.str()};
}

void report(int index, const char* name, const Criterion& result, int& failures) {
  std::printf("[%s] criterion %d: %s -- %s\n", result.pass ? "PASS" : "FAIL", index, name,
              result.detail.c_str());
  std::fflush(stdout);
  if (!result.pass) ++failures;
}

}  // namespace

int main() {
  int failures = 0;

  // Shared runs: the schedule-radius and tuned-radius synthetic experiments.
  RunConfig schedule_cfg = synthetic_base("slucb");
  schedule_cfg.eval_regret = false;
  const RunResult slucb_schedule = run_experiment(schedule_cfg);

  RunConfig tuned_cfg = synthetic_base("slucb");
  tuned_cfg.agent_cfg.beta_override = kTunedBeta;
  tuned_cfg.eval_regret = true;
  const RunResult slucb_tuned = run_experiment(tuned_cfg);

  report(1, "zero safety violations (schedule radius)",
         criterion_zero_violations(slucb_schedule), failures);
  report(2, "randomized expected-cost budget", criterion_randomized_budget(schedule_cfg),
         failures);
  report(3, "sublinear regret growth", criterion_sublinear_regret(slucb_tuned), failures);
  report(4, "baseline ordering and penalty trend",
         criterion_baseline_ordering(tuned_cfg, slucb_tuned), failures);
  report(5, "oracle equivalence", criterion_oracle_equivalence(), failures);
  report(6, "endpoint rule vs dense grid", criterion_endpoint_rule(), failures);
  report(7, "warm-start stopping bounds", criterion_warm_start(), failures);
  report(8, "frozen lake learning and budget", criterion_frozen_lake(), failures);
  report(9, "module property batteries", criterion_property_batteries(), failures);

  std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
