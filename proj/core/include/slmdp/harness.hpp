#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slmdp/agents.hpp"
#include "slmdp/env.hpp"
#include "slmdp/oracle.hpp"

namespace slmdp {

/// Bad or inconsistent run configuration; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string experiment = "synthetic";  // synthetic | gridworld
  std::string agent = "slucb";  // slucb | rslucb | lsvi_known_gamma | lsvi_penalty
  int episodes = 100;
  std::vector<std::uint64_t> seeds = {1};
  std::uint64_t env_seed = 0;
  std::string output_dir;  // empty: no files written

  AgentConfig agent_cfg;
  std::optional<double> lambda_prime;  // required for the penalty agent

  bool warm_start = false;
  double warm_start_min_gap = 0.05;
  std::optional<bool> check_e1;      // default: on for agents with cost confidence
  std::optional<bool> eval_regret;   // default: on for safe agents on synthetic runs
  int reward_ma_window = 100;
  int threads = 0;  // 0 = hardware concurrency

  SyntheticParams synthetic;
  GridworldParams gridworld;
  std::string map_path;    // gridworld map file
  std::string map_inline;  // alternative: map text embedded in the config

  bool is_randomized_agent() const { return agent == "rslucb"; }
};

RunConfig run_config_from_json_string(const std::string& text);
std::string run_config_to_json_string(const RunConfig& cfg, int indent = -1);
RunConfig load_run_config(const std::string& path);
void validate_config(const RunConfig& cfg);  // throws ConfigError

struct StepRecord {
  int state = 0;
  int next_state = 0;
  Vec feature;
  double reward = 0.0;
  double true_cost = 0.0;
  double expected_cost = 0.0;  // under the played distribution; == true_cost when deterministic
  bool violation = false;
};

struct EpisodeRecord {
  int episode = 0;  // 1-based
  int initial_state = 0;
  std::vector<StepRecord> steps;
  double episode_return = 0.0;
  double v_pi = 0.0;    // evaluated value of the frozen policy (NaN when skipped)
  double v_star = 0.0;  // safe-optimal value at the initial state (NaN when skipped)
  bool e1 = true;       // confidence event held at this episode's frozen state
  bool warmup = false;  // anchor-only warm-start episode
  // gridworld bookkeeping
  bool success = false;
  int steps_taken = 0;
  double unit_return = 0.0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<EpisodeRecord> episodes;
  std::vector<double> cum_regret;  // empty when regret evaluation is off
  bool e1_checked = false;
  bool e1_all = true;
  long violations_total = 0;
};

struct RunResult {
  RunConfig config;
  LinearMdpSpec spec;
  std::vector<SeedResult> seeds;
  double wall_clock_seconds = 0.0;
};

RunResult run_experiment(const RunConfig& cfg);

/// Writes one CSV per metric (header `episode,seed,metric_value`), the
/// generated environment spec, and a JSON manifest into dir.
void write_outputs(const RunResult& result, const std::string& dir);

struct CompareRow {
  std::string agent;
  int episode = 0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double violations_mean = 0.0;  // cumulative count
  double violations_std = 0.0;
};

/// Runs each config against the shared environment and merges per-episode
/// statistics across seeds. Environments must match exactly.
std::vector<CompareRow> compare_experiments(const std::vector<RunConfig>& configs,
                                            std::vector<RunResult>* results = nullptr);
void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path);

struct FrozenLakeReport {
  std::vector<double> success_rate;  // per interaction unit, mean over runs
  std::vector<double> avg_return;
};

FrozenLakeReport frozen_lake_report(const std::vector<SeedResult>& results);

}  // namespace slmdp
