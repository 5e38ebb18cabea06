#include "slmdp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace slmdp {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_double_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

RunConfig run_config_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  cfg.experiment = j.value("experiment", cfg.experiment);
  cfg.agent = j.value("agent", cfg.agent);
  cfg.episodes = j.value("episodes", cfg.episodes);
  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.env_seed = j.value("env_seed", cfg.env_seed);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);

  cfg.agent_cfg.lambda = j.value("lambda", cfg.agent_cfg.lambda);
  if (j.contains("lambda_cost") && !j.at("lambda_cost").is_null()) {
    cfg.agent_cfg.lambda_cost = j.at("lambda_cost").get<double>();
  }
  cfg.agent_cfg.delta = j.value("delta", cfg.agent_cfg.delta);
  cfg.agent_cfg.sigma = j.value("sigma", cfg.agent_cfg.sigma);
  cfg.agent_cfg.c_beta = j.value("c_beta", cfg.agent_cfg.c_beta);
  if (j.contains("beta") && !j.at("beta").is_null()) {
    cfg.agent_cfg.beta_override = j.at("beta").get<double>();
  }
  if (j.contains("kappa") && !j.at("kappa").is_null()) {
    cfg.agent_cfg.kappa_override = j.at("kappa").get<double>();
  }
  cfg.agent_cfg.solver_tol = j.value("solver_tol", cfg.agent_cfg.solver_tol);
  cfg.agent_cfg.stationary = j.value("stationary", cfg.experiment == "gridworld");
  cfg.agent_cfg.share_safety = j.value("share_safety", cfg.agent_cfg.stationary);
  cfg.agent_cfg.effective_horizon = j.value("effective_horizon", cfg.agent_cfg.effective_horizon);
  if (j.contains("lambda_prime") && !j.at("lambda_prime").is_null()) {
    cfg.lambda_prime = j.at("lambda_prime").get<double>();
  }

  cfg.warm_start = j.value("warm_start", cfg.warm_start);
  cfg.warm_start_min_gap = j.value("warm_start_min_gap", cfg.warm_start_min_gap);
  if (j.contains("check_e1") && !j.at("check_e1").is_null()) {
    cfg.check_e1 = j.at("check_e1").get<bool>();
  }
  if (j.contains("eval_regret") && !j.at("eval_regret").is_null()) {
    cfg.eval_regret = j.at("eval_regret").get<bool>();
  }
  cfg.reward_ma_window = j.value("reward_ma_window", cfg.reward_ma_window);
  cfg.threads = j.value("threads", cfg.threads);

  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    cfg.synthetic.d = s.value("d", cfg.synthetic.d);
    cfg.synthetic.horizon = s.value("horizon", cfg.synthetic.horizon);
    cfg.synthetic.num_states = s.value("num_states", cfg.synthetic.num_states);
    cfg.synthetic.num_segments = s.value("segments", cfg.synthetic.num_segments);
    cfg.synthetic.tau = s.value("tau", cfg.synthetic.tau);
    cfg.synthetic.anchor_margin = s.value("anchor_margin", cfg.synthetic.anchor_margin);
  }
  if (j.contains("gridworld")) {
    const json& g = j.at("gridworld");
    cfg.map_path = g.value("map", cfg.map_path);
    if (g.contains("map_text")) {
      const auto& mt = g.at("map_text");
      if (mt.is_array()) {
        std::string text;
        for (const auto& row : mt) text += row.get<std::string>() + "\n";
        cfg.map_inline = text;
      } else {
        cfg.map_inline = mt.get<std::string>();
      }
    }
    cfg.gridworld.horizon = g.value("horizon", cfg.gridworld.horizon);
    cfg.gridworld.tau = g.value("tau", cfg.gridworld.tau);
    cfg.gridworld.move_prob = g.value("move_prob", cfg.gridworld.move_prob);
    if (g.contains("safe_actions")) {
      cfg.gridworld.safe_action_grid = g.at("safe_actions").get<std::vector<std::string>>();
    }
  }
  // One noise knob drives both the environment and the agent defaults.
  cfg.synthetic.sigma = cfg.agent_cfg.sigma;
  cfg.gridworld.sigma = cfg.agent_cfg.sigma;
  cfg.synthetic.seed = cfg.env_seed;
  cfg.gridworld.seed = cfg.env_seed;
  return cfg;
}

std::string run_config_to_json_string(const RunConfig& cfg, int indent) {
  json j;
  j["experiment"] = cfg.experiment;
  j["agent"] = cfg.agent;
  j["episodes"] = cfg.episodes;
  j["seeds"] = cfg.seeds;
  j["env_seed"] = cfg.env_seed;
  j["output_dir"] = cfg.output_dir;
  j["lambda"] = cfg.agent_cfg.lambda;
  if (cfg.agent_cfg.lambda_cost) j["lambda_cost"] = *cfg.agent_cfg.lambda_cost;
  j["delta"] = cfg.agent_cfg.delta;
  j["sigma"] = cfg.agent_cfg.sigma;
  j["c_beta"] = cfg.agent_cfg.c_beta;
  if (cfg.agent_cfg.beta_override) j["beta"] = *cfg.agent_cfg.beta_override;
  if (cfg.agent_cfg.kappa_override) j["kappa"] = *cfg.agent_cfg.kappa_override;
  j["solver_tol"] = cfg.agent_cfg.solver_tol;
  j["stationary"] = cfg.agent_cfg.stationary;
  j["share_safety"] = cfg.agent_cfg.share_safety;
  if (cfg.agent_cfg.effective_horizon > 0) {
    j["effective_horizon"] = cfg.agent_cfg.effective_horizon;
  }
  if (cfg.lambda_prime) j["lambda_prime"] = *cfg.lambda_prime;
  j["warm_start"] = cfg.warm_start;
  j["warm_start_min_gap"] = cfg.warm_start_min_gap;
  if (cfg.check_e1) j["check_e1"] = *cfg.check_e1;
  if (cfg.eval_regret) j["eval_regret"] = *cfg.eval_regret;
  j["reward_ma_window"] = cfg.reward_ma_window;
  j["threads"] = cfg.threads;
  j["synthetic"] = {{"d", cfg.synthetic.d},
                    {"horizon", cfg.synthetic.horizon},
                    {"num_states", cfg.synthetic.num_states},
                    {"segments", cfg.synthetic.num_segments},
                    {"tau", cfg.synthetic.tau},
                    {"anchor_margin", cfg.synthetic.anchor_margin}};
  json g;
  g["map"] = cfg.map_path;
  if (!cfg.map_inline.empty()) g["map_text"] = cfg.map_inline;
  g["horizon"] = cfg.gridworld.horizon;
  g["tau"] = cfg.gridworld.tau;
  g["move_prob"] = cfg.gridworld.move_prob;
  if (!cfg.gridworld.safe_action_grid.empty()) g["safe_actions"] = cfg.gridworld.safe_action_grid;
  j["gridworld"] = std::move(g);
  return indent >= 0 ? j.dump(indent) : j.dump();
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return run_config_from_json_string(text);
}

void validate_config(const RunConfig& cfg) {
  if (cfg.experiment != "synthetic" && cfg.experiment != "gridworld") {
    throw ConfigError("unknown experiment: " + cfg.experiment);
  }
  if (cfg.agent != "slucb" && cfg.agent != "rslucb" && cfg.agent != "lsvi_known_gamma" &&
      cfg.agent != "lsvi_penalty") {
    throw ConfigError("unknown agent: " + cfg.agent);
  }
  if (cfg.episodes < 1) throw ConfigError("episodes must be >= 1");
  if (cfg.seeds.empty()) throw ConfigError("at least one seed required");
  if (cfg.agent == "lsvi_penalty" && !cfg.lambda_prime) {
    throw ConfigError("penalty agent requires lambda_prime");
  }
  if (!(cfg.agent_cfg.lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(cfg.agent_cfg.delta > 0.0 && cfg.agent_cfg.delta < 0.5)) {
    throw ConfigError("delta must lie in (0, 0.5)");
  }
  if (cfg.agent_cfg.sigma < 0.0) throw ConfigError("sigma must be non-negative");
  if (cfg.reward_ma_window < 1) throw ConfigError("reward_ma_window must be >= 1");
  if (cfg.experiment == "gridworld" && cfg.map_path.empty() && cfg.map_inline.empty()) {
    throw ConfigError("gridworld runs need a map (path or map_text)");
  }
  if (cfg.eval_regret.value_or(false) && cfg.agent == "lsvi_penalty") {
    throw ConfigError("pseudo-regret against the safe optimum is undefined for penalty runs");
  }
  if (cfg.check_e1.value_or(false) &&
      (cfg.agent == "lsvi_known_gamma" || cfg.agent == "lsvi_penalty")) {
    throw ConfigError("confidence-event checks need an agent with cost confidence sets");
  }
}

namespace {

bool effective_check_e1(const RunConfig& cfg) {
  if (cfg.check_e1) return *cfg.check_e1;
  const bool has_safety = cfg.agent == "slucb" || cfg.agent == "rslucb";
  return has_safety && cfg.experiment == "synthetic";
}

bool effective_eval_regret(const RunConfig& cfg) {
  if (cfg.eval_regret) return *cfg.eval_regret;
  return cfg.experiment == "synthetic" && cfg.agent != "lsvi_penalty";
}

LinearMdpSpec build_env(const RunConfig& cfg) {
  if (cfg.experiment == "synthetic") return gen_synthetic(cfg.synthetic);
  const GridWorldMap map = cfg.map_inline.empty() ? GridWorldMap::load(cfg.map_path)
                                                  : GridWorldMap::parse(cfg.map_inline);
  return build_gridworld(map, cfg.gridworld);
}

std::unique_ptr<EpisodicAgent> make_agent(const RunConfig& cfg, const EnvView& view,
                                          const LinearMdpSpec& spec) {
  AgentConfig acfg = cfg.agent_cfg;
  if (cfg.lambda_prime) acfg.lambda_prime = *cfg.lambda_prime;
  const double beta = acfg.resolve_beta(view.d, view.horizon, cfg.episodes);
  if (cfg.agent == "slucb") return std::make_unique<SlucbQviAgent>(view, acfg, beta);
  if (cfg.agent == "rslucb") return std::make_unique<RslucbQviAgent>(view, acfg, beta);
  if (cfg.agent == "lsvi_known_gamma") {
    return std::make_unique<LsviKnownGammaAgent>(view, acfg, beta, spec.gamma);
  }
  return std::make_unique<LsviPenaltyAgent>(view, acfg, beta);
}

struct SharedRunState {
  const LinearMdpSpec* spec = nullptr;
  bool check_e1 = false;
  bool eval_regret = false;
  double v_star_start = std::numeric_limits<double>::quiet_NaN();
  Mat anchor_values;  // anchor-only policy values (warm-start accounting)
};

bool contains(const std::vector<int>& xs, int x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

void finish_gridworld_bookkeeping(const LinearMdpSpec& spec, EpisodeRecord& record) {
  if (spec.kind != SpecKind::gridworld) return;
  record.steps_taken = static_cast<int>(record.steps.size());
  record.success = false;
  int t = 0;
  for (const StepRecord& step : record.steps) {
    ++t;
    // Termination is detected by where the chain lands; the remaining steps
    // run in the absorbing part of the model.
    if (contains(spec.goal_states, step.next_state)) {
      record.success = true;
      record.steps_taken = t;
      break;
    }
    if (contains(spec.danger_states, step.next_state)) {
      record.success = false;
      record.steps_taken = t;
      break;
    }
  }
  record.unit_return = record.success ? 6.0 : 0.01 * record.steps_taken;
}

SeedResult run_one_seed(const RunConfig& cfg, const SharedRunState& shared, std::uint64_t seed) {
  const LinearMdpSpec& spec = *shared.spec;
  SeedResult result;
  result.seed = seed;

  std::seed_seq seq{cfg.env_seed, seed, std::uint64_t{0x51a1b2c3}};
  std::mt19937_64 rng(seq);

  EnvView view = agent_view(spec);
  int warmup_episodes = 0;
  if (cfg.warm_start) {
    // Estimate every anchor cost, substitute the conservative thresholds, and
    // charge the consumed plays as anchor-only episodes.
    long plays = 0;
    for (int h = 0; h < spec.horizon; ++h) {
      for (int s = 0; s < spec.num_states; ++s) {
        const TauEstimate est =
            warm_start_tau(spec, s, h, cfg.episodes, rng, cfg.warm_start_min_gap);
        view.tau_anchor(h, s) = spec.tau - est.conservative_gap;
        plays += est.samples;
      }
    }
    warmup_episodes = static_cast<int>((plays + spec.horizon - 1) / spec.horizon);
  }

  std::unique_ptr<EpisodicAgent> agent = make_agent(cfg, view, spec);
  result.e1_checked = shared.check_e1;

  std::vector<double> v_star_series, v_pi_series;
  int episode_number = 0;

  auto log_episode = [&](EpisodeRecord record) {
    if (shared.eval_regret) {
      v_star_series.push_back(record.v_star);
      v_pi_series.push_back(record.v_pi);
    }
    for (const StepRecord& step : record.steps) {
      if (step.violation) ++result.violations_total;
    }
    if (!record.e1) result.e1_all = false;
    result.episodes.push_back(std::move(record));
  };

  const int s1 = spec.initial_state;
  for (int w = 0; w < warmup_episodes; ++w) {
    EpisodeRecord record;
    record.episode = ++episode_number;
    record.initial_state = s1;
    record.warmup = true;
    record.v_star = shared.v_star_start;
    record.v_pi = shared.anchor_values.size() > 0
                      ? shared.anchor_values(0, s1)
                      : std::numeric_limits<double>::quiet_NaN();
    int s = s1;
    for (int h = 0; h < spec.horizon; ++h) {
      const Vec& phi = anchor_feature(spec.actions[s]);
      const StepObservation obs = sample_step(spec, s, phi, h, rng);
      StepRecord step;
      step.state = s;
      step.next_state = obs.next_state;
      step.feature = phi;
      step.reward = obs.reward;
      step.true_cost = obs.true_cost;
      step.expected_cost = obs.true_cost;
      step.violation = obs.true_cost > spec.tau;
      record.episode_return += obs.reward;
      record.steps.push_back(std::move(step));
      s = obs.next_state;
    }
    finish_gridworld_bookkeeping(spec, record);
    log_episode(std::move(record));
  }

  const bool randomized = cfg.is_randomized_agent();
  for (int k = 0; k < cfg.episodes; ++k) {
    agent->begin_episode();
    EpisodeRecord record;
    record.episode = ++episode_number;
    record.initial_state = s1;
    record.e1 = shared.check_e1 ? check_event_e1(spec, *agent) : true;
    record.v_star = shared.v_star_start;
    if (shared.eval_regret) {
      const Mat values = evaluate_policy(
          spec, [&](int s, int h) { return agent->select(s, h).expected_feature; });
      record.v_pi = values(0, s1);
    } else {
      record.v_pi = std::numeric_limits<double>::quiet_NaN();
    }

    int s = s1;
    for (int h = 0; h < spec.horizon; ++h) {
      const ChosenAction action = agent->act(s, h, rng);
      const StepObservation obs = sample_step(spec, s, action.feature, h, rng);
      StepRecord step;
      step.state = s;
      step.next_state = obs.next_state;
      step.feature = action.feature;
      step.reward = obs.reward;
      step.true_cost = obs.true_cost;
      step.expected_cost =
          randomized ? spec.cost_of(h, action.expected_feature) : obs.true_cost;
      step.violation = randomized ? step.expected_cost > spec.tau : obs.true_cost > spec.tau;
      record.episode_return += obs.reward;
      record.steps.push_back(std::move(step));
      agent->observe(h, s, action, obs.reward, obs.noisy_cost, obs.next_state);
      s = obs.next_state;
    }
    agent->end_episode();
    finish_gridworld_bookkeeping(spec, record);
    log_episode(std::move(record));
  }

  if (shared.eval_regret) result.cum_regret = regret_curve(v_star_series, v_pi_series);
  return result;
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg) {
  validate_config(cfg);
  const auto start = std::chrono::steady_clock::now();

  RunResult result;
  result.config = cfg;
  result.spec = build_env(cfg);

  SharedRunState shared;
  shared.spec = &result.spec;
  shared.check_e1 = effective_check_e1(cfg);
  shared.eval_regret = effective_eval_regret(cfg);
  if (shared.eval_regret) {
    const OptimalSolution opt = cfg.is_randomized_agent()
                                    ? optimal_safe_dp_randomized(result.spec)
                                    : optimal_safe_dp(result.spec);
    shared.v_star_start = opt.values(0, result.spec.initial_state);
  }
  if (cfg.warm_start) {
    shared.anchor_values = evaluate_policy(result.spec, [&](int s, int /*h*/) {
      return anchor_feature(result.spec.actions[s]);
    });
  }

  result.seeds.resize(cfg.seeds.size());
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= cfg.seeds.size()) break;
      try {
        result.seeds[i] = run_one_seed(cfg, shared, cfg.seeds[i]);
      } catch (...) {
        std::scoped_lock lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  int n_threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(cfg.seeds.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

namespace {

void write_metric_csv(const std::string& path, const RunResult& result,
                      const std::function<double(const SeedResult&, std::size_t)>& value_at,
                      const std::function<std::size_t(const SeedResult&)>& count_of) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "episode,seed,metric_value\n";
  for (const SeedResult& seed_result : result.seeds) {
    const std::size_t n = count_of(seed_result);
    for (std::size_t k = 0; k < n; ++k) {
      out << (k + 1) << ',' << seed_result.seed << ',' << format_double(value_at(seed_result, k))
          << '\n';
    }
  }
}

std::vector<std::vector<double>> violation_prefix(const std::vector<SeedResult>& seeds) {
  std::vector<std::vector<double>> prefix(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    double total = 0.0;
    prefix[i].reserve(seeds[i].episodes.size());
    for (const EpisodeRecord& episode : seeds[i].episodes) {
      for (const StepRecord& step : episode.steps) {
        if (step.violation) total += 1.0;
      }
      prefix[i].push_back(total);
    }
  }
  return prefix;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (const char ch : text) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 1099511628211ULL;
  }
  return hash;
}

}  // namespace

void write_outputs(const RunResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

  const auto episode_count = [](const SeedResult& r) { return r.episodes.size(); };
  std::vector<std::string> files;

  write_metric_csv(path("reward.csv"), result,
                   [](const SeedResult& r, std::size_t k) { return r.episodes[k].episode_return; },
                   episode_count);
  files.push_back("reward.csv");

  const int window = result.config.reward_ma_window;
  write_metric_csv(
      path("reward_ma" + std::to_string(window) + ".csv"), result,
      [window](const SeedResult& r, std::size_t k) {
        const std::size_t lo = k + 1 >= static_cast<std::size_t>(window) ? k + 1 - window : 0;
        double total = 0.0;
        for (std::size_t i = lo; i <= k; ++i) total += r.episodes[i].episode_return;
        return total / static_cast<double>(k - lo + 1);
      },
      episode_count);
  files.push_back("reward_ma" + std::to_string(window) + ".csv");

  {
    const auto prefix = violation_prefix(result.seeds);
    std::size_t seed_index = 0;
    std::ofstream out(path("violations.csv"));
    if (!out) throw std::runtime_error("cannot write violations.csv");
    out << "episode,seed,metric_value\n";
    for (const SeedResult& seed_result : result.seeds) {
      for (std::size_t k = 0; k < seed_result.episodes.size(); ++k) {
        out << (k + 1) << ',' << seed_result.seed << ','
            << format_double(prefix[seed_index][k]) << '\n';
      }
      ++seed_index;
    }
  }
  files.push_back("violations.csv");

  if (!result.seeds.empty() && !result.seeds.front().cum_regret.empty()) {
    write_metric_csv(path("regret.csv"), result,
                     [](const SeedResult& r, std::size_t k) { return r.cum_regret[k]; },
                     [](const SeedResult& r) { return r.cum_regret.size(); });
    files.push_back("regret.csv");
  }
  if (result.spec.kind == SpecKind::gridworld) {
    write_metric_csv(path("success.csv"), result,
                     [](const SeedResult& r, std::size_t k) {
                       return r.episodes[k].success ? 1.0 : 0.0;
                     },
                     episode_count);
    write_metric_csv(path("unit_return.csv"), result,
                     [](const SeedResult& r, std::size_t k) { return r.episodes[k].unit_return; },
                     episode_count);
    files.push_back("success.csv");
    files.push_back("unit_return.csv");
  }

  save_spec(result.spec, path("env_spec.json"));
  files.push_back("env_spec.json");

  const std::string config_text = run_config_to_json_string(result.config);
  json manifest;
  manifest["config"] = json::parse(config_text);
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(fnv1a(config_text)));
  manifest["config_hash"] = hash_hex;
  manifest["provenance"] = "slmdp-harness/0.1.0";
  manifest["wall_clock_seconds"] = result.wall_clock_seconds;
  manifest["files"] = files;
  json per_seed = json::array();
  for (const SeedResult& r : result.seeds) {
    per_seed.push_back({{"seed", r.seed},
                        {"episodes", r.episodes.size()},
                        {"violations", r.violations_total},
                        {"e1_all", r.e1_all}});
  }
  manifest["seeds"] = per_seed;
  std::ofstream out(path("manifest.json"));
  out << manifest.dump(1) << '\n';
}

std::vector<CompareRow> compare_experiments(const std::vector<RunConfig>& configs,
                                            std::vector<RunResult>* results) {
  if (configs.empty()) throw ConfigError("compare: no configs given");
  std::vector<CompareRow> rows;
  std::string env_fingerprint;
  for (const RunConfig& cfg : configs) {
    RunResult result = run_experiment(cfg);
    const std::string fingerprint = spec_to_json_string(result.spec);
    if (env_fingerprint.empty()) {
      env_fingerprint = fingerprint;
    } else if (fingerprint != env_fingerprint) {
      throw ConfigError("compare: mismatched environments across configs");
    }
    std::string label = cfg.agent;
    if (cfg.lambda_prime) label += "(" + format_double_short(*cfg.lambda_prime) + ")";

    const auto prefix = violation_prefix(result.seeds);
    std::size_t episodes = 0;
    for (const SeedResult& r : result.seeds) episodes = std::max(episodes, r.episodes.size());
    for (std::size_t k = 0; k < episodes; ++k) {
      double r_sum = 0.0, r_sq = 0.0, v_sum = 0.0, v_sq = 0.0;
      int n = 0;
      for (std::size_t si = 0; si < result.seeds.size(); ++si) {
        const SeedResult& r = result.seeds[si];
        if (k >= r.episodes.size()) continue;
        const double reward = r.episodes[k].episode_return;
        const double viol = prefix[si][k];
        r_sum += reward;
        r_sq += reward * reward;
        v_sum += viol;
        v_sq += viol * viol;
        ++n;
      }
      CompareRow row;
      row.agent = label;
      row.episode = static_cast<int>(k + 1);
      row.reward_mean = r_sum / n;
      row.violations_mean = v_sum / n;
      if (n > 1) {
        row.reward_std = std::sqrt(std::max(0.0, (r_sq - r_sum * r_sum / n) / (n - 1)));
        row.violations_std = std::sqrt(std::max(0.0, (v_sq - v_sum * v_sum / n) / (n - 1)));
      }
      rows.push_back(std::move(row));
    }
    if (results != nullptr) results->push_back(std::move(result));
  }
  return rows;
}

void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "agent,episode,reward_mean,reward_std,violations_mean,violations_std\n";
  for (const CompareRow& row : rows) {
    out << row.agent << ',' << row.episode << ',' << format_double(row.reward_mean) << ','
        << format_double(row.reward_std) << ',' << format_double(row.violations_mean) << ','
        << format_double(row.violations_std) << '\n';
  }
}

FrozenLakeReport frozen_lake_report(const std::vector<SeedResult>& results) {
  FrozenLakeReport report;
  std::size_t units = 0;
  for (const SeedResult& r : results) units = std::max(units, r.episodes.size());
  report.success_rate.assign(units, 0.0);
  report.avg_return.assign(units, 0.0);
  for (std::size_t k = 0; k < units; ++k) {
    int n = 0;
    for (const SeedResult& r : results) {
      if (k >= r.episodes.size()) continue;
      report.success_rate[k] += r.episodes[k].success ? 1.0 : 0.0;
      report.avg_return[k] += r.episodes[k].unit_return;
      ++n;
    }
    if (n > 0) {
      report.success_rate[k] /= n;
      report.avg_return[k] /= n;
    }
  }
  return report;
}

}  // namespace slmdp
