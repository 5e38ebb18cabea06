#pragma once

#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "slmdp/env.hpp"
#include "slmdp/safety.hpp"

namespace slmdp {

/// Safety-inflation factor 2H/(tau - tau_anchor) + 1. Throws on a
/// non-positive gap.
double kappa(double tau, double tau_anchor, int horizon);

/// Exploration radius
///   max( sigma*sqrt(d*log((2 + 2T/lambda)/delta)) + sqrt(lambda*d),
///        c_beta*d*H*sqrt(log(d*T/delta)) )
/// with T the total number of action plays.
double beta_default(double sigma, int d, double lambda, double delta, double total_steps,
                    int horizon, double c_beta);

struct AgentConfig {
  double lambda = 1.0;
  std::optional<double> lambda_cost;  // cost-confidence regularizer; defaults to lambda
  double delta = 0.01;
  double sigma = 0.01;
  double c_beta = 1.0;
  std::optional<double> beta_override;   // tuned beta; default is beta_default
  std::optional<double> kappa_override;  // tuned kappa; default is the 2H/gap+1 schedule
  double solver_tol = 1e-6;
  // Pool Gram matrices and cost-confidence data across time-steps and compute
  // one stationary value function per episode. Suited to time-homogeneous
  // models with long horizons, where per-time-step accumulators would see at
  // most one sample per episode.
  bool stationary = false;
  // With a single global cost parameter, every observation is informative for
  // every state's complement regression (the anchor-cost removal identity
  // holds against any state's anchor); stationary mode can fold each
  // episode's observations into all states at once.
  bool share_safety = false;
  // Discount scale 1 - 1/effective_horizon for the stationary fixed point
  // (0: use the episode horizon). A horizon-length discount amplifies any
  // persistent fit bias on a recurrent loop by the full horizon; a shorter
  // scale keeps such bubbles below the real value signal.
  int effective_horizon = 0;
  double lambda_prime = 0.0;  // penalty coefficient (penalty baseline only)

  double resolve_beta(int d, int horizon, long episodes) const;
};

/// What agents are allowed to see of the environment: geometry, threshold,
/// and the known anchor costs. Ground-truth parameters stay hidden.
struct EnvView {
  int d = 0;
  int horizon = 0;
  int num_states = 0;
  double tau = 0.0;
  const std::vector<ActionGeometry>* actions = nullptr;
  Mat tau_anchor;  // by value: the warm start substitutes conservative entries
};

EnvView agent_view(const LinearMdpSpec& spec);

struct ChosenAction {
  Vec feature;           // realized feature played
  Vec expected_feature;  // E_theta[phi]; equals feature for deterministic agents
  int index = -1;        // finite action index, or star segment (-1 = anchor)
  double alpha = 1.0;    // endpoint mixing weight for star geometry
  SafePolicy policy;     // distribution drawn from (randomized agents only)
};

struct StepSample {
  int state = 0;
  int time_step = 0;
  Vec phi;
  double reward = 0.0;
  double noisy_cost = 0.0;
  int next_state = 0;
};

class EpisodicAgent {
 public:
  virtual ~EpisodicAgent() = default;
  /// Merges the previous episode's observations and freezes this episode's
  /// weights and safe sets.
  virtual void begin_episode() = 0;
  virtual ChosenAction act(int s, int h, std::mt19937_64& rng) = 0;
  /// Pure decision rule under the frozen weights (no sampling); used for
  /// exact policy evaluation.
  virtual ChosenAction select(int s, int h) const = 0;
  virtual void observe(int h, int s, const ChosenAction& action, double reward,
                       double noisy_cost, int next_state) = 0;
  virtual void end_episode() {}
  virtual int episode() const = 0;
  virtual double beta() const = 0;
  /// Cost-confidence state at (h, s); null for agents without one.
  virtual const SafetyState* safety(int h, int s) const = 0;
};

/// Shared machinery of the UCB value-iteration agents: per-time-step (or
/// pooled) reward-value regression, frozen per-episode weights, memoized
/// continuation values, and the candidate-based argmax.
class UcbValueAgent : public EpisodicAgent {
 public:
  void begin_episode() override;
  ChosenAction act(int s, int h, std::mt19937_64& rng) override;
  ChosenAction select(int s, int h) const override;
  void observe(int h, int s, const ChosenAction& action, double reward, double noisy_cost,
               int next_state) override;
  int episode() const override { return episode_; }
  double beta() const override { return beta_; }
  const SafetyState* safety(int h, int s) const override;

  /// Unclipped objective <w_h, phi> + kappa_h(s)*beta*||phi||_{A_h^{-1}}.
  double q_raw(int h, int s, const Vec& phi) const;
  /// Objective clipped at the horizon.
  double q_value(int h, int s, const Vec& phi) const;
  /// Frozen continuation value at (s, h); zero at h == horizon.
  double continuation(int s, int h) const;

  const Vec& weights(int h) const;
  const RidgeState& reward_regression(int h) const { return grams_[gram_index(h)]; }
  const std::vector<StepSample>& history(int h) const { return history_.at(h); }
  double kappa_at(int h, int s) const;

 protected:
  struct Candidate {
    Vec feature;
    int index = -1;     // -1 = anchor for star geometry
    double alpha = 0.0;
  };

  UcbValueAgent(EnvView view, AgentConfig cfg, double beta, bool uses_safety,
                bool inflate_kappa);

  /// Decision support at (s, h): the anchor plus the per-segment (or
  /// filtered) admissible features. Ordering defines tie-breaking.
  virtual std::vector<Candidate> safe_candidates(int s, int h) const = 0;
  /// Frozen state value; the default takes the clipped maximum over
  /// safe_candidates. Randomized agents override.
  virtual double state_value(int s, int h) const;
  /// Regression target contribution of one logged step (before the
  /// continuation term). The penalty baseline subtracts lambda' * noisy cost.
  virtual double sample_target(const StepSample& sample) const { return sample.reward; }
  /// Hook run after data merge and before the weight pass.
  virtual void on_frozen_data() {}
  /// Hook run after the weight pass (stationary acting caches).
  virtual void on_frozen_weights() {}

  int gram_index(int h) const { return cfg_.stationary ? 0 : h; }
  SafetyState& safety_at(int h, int s);
  const SafetyState& safety_at(int h, int s) const;

  EnvView view_;
  AgentConfig cfg_;
  double beta_;
  bool uses_safety_;
  bool inflate_kappa_;
  int episode_ = 0;

  std::vector<RidgeState> grams_;          // per h, or a single pooled one
  std::vector<SafetyState> safety_states_; // per (h, s), or per s when pooled
  std::vector<Vec> w_;                     // frozen weights per h (single when pooled)
  std::vector<std::vector<StepSample>> history_;  // merged samples per h
  std::vector<StepSample> pending_;        // current-episode staging
  Vec stationary_values_;                  // fitted state values (stationary mode)

 private:
  void backward_pass();
  void stationary_pass();
  mutable Mat v_memo_;  // continuation memo, (horizon+1) x |S|
};

/// Deterministic safe UCB value iteration over estimated safe sets.
class SlucbQviAgent : public UcbValueAgent {
 public:
  SlucbQviAgent(EnvView view, AgentConfig cfg, double beta);

 protected:
  std::vector<Candidate> safe_candidates(int s, int h) const override;
};

/// Randomized variant: plays distributions maximizing the expected objective
/// over the UCB-feasible mixture set.
class RslucbQviAgent : public UcbValueAgent {
 public:
  RslucbQviAgent(EnvView view, AgentConfig cfg, double beta);

  ChosenAction act(int s, int h, std::mt19937_64& rng) override;
  ChosenAction select(int s, int h) const override;

 protected:
  std::vector<Candidate> safe_candidates(int s, int h) const override;
  double state_value(int s, int h) const override;
  void on_frozen_data() override;
  void on_frozen_weights() override;

 private:
  SafePolicySolution solve_policy(int s, int h, bool refine) const;
  std::vector<double> candidate_q(int s, int h, const std::vector<Vec>& feats) const;
  const std::vector<Vec>& action_features(int s) const;
  int action_anchor_index(int s) const;

  mutable std::vector<std::vector<Vec>> action_features_;  // per state
  std::vector<int> anchor_indices_;
  std::vector<PreparedSafePolicy> prepared_;    // stationary fast path, per state
  std::vector<SafePolicySolution> act_cache_;   // stationary frozen decisions
};

/// Unsafe LSVI-UCB given the true cost parameters: kappa = 1, argmax over the
/// exact safe set.
class LsviKnownGammaAgent : public UcbValueAgent {
 public:
  LsviKnownGammaAgent(EnvView view, AgentConfig cfg, double beta, std::vector<Vec> gamma_true);

 protected:
  std::vector<Candidate> safe_candidates(int s, int h) const override;

 private:
  std::vector<Vec> gamma_true_;
};

/// Unsafe LSVI-UCB maximizing reward minus lambda' times the observed noisy
/// cost; no safety filtering.
class LsviPenaltyAgent : public UcbValueAgent {
 public:
  LsviPenaltyAgent(EnvView view, AgentConfig cfg, double beta);

 protected:
  std::vector<Candidate> safe_candidates(int s, int h) const override;
  double sample_target(const StepSample& sample) const override;
};

}  // namespace slmdp
