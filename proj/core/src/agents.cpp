#include "slmdp/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace slmdp {

double kappa(double tau, double tau_anchor, int horizon) {
  const double gap = tau - tau_anchor;
  if (!(gap > 0.0)) throw std::invalid_argument("kappa: safety gap must be positive");
  return 2.0 * static_cast<double>(horizon) / gap + 1.0;
}

double beta_default(double sigma, int d, double lambda, double delta, double total_steps,
                    int horizon, double c_beta) {
  const double dd = static_cast<double>(d);
  const double noise_term =
      sigma * std::sqrt(dd * std::log((2.0 + 2.0 * total_steps / lambda) / delta)) +
      std::sqrt(lambda * dd);
  const double planning_term =
      c_beta * dd * horizon * std::sqrt(std::log(dd * total_steps / delta));
  return std::max(noise_term, planning_term);
}

double AgentConfig::resolve_beta(int d, int horizon, long episodes) const {
  if (beta_override) return *beta_override;
  return beta_default(sigma, d, lambda, delta,
                      static_cast<double>(episodes) * static_cast<double>(horizon), horizon,
                      c_beta);
}

EnvView agent_view(const LinearMdpSpec& spec) {
  EnvView view;
  view.d = spec.d;
  view.horizon = spec.horizon;
  view.num_states = spec.num_states;
  view.tau = spec.tau;
  view.actions = &spec.actions;
  view.tau_anchor = spec.tau_anchor;
  return view;
}

UcbValueAgent::UcbValueAgent(EnvView view, AgentConfig cfg, double beta, bool uses_safety,
                             bool inflate_kappa)
    : view_(std::move(view)),
      cfg_(cfg),
      beta_(beta),
      uses_safety_(uses_safety),
      inflate_kappa_(inflate_kappa) {
  if (view_.actions == nullptr) throw std::invalid_argument("agent: empty environment view");
  const int gram_count = cfg_.stationary ? 1 : view_.horizon;
  grams_.reserve(gram_count);
  for (int i = 0; i < gram_count; ++i) grams_.emplace_back(view_.d, cfg_.lambda);
  w_.assign(gram_count, Vec::Zero(view_.d));
  history_.resize(view_.horizon);
  if (uses_safety_) {
    const int copies = cfg_.stationary ? 1 : view_.horizon;
    safety_states_.reserve(static_cast<std::size_t>(copies) * view_.num_states);
    for (int i = 0; i < copies; ++i) {
      for (int s = 0; s < view_.num_states; ++s) {
        safety_states_.emplace_back(anchor_feature((*view_.actions)[s]), view_.tau,
                                    view_.tau_anchor(cfg_.stationary ? 0 : i, s), beta_,
                                    cfg_.lambda_cost.value_or(cfg_.lambda));
      }
    }
  }
  stationary_values_ = Vec::Zero(view_.num_states);
  v_memo_ = Mat::Constant(view_.horizon + 1, view_.num_states,
                          std::numeric_limits<double>::quiet_NaN());
}

SafetyState& UcbValueAgent::safety_at(int h, int s) {
  const int row = cfg_.stationary ? 0 : h;
  return safety_states_.at(static_cast<std::size_t>(row) * view_.num_states + s);
}

const SafetyState& UcbValueAgent::safety_at(int h, int s) const {
  const int row = cfg_.stationary ? 0 : h;
  return safety_states_.at(static_cast<std::size_t>(row) * view_.num_states + s);
}

const SafetyState* UcbValueAgent::safety(int h, int s) const {
  return uses_safety_ ? &safety_at(h, s) : nullptr;
}

void UcbValueAgent::observe(int h, int s, const ChosenAction& action, double reward,
                            double noisy_cost, int next_state) {
  StepSample sample;
  sample.state = s;
  sample.time_step = h;
  sample.phi = action.feature;
  sample.reward = reward;
  sample.noisy_cost = noisy_cost;
  sample.next_state = next_state;
  pending_.push_back(std::move(sample));
}

void UcbValueAgent::begin_episode() {
  const bool shared_safety = uses_safety_ && cfg_.stationary && cfg_.share_safety;
  if (shared_safety && !pending_.empty()) {
    Mat phi_outer = Mat::Zero(view_.d, view_.d);
    Vec z_phi = Vec::Zero(view_.d);
    for (const StepSample& sample : pending_) {
      phi_outer.selfadjointView<Eigen::Lower>().rankUpdate(sample.phi);
      z_phi += sample.noisy_cost * sample.phi;
    }
    phi_outer.triangularView<Eigen::StrictlyUpper>() = phi_outer.transpose();
    for (int s = 0; s < view_.num_states; ++s) {
      safety_at(0, s).update_batch(phi_outer, z_phi, static_cast<int>(pending_.size()));
    }
  }
  for (const StepSample& sample : pending_) {
    if (uses_safety_ && !shared_safety) {
      safety_at(sample.time_step, sample.state).update(sample.phi, sample.noisy_cost);
    }
    grams_[gram_index(sample.time_step)].update(sample.phi, 0.0);
    history_[sample.time_step].push_back(sample);
  }
  pending_.clear();
  ++episode_;
  on_frozen_data();
  if (cfg_.stationary) {
    stationary_pass();
  } else {
    backward_pass();
  }
  on_frozen_weights();
}

void UcbValueAgent::backward_pass() {
  v_memo_.setConstant(std::numeric_limits<double>::quiet_NaN());
  for (int h = view_.horizon - 1; h >= 0; --h) {
    Vec rhs = Vec::Zero(view_.d);
    for (const StepSample& sample : history_[h]) {
      rhs += sample.phi * (sample_target(sample) + continuation(sample.next_state, h + 1));
    }
    w_[h] = grams_[h].solve_for(rhs);
  }
}

void UcbValueAgent::stationary_pass() {
  // Fitted value iteration at a fixed pooled Gram; the previous episode's
  // values warm-start the sweep. A 1 - 1/H discount keeps the stationary
  // fixed point bounded by H, so recurrent positive-reward regions do not
  // all saturate at the horizon clip and the value ordering survives.
  constexpr int kMaxSweeps = 300;
  const double horizon = std::max(1.0, static_cast<double>(view_.horizon));
  const double scale = cfg_.effective_horizon > 0
                           ? std::min(horizon, static_cast<double>(cfg_.effective_horizon))
                           : horizon;
  const double discount = 1.0 - 1.0 / scale;
  const double tol = 1e-9 * horizon;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    Vec rhs = Vec::Zero(view_.d);
    for (const auto& level : history_) {
      for (const StepSample& sample : level) {
        rhs += sample.phi *
               (sample_target(sample) + discount * stationary_values_[sample.next_state]);
      }
    }
    w_[0] = grams_[0].solve_for(rhs);
    double diff = 0.0;
    Vec next(view_.num_states);
    for (int s = 0; s < view_.num_states; ++s) {
      // values are nonnegative by construction (rewards in [0,1]); the floor
      // stops extrapolation artifacts from bootstrapping through the sweep
      next[s] = std::clamp(state_value(s, 0), 0.0, horizon);
      diff = std::max(diff, std::abs(next[s] - stationary_values_[s]));
    }
    stationary_values_ = next;
    if (diff < tol) break;
  }
}

double UcbValueAgent::continuation(int s, int h) const {
  if (h >= view_.horizon) return 0.0;
  if (cfg_.stationary) return stationary_values_[s];
  double& slot = v_memo_(h, s);
  if (std::isnan(slot)) slot = state_value(s, h);
  return slot;
}

double UcbValueAgent::kappa_at(int h, int s) const {
  if (!inflate_kappa_) return 1.0;
  if (cfg_.kappa_override) return *cfg_.kappa_override;
  return kappa(view_.tau, view_.tau_anchor(cfg_.stationary ? 0 : h, s), view_.horizon);
}

double UcbValueAgent::q_raw(int h, int s, const Vec& phi) const {
  const RidgeState& reg = grams_[gram_index(h)];
  return w_[gram_index(h)].dot(phi) + kappa_at(h, s) * beta_ * reg.inv_weighted_norm(phi);
}

double UcbValueAgent::q_value(int h, int s, const Vec& phi) const {
  return std::min(q_raw(h, s, phi), static_cast<double>(view_.horizon));
}

double UcbValueAgent::state_value(int s, int h) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const Candidate& cand : safe_candidates(s, h)) {
    best = std::max(best, q_raw(h, s, cand.feature));
  }
  return std::min(best, static_cast<double>(view_.horizon));
}

const Vec& UcbValueAgent::weights(int h) const { return w_.at(gram_index(h)); }

ChosenAction UcbValueAgent::select(int s, int h) const {
  const auto cands = safe_candidates(s, h);
  int best = 0;
  double best_q = -std::numeric_limits<double>::infinity();
  double best_raw = best_q;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double raw = q_raw(h, s, cands[i].feature);
    const double q = std::min(raw, static_cast<double>(view_.horizon));
    // Clipping creates wide ties; rank those by the unclipped value so the
    // argmax keeps discriminating, then fall back to the candidate order.
    if (q > best_q || (q == best_q && raw > best_raw)) {
      best_q = q;
      best_raw = raw;
      best = static_cast<int>(i);
    }
  }
  ChosenAction action;
  action.feature = cands[best].feature;
  action.expected_feature = cands[best].feature;
  action.index = cands[best].index;
  action.alpha = cands[best].alpha;
  return action;
}

ChosenAction UcbValueAgent::act(int s, int h, std::mt19937_64& /*rng*/) { return select(s, h); }

SlucbQviAgent::SlucbQviAgent(EnvView view, AgentConfig cfg, double beta)
    : UcbValueAgent(std::move(view), cfg, beta, /*uses_safety=*/true, /*inflate_kappa=*/true) {}

std::vector<UcbValueAgent::Candidate> SlucbQviAgent::safe_candidates(int s, int h) const {
  const ActionGeometry& geom = (*view_.actions)[s];
  const SafetyState& safety = safety_at(h, s);
  std::vector<Candidate> out;
  if (const auto* fin = std::get_if<FiniteActions>(&geom)) {
    out.reserve(fin->features.size());
    for (std::size_t a = 0; a < fin->features.size(); ++a) {
      if (static_cast<int>(a) == fin->anchor_index ||
          safety.is_safe_estimate(fin->features[a])) {
        out.push_back({fin->features[a], static_cast<int>(a), 1.0});
      }
    }
    return out;
  }
  const auto& star = std::get<StarConvexActions>(geom);
  out.reserve(star.endpoints.size() + 1);
  out.push_back({star.anchor, -1, 0.0});
  for (std::size_t i = 0; i < star.endpoints.size(); ++i) {
    const double alpha = safety.max_safe_alpha(star.endpoints[i]);
    out.push_back({star.feature(static_cast<int>(i), alpha), static_cast<int>(i), alpha});
  }
  return out;
}

RslucbQviAgent::RslucbQviAgent(EnvView view, AgentConfig cfg, double beta)
    : UcbValueAgent(std::move(view), cfg, beta, /*uses_safety=*/true, /*inflate_kappa=*/true) {
  action_features_.resize(view_.num_states);
  anchor_indices_.assign(view_.num_states, 0);
  for (int s = 0; s < view_.num_states; ++s) {
    const ActionGeometry& geom = (*view_.actions)[s];
    if (const auto* fin = std::get_if<FiniteActions>(&geom)) {
      action_features_[s] = fin->features;
      anchor_indices_[s] = fin->anchor_index;
    } else {
      const auto& star = std::get<StarConvexActions>(geom);
      action_features_[s].reserve(star.endpoints.size() + 1);
      action_features_[s].push_back(star.anchor);
      for (const Vec& e : star.endpoints) action_features_[s].push_back(e);
      anchor_indices_[s] = 0;
    }
  }
}

const std::vector<Vec>& RslucbQviAgent::action_features(int s) const {
  return action_features_[s];
}

int RslucbQviAgent::action_anchor_index(int s) const { return anchor_indices_[s]; }

std::vector<double> RslucbQviAgent::candidate_q(int s, int h,
                                                const std::vector<Vec>& feats) const {
  std::vector<double> q;
  q.reserve(feats.size());
  for (const Vec& f : feats) q.push_back(q_raw(h, s, f));
  return q;
}

SafePolicySolution RslucbQviAgent::solve_policy(int s, int h, bool refine) const {
  const auto& feats = action_features_[s];
  const auto q = candidate_q(s, h, feats);
  if (cfg_.stationary && !refine && !prepared_.empty()) return prepared_[s].solve(q);
  SafePolicyOptions opts;
  opts.tol = cfg_.solver_tol;
  opts.refine = refine;
  return safe_policy_max(safety_at(h, s), q, feats, anchor_indices_[s], opts);
}

double RslucbQviAgent::state_value(int s, int h) const {
  return std::min(solve_policy(s, h, /*refine=*/false).value,
                  static_cast<double>(view_.horizon));
}

void RslucbQviAgent::on_frozen_data() {
  if (!cfg_.stationary) return;
  prepared_.clear();
  prepared_.reserve(view_.num_states);
  for (int s = 0; s < view_.num_states; ++s) {
    prepared_.emplace_back(safety_at(0, s), action_features_[s], anchor_indices_[s]);
  }
}

void RslucbQviAgent::on_frozen_weights() {
  if (!cfg_.stationary) return;
  act_cache_.clear();
  act_cache_.reserve(view_.num_states);
  for (int s = 0; s < view_.num_states; ++s) {
    act_cache_.push_back(solve_policy(s, 0, /*refine=*/true));
  }
}

std::vector<UcbValueAgent::Candidate> RslucbQviAgent::safe_candidates(int s, int /*h*/) const {
  // Decision support of the randomized agent: the full action list; the
  // mixture constraint is enforced by the policy solver, not by filtering.
  std::vector<Candidate> out;
  const bool star = std::holds_alternative<StarConvexActions>((*view_.actions)[s]);
  const auto& feats = action_features_[s];
  out.reserve(feats.size());
  for (std::size_t a = 0; a < feats.size(); ++a) {
    if (star) {
      out.push_back({feats[a], static_cast<int>(a) - 1, a == 0 ? 0.0 : 1.0});
    } else {
      out.push_back({feats[a], static_cast<int>(a), 1.0});
    }
  }
  return out;
}

ChosenAction RslucbQviAgent::select(int s, int h) const {
  const SafePolicySolution sol =
      (cfg_.stationary && !act_cache_.empty()) ? act_cache_[s] : solve_policy(s, h, true);
  ChosenAction action;
  action.policy = sol.policy;
  action.expected_feature = sol.mixed_feature;
  int top = 0;
  for (std::size_t a = 1; a < sol.policy.weights.size(); ++a) {
    if (sol.policy.weights[a] > sol.policy.weights[top]) top = static_cast<int>(a);
  }
  const bool star = std::holds_alternative<StarConvexActions>((*view_.actions)[s]);
  action.feature = action_features_[s][top];
  action.index = star ? top - 1 : top;
  action.alpha = star ? (top == 0 ? 0.0 : 1.0) : 1.0;
  return action;
}

ChosenAction RslucbQviAgent::act(int s, int h, std::mt19937_64& rng) {
  const SafePolicySolution sol =
      (cfg_.stationary && !act_cache_.empty()) ? act_cache_[s] : solve_policy(s, h, true);
  ChosenAction action;
  action.policy = sol.policy;
  action.expected_feature = sol.mixed_feature;
  const int drawn = sol.policy.sample(rng);
  const bool star = std::holds_alternative<StarConvexActions>((*view_.actions)[s]);
  action.feature = action_features_[s][drawn];
  action.index = star ? drawn - 1 : drawn;
  action.alpha = star ? (drawn == 0 ? 0.0 : 1.0) : 1.0;
  return action;
}

LsviKnownGammaAgent::LsviKnownGammaAgent(EnvView view, AgentConfig cfg, double beta,
                                         std::vector<Vec> gamma_true)
    : UcbValueAgent(std::move(view), cfg, beta, /*uses_safety=*/false, /*inflate_kappa=*/false),
      gamma_true_(std::move(gamma_true)) {
  if (static_cast<int>(gamma_true_.size()) != view_.horizon) {
    throw std::invalid_argument("known-gamma agent: one cost vector per time-step required");
  }
}

std::vector<UcbValueAgent::Candidate> LsviKnownGammaAgent::safe_candidates(int s, int h) const {
  const ActionGeometry& geom = (*view_.actions)[s];
  const Vec& gamma = gamma_true_[h];
  std::vector<Candidate> out;
  if (const auto* fin = std::get_if<FiniteActions>(&geom)) {
    for (std::size_t a = 0; a < fin->features.size(); ++a) {
      if (static_cast<int>(a) == fin->anchor_index ||
          gamma.dot(fin->features[a]) <= view_.tau) {
        out.push_back({fin->features[a], static_cast<int>(a), 1.0});
      }
    }
    return out;
  }
  const auto& star = std::get<StarConvexActions>(geom);
  const double anchor_cost = gamma.dot(star.anchor);
  out.reserve(star.endpoints.size() + 1);
  out.push_back({star.anchor, -1, 0.0});
  for (std::size_t i = 0; i < star.endpoints.size(); ++i) {
    const double cost = gamma.dot(star.endpoints[i]);
    // True cost is affine along the segment, so the exact safe part is an interval.
    const double alpha =
        cost <= view_.tau ? 1.0 : (view_.tau - anchor_cost) / (cost - anchor_cost);
    out.push_back({star.feature(static_cast<int>(i), alpha), static_cast<int>(i), alpha});
  }
  return out;
}

LsviPenaltyAgent::LsviPenaltyAgent(EnvView view, AgentConfig cfg, double beta)
    : UcbValueAgent(std::move(view), cfg, beta, /*uses_safety=*/false, /*inflate_kappa=*/false) {}

std::vector<UcbValueAgent::Candidate> LsviPenaltyAgent::safe_candidates(int s, int /*h*/) const {
  const ActionGeometry& geom = (*view_.actions)[s];
  std::vector<Candidate> out;
  if (const auto* fin = std::get_if<FiniteActions>(&geom)) {
    for (std::size_t a = 0; a < fin->features.size(); ++a) {
      out.push_back({fin->features[a], static_cast<int>(a), 1.0});
    }
    return out;
  }
  const auto& star = std::get<StarConvexActions>(geom);
  out.reserve(star.endpoints.size() + 1);
  out.push_back({star.anchor, -1, 0.0});
  for (std::size_t i = 0; i < star.endpoints.size(); ++i) {
    out.push_back({star.endpoints[i], static_cast<int>(i), 1.0});
  }
  return out;
}

double LsviPenaltyAgent::sample_target(const StepSample& sample) const {
  return sample.reward - cfg_.lambda_prime * sample.noisy_cost;
}

}  // namespace slmdp
