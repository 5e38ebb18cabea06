#include "slmdp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace slmdp {

namespace {

struct ScoredFeature {
  Vec feature;
  double value;
};

// Argmax of <w, phi> over the true safe subset of one state's geometry.
ScoredFeature true_safe_argmax(const LinearMdpSpec& spec, const Vec& w, int h, int s) {
  const ActionGeometry& geom = spec.actions[s];
  const Vec& gamma = spec.gamma[h];
  ScoredFeature best{Vec(), -std::numeric_limits<double>::infinity()};
  auto consider = [&](const Vec& f) {
    const double v = w.dot(f);
    if (v > best.value) best = {f, v};
  };
  if (const auto* fin = std::get_if<FiniteActions>(&geom)) {
    for (std::size_t a = 0; a < fin->features.size(); ++a) {
      if (static_cast<int>(a) == fin->anchor_index || gamma.dot(fin->features[a]) <= spec.tau) {
        consider(fin->features[a]);
      }
    }
    return best;
  }
  const auto& star = std::get<StarConvexActions>(geom);
  const double anchor_cost = gamma.dot(star.anchor);
  consider(star.anchor);
  for (std::size_t i = 0; i < star.endpoints.size(); ++i) {
    const double cost = gamma.dot(star.endpoints[i]);
    const double alpha =
        cost <= spec.tau ? 1.0 : (spec.tau - anchor_cost) / (cost - anchor_cost);
    consider(star.feature(static_cast<int>(i), alpha));
  }
  return best;
}

std::vector<Vec> finite_action_list(const LinearMdpSpec& spec, int s) {
  const ActionGeometry& geom = spec.actions[s];
  if (const auto* fin = std::get_if<FiniteActions>(&geom)) return fin->features;
  const auto& star = std::get<StarConvexActions>(geom);
  std::vector<Vec> feats;
  feats.reserve(star.endpoints.size() + 1);
  feats.push_back(star.anchor);
  for (const Vec& e : star.endpoints) feats.push_back(e);
  return feats;
}

}  // namespace

OptimalSolution optimal_safe_dp(const LinearMdpSpec& spec) {
  OptimalSolution sol;
  sol.values = Mat::Zero(spec.horizon + 1, spec.num_states);
  sol.w.assign(spec.horizon, Vec::Zero(spec.d));
  sol.policy.assign(spec.horizon, std::vector<OptimalPolicyEntry>(spec.num_states));
  for (int h = spec.horizon - 1; h >= 0; --h) {
    sol.w[h] = spec.theta[h] + spec.mu[h] * sol.values.row(h + 1).transpose();
    for (int s = 0; s < spec.num_states; ++s) {
      const ScoredFeature best = true_safe_argmax(spec, sol.w[h], h, s);
      sol.values(h, s) = best.value;
      sol.policy[h][s].feature = best.feature;
    }
  }
  return sol;
}

OptimalSolution optimal_safe_dp_randomized(const LinearMdpSpec& spec) {
  OptimalSolution sol;
  sol.values = Mat::Zero(spec.horizon + 1, spec.num_states);
  sol.w.assign(spec.horizon, Vec::Zero(spec.d));
  sol.policy.assign(spec.horizon, std::vector<OptimalPolicyEntry>(spec.num_states));
  for (int h = spec.horizon - 1; h >= 0; --h) {
    sol.w[h] = spec.theta[h] + spec.mu[h] * sol.values.row(h + 1).transpose();
    for (int s = 0; s < spec.num_states; ++s) {
      const std::vector<Vec> feats = finite_action_list(spec, s);
      const int n = static_cast<int>(feats.size());
      std::vector<double> q(n), c(n);
      for (int a = 0; a < n; ++a) {
        q[a] = sol.w[h].dot(feats[a]);
        c[a] = spec.gamma[h].dot(feats[a]);
      }
      int best_i = -1, best_j = -1;
      double best_w = 1.0;
      double best_value = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < n; ++a) {
        if (c[a] <= spec.tau && q[a] > best_value) {
          best_value = q[a];
          best_i = best_j = a;
          best_w = 1.0;
        }
      }
      if (best_i < 0) throw std::runtime_error("randomized oracle: no safe action");
      for (int a = 0; a < n; ++a) {
        if (c[a] > spec.tau) continue;
        for (int b = 0; b < n; ++b) {
          if (c[b] <= spec.tau) continue;
          // Binding mixture: w on the costly action b, constraint met with equality.
          const double w_b = (spec.tau - c[a]) / (c[b] - c[a]);
          const double value = w_b * q[b] + (1.0 - w_b) * q[a];
          if (value > best_value) {
            best_value = value;
            best_i = b;
            best_j = a;
            best_w = w_b;
          }
        }
      }
      sol.values(h, s) = best_value;
      OptimalPolicyEntry& entry = sol.policy[h][s];
      entry.weights.assign(n, 0.0);
      entry.weights[best_i] += best_w;
      entry.weights[best_j] += 1.0 - best_w;
      entry.feature = best_w * feats[best_i] + (1.0 - best_w) * feats[best_j];
    }
  }
  return sol;
}

Mat evaluate_policy(const LinearMdpSpec& spec,
                    const std::function<Vec(int s, int h)>& feature_of) {
  Mat values = Mat::Zero(spec.horizon + 1, spec.num_states);
  for (int h = spec.horizon - 1; h >= 0; --h) {
    for (int s = 0; s < spec.num_states; ++s) {
      const Vec phi = feature_of(s, h);
      const Vec p = transition_probs(spec, h, phi);
      values(h, s) = spec.reward_of(h, phi) + p.dot(values.row(h + 1).transpose());
    }
  }
  return values;
}

Mat brute_force_safe_optimal(const LinearMdpSpec& spec) {
  // Safe action indices per (s, h).
  std::vector<std::vector<std::vector<int>>> safe(spec.horizon);
  long policies = 1;
  for (int h = 0; h < spec.horizon; ++h) {
    safe[h].resize(spec.num_states);
    for (int s = 0; s < spec.num_states; ++s) {
      const auto* fin = std::get_if<FiniteActions>(&spec.actions[s]);
      if (fin == nullptr) {
        throw std::invalid_argument("brute force requires finite action sets");
      }
      for (std::size_t a = 0; a < fin->features.size(); ++a) {
        if (static_cast<int>(a) == fin->anchor_index ||
            spec.gamma[h].dot(fin->features[a]) <= spec.tau) {
          safe[h][s].push_back(static_cast<int>(a));
        }
      }
      policies *= static_cast<long>(safe[h][s].size());
      if (policies > 2'000'000L) throw std::invalid_argument("brute force instance too large");
    }
  }

  Mat best = Mat::Constant(spec.horizon + 1, spec.num_states,
                           -std::numeric_limits<double>::infinity());
  best.row(spec.horizon).setZero();
  std::vector<int> choice(spec.horizon * spec.num_states, 0);
  for (long code = 0; code < policies; ++code) {
    long rem = code;
    for (int h = 0; h < spec.horizon; ++h) {
      for (int s = 0; s < spec.num_states; ++s) {
        const auto& options = safe[h][s];
        choice[h * spec.num_states + s] = options[rem % options.size()];
        rem /= static_cast<long>(options.size());
      }
    }
    const Mat values = evaluate_policy(spec, [&](int s, int h) {
      const auto& fin = std::get<FiniteActions>(spec.actions[s]);
      return fin.features[choice[h * spec.num_states + s]];
    });
    best = best.cwiseMax(values);
  }
  return best;
}

bool check_event_e1_at(const LinearMdpSpec& spec, const SafetyState& state, int h, double beta) {
  const Vec diff = state.orth_component(spec.gamma[h]) - state.gamma_estimate();
  return state.regression().weighted_norm(diff) <= beta;
}

bool check_event_e1(const LinearMdpSpec& spec, const EpisodicAgent& agent) {
  for (int h = 0; h < spec.horizon; ++h) {
    for (int s = 0; s < spec.num_states; ++s) {
      const SafetyState* state = agent.safety(h, s);
      if (state == nullptr) throw std::invalid_argument("agent has no cost-confidence state");
      if (!check_event_e1_at(spec, *state, h, agent.beta())) return false;
    }
  }
  return true;
}

std::vector<double> regret_curve(const std::vector<double>& v_star_at_start,
                                 const std::vector<double>& v_policy_at_start) {
  if (v_star_at_start.size() != v_policy_at_start.size()) {
    throw std::invalid_argument("regret: per-episode value series must align");
  }
  std::vector<double> curve;
  curve.reserve(v_star_at_start.size());
  double total = 0.0;
  for (std::size_t k = 0; k < v_star_at_start.size(); ++k) {
    const double term = v_star_at_start[k] - v_policy_at_start[k];
    if (term < -1e-9) {
      throw std::runtime_error("regret: negative term, executed policy beats the safe optimum");
    }
    total += term;
    curve.push_back(total);
  }
  return curve;
}

}  // namespace slmdp
