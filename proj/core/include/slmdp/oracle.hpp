#pragma once

#include <functional>
#include <vector>

#include "slmdp/agents.hpp"
#include "slmdp/env.hpp"
#include "slmdp/safety.hpp"

namespace slmdp {

struct OptimalPolicyEntry {
  Vec feature;                  // optimal feature (deterministic solution)
  std::vector<double> weights;  // optimal distribution (randomized solution)
};

/// Ground-truth safe-optimal solution: per-time-step weight vectors with
/// Q*(s,a) = <w_h, phi(s,a)>, optimal values, and the realizing policy.
struct OptimalSolution {
  std::vector<Vec> w;  // per h
  Mat values;          // (H+1) x |S|, last row zero
  std::vector<std::vector<OptimalPolicyEntry>> policy;  // [h][s]
};

/// Backward induction over the true safe sets. For star-convex geometry each
/// segment's safe part is the exact interval cut by the affine true cost, and
/// the linear objective peaks at an interval endpoint.
OptimalSolution optimal_safe_dp(const LinearMdpSpec& spec);

/// Randomized counterpart: per (s,h) a linear objective is maximized over the
/// simplex cut by one linear cost constraint, so an optimal vertex has
/// support at most two; solved exactly by enumerating singletons and pairs.
/// Requires finite action lists (star geometry uses anchor + endpoints, which
/// is exact here because objective and constraint depend only on the mixed
/// feature).
OptimalSolution optimal_safe_dp_randomized(const LinearMdpSpec& spec);

/// Exact evaluation of the policy that plays feature_of(s, h); for randomized
/// policies pass the expected feature (rewards and transitions are linear).
Mat evaluate_policy(const LinearMdpSpec& spec,
                    const std::function<Vec(int s, int h)>& feature_of);

/// Exhaustive maximum over all safe deterministic policies; finite action
/// sets only, test-scale instances.
Mat brute_force_safe_optimal(const LinearMdpSpec& spec);

/// Whether the orthogonal cost parameter lies in the confidence ellipsoid at
/// one (h, s): ||orth(gamma_h) - gamma_hat||_{A_{h,s}} <= beta.
bool check_event_e1_at(const LinearMdpSpec& spec, const SafetyState& state, int h, double beta);

/// The event above at every (s, h) of an agent's confidence machinery.
bool check_event_e1(const LinearMdpSpec& spec, const EpisodicAgent& agent);

/// Cumulative pseudo-regret sum_k V*(s_1^k) - V^{pi_k}(s_1^k). A term below
/// -1e-9 throws (oracle/agent mismatch).
std::vector<double> regret_curve(const std::vector<double>& v_star_at_start,
                                 const std::vector<double>& v_policy_at_start);

}  // namespace slmdp
