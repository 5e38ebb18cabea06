#pragma once

#include <functional>
#include <random>
#include <vector>

#include "slmdp/env.hpp"
#include "slmdp/numerics.hpp"

namespace slmdp {

/// Cost-confidence machinery for one (time-step, state) pair.
///
/// The cost of the anchor action is known, so only the component of the cost
/// parameter orthogonal to the anchor feature is regressed. The Gram matrix
/// is kept full rank by placing the lambda ridge on the anchor direction as
/// well; queried vectors live in the orthogonal complement, where the
/// weighted norms are unaffected.
class SafetyState {
 public:
  SafetyState(const Vec& anchor, double tau, double tau_anchor, double beta, double lambda);

  /// Removes the known anchor-direction cost from a noisy observation:
  /// z - <phi, anchor_unit> / ||anchor|| * tau_anchor.
  double orth_cost_observation(double z, const Vec& phi) const;

  /// Accumulates the orthogonal component of phi into the Gram/target pair.
  void update(const Vec& phi, double z);

  /// Batched form over pre-aggregated observations: phi_outer = sum phi phi^T
  /// and z_phi = sum z*phi. Equivalent to calling update() per sample — the
  /// projections and the anchor-cost removal distribute over the sums — at
  /// O(d^3) per batch instead of O(n d^2).
  void update_batch(const Mat& phi_outer, const Vec& z_phi, int count);

  /// Upper confidence bound on the true cost of feature phi:
  /// known anchor-direction cost + estimated orthogonal cost + beta bonus.
  double cost_ucb(const Vec& phi) const;

  bool is_safe_estimate(const Vec& phi) const { return cost_ucb(phi) <= tau_; }

  /// Largest alpha in [0,1] with cost_ucb(alpha*endpoint + (1-alpha)*anchor)
  /// <= tau; the UCB cost is affine along the segment, so this is exact.
  double max_safe_alpha(const Vec& endpoint) const;

  Vec orth_component(const Vec& phi) const;
  const Vec& gamma_estimate() const;

  const RidgeState& regression() const { return reg_; }
  const Vec& anchor() const { return anchor_; }
  const Vec& anchor_unit() const { return anchor_unit_; }
  double tau() const { return tau_; }
  double tau_anchor() const { return tau_anchor_; }
  double beta() const { return beta_; }

 private:
  Vec anchor_;
  Vec anchor_unit_;
  double anchor_norm_;
  double tau_;
  double tau_anchor_;
  double beta_;
  RidgeState reg_;
  mutable Vec gamma_hat_;
  mutable bool gamma_fresh_ = false;
};

/// Distribution over a finite action list.
struct SafePolicy {
  std::vector<double> weights;
  int sample(std::mt19937_64& rng) const;
};

struct SafePolicySolution {
  SafePolicy policy;
  double value = 0.0;
  Vec mixed_feature;  // E_theta[phi]
};

struct SafePolicyOptions {
  double tol = 1e-6;
  bool refine = true;     // local-search polish after candidate enumeration
  int max_pairwise = 12;  // pairwise search over the top-q actions only
  int refine_max_actions = 16;  // skip the polish on larger action lists
};

/// Maximizes sum_a theta_a q_a over distributions theta whose mixed feature
/// passes the UCB cost constraint (affine part plus beta times the
/// inverse-Gram norm of the orthogonal component -- convex over the simplex).
/// The anchor point mass is always feasible, so a solution always exists; the
/// returned theta is exactly feasible.
SafePolicySolution safe_policy_max(const SafetyState& state, const std::vector<double>& q_values,
                                   const std::vector<Vec>& features, int anchor_index,
                                   const SafePolicyOptions& opts = {});

/// Reusable form of the safe_policy_max feasible set: the whitened orthogonal
/// components, per-action anchor mixes and pairwise feasible intervals are
/// precomputed once, so repeated solves against changing objectives (value
/// iteration sweeps within one episode) cost O(actions) each.
class PreparedSafePolicy {
 public:
  PreparedSafePolicy(const SafetyState& state, std::vector<Vec> features, int anchor_index);

  SafePolicySolution solve(const std::vector<double>& q_values) const;

  const std::vector<Vec>& features() const { return features_; }
  int anchor_index() const { return anchor_index_; }

 private:
  std::vector<Vec> features_;
  int anchor_index_;
  double tau_;
  double beta_;
  std::vector<double> c_lin_;
  Mat whitened_;                     // d x A: L^{-1} of the orthogonal components
  std::vector<double> vertex_g_;     // constraint value at point masses
  std::vector<double> anchor_alpha_; // max feasible anchor-mix weight per action
  struct PairSegment {
    int i, j;
    double lo, hi;
  };
  std::vector<PairSegment> pairs_;
};

struct TauEstimate {
  double tau_hat = 0.0;
  int samples = 0;
  double conservative_gap = 0.0;  // 4 sqrt(log K / samples)
};

/// Adaptive anchor-cost estimation when tau_anchor is unknown: keeps playing
/// the anchor until tau_hat + 6 sqrt(log K / k) <= tau. Throws "gap too
/// small" past 64 log K / min_gap^2 plays.
TauEstimate warm_start_tau(const std::function<double()>& sample_anchor_cost, double tau,
                           int episodes, double min_gap);

TauEstimate warm_start_tau(const LinearMdpSpec& spec, int s, int h, int episodes,
                           std::mt19937_64& rng, double min_gap);

}  // namespace slmdp
