#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "slmdp/numerics.hpp"

namespace slmdp {

struct FiniteActions {
  std::vector<Vec> features;
  int anchor_index = 0;
};

/// Union of segments from a shared anchor feature to N endpoints.
/// Action (segment i, alpha) realizes alpha*endpoints[i] + (1-alpha)*anchor.
struct StarConvexActions {
  Vec anchor;
  std::vector<Vec> endpoints;
  Vec feature(int segment, double alpha) const;
};

using ActionGeometry = std::variant<FiniteActions, StarConvexActions>;

const Vec& anchor_feature(const ActionGeometry& g);
/// Finite action count, or segment count for star-convex geometry.
int num_choices(const ActionGeometry& g);

struct StepObservation {
  int next_state = 0;
  double reward = 0.0;
  double noisy_cost = 0.0;
  double true_cost = 0.0;  // logged for evaluation only, never shown to agents
};

enum class SpecKind { synthetic, gridworld, custom };

/// Full ground-truth model. Hidden from agents; the environment, the test
/// oracles and the known-cost baseline read it directly.
struct LinearMdpSpec {
  int d = 0;
  int horizon = 0;
  int num_states = 0;
  double tau = 0.0;    // safety threshold
  double sigma = 0.0;  // std of the additive cost-observation noise
  int initial_state = 0;
  SpecKind kind = SpecKind::custom;

  std::vector<Mat> mu;     // per h: d x |S|, row i = measure i over states
  std::vector<Vec> theta;  // per h: reward parameter
  std::vector<Vec> gamma;  // per h: cost parameter
  std::vector<ActionGeometry> actions;  // per state
  Mat tau_anchor;          // H x |S|: known cost of the anchor action

  // gridworld annotations (empty for other kinds)
  std::vector<int> goal_states;
  std::vector<int> danger_states;
  int grid_rows = 0;
  int grid_cols = 0;

  double reward_of(int h, const Vec& phi) const { return theta[h].dot(phi); }
  double cost_of(int h, const Vec& phi) const { return gamma[h].dot(phi); }
};

/// Distribution over next states for feature phi at time-step h.
/// Entries are clipped at zero and renormalized; a mass defect beyond 1e-8
/// throws ("invalid model").
Vec transition_probs(const LinearMdpSpec& spec, int h, const Vec& phi);

/// One environment step: categorical next state, exact reward, noisy cost.
StepObservation sample_step(const LinearMdpSpec& spec, int s, const Vec& phi, int h,
                            std::mt19937_64& rng);

struct ValidationReport {
  std::vector<std::string> failures;
  std::vector<std::string> notes;
  bool ok() const { return failures.empty(); }
};

ValidationReport validate_spec(const LinearMdpSpec& spec);

struct SyntheticParams {
  int d = 5;
  int horizon = 3;
  int num_states = 10;
  int num_segments = 100;  // N endpoints per state
  double tau = 0.5;
  double sigma = 0.01;
  double anchor_margin = 0.05;  // require tau_anchor <= tau - margin
  std::uint64_t seed = 0;
};

/// Star-convex feature sets on the d-simplex with simplex-measure transition
/// rows, rewards and costs remapped into [0,1].
LinearMdpSpec gen_synthetic(const SyntheticParams& params);

struct GridWorldMap {
  int rows = 0;
  int cols = 0;
  std::vector<std::string> cells;  // 'S' start, 'G' goal, 'D' danger, '.' free
  int start = -1;
  int goal = -1;
  std::vector<int> dangers;

  int index(int r, int c) const { return r * cols + c; }
  static GridWorldMap parse(const std::string& text);
  static GridWorldMap load(const std::string& path);
};

struct GridworldParams {
  int horizon = 1000;
  double tau = 0.1;
  double sigma = 0.01;
  double move_prob = 0.9;  // remaining mass splits over the two orthogonal moves
  std::uint64_t seed = 0;
  int max_attempts = 100;  // redraws of mu on a singular feature system
  // Optional per-cell safe-action override, rows of {L,R,D,U}; empty = pick the
  // minimum-danger action per state.
  std::vector<std::string> safe_action_grid;
};

// Gridworld action indices.
inline constexpr int kLeft = 0, kRight = 1, kDown = 2, kUp = 3;

/// Linear MDP over the map cells plus one terminal sink state; goal cells
/// absorb into themselves, danger cells absorb into the sink. Cost of (s,a)
/// equals the probability of landing on a danger cell.
LinearMdpSpec build_gridworld(const GridWorldMap& map, const GridworldParams& params);

// JSON (de)serialization; matrices row-major.
std::string spec_to_json_string(const LinearMdpSpec& spec, int indent = -1);
LinearMdpSpec spec_from_json_string(const std::string& text);
void save_spec(const LinearMdpSpec& spec, const std::string& path);
LinearMdpSpec load_spec(const std::string& path);

}  // namespace slmdp
