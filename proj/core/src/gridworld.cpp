#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "slmdp/env.hpp"

namespace slmdp {

GridWorldMap GridWorldMap::parse(const std::string& text) {
  GridWorldMap map;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    map.cells.push_back(line);
  }
  if (map.cells.empty()) throw std::invalid_argument("empty map");
  map.rows = static_cast<int>(map.cells.size());
  map.cols = static_cast<int>(map.cells[0].size());
  for (int r = 0; r < map.rows; ++r) {
    if (static_cast<int>(map.cells[r].size()) != map.cols) {
      throw std::invalid_argument("ragged map rows");
    }
    for (int c = 0; c < map.cols; ++c) {
      const char ch = map.cells[r][c];
      const int idx = map.index(r, c);
      switch (ch) {
        case 'S':
          if (map.start >= 0) throw std::invalid_argument("map has multiple start cells");
          map.start = idx;
          break;
        case 'G':
          if (map.goal >= 0) throw std::invalid_argument("map has multiple goal cells");
          map.goal = idx;
          break;
        case 'D':
          map.dangers.push_back(idx);
          break;
        case '.':
          break;
        default:
          throw std::invalid_argument(std::string("bad map character '") + ch + "'");
      }
    }
  }
  if (map.start < 0) throw std::invalid_argument("map has no start cell");
  if (map.goal < 0) throw std::invalid_argument("map has no goal cell");
  if (map.dangers.empty()) throw std::invalid_argument("map has no danger cells");
  return map;
}

GridWorldMap GridWorldMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

namespace {

constexpr int kNumMoves = 4;

// Desired next cell for a move, staying in place at the border.
int move_target(const GridWorldMap& map, int cell, int action) {
  const int r = cell / map.cols;
  const int c = cell % map.cols;
  int nr = r, nc = c;
  switch (action) {
    case kLeft: nc = c - 1; break;
    case kRight: nc = c + 1; break;
    case kDown: nr = r + 1; break;
    case kUp: nr = r - 1; break;
    default: throw std::logic_error("bad action");
  }
  if (nr < 0 || nr >= map.rows || nc < 0 || nc >= map.cols) return cell;
  return map.index(nr, nc);
}

bool is_absorbing(const GridWorldMap& map, int cell) {
  if (cell == map.goal) return true;
  return std::find(map.dangers.begin(), map.dangers.end(), cell) != map.dangers.end();
}

// Movement template over num_states = cells + sink. Goal absorbs into itself,
// danger absorbs into the sink, the sink absorbs into itself.
Vec movement_distribution(const GridWorldMap& map, const GridworldParams& params, int cell,
                          int action, int num_states) {
  const int sink = num_states - 1;
  Vec p = Vec::Zero(num_states);
  if (cell == sink) {
    p[sink] = 1.0;
    return p;
  }
  if (cell == map.goal) {
    p[map.goal] = 1.0;
    return p;
  }
  if (is_absorbing(map, cell)) {  // danger cell
    p[sink] = 1.0;
    return p;
  }
  const double side = (1.0 - params.move_prob) / 2.0;
  p[move_target(map, cell, action)] += params.move_prob;
  const bool horizontal = (action == kLeft || action == kRight);
  const int ortho1 = horizontal ? kDown : kLeft;
  const int ortho2 = horizontal ? kUp : kRight;
  p[move_target(map, cell, ortho1)] += side;
  p[move_target(map, cell, ortho2)] += side;
  return p;
}

int manhattan(const GridWorldMap& map, int a, int b) {
  return std::abs(a / map.cols - b / map.cols) + std::abs(a % map.cols - b % map.cols);
}

int parse_safe_action(char ch) {
  switch (ch) {
    case 'L': return kLeft;
    case 'R': return kRight;
    case 'D': return kDown;
    case 'U': return kUp;
    default: throw std::invalid_argument(std::string("bad safe-action character '") + ch + "'");
  }
}

}  // namespace

LinearMdpSpec build_gridworld(const GridWorldMap& map, const GridworldParams& params) {
  const int cells = map.rows * map.cols;
  const int num_states = cells + 1;  // + terminal sink
  const int d = num_states;
  const int sink = cells;

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Movement probabilities per (cell, action); the sink keeps the default
  // self-loop row implicitly through movement_distribution.
  std::vector<std::vector<Vec>> probs(num_states, std::vector<Vec>(kNumMoves));
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < kNumMoves; ++a) {
      probs[s][a] = movement_distribution(map, params, s, a, num_states);
    }
  }

  Mat mu;  // d x |S|
  Eigen::PartialPivLU<Mat> lu;
  bool invertible = false;
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    mu = Mat(d, num_states);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < num_states; ++j) mu(i, j) = gauss(rng);
    }
    // p(.|s,a) = mu^T phi, so the feature system matrix is mu^T.
    lu.compute(mu.transpose());
    const double rcond = lu.rcond();
    if (std::isfinite(rcond) && rcond > 1e-12) {
      invertible = true;
      break;
    }
  }
  if (!invertible) throw std::runtime_error("build_gridworld: singular measure matrix");

  std::vector<std::vector<Vec>> feats(num_states, std::vector<Vec>(kNumMoves));
  double max_norm = 0.0;
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < kNumMoves; ++a) {
      feats[s][a] = lu.solve(probs[s][a]);
      max_norm = std::max(max_norm, feats[s][a].norm());
    }
  }
  // Joint rescale keeps mu^T phi, <theta,phi>, <gamma,phi> unchanged while
  // bringing feature norms within 1.
  const double scale = std::max(1.0, max_norm);
  for (auto& per_state : feats) {
    for (Vec& f : per_state) f /= scale;
  }
  mu *= scale;

  Vec gamma = Vec::Zero(d);
  for (int dgr : map.dangers) gamma += mu.col(dgr);

  // Reward parameter from a goal-closeness potential over landing cells:
  // r(s,a) = E_{s'~p(s,a)} rho(s'), so theta = mu * rho is an exact linear
  // solve. Moving toward the goal strictly out-earns the other moves, staying
  // at the absorbed goal pays the maximum, danger and the sink pay nothing.
  // (Arbitrary per-(s,a) reward tables are not representable in this model:
  // every reward is necessarily an expected landing-cell potential.)
  // The goal pays the full rate; free cells carry only a faint closeness
  // term, so camping next to the goal earns almost nothing compared to
  // entering it, and the gradient far from the goal comes from the backed-up
  // goal value rather than the per-step reward.
  Vec rho = Vec::Zero(num_states);
  const double reach = static_cast<double>(map.rows + map.cols - 2);
  constexpr double kClosenessScale = 0.05;
  for (int s = 0; s < cells; ++s) {
    if (is_absorbing(map, s)) {
      rho[s] = (s == map.goal) ? 1.0 : 0.0;
    } else {
      rho[s] = kClosenessScale *
               (1.0 - static_cast<double>(manhattan(map, s, map.goal)) / reach);
    }
  }
  Vec theta = mu * rho;

  // Force rewards into [0,1] exactly; <mu 1, phi> = 1 for every feature, so an
  // affine remap in parameter space is available.
  double rmin = std::numeric_limits<double>::max();
  double rmax = std::numeric_limits<double>::lowest();
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < kNumMoves; ++a) {
      const double r = theta.dot(feats[s][a]);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
  }
  if (rmin < 0.0 || rmax > 1.0) {
    const Vec ones_dir = mu.rowwise().sum();
    theta = (theta - rmin * ones_dir) / (rmax - rmin);
  }

  // Safe action per state: configured grid or the minimum-danger move.
  std::vector<int> safe_action(num_states, 0);
  const bool has_grid = !params.safe_action_grid.empty();
  if (has_grid && (static_cast<int>(params.safe_action_grid.size()) != map.rows)) {
    throw std::invalid_argument("safe-action grid shape mismatch");
  }
  for (int s = 0; s < num_states; ++s) {
    if (s == sink || is_absorbing(map, s)) {
      safe_action[s] = 0;
      continue;
    }
    if (has_grid) {
      const std::string& row = params.safe_action_grid[s / map.cols];
      if (static_cast<int>(row.size()) != map.cols) {
        throw std::invalid_argument("safe-action grid shape mismatch");
      }
      safe_action[s] = parse_safe_action(row[s % map.cols]);
    } else {
      double best = std::numeric_limits<double>::max();
      for (int a = 0; a < kNumMoves; ++a) {
        const double c = gamma.dot(feats[s][a]);
        if (c < best) {
          best = c;
          safe_action[s] = a;
        }
      }
    }
    const double cost = gamma.dot(feats[s][safe_action[s]]);
    if (!(cost < params.tau)) {
      throw std::invalid_argument("no safe action at state " + std::to_string(s));
    }
  }

  LinearMdpSpec spec;
  spec.d = d;
  spec.horizon = params.horizon;
  spec.num_states = num_states;
  spec.tau = params.tau;
  spec.sigma = params.sigma;
  spec.kind = SpecKind::gridworld;
  spec.initial_state = map.start;
  spec.mu.assign(params.horizon, mu);
  spec.theta.assign(params.horizon, theta);
  spec.gamma.assign(params.horizon, gamma);
  spec.tau_anchor = Mat(params.horizon, num_states);
  spec.actions.reserve(num_states);
  for (int s = 0; s < num_states; ++s) {
    FiniteActions fa;
    fa.features = feats[s];
    fa.anchor_index = safe_action[s];
    const double anchor_cost = gamma.dot(fa.features[fa.anchor_index]);
    for (int h = 0; h < params.horizon; ++h) spec.tau_anchor(h, s) = anchor_cost;
    spec.actions.emplace_back(std::move(fa));
  }
  spec.goal_states = {map.goal};
  spec.danger_states = map.dangers;
  spec.grid_rows = map.rows;
  spec.grid_cols = map.cols;
  return spec;
}

}  // namespace slmdp
