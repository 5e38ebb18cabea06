#include "slmdp/safety.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace slmdp {

SafetyState::SafetyState(const Vec& anchor, double tau, double tau_anchor, double beta,
                         double lambda)
    : anchor_(anchor),
      anchor_unit_(normalize(anchor)),
      anchor_norm_(anchor.norm()),
      tau_(tau),
      tau_anchor_(tau_anchor),
      beta_(beta),
      reg_(static_cast<int>(anchor.size()), lambda),
      gamma_hat_(Vec::Zero(anchor.size())) {
  if (!(tau_anchor < tau)) {
    throw std::invalid_argument("anchor cost must lie strictly below the threshold");
  }
  gamma_fresh_ = true;  // no data yet, estimate is exactly zero
}

Vec SafetyState::orth_component(const Vec& phi) const {
  return phi - anchor_unit_.dot(phi) * anchor_unit_;
}

double SafetyState::orth_cost_observation(double z, const Vec& phi) const {
  return z - anchor_unit_.dot(phi) / anchor_norm_ * tau_anchor_;
}

void SafetyState::update(const Vec& phi, double z) {
  const Vec orth = orth_component(phi);
  reg_.update(orth, orth_cost_observation(z, phi));
  gamma_fresh_ = false;
}

void SafetyState::update_batch(const Mat& phi_outer, const Vec& z_phi, int count) {
  // sum_j orth(phi_j) orth(phi_j)^T = P Phi P with P = I - u u^T, and
  // sum_j z_adj_j orth(phi_j) = P (Z - tau_anchor/||anchor|| * Phi u).
  const Vec u = anchor_unit_;
  const Mat projected_half = phi_outer - u * (u.transpose() * phi_outer);
  const Mat gram_add = projected_half - (projected_half * u) * u.transpose();
  Vec target_add = z_phi - tau_anchor_ / anchor_norm_ * (phi_outer * u);
  target_add -= u.dot(target_add) * u;
  reg_.update_batch(gram_add, target_add, count);
  gamma_fresh_ = false;
}

const Vec& SafetyState::gamma_estimate() const {
  if (!gamma_fresh_) {
    gamma_hat_ = reg_.solve();
    gamma_fresh_ = true;
  }
  return gamma_hat_;
}

double SafetyState::cost_ucb(const Vec& phi) const {
  const double along_anchor = anchor_unit_.dot(phi) / anchor_norm_ * tau_anchor_;
  const Vec orth = orth_component(phi);
  return along_anchor + gamma_estimate().dot(orth) + beta_ * reg_.inv_weighted_norm(orth);
}

double SafetyState::max_safe_alpha(const Vec& endpoint) const {
  const double ucb = cost_ucb(endpoint);
  if (ucb <= tau_) return 1.0;
  // cost_ucb(alpha*x + (1-alpha)*anchor) = tau_anchor + alpha*(cost_ucb(x) - tau_anchor)
  return (tau_ - tau_anchor_) / (ucb - tau_anchor_);
}

int SafePolicy::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    acc += weights[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(weights.size()) - 1;
}

namespace {

// Mixture candidates are assembled from precomputed per-action pieces, while
// callers re-check them through cost_ucb on the mixed feature; the two
// floating-point routes can disagree by ~1e-12, so mixture candidates target
// a slightly tightened threshold.
double mixture_cap(double tau) { return tau - 1e-10 * std::max(1.0, std::abs(tau)); }

struct WInterval {
  double lo, hi;
};

// Real solutions of A w^2 + B w + C <= 0, written into out; returns the piece
// count (0, 1, or 2 with the convention lo <= hi; +-inf for open ends).
int quadratic_nonpositive(double a, double b, double c, WInterval out[2]) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), 1e-300});
  if (std::abs(a) <= 1e-14 * scale) {
    if (std::abs(b) <= 1e-14 * scale) {
      if (c <= 0.0) {
        out[0] = {-kInf, kInf};
        return 1;
      }
      return 0;
    }
    out[0] = b > 0.0 ? WInterval{-kInf, -c / b} : WInterval{-c / b, kInf};
    return 1;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    if (a < 0.0) {
      out[0] = {-kInf, kInf};
      return 1;
    }
    return 0;
  }
  const double sq = std::sqrt(disc);
  // numerically stable root pair
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  double r1 = q / a;
  double r2 = (q != 0.0) ? c / q : r1;
  if (r1 > r2) std::swap(r1, r2);
  if (a > 0.0) {
    out[0] = {r1, r2};
    return 1;
  }
  out[0] = {-kInf, r1};
  out[1] = {r2, kInf};
  return 2;
}

// Feasible w-intervals within [0,1] of the two-point mixture w*i + (1-w)*j
// under  w c_i + (1-w) c_j + beta * ||w W_i + (1-w) W_j|| <= cap,
// given the whitened Gram entries gii = <W_i,W_i>, gij, gjj. The constraint
// is equivalent to r(w) >= 0 and beta^2 q(w) <= r(w)^2 with r affine and q
// quadratic, so the boundary is a quadratic root problem.
int pair_feasible_intervals(double gii, double gij, double gjj, double ci, double cj,
                            double beta, double cap, WInterval out[2]) {
  const double b2 = beta * beta;
  const double dc = ci - cj;
  const double rj = cap - cj;  // r(w) = rj - w*dc
  const double qa = b2 * (gii - 2.0 * gij + gjj) - dc * dc;
  const double qb = 2.0 * b2 * (gij - gjj) + 2.0 * dc * rj;
  const double qc = b2 * gjj - rj * rj;

  WInterval quad[2];
  const int pieces = quadratic_nonpositive(qa, qb, qc, quad);

  // intersect with { r(w) >= 0 } and [0,1]
  double r_lo = 0.0, r_hi = 1.0;
  if (dc > 0.0) {
    r_hi = std::min(r_hi, rj / dc);
  } else if (dc < 0.0) {
    r_lo = std::max(r_lo, rj / dc);
  } else if (rj < 0.0) {
    return 0;
  }
  int count = 0;
  for (int p = 0; p < pieces; ++p) {
    const double lo = std::max(quad[p].lo, r_lo);
    const double hi = std::min(quad[p].hi, r_hi);
    if (lo <= hi) out[count++] = {lo, hi};
  }
  return count;
}

// Working view of the mixture-feasibility problem.
struct MixProblem {
  const SafetyState& state;
  const std::vector<double>& q;
  std::vector<Vec> orth;
  std::vector<double> c_lin;
  double tau;
  Mat whitened;                  // d x A, L^{-1} of the orthogonal components
  std::vector<double> vertex_g;  // constraint value at point masses

  double constraint(const std::vector<double>& theta) const {
    Vec mix = Vec::Zero(whitened.rows());
    double lin = 0.0;
    for (std::size_t a = 0; a < theta.size(); ++a) {
      if (theta[a] == 0.0) continue;
      lin += theta[a] * c_lin[a];
      mix += theta[a] * whitened.col(a);
    }
    return lin + state.beta() * mix.norm();
  }

  double objective(const std::vector<double>& theta) const {
    return std::inner_product(theta.begin(), theta.end(), q.begin(), 0.0);
  }
};

MixProblem make_mix_problem(const SafetyState& state, const std::vector<double>& q_values,
                            const std::vector<Vec>& features) {
  MixProblem prob{state, q_values, {}, {}, state.tau(), Mat(), {}};
  const std::size_t n = features.size();
  prob.orth.reserve(n);
  prob.c_lin.reserve(n);
  prob.vertex_g.reserve(n);
  prob.whitened = Mat(features[0].size(), static_cast<int>(n));
  const Vec& gamma_hat = state.gamma_estimate();
  const double inv_anchor = 1.0 / state.anchor().norm();
  for (std::size_t a = 0; a < n; ++a) {
    Vec orth = state.orth_component(features[a]);
    prob.c_lin.push_back(state.anchor_unit().dot(features[a]) * inv_anchor * state.tau_anchor() +
                         gamma_hat.dot(orth));
    prob.whitened.col(static_cast<int>(a)) = state.regression().whiten(orth);
    prob.vertex_g.push_back(prob.c_lin[a] +
                            state.beta() * prob.whitened.col(static_cast<int>(a)).norm());
    prob.orth.push_back(std::move(orth));
  }
  return prob;
}

std::vector<double> point_mass(std::size_t n, std::size_t at) {
  std::vector<double> theta(n, 0.0);
  theta[at] = 1.0;
  return theta;
}

std::vector<double> two_point(std::size_t n, std::size_t i, std::size_t j, double w) {
  std::vector<double> theta(n, 0.0);
  theta[i] += w;
  theta[j] += 1.0 - w;
  return theta;
}

struct Best {
  std::vector<double> theta;
  double value = -std::numeric_limits<double>::infinity();

  void consider(const MixProblem& prob, const std::vector<double>& cand) {
    const double v = prob.objective(cand);
    if (v > value) {
      value = v;
      theta = cand;
    }
  }
};

void refine_local(const MixProblem& prob, Best& best, const SafePolicyOptions& opts) {
  const std::size_t n = prob.q.size();
  if (n < 2 || n > static_cast<std::size_t>(opts.refine_max_actions)) return;
  std::mt19937_64 rng(0x5eeded);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> theta = best.theta;
  double value = best.value;
  const double cap = mixture_cap(prob.tau);

  auto try_direction = [&](const std::vector<double>& dir, double step) {
    // Largest simplex-respecting move along dir, capped at step.
    double t = step;
    for (std::size_t a = 0; a < n; ++a) {
      if (dir[a] < 0.0) t = std::min(t, theta[a] / -dir[a]);
    }
    if (t <= 0.0) return false;
    std::vector<double> cand(n);
    for (std::size_t a = 0; a < n; ++a) cand[a] = std::max(0.0, theta[a] + t * dir[a]);
    const double total = std::accumulate(cand.begin(), cand.end(), 0.0);
    for (double& w : cand) w /= total;
    const double v = prob.objective(cand);
    if (v <= value + 1e-15) return false;
    if (prob.constraint(cand) > cap) return false;
    theta = cand;
    value = v;
    return true;
  };

  for (double step = 0.25; step > 1e-9; step *= 0.5) {
    bool improved = true;
    int sweeps = 0;
    while (improved && sweeps++ < 40) {
      improved = false;
      for (std::size_t i = 0; i < n && !improved; ++i) {
        for (std::size_t j = 0; j < n && !improved; ++j) {
          if (i == j || theta[j] <= 0.0) continue;
          std::vector<double> dir(n, 0.0);
          dir[i] = 1.0;
          dir[j] = -1.0;
          improved = try_direction(dir, step);
        }
      }
      if (!improved && n > 2) {
        for (int trial = 0; trial < 24 && !improved; ++trial) {
          std::vector<double> dir(n);
          double mean = 0.0;
          for (double& x : dir) mean += (x = gauss(rng));
          mean /= static_cast<double>(n);
          double norm = 0.0;
          for (double& x : dir) {
            x -= mean;
            norm += x * x;
          }
          norm = std::sqrt(norm);
          if (norm < 1e-12) continue;
          for (double& x : dir) x /= norm;
          improved = try_direction(dir, step);
        }
      }
    }
  }
  if (value > best.value) {
    best.value = value;
    best.theta = std::move(theta);
  }
}

}  // namespace

SafePolicySolution safe_policy_max(const SafetyState& state, const std::vector<double>& q_values,
                                   const std::vector<Vec>& features, int anchor_index,
                                   const SafePolicyOptions& opts) {
  const std::size_t n = features.size();
  if (n == 0 || q_values.size() != n) throw std::invalid_argument("safe_policy_max: bad inputs");
  if (anchor_index < 0 || static_cast<std::size_t>(anchor_index) >= n) {
    throw std::invalid_argument("safe_policy_max: anchor action missing");
  }

  const MixProblem prob = make_mix_problem(state, q_values, features);
  const double beta = state.beta();
  const double cap = mixture_cap(prob.tau);

  Best best;
  const std::size_t anchor = static_cast<std::size_t>(anchor_index);
  std::vector<bool> feasible(n, false);
  for (std::size_t a = 0; a < n; ++a) {
    if (prob.vertex_g[a] <= prob.tau) {
      feasible[a] = true;
      best.consider(prob, point_mass(n, a));
    }
  }
  if (best.theta.empty()) best.consider(prob, point_mass(n, anchor));  // always feasible

  // Anchor mixes: closed-form maximal mixing weight per action.
  for (std::size_t a = 0; a < n; ++a) {
    if (a == anchor || feasible[a]) continue;
    const double alpha = (prob.tau - state.tau_anchor()) /
                         (prob.vertex_g[a] - state.tau_anchor()) * (1.0 - 1e-10);
    if (alpha <= 0.0) continue;
    best.consider(prob, two_point(n, a, anchor, alpha));
  }

  // Pairwise boundary points over the most promising actions; the feasible
  // stretch of each two-point segment is a closed-form quadratic interval.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return q_values[a] > q_values[b]; });
  const std::size_t top = std::min<std::size_t>(n, static_cast<std::size_t>(opts.max_pairwise));
  for (std::size_t oi = 0; oi < top; ++oi) {
    for (std::size_t oj = oi + 1; oj < top; ++oj) {
      const std::size_t i = order[oi];
      const std::size_t j = order[oj];
      if (i == anchor || j == anchor) continue;  // covered by the anchor mixes
      if (feasible[i] && feasible[j]) continue;  // vertices dominate
      WInterval segs[2];
      const int count = pair_feasible_intervals(
          prob.whitened.col(static_cast<int>(i)).squaredNorm(),
          prob.whitened.col(static_cast<int>(i)).dot(prob.whitened.col(static_cast<int>(j))),
          prob.whitened.col(static_cast<int>(j)).squaredNorm(), prob.c_lin[i], prob.c_lin[j],
          beta, cap, segs);
      for (int p = 0; p < count; ++p) {
        best.consider(prob, two_point(n, i, j, segs[p].lo));
        best.consider(prob, two_point(n, i, j, segs[p].hi));
      }
    }
  }

  if (opts.refine) refine_local(prob, best, opts);

  SafePolicySolution sol;
  sol.policy.weights = best.theta;
  sol.value = best.value;
  sol.mixed_feature = Vec::Zero(features[0].size());
  for (std::size_t a = 0; a < n; ++a) {
    if (best.theta[a] != 0.0) sol.mixed_feature += best.theta[a] * features[a];
  }
  return sol;
}

PreparedSafePolicy::PreparedSafePolicy(const SafetyState& state, std::vector<Vec> features,
                                       int anchor_index)
    : features_(std::move(features)),
      anchor_index_(anchor_index),
      tau_(state.tau()),
      beta_(state.beta()) {
  const int n = static_cast<int>(features_.size());
  if (n == 0 || anchor_index_ < 0 || anchor_index_ >= n) {
    throw std::invalid_argument("PreparedSafePolicy: bad action list");
  }
  const Vec& gamma_hat = state.gamma_estimate();
  c_lin_.reserve(n);
  whitened_ = Mat(features_[0].size(), n);
  vertex_g_.reserve(n);
  anchor_alpha_.reserve(n);
  const double tau_anchor = state.tau_anchor();
  for (int a = 0; a < n; ++a) {
    const Vec orth = state.orth_component(features_[a]);
    c_lin_.push_back(state.anchor_unit().dot(features_[a]) / state.anchor().norm() * tau_anchor +
                     gamma_hat.dot(orth));
    whitened_.col(a) = state.regression().whiten(orth);
    const double g = c_lin_[a] + beta_ * whitened_.col(a).norm();
    vertex_g_.push_back(g);
    anchor_alpha_.push_back(g <= tau_ ? 1.0
                                      : (tau_ - tau_anchor) / (g - tau_anchor) * (1.0 - 1e-10));
  }
  const double cap = mixture_cap(tau_);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (i == anchor_index_ || j == anchor_index_) continue;
      if (vertex_g_[i] <= tau_ && vertex_g_[j] <= tau_) continue;  // vertices dominate
      WInterval segs[2];
      const int count = pair_feasible_intervals(
          whitened_.col(i).squaredNorm(), whitened_.col(i).dot(whitened_.col(j)),
          whitened_.col(j).squaredNorm(), c_lin_[i], c_lin_[j], beta_, cap, segs);
      for (int p = 0; p < count; ++p) pairs_.push_back({i, j, segs[p].lo, segs[p].hi});
    }
  }
}

SafePolicySolution PreparedSafePolicy::solve(const std::vector<double>& q_values) const {
  const int n = static_cast<int>(features_.size());
  if (static_cast<int>(q_values.size()) != n) {
    throw std::invalid_argument("PreparedSafePolicy: objective size mismatch");
  }
  // Candidate sweep: feasible vertices, anchor mixes, pairwise boundary points.
  int best_i = anchor_index_, best_j = anchor_index_;
  double best_w = 1.0;
  double best_value = q_values[anchor_index_];
  auto consider = [&](int i, int j, double w) {
    const double v = w * q_values[i] + (1.0 - w) * q_values[j];
    if (v > best_value) {
      best_value = v;
      best_i = i;
      best_j = j;
      best_w = w;
    }
  };
  for (int a = 0; a < n; ++a) {
    if (vertex_g_[a] <= tau_) {
      consider(a, a, 1.0);
    } else if (anchor_alpha_[a] > 0.0) {
      consider(a, anchor_index_, anchor_alpha_[a]);
    }
  }
  for (const PairSegment& seg : pairs_) {
    consider(seg.i, seg.j, seg.lo);
    consider(seg.i, seg.j, seg.hi);
  }

  SafePolicySolution sol;
  sol.policy.weights.assign(n, 0.0);
  sol.policy.weights[best_i] += best_w;
  sol.policy.weights[best_j] += 1.0 - best_w;
  sol.value = best_value;
  sol.mixed_feature = best_w * features_[best_i] + (1.0 - best_w) * features_[best_j];
  return sol;
}

TauEstimate warm_start_tau(const std::function<double()>& sample_anchor_cost, double tau,
                           int episodes, double min_gap) {
  if (episodes < 2) throw std::invalid_argument("warm_start_tau: episodes >= 2 required");
  if (!(min_gap > 0.0)) throw std::invalid_argument("warm_start_tau: min_gap must be positive");
  const double log_k = std::log(static_cast<double>(episodes));
  const long max_plays = static_cast<long>(std::ceil(64.0 * log_k / (min_gap * min_gap)));
  double sum = 0.0;
  for (long k = 1; k <= max_plays; ++k) {
    sum += sample_anchor_cost();
    const double tau_hat = sum / static_cast<double>(k);
    if (tau_hat + 6.0 * std::sqrt(log_k / static_cast<double>(k)) <= tau) {
      TauEstimate est;
      est.tau_hat = tau_hat;
      est.samples = static_cast<int>(k);
      est.conservative_gap = 4.0 * std::sqrt(log_k / static_cast<double>(k));
      return est;
    }
  }
  throw std::runtime_error("gap too small");
}

TauEstimate warm_start_tau(const LinearMdpSpec& spec, int s, int h, int episodes,
                           std::mt19937_64& rng, double min_gap) {
  const Vec& a0 = anchor_feature(spec.actions.at(s));
  return warm_start_tau(
      [&]() { return sample_step(spec, s, a0, h, rng).noisy_cost; }, spec.tau, episodes, min_gap);
}

}  // namespace slmdp
