#include "slmdp/env.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace slmdp {

Vec StarConvexActions::feature(int segment, double alpha) const {
  return alpha * endpoints.at(segment) + (1.0 - alpha) * anchor;
}

const Vec& anchor_feature(const ActionGeometry& g) {
  if (const auto* fin = std::get_if<FiniteActions>(&g)) {
    return fin->features.at(fin->anchor_index);
  }
  return std::get<StarConvexActions>(g).anchor;
}

int num_choices(const ActionGeometry& g) {
  if (const auto* fin = std::get_if<FiniteActions>(&g)) {
    return static_cast<int>(fin->features.size());
  }
  return static_cast<int>(std::get<StarConvexActions>(g).endpoints.size());
}

Vec transition_probs(const LinearMdpSpec& spec, int h, const Vec& phi) {
  Vec p = spec.mu.at(h).transpose() * phi;
  const double total = p.sum();
  if (std::abs(total - 1.0) > 1e-8 || p.minCoeff() < -1e-8) {
    std::ostringstream msg;
    msg << "invalid model: transition mass " << total << ", min entry " << p.minCoeff();
    throw std::runtime_error(msg.str());
  }
  p = p.cwiseMax(0.0);
  p /= p.sum();
  return p;
}

StepObservation sample_step(const LinearMdpSpec& spec, int /*s*/, const Vec& phi, int h,
                            std::mt19937_64& rng) {
  const Vec p = transition_probs(spec, h, phi);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  int next = spec.num_states - 1;
  double acc = 0.0;
  for (int i = 0; i < spec.num_states; ++i) {
    acc += p[i];
    if (u < acc) {
      next = i;
      break;
    }
  }
  StepObservation obs;
  obs.next_state = next;
  obs.reward = spec.reward_of(h, phi);
  obs.true_cost = spec.cost_of(h, phi);
  obs.noisy_cost = obs.true_cost;
  if (spec.sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.sigma);
    obs.noisy_cost += noise(rng);
  }
  return obs;
}

namespace {

Vec random_simplex_point(int dim, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = expo(rng);
  return v / v.sum();
}

// Affine remap of a parameter vector so that <v, phi> lies in [0,1] for every
// phi on the unit simplex: shift by the smallest entry, divide by the range.
Vec remap_to_unit_range(const Vec& raw) {
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  if (lo >= 0.0 && hi <= 1.0) return raw;
  const double range = hi - lo;
  if (!(range > 0.0)) throw std::runtime_error("degenerate parameter draw");
  return (raw.array() - lo).matrix() / range;
}

void check_eq(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

LinearMdpSpec gen_synthetic(const SyntheticParams& params) {
  check_eq(params.d >= 2, "gen_synthetic: d >= 2 required");
  check_eq(params.num_segments >= 1, "gen_synthetic: N >= 1 required");
  check_eq(params.horizon >= 1, "gen_synthetic: horizon >= 1 required");
  check_eq(params.num_states >= 1, "gen_synthetic: num_states >= 1 required");

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  LinearMdpSpec spec;
  spec.d = params.d;
  spec.horizon = params.horizon;
  spec.num_states = params.num_states;
  spec.tau = params.tau;
  spec.sigma = params.sigma;
  spec.kind = SpecKind::synthetic;
  spec.initial_state = 0;

  spec.mu.resize(params.horizon);
  spec.theta.resize(params.horizon);
  spec.gamma.resize(params.horizon);
  for (int h = 0; h < params.horizon; ++h) {
    Mat m(params.d, params.num_states);
    for (int i = 0; i < params.d; ++i) {
      m.row(i) = random_simplex_point(params.num_states, rng).transpose();
    }
    spec.mu[h] = m;
    Vec theta_raw(params.d);
    for (int i = 0; i < params.d; ++i) theta_raw[i] = gauss(rng);
    spec.theta[h] = remap_to_unit_range(theta_raw);
  }

  // Cost parameters are redrawn until some simplex corner is cheap at every
  // time-step; otherwise no state could have an admissible anchor at all.
  int cheap_corner = -1;
  for (int attempt = 0; attempt < 100 && cheap_corner < 0; ++attempt) {
    for (int h = 0; h < params.horizon; ++h) {
      Vec gamma_raw(params.d);
      for (int i = 0; i < params.d; ++i) gamma_raw[i] = gauss(rng);
      spec.gamma[h] = remap_to_unit_range(gamma_raw);
    }
    for (int i = 0; i < params.d; ++i) {
      double worst = 0.0;
      for (int h = 0; h < params.horizon; ++h) worst = std::max(worst, spec.gamma[h][i]);
      if (worst <= params.tau - params.anchor_margin - 0.02) {
        cheap_corner = i;
        break;
      }
    }
  }
  if (cheap_corner < 0) {
    throw std::runtime_error("gen_synthetic: threshold leaves no admissible anchor corner");
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  spec.actions.reserve(params.num_states);
  spec.tau_anchor = Mat(params.horizon, params.num_states);
  for (int s = 0; s < params.num_states; ++s) {
    StarConvexActions geom;
    Vec anchor;
    bool found = false;
    for (int attempt = 0; attempt < 10000; ++attempt) {
      Vec candidate = random_simplex_point(params.d, rng);
      if (attempt % 2 == 1) {
        // Pull every other proposal toward the cheap corner.
        const double t = unif(rng) * unif(rng);
        candidate *= t;
        candidate[cheap_corner] += 1.0 - t;
      }
      double worst = 0.0;
      for (int h = 0; h < params.horizon; ++h) {
        worst = std::max(worst, spec.gamma[h].dot(candidate));
      }
      if (worst <= params.tau - params.anchor_margin) {
        anchor = std::move(candidate);
        found = true;
        break;
      }
    }
    if (!found) throw std::runtime_error("gen_synthetic: no valid anchor after 10000 resamples");
    geom.anchor = anchor;
    geom.endpoints.reserve(params.num_segments);
    for (int i = 0; i < params.num_segments; ++i) {
      geom.endpoints.push_back(random_simplex_point(params.d, rng));
    }
    for (int h = 0; h < params.horizon; ++h) {
      spec.tau_anchor(h, s) = spec.gamma[h].dot(anchor);
    }
    spec.actions.emplace_back(std::move(geom));
  }
  return spec;
}

namespace {

void validate_feature(const LinearMdpSpec& spec, int s, const Vec& phi, const char* label,
                      ValidationReport& report) {
  std::ostringstream where;
  where << label << " at state " << s;
  if (phi.size() != spec.d) {
    report.failures.push_back(where.str() + ": wrong dimension");
    return;
  }
  if (!phi.allFinite()) {
    report.failures.push_back(where.str() + ": non-finite feature");
    return;
  }
  if (phi.norm() > 1.0 + 1e-9) {
    report.failures.push_back(where.str() + ": feature norm exceeds 1");
  }
  for (int h = 0; h < spec.horizon; ++h) {
    const Vec p = spec.mu[h].transpose() * phi;
    if (std::abs(p.sum() - 1.0) > 1e-8) {
      report.failures.push_back(where.str() + ": transition mass != 1 at h=" + std::to_string(h));
    }
    if (p.minCoeff() < -1e-10) {
      report.failures.push_back(where.str() + ": negative transition mass at h=" + std::to_string(h));
    }
    const double r = spec.reward_of(h, phi);
    const double c = spec.cost_of(h, phi);
    if (r < -1e-9 || r > 1.0 + 1e-9) {
      report.failures.push_back(where.str() + ": reward outside [0,1] at h=" + std::to_string(h));
    }
    if (c < -1e-9 || c > 1.0 + 1e-9) {
      report.failures.push_back(where.str() + ": cost outside [0,1] at h=" + std::to_string(h));
    }
  }
}

}  // namespace

ValidationReport validate_spec(const LinearMdpSpec& spec) {
  ValidationReport report;
  if (spec.d <= 0 || spec.horizon <= 0 || spec.num_states <= 0) {
    report.failures.push_back("empty spec");
    return report;
  }
  if (static_cast<int>(spec.mu.size()) != spec.horizon ||
      static_cast<int>(spec.theta.size()) != spec.horizon ||
      static_cast<int>(spec.gamma.size()) != spec.horizon ||
      static_cast<int>(spec.actions.size()) != spec.num_states ||
      spec.tau_anchor.rows() != spec.horizon || spec.tau_anchor.cols() != spec.num_states) {
    report.failures.push_back("inconsistent field shapes");
    return report;
  }

  const double sqrt_d = std::sqrt(static_cast<double>(spec.d));
  for (int h = 0; h < spec.horizon; ++h) {
    const double theta_norm = spec.theta[h].norm();
    const double gamma_norm = spec.gamma[h].norm();
    const double mu_total_norm = spec.mu[h].rowwise().sum().norm();
    const bool in_bounds = theta_norm <= sqrt_d + 1e-9 && gamma_norm <= sqrt_d + 1e-9 &&
                           mu_total_norm <= sqrt_d + 1e-9;
    if (!in_bounds) {
      std::ostringstream msg;
      msg << "parameter norms at h=" << h << " exceed sqrt(d): theta " << theta_norm << ", gamma "
          << gamma_norm << ", mu(S) " << mu_total_norm;
      // The gridworld construction (cost = danger-landing probability with
      // Gaussian measures) cannot meet the sqrt(d) bounds; report without failing.
      if (spec.kind == SpecKind::gridworld) {
        report.notes.push_back(msg.str());
      } else {
        report.failures.push_back(msg.str());
      }
    }
  }

  for (int s = 0; s < spec.num_states; ++s) {
    const ActionGeometry& geom = spec.actions[s];
    if (const auto* fin = std::get_if<FiniteActions>(&geom)) {
      if (fin->features.empty() || fin->anchor_index < 0 ||
          fin->anchor_index >= static_cast<int>(fin->features.size())) {
        report.failures.push_back("bad finite action set at state " + std::to_string(s));
        continue;
      }
      for (const Vec& f : fin->features) validate_feature(spec, s, f, "finite action", report);
    } else {
      const auto& star = std::get<StarConvexActions>(geom);
      if (!(star.anchor.norm() > 0.0)) {
        report.failures.push_back("degenerate anchor at state " + std::to_string(s));
        continue;
      }
      validate_feature(spec, s, star.anchor, "anchor", report);
      for (const Vec& e : star.endpoints) validate_feature(spec, s, e, "endpoint", report);
    }

    const Vec& anchor = anchor_feature(geom);
    for (int h = 0; h < spec.horizon; ++h) {
      const double actual = spec.gamma[h].dot(anchor);
      if (std::abs(actual - spec.tau_anchor(h, s)) > 1e-9) {
        report.failures.push_back("tau_anchor mismatch at (h=" + std::to_string(h) +
                                  ", s=" + std::to_string(s) + ")");
      }
      if (!(spec.tau_anchor(h, s) < spec.tau)) {
        report.failures.push_back("anchor not strictly safe at (h=" + std::to_string(h) +
                                  ", s=" + std::to_string(s) + ")");
      }
    }
  }
  return report;
}

}  // namespace slmdp
