#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "slmdp/env.hpp"

using namespace slmdp;

namespace {

Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Single-state toy model: mu(s1) = (1,1), theta = gamma = (0,1), tau = 2,
// actions (0,1) and (1,0) with the second as anchor.
LinearMdpSpec toy_spec() {
  LinearMdpSpec spec;
  spec.d = 2;
  spec.horizon = 1;
  spec.num_states = 1;
  spec.tau = 2.0;
  spec.sigma = 0.0;
  spec.mu = {make_vec({1.0, 1.0})};
  spec.theta = {make_vec({0.0, 1.0})};
  spec.gamma = {make_vec({0.0, 1.0})};
  FiniteActions actions;
  actions.features = {make_vec({0.0, 1.0}), make_vec({1.0, 0.0})};
  actions.anchor_index = 1;
  spec.actions.emplace_back(std::move(actions));
  spec.tau_anchor = Mat::Zero(1, 1);
  return spec;
}

const char* kSmallMap =
    "S...\n"
    ".D..\n"
    "...D\n"
    "...G\n";

}  // namespace

TEST_CASE("transition_probs is a convex combination of measure rows") {
  SyntheticParams params;
  params.d = 4;
  params.num_states = 6;
  params.num_segments = 3;
  params.seed = 3;
  const LinearMdpSpec spec = gen_synthetic(params);
  const auto& star = std::get<StarConvexActions>(spec.actions[0]);
  for (int h = 0; h < spec.horizon; ++h) {
    const Vec p = transition_probs(spec, h, star.feature(0, 0.37));
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK(p.minCoeff() >= 0.0);
  }
  // A basis feature picks out one measure row.
  Vec e2 = Vec::Zero(4);
  e2[2] = 1.0;
  const Vec p = transition_probs(spec, 0, e2);
  CHECK((p.transpose() - spec.mu[0].row(2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single-state toy puts probability one on its only state") {
  const LinearMdpSpec spec = toy_spec();
  const Vec p = transition_probs(spec, 0, make_vec({0.25, 0.75}));
  REQUIRE(p.size() == 1);
  CHECK(p[0] == doctest::Approx(1.0));
}

TEST_CASE("transition_probs rejects a broken model") {
  LinearMdpSpec spec = toy_spec();
  spec.mu = {make_vec({1.0, 0.5})};  // mass 0.75 for the probe below
  CHECK_THROWS_AS(transition_probs(spec, 0, make_vec({0.5, 0.5})), std::runtime_error);
}

TEST_CASE("sample_step basics") {
  LinearMdpSpec spec = toy_spec();
  std::mt19937_64 rng(9);
  const Vec phi = make_vec({0.0, 1.0});
  const StepObservation obs = sample_step(spec, 0, phi, 0, rng);
  CHECK(obs.next_state == 0);
  CHECK(obs.reward == doctest::Approx(1.0));
  CHECK(obs.true_cost == doctest::Approx(1.0));
  CHECK(obs.noisy_cost == doctest::Approx(obs.true_cost));  // sigma = 0

  // determinism under a fixed seed
  spec.sigma = 0.05;
  std::mt19937_64 rng_a(1234), rng_b(1234);
  const StepObservation a = sample_step(spec, 0, phi, 0, rng_a);
  const StepObservation b = sample_step(spec, 0, phi, 0, rng_b);
  CHECK(a.next_state == b.next_state);
  CHECK(a.noisy_cost == b.noisy_cost);
}

TEST_CASE("cost noise has the configured scale") {
  LinearMdpSpec spec = toy_spec();
  spec.sigma = 0.01;
  std::mt19937_64 rng(77);
  const Vec phi = make_vec({1.0, 0.0});
  const int n = 100000;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += sample_step(spec, 0, phi, 0, rng).noisy_cost;
  const double mean_error = std::abs(total / n - 0.0);  // true cost of this feature is 0
  CHECK(mean_error <= 4.0 * spec.sigma / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("empirical transition frequencies match the model") {
  SyntheticParams params;
  params.d = 3;
  params.num_states = 5;
  params.num_segments = 2;
  params.seed = 21;
  const LinearMdpSpec spec = gen_synthetic(params);
  const Vec phi = anchor_feature(spec.actions[1]);
  const Vec p = transition_probs(spec, 0, phi);
  const int n = 100000;
  Vec counts = Vec::Zero(spec.num_states);
  std::mt19937_64 rng(4242);
  for (int i = 0; i < n; ++i) counts[sample_step(spec, 1, phi, 0, rng).next_state] += 1.0;
  for (int s = 0; s < spec.num_states; ++s) {
    const double freq = counts[s] / n;
    const double se = std::sqrt(std::max(p[s] * (1.0 - p[s]), 1e-12) / n);
    CHECK(std::abs(freq - p[s]) <= 3.0 * se + 1e-9);
  }
}

TEST_CASE("gen_synthetic satisfies the model invariants across seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticParams params;
    params.seed = seed;
    params.num_segments = 8;  // keep the battery fast
    const LinearMdpSpec spec = gen_synthetic(params);
    const ValidationReport report = validate_spec(spec);
    for (const std::string& f : report.failures) MESSAGE(f);
    CHECK(report.ok());
  }
}

TEST_CASE("gen_synthetic at paper-scale defaults") {
  SyntheticParams params;  // d=5, H=3, N=100, tau=0.5
  params.seed = 5;
  const LinearMdpSpec spec = gen_synthetic(params);
  CHECK(validate_spec(spec).ok());
  CHECK(spec.d == 5);
  CHECK(static_cast<int>(std::get<StarConvexActions>(spec.actions[0]).endpoints.size()) == 100);

  // brute-force grid over features: rewards and costs stay in [0,1]
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < spec.num_states; ++s) {
    const auto& star = std::get<StarConvexActions>(spec.actions[s]);
    for (int i = 0; i < 1000; ++i) {
      const int seg = static_cast<int>(rng() % star.endpoints.size());
      const Vec phi = star.feature(seg, unif(rng));
      for (int h = 0; h < spec.horizon; ++h) {
        const double r = spec.reward_of(h, phi);
        const double c = spec.cost_of(h, phi);
        CHECK(r >= -1e-12);
        CHECK(r <= 1.0 + 1e-12);
        CHECK(c >= -1e-12);
        CHECK(c <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("gen_synthetic with a single segment per state") {
  SyntheticParams params;
  params.num_segments = 1;
  params.seed = 2;
  const LinearMdpSpec spec = gen_synthetic(params);
  for (const ActionGeometry& geom : spec.actions) {
    CHECK(num_choices(geom) == 1);
  }
}

TEST_CASE("map parsing") {
  const GridWorldMap map = GridWorldMap::parse(kSmallMap);
  CHECK(map.rows == 4);
  CHECK(map.cols == 4);
  CHECK(map.start == 0);
  CHECK(map.goal == 15);
  CHECK(map.dangers == std::vector<int>{5, 11});

  CHECK_THROWS_AS(GridWorldMap::parse("S..\n.D.\n"), std::invalid_argument);  // no goal
  CHECK_THROWS_AS(GridWorldMap::parse("S.G\n...\n"), std::invalid_argument);  // no danger
  CHECK_THROWS_AS(GridWorldMap::parse("SDG\nX..\n"), std::invalid_argument);  // bad char
  CHECK_THROWS_AS(GridWorldMap::parse("SD\nG\n"), std::invalid_argument);     // ragged
}

TEST_CASE("gridworld model matches the movement template") {
  const GridWorldMap map = GridWorldMap::parse(kSmallMap);
  GridworldParams params;
  params.horizon = 20;
  params.seed = 17;
  const LinearMdpSpec spec = build_gridworld(map, params);
  CHECK(spec.d == spec.num_states);
  CHECK(spec.num_states == 17);  // 16 cells + terminal sink
  CHECK(spec.initial_state == 0);

  const ValidationReport report = validate_spec(spec);
  for (const std::string& f : report.failures) MESSAGE(f);
  CHECK(report.ok());

  const int sink = 16;
  for (int s = 0; s < spec.num_states; ++s) {
    const auto& fin = std::get<FiniteActions>(spec.actions[s]);
    for (int a = 0; a < 4; ++a) {
      const Vec p = transition_probs(spec, 0, fin.features[a]);
      // rebuild the 0.9/0.05/0.05 template
      Vec expected = Vec::Zero(spec.num_states);
      const bool is_danger =
          std::find(map.dangers.begin(), map.dangers.end(), s) != map.dangers.end();
      if (s == sink || is_danger) {
        expected[sink] = 1.0;
      } else if (s == map.goal) {
        expected[map.goal] = 1.0;
      } else {
        const int r = s / map.cols, c = s % map.cols;
        auto target = [&](int dr, int dc) {
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nr >= map.rows || nc < 0 || nc >= map.cols) return s;
          return map.index(nr, nc);
        };
        const int moves[4][2] = {{0, -1}, {0, 1}, {1, 0}, {-1, 0}};  // L R D U
        expected[target(moves[a][0], moves[a][1])] += 0.9;
        if (a == kLeft || a == kRight) {
          expected[target(1, 0)] += 0.05;
          expected[target(-1, 0)] += 0.05;
        } else {
          expected[target(0, -1)] += 0.05;
          expected[target(0, 1)] += 0.05;
        }
      }
      CHECK((p - expected).cwiseAbs().maxCoeff() <= 1e-8);

      // cost of an action equals the probability of landing on a danger cell
      double danger_mass = 0.0;
      for (int dgr : map.dangers) danger_mass += expected[dgr];
      CHECK(spec.cost_of(0, fin.features[a]) == doctest::Approx(danger_mass).epsilon(1e-8));
    }
    // the designated anchor is strictly safe
    CHECK(spec.tau_anchor(0, s) < spec.tau);
  }
}

TEST_CASE("gridworld rewards stay in range") {
  const GridWorldMap map = GridWorldMap::parse(kSmallMap);
  GridworldParams params;
  params.horizon = 10;
  params.seed = 1;
  const LinearMdpSpec spec = build_gridworld(map, params);
  for (int s = 0; s < spec.num_states; ++s) {
    const auto& fin = std::get<FiniteActions>(spec.actions[s]);
    for (const Vec& f : fin.features) {
      const double r = spec.reward_of(0, f);
      CHECK(r >= -1e-9);
      CHECK(r <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("spec JSON round trip") {
  SyntheticParams params;
  params.d = 3;
  params.num_states = 4;
  params.num_segments = 2;
  params.seed = 8;
  const LinearMdpSpec spec = gen_synthetic(params);
  const LinearMdpSpec back = spec_from_json_string(spec_to_json_string(spec));
  CHECK(back.d == spec.d);
  CHECK(back.horizon == spec.horizon);
  CHECK(back.tau == spec.tau);
  CHECK((back.tau_anchor - spec.tau_anchor).cwiseAbs().maxCoeff() == 0.0);
  for (int h = 0; h < spec.horizon; ++h) {
    CHECK((back.mu[h] - spec.mu[h]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.theta[h] - spec.theta[h]).norm() == 0.0);
    CHECK((back.gamma[h] - spec.gamma[h]).norm() == 0.0);
  }
  const auto& star_a = std::get<StarConvexActions>(spec.actions[2]);
  const auto& star_b = std::get<StarConvexActions>(back.actions[2]);
  CHECK((star_a.anchor - star_b.anchor).norm() == 0.0);
  CHECK(star_a.endpoints.size() == star_b.endpoints.size());
  CHECK(validate_spec(back).ok());

  const GridWorldMap map = GridWorldMap::parse(kSmallMap);
  GridworldParams gridworld_params;
  gridworld_params.horizon = 5;
  const LinearMdpSpec grid = build_gridworld(map, gridworld_params);
  const LinearMdpSpec grid_back = spec_from_json_string(spec_to_json_string(grid));
  CHECK(grid_back.kind == SpecKind::gridworld);
  CHECK(grid_back.danger_states == grid.danger_states);
  const auto& fin_a = std::get<FiniteActions>(grid.actions[3]);
  const auto& fin_b = std::get<FiniteActions>(grid_back.actions[3]);
  CHECK(fin_a.anchor_index == fin_b.anchor_index);
  CHECK((fin_a.features[2] - fin_b.features[2]).norm() == 0.0);
}

TEST_CASE("ten-by-ten map produces the reference scale") {
  const char* big =
      "S.........\n..........\n..DD......\n..DD......\n......DD..\n......DD..\n"
      "..........\n...DD.....\n...DD.....\n.........G\n";
  const GridWorldMap map = GridWorldMap::parse(big);
  GridworldParams params;  // H=1000, tau=0.1, 0.9 move probability
  params.seed = 2;
  const LinearMdpSpec spec = build_gridworld(map, params);
  CHECK(spec.horizon == 1000);
  CHECK(spec.tau == 0.1);
  CHECK(spec.num_states == 101);  // 100 cells + terminal sink
  CHECK(spec.d == spec.num_states);
  CHECK(validate_spec(spec).ok());
}
