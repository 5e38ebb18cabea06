#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "slmdp/env.hpp"

namespace slmdp {

namespace {

using nlohmann::json;

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vec vec_from_json(const json& arr) {
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr[i].get<double>();
  return v;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const json& rows) {
  const int nr = static_cast<int>(rows.size());
  const int nc = nr > 0 ? static_cast<int>(rows[0].size()) : 0;
  Mat m(nr, nc);
  for (int r = 0; r < nr; ++r) {
    for (int c = 0; c < nc; ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

std::string kind_name(SpecKind kind) {
  switch (kind) {
    case SpecKind::synthetic: return "synthetic";
    case SpecKind::gridworld: return "gridworld";
    default: return "custom";
  }
}

SpecKind kind_from_name(const std::string& name) {
  if (name == "synthetic") return SpecKind::synthetic;
  if (name == "gridworld") return SpecKind::gridworld;
  if (name == "custom") return SpecKind::custom;
  throw std::invalid_argument("unknown spec kind: " + name);
}

}  // namespace

std::string spec_to_json_string(const LinearMdpSpec& spec, int indent) {
  json j;
  j["d"] = spec.d;
  j["horizon"] = spec.horizon;
  j["num_states"] = spec.num_states;
  j["tau"] = spec.tau;
  j["sigma"] = spec.sigma;
  j["initial_state"] = spec.initial_state;
  j["kind"] = kind_name(spec.kind);
  j["mu"] = json::array();
  j["theta"] = json::array();
  j["gamma"] = json::array();
  for (int h = 0; h < spec.horizon; ++h) {
    j["mu"].push_back(mat_to_json(spec.mu[h]));
    j["theta"].push_back(vec_to_json(spec.theta[h]));
    j["gamma"].push_back(vec_to_json(spec.gamma[h]));
  }
  j["tau_anchor"] = mat_to_json(spec.tau_anchor);
  j["actions"] = json::array();
  for (const ActionGeometry& geom : spec.actions) {
    json g;
    if (const auto* fin = std::get_if<FiniteActions>(&geom)) {
      g["type"] = "finite";
      g["anchor_index"] = fin->anchor_index;
      g["features"] = json::array();
      for (const Vec& f : fin->features) g["features"].push_back(vec_to_json(f));
    } else {
      const auto& star = std::get<StarConvexActions>(geom);
      g["type"] = "star";
      g["anchor"] = vec_to_json(star.anchor);
      g["endpoints"] = json::array();
      for (const Vec& e : star.endpoints) g["endpoints"].push_back(vec_to_json(e));
    }
    j["actions"].push_back(std::move(g));
  }
  j["goal_states"] = spec.goal_states;
  j["danger_states"] = spec.danger_states;
  j["grid_rows"] = spec.grid_rows;
  j["grid_cols"] = spec.grid_cols;
  return indent >= 0 ? j.dump(indent) : j.dump();
}

LinearMdpSpec spec_from_json_string(const std::string& text) {
  const json j = json::parse(text);
  LinearMdpSpec spec;
  spec.d = j.at("d").get<int>();
  spec.horizon = j.at("horizon").get<int>();
  spec.num_states = j.at("num_states").get<int>();
  spec.tau = j.at("tau").get<double>();
  spec.sigma = j.at("sigma").get<double>();
  spec.initial_state = j.value("initial_state", 0);
  spec.kind = kind_from_name(j.value("kind", "custom"));
  for (const auto& m : j.at("mu")) spec.mu.push_back(mat_from_json(m));
  for (const auto& v : j.at("theta")) spec.theta.push_back(vec_from_json(v));
  for (const auto& v : j.at("gamma")) spec.gamma.push_back(vec_from_json(v));
  spec.tau_anchor = mat_from_json(j.at("tau_anchor"));
  for (const auto& g : j.at("actions")) {
    const std::string type = g.at("type").get<std::string>();
    if (type == "finite") {
      FiniteActions fin;
      fin.anchor_index = g.at("anchor_index").get<int>();
      for (const auto& f : g.at("features")) fin.features.push_back(vec_from_json(f));
      spec.actions.emplace_back(std::move(fin));
    } else if (type == "star") {
      StarConvexActions star;
      star.anchor = vec_from_json(g.at("anchor"));
      for (const auto& e : g.at("endpoints")) star.endpoints.push_back(vec_from_json(e));
      spec.actions.emplace_back(std::move(star));
    } else {
      throw std::invalid_argument("unknown action geometry type: " + type);
    }
  }
  spec.goal_states = j.value("goal_states", std::vector<int>{});
  spec.danger_states = j.value("danger_states", std::vector<int>{});
  spec.grid_rows = j.value("grid_rows", 0);
  spec.grid_cols = j.value("grid_cols", 0);
  return spec;
}

void save_spec(const LinearMdpSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write spec file: " + path);
  out << spec_to_json_string(spec, 1);
}

LinearMdpSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return spec_from_json_string(text);
}

}  // namespace slmdp
