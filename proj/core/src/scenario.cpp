#include "microswarm/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "microswarm/groups.hpp"
#include "json.hpp"

namespace microswarm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument("scenario field '" + where + "': " + what);
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& known) {
  for (const auto& item : obj.items()) {
    if (!known.count(item.key()))
      fail(where.empty() ? item.key() : where + "." + item.key(),
           "unknown key");
  }
}

double require_number(const json& obj, const std::string& where,
                      const std::string& key) {
  if (!obj.contains(key)) fail(where + "." + key, "missing");
  if (!obj[key].is_number()) fail(where + "." + key, "must be a number");
  return obj[key].get<double>();
}

double optional_number(const json& obj, const std::string& where,
                       const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(where + "." + key, "must be a number");
  return obj[key].get<double>();
}

int optional_int(const json& obj, const std::string& where,
                 const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) fail(where + "." + key, "must be an integer");
  return obj[key].get<int>();
}

}  // namespace

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "min-effort") return ExperimentKind::kMinEffort;
  if (name == "steps-sweep") return ExperimentKind::kStepsSweep;
  if (name == "nc-ca") return ExperimentKind::kNcCa;
  if (name == "rrt") return ExperimentKind::kRrt;
  if (name == "obstacles") return ExperimentKind::kObstacles;
  if (name == "primitive") return ExperimentKind::kPrimitive;
  if (name == "accessibility") return ExperimentKind::kAccessibility;
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kMinEffort: return "min-effort";
    case ExperimentKind::kStepsSweep: return "steps-sweep";
    case ExperimentKind::kNcCa: return "nc-ca";
    case ExperimentKind::kRrt: return "rrt";
    case ExperimentKind::kObstacles: return "obstacles";
    case ExperimentKind::kPrimitive: return "primitive";
    case ExperimentKind::kAccessibility: return "accessibility";
  }
  throw std::logic_error("unreachable experiment kind");
}

Scenario parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario parse error: ") +
                                e.what());
  }
  if (!root.is_object()) throw std::invalid_argument("scenario must be an object");
  reject_unknown_keys(root, "",
                      {"n", "m", "starts", "goals", "params", "env", "safety",
                       "k", "seed", "experiment", "sweep", "primitive", "rrt",
                       "ncca", "batch", "accessibility", "sample_bounds"});

  Scenario s;
  if (!root.contains("n")) fail("n", "missing");
  s.n = root["n"].get<int>();
  if (s.n < 2) fail("n", "need at least 2 robots");
  s.m = root.contains("m") ? root["m"].get<int>() : num_groups(s.n);
  if (s.m != num_groups(s.n))
    fail("m", "must equal ceil(log2(n+2)) = " + std::to_string(num_groups(s.n)));

  if (!root.contains("starts")) fail("starts", "missing");
  const json& starts = root["starts"];
  if (!starts.is_array() || static_cast<int>(starts.size()) != s.n)
    fail("starts", "must be an array of n [x, y, theta] rows");
  {
    Eigen::VectorXd pos(2 * s.n), ori(s.n);
    for (int j = 0; j < s.n; ++j) {
      const json& row = starts[j];
      if (!row.is_array() || row.size() != 3)
        fail("starts[" + std::to_string(j) + "]", "must be [x, y, theta]");
      pos[2 * j] = row[0].get<double>();
      pos[2 * j + 1] = row[1].get<double>();
      ori[j] = row[2].get<double>();
    }
    s.starts = SwarmState(std::move(pos), std::move(ori));
  }

  if (!root.contains("goals")) fail("goals", "missing");
  const json& goals = root["goals"];
  if (!goals.is_array() || static_cast<int>(goals.size()) != s.n)
    fail("goals", "must be an array of n [x, y] rows");
  s.goal_positions.resize(2 * s.n);
  for (int j = 0; j < s.n; ++j) {
    const json& row = goals[j];
    if (!row.is_array() || row.size() != 2)
      fail("goals[" + std::to_string(j) + "]", "must be [x, y]");
    s.goal_positions[2 * j] = row[0].get<double>();
    s.goal_positions[2 * j + 1] = row[1].get<double>();
  }

  s.params.n = s.n;
  if (root.contains("params")) {
    const json& p = root["params"];
    reject_unknown_keys(p, "params", {"delta_t", "turn_gain", "input_bound"});
    s.params.delta_t = optional_number(p, "params", "delta_t", 1.0);
    s.params.turn_gain = optional_number(p, "params", "turn_gain", 0.05);
    s.params.input_bound = optional_number(p, "params", "input_bound", 3.5);
  }
  try {
    s.params.validate();
  } catch (const std::exception& e) {
    fail("params", e.what());
  }

  if (root.contains("env")) {
    const json& e = root["env"];
    reject_unknown_keys(e, "env", {"bounds", "obstacles"});
    if (!e.contains("bounds")) fail("env.bounds", "missing");
    const json& b = e["bounds"];
    if (!b.is_array() || b.size() != 4)
      fail("env.bounds", "must be [xmin, ymin, xmax, ymax]");
    s.env.xmin = b[0].get<double>();
    s.env.ymin = b[1].get<double>();
    s.env.xmax = b[2].get<double>();
    s.env.ymax = b[3].get<double>();
    if (e.contains("obstacles")) {
      for (const auto& o : e["obstacles"]) {
        reject_unknown_keys(o, "env.obstacles[]", {"center", "radius"});
        CircularObstacle obs;
        const json& c = o.at("center");
        if (!c.is_array() || c.size() != 2)
          fail("env.obstacles[].center", "must be [x, y]");
        obs.center = Eigen::Vector2d(c[0].get<double>(), c[1].get<double>());
        obs.radius = require_number(o, "env.obstacles[]", "radius");
        s.env.obstacles.push_back(obs);
      }
    }
  }
  try {
    s.env.validate();
  } catch (const std::exception& e) {
    fail("env", e.what());
  }

  if (root.contains("safety")) {
    const json& f = root["safety"];
    reject_unknown_keys(
        f, "safety", {"robot_radius", "clearance_d", "horizon_h", "rw_max_steps"});
    s.safety.robot_radius =
        optional_number(f, "safety", "robot_radius", s.safety.robot_radius);
    s.safety.clearance_d =
        optional_number(f, "safety", "clearance_d", s.safety.clearance_d);
    s.safety.horizon_h = optional_int(f, "safety", "horizon_h", s.safety.horizon_h);
    s.safety.rw_max_steps =
        optional_int(f, "safety", "rw_max_steps", s.safety.rw_max_steps);
  }
  try {
    s.safety.validate();
  } catch (const std::exception& e) {
    fail("safety", e.what());
  }

  s.k = optional_int(root, "", "k", 40);
  if (s.k < 1) fail("k", "must be >= 1");
  if (root.contains("seed")) s.seed = root["seed"].get<std::uint64_t>();

  if (!root.contains("experiment")) fail("experiment", "missing");
  try {
    s.experiment = experiment_kind_from_string(root["experiment"].get<std::string>());
  } catch (const std::exception& e) {
    fail("experiment", e.what());
  }

  if (root.contains("sweep")) {
    const json& w = root["sweep"];
    reject_unknown_keys(w, "sweep", {"k_values", "trials"});
    if (!w.contains("k_values") || !w["k_values"].is_array())
      fail("sweep.k_values", "must be an array of integers");
    for (const auto& v : w["k_values"]) s.sweep.k_values.push_back(v.get<int>());
    s.sweep.trials = optional_int(w, "sweep", "trials", 1);
    if (s.sweep.trials < 1) fail("sweep.trials", "must be >= 1");
  }

  if (root.contains("primitive")) {
    const json& p = root["primitive"];
    reject_unknown_keys(p, "primitive",
                        {"sequence", "reps", "input", "target", "displacement"});
    if (!p.contains("sequence") || !p["sequence"].is_array())
      fail("primitive.sequence", "must be an array of group indices");
    for (const auto& v : p["sequence"]) {
      const int g = v.get<int>();
      if (g < 0 || g >= s.m) fail("primitive.sequence", "group index out of range");
      s.primitive.sequence.push_back(g);
    }
    s.primitive.reps = optional_int(p, "primitive", "reps", 200);
    s.primitive.input = optional_number(p, "primitive", "input", 1.0);
    s.primitive.target = optional_int(p, "primitive", "target", 2);
    if (s.primitive.target < 0 || s.primitive.target >= s.n)
      fail("primitive.target", "robot index out of range");
    if (p.contains("displacement")) {
      const json& d = p["displacement"];
      if (!d.is_array() || d.size() != 2)
        fail("primitive.displacement", "must be [dx, dy]");
      s.primitive.displacement =
          Eigen::Vector2d(d[0].get<double>(), d[1].get<double>());
    }
  }

  if (root.contains("rrt")) {
    const json& r = root["rrt"];
    reject_unknown_keys(r, "rrt", {"node_budget", "goal_eps"});
    s.rrt.node_budget = optional_int(r, "rrt", "node_budget", s.rrt.node_budget);
    s.rrt.goal_eps = optional_number(r, "rrt", "goal_eps", s.rrt.goal_eps);
    if (s.rrt.node_budget < 1) fail("rrt.node_budget", "must be >= 1");
  }

  if (root.contains("ncca")) {
    const json& c = root["ncca"];
    reject_unknown_keys(c, "ncca",
                        {"eps", "wall_budget_seconds", "max_phases", "solver_starts"});
    s.ncca.eps = optional_number(c, "ncca", "eps", s.ncca.eps);
    s.ncca.wall_budget_seconds =
        optional_number(c, "ncca", "wall_budget_seconds", s.ncca.wall_budget_seconds);
    s.ncca.max_phases = optional_int(c, "ncca", "max_phases", s.ncca.max_phases);
    s.ncca.solver_starts =
        optional_int(c, "ncca", "solver_starts", s.ncca.solver_starts);
    if (s.ncca.eps <= 0.0) fail("ncca.eps", "must be positive");
  }

  if (root.contains("batch")) {
    const json& b = root["batch"];
    reject_unknown_keys(b, "batch", {"runs"});
    s.batch.runs = optional_int(b, "batch", "runs", 0);
    if (s.batch.runs < 0) fail("batch.runs", "must be >= 0");
  }

  if (root.contains("sample_bounds")) {
    const json& b = root["sample_bounds"];
    if (!b.is_array() || b.size() != 4)
      fail("sample_bounds", "must be [xmin, ymin, xmax, ymax]");
    s.sample_bounds.xmin = b[0].get<double>();
    s.sample_bounds.ymin = b[1].get<double>();
    s.sample_bounds.xmax = b[2].get<double>();
    s.sample_bounds.ymax = b[3].get<double>();
    s.sample_bounds.set = true;
    if (!(s.sample_bounds.xmax > s.sample_bounds.xmin) ||
        !(s.sample_bounds.ymax > s.sample_bounds.ymin))
      fail("sample_bounds", "region is empty");
  }

  if (root.contains("accessibility")) {
    const json& a = root["accessibility"];
    reject_unknown_keys(a, "accessibility", {"states"});
    s.accessibility.states = optional_int(a, "accessibility", "states", 100);
    if (s.accessibility.states < 1) fail("accessibility.states", "must be >= 1");
  }

  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string Scenario::canonical_json() const {
  json root;
  root["n"] = n;
  root["m"] = m;
  json starts_json = json::array();
  for (int j = 0; j < n; ++j) {
    const RobotState r = starts.robot(j);
    starts_json.push_back({r.x, r.y, r.theta});
  }
  root["starts"] = starts_json;
  json goals_json = json::array();
  for (int j = 0; j < n; ++j)
    goals_json.push_back({goal_positions[2 * j], goal_positions[2 * j + 1]});
  root["goals"] = goals_json;
  root["params"] = {{"delta_t", params.delta_t},
                    {"turn_gain", params.turn_gain},
                    {"input_bound", params.input_bound}};
  json obstacles = json::array();
  for (const auto& o : env.obstacles)
    obstacles.push_back(
        {{"center", {o.center.x(), o.center.y()}}, {"radius", o.radius}});
  root["env"] = {{"bounds", {env.xmin, env.ymin, env.xmax, env.ymax}},
                 {"obstacles", obstacles}};
  root["safety"] = {{"robot_radius", safety.robot_radius},
                    {"clearance_d", safety.clearance_d},
                    {"horizon_h", safety.horizon_h},
                    {"rw_max_steps", safety.rw_max_steps}};
  root["k"] = k;
  root["seed"] = seed;
  root["experiment"] = to_string(experiment);
  root["sweep"] = {{"k_values", sweep.k_values}, {"trials", sweep.trials}};
  root["primitive"] = {{"sequence", primitive.sequence},
                       {"reps", primitive.reps},
                       {"input", primitive.input},
                       {"target", primitive.target},
                       {"displacement",
                        {primitive.displacement.x(), primitive.displacement.y()}}};
  root["rrt"] = {{"node_budget", rrt.node_budget}, {"goal_eps", rrt.goal_eps}};
  root["ncca"] = {{"eps", ncca.eps},
                  {"wall_budget_seconds", ncca.wall_budget_seconds},
                  {"max_phases", ncca.max_phases},
                  {"solver_starts", ncca.solver_starts}};
  root["batch"] = {{"runs", batch.runs}};
  root["sample_bounds"] = {sample_bounds.xmin, sample_bounds.ymin,
                           sample_bounds.xmax, sample_bounds.ymax,
                           sample_bounds.set};
  root["accessibility"] = {{"states", accessibility.states}};
  return root.dump();
}

Environment Scenario::sampling_region() const {
  Environment region = env;
  if (sample_bounds.set) {
    region.xmin = sample_bounds.xmin;
    region.ymin = sample_bounds.ymin;
    region.xmax = sample_bounds.xmax;
    region.ymax = sample_bounds.ymax;
  }
  return region;
}

std::string config_hash(const Scenario& scenario) {
  const std::string text = scenario.canonical_json();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace microswarm
