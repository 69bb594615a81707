#pragma once

#include <cstdint>
#include <string>

#include "microswarm/effort.hpp"
#include "microswarm/planner.hpp"
#include "microswarm/swarm.hpp"

namespace microswarm {

enum class ExperimentKind {
  kMinEffort,
  kStepsSweep,
  kNcCa,
  kRrt,
  kObstacles,
  kPrimitive,
  kAccessibility,
};

ExperimentKind experiment_kind_from_string(const std::string& name);
std::string to_string(ExperimentKind kind);

struct SweepSpec {
  std::vector<int> k_values;
  int trials = 1;
};

struct PrimitiveSpec {
  ActivationSequence sequence;
  int reps = 200;
  double input = 1.0;  // constant drive for the closed-path rollout
  int target = 2;
  Eigen::Vector2d displacement = Eigen::Vector2d(0.1, 0.0);
};

struct RrtSpec {
  int node_budget = 200000;
  double goal_eps = 0.75;
};

struct NcCaSpec {
  double eps = 1e-3;
  double wall_budget_seconds = 60.0;
  int max_phases = 200;
  int solver_starts = 8;
};

struct BatchSpec {
  int runs = 0;  // 0: run the scenario's fixed configuration once
};

/// Region batch experiments sample start/goal configurations from;
/// defaults to the environment bounds.
struct SampleBounds {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;
  bool set = false;
};

struct AccessibilitySpec {
  int states = 100;
};

/// One experiment configuration: swarm, world, safety margins and the
/// experiment-specific knobs. Parsed from a JSON file with unknown keys
/// rejected.
struct Scenario {
  int n = 0;
  int m = 0;
  SwarmState starts{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(2)};
  Eigen::VectorXd goal_positions;
  SwarmParams params;
  Environment env;
  SafetyParams safety;
  int k = 40;
  std::uint64_t seed = 0;
  ExperimentKind experiment = ExperimentKind::kMinEffort;

  SweepSpec sweep;
  PrimitiveSpec primitive;
  RrtSpec rrt;
  NcCaSpec ncca;
  BatchSpec batch;
  AccessibilitySpec accessibility;
  SampleBounds sample_bounds;

  /// Sampling region for batch configurations (sample_bounds when set,
  /// the environment bounds otherwise).
  Environment sampling_region() const;

  /// Canonical re-serialization used for the provenance hash.
  std::string canonical_json() const;
};

/// Parse and validate a scenario from JSON text. Throws
/// std::invalid_argument with a field name for schema or invariant
/// violations.
Scenario parse_scenario(const std::string& json_text);

/// Load a scenario file.
Scenario load_scenario(const std::string& path);

/// FNV-1a hash of the canonical serialization, as fixed-width hex.
std::string config_hash(const Scenario& scenario);

}  // namespace microswarm
