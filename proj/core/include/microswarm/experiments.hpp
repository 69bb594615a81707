#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "microswarm/accessibility.hpp"
#include "microswarm/effort.hpp"
#include "microswarm/planner.hpp"
#include "microswarm/random.hpp"
#include "microswarm/scenario.hpp"

namespace microswarm {

/// Per-run metrics row. Unused fields stay at their defaults.
struct RunRow {
  int run = 0;
  double travel = 0.0;
  /// Collision-ignoring minimum-effort travel for the same run (planner
  /// experiments); the denominator of the travel-ratio statistics.
  double baseline_travel = 0.0;
  double objective = 0.0;
  double endpoint_error = 0.0;
  double wall_time = 0.0;
  bool converged = false;
  bool timed_out = false;
  int nc_phases = 0;
  int walk_phases = 0;
  /// States of the returned trajectory violating collision_free,
  /// audited exhaustively after the run (planner experiments).
  int collision_violations = 0;
};

struct ReportAggregates {
  int runs = 0;
  double mean_travel = 0.0;
  double min_travel = 0.0;
  double mean_baseline_travel = 0.0;
  double mean_objective = 0.0;
  double mean_wall_time = 0.0;
  /// Rate of runs timed out outright or slower than 15x the mean time.
  double timeout_rate = 0.0;
  int converged_runs = 0;
};

struct RankSummary {
  int expected = 0;  // 2n
  std::vector<int> position_ranks;
  std::vector<int> orientation_ranks;
  int full_rank_states = 0;
  /// Rank at the degenerate all-headings-equal state, reported only.
  int degenerate_rank = 0;
};

struct PrimitiveSummary {
  /// Per-robot circle-fit residual divided by fitted radius.
  std::vector<double> residual_over_radius;
  std::vector<double> radii;
  SelectiveMotionResult selective;
};

struct RunReport {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<RunRow> rows;
  ReportAggregates aggregates;
  double total_wall_time = 0.0;

  std::vector<SweepRow> sweep_rows;   // steps-sweep
  RankSummary rank;                   // accessibility
  PrimitiveSummary primitive;         // primitive
};

/// Recompute the aggregate block from the rows (the stored aggregates
/// must always match).
ReportAggregates compute_aggregates(const std::vector<RunRow>& rows);

/// Write one trajectory as plot-ready CSV: header
/// step,x1,y1,theta1,...,xn,yn,thetan and one row per state, 9
/// significant digits.
void export_trajectory(const Trajectory& traj, const std::string& path);

/// Read a trajectory CSV written by export_trajectory.
Trajectory import_trajectory(const std::string& path);

/// Dispatch a scenario to its experiment driver, writing per-run
/// trajectory CSVs, a deterministic metrics.csv and report.json under
/// out_dir. Returns the report. Deterministic given the scenario seed
/// (wall-clock fields aside).
RunReport run_experiment(const Scenario& scenario, const std::string& out_dir);

/// Planner batch over `runs` sampled start/goal configurations (uniform
/// in bounds, rejection-sampled so starts have full clearance and goals
/// are collision-free), aggregating Table-style statistics including
/// the 15x-mean timeout rule.
RunReport batch(const Scenario& scenario, int runs, std::uint64_t base_seed,
                const std::string& out_dir);

/// Serialize a report to JSON.
std::string report_to_json(const RunReport& report);
void write_report(const RunReport& report, const std::string& path);

/// Sample a collision-free swarm configuration with uniform headings;
/// when require_clearance is set, robots are pairwise at least
/// clearance_d apart (and as far from every obstacle boundary).
SwarmState sample_configuration(Rng& rng, int n, const Environment& env,
                                const SafetyParams& safety,
                                bool require_clearance);

}  // namespace microswarm
