#include "microswarm/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "microswarm/geometry.hpp"
#include "microswarm/parallel.hpp"
#include "json.hpp"

namespace microswarm {

namespace {

using nlohmann::json;

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

void ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

std::string run_csv_path(const std::string& out_dir, int run) {
  char name[32];
  std::snprintf(name, sizeof(name), "run_%03d.csv", run);
  return out_dir + "/" + name;
}

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void write_metrics_csv(const RunReport& report, const std::string& out_dir) {
  std::ofstream out(out_dir + "/metrics.csv");
  if (!out) throw std::runtime_error("cannot write metrics.csv");
  out << "run,travel,baseline_travel,objective,endpoint_error,converged,"
         "nc_phases,walk_phases\n";
  for (const auto& r : report.rows) {
    out << r.run << ',' << format_value(r.travel) << ','
        << format_value(r.baseline_travel) << ',' << format_value(r.objective)
        << ',' << format_value(r.endpoint_error) << ',' << (r.converged ? 1 : 0)
        << ',' << r.nc_phases << ',' << r.walk_phases << '\n';
  }
}

json row_to_json(const RunRow& r) {
  return json{{"run", r.run},
              {"travel", r.travel},
              {"baseline_travel", r.baseline_travel},
              {"objective", r.objective},
              {"endpoint_error", r.endpoint_error},
              {"wall_time", r.wall_time},
              {"converged", r.converged},
              {"timed_out", r.timed_out},
              {"nc_phases", r.nc_phases},
              {"walk_phases", r.walk_phases},
              {"collision_violations", r.collision_violations}};
}

// Shared scaffolding: stamp provenance, compute aggregates, write files.
void finalize_report(RunReport& report, const Scenario& scenario,
                     const std::string& out_dir,
                     const std::chrono::steady_clock::time_point& t0) {
  report.experiment = to_string(scenario.experiment);
  report.seed = scenario.seed;
  report.config_hash = config_hash(scenario);
  report.aggregates = compute_aggregates(report.rows);
  report.total_wall_time = elapsed_since(t0);
  write_metrics_csv(report, out_dir);
  write_report(report, out_dir + "/report.json");
}

EffortOptions solver_options(const Scenario& scenario, std::uint64_t seed) {
  EffortOptions opt;
  opt.starts = scenario.ncca.solver_starts;
  opt.seed = seed;
  return opt;
}

NcCaOptions ncca_options(const Scenario& scenario) {
  NcCaOptions opt;
  opt.eps = scenario.ncca.eps;
  opt.wall_budget_seconds = scenario.ncca.wall_budget_seconds;
  opt.max_phases = scenario.ncca.max_phases;
  opt.solver.starts = scenario.ncca.solver_starts;
  return opt;
}

// Travel of the collision-ignoring minimum-effort solution for the same
// start/goal pair; the reference the planner's travel is compared to.
RunRow min_effort_run(const SwarmState& start, const Eigen::VectorXd& goals,
                      const Scenario& scenario, const GroupAllocation& alloc,
                      std::uint64_t seed, Trajectory* traj_out) {
  const auto t0 = std::chrono::steady_clock::now();
  EffortProblem problem{start, goals,
                        random_activation_sequence(scenario.k, scenario.m,
                                                   Rng(seed).next()),
                        scenario.params.input_bound, scenario.ncca.eps};
  EffortSolution sol = min_effort_control(problem, alloc, scenario.params,
                                          solver_options(scenario, seed));
  Trajectory traj = rollout(start, problem.nu, sol.u, alloc, scenario.params);
  RunRow row;
  row.travel = travel_length(traj);
  row.objective = sol.objective;
  row.endpoint_error = sol.endpoint_error;
  row.converged = sol.converged;
  row.wall_time = elapsed_since(t0);
  if (traj_out) *traj_out = std::move(traj);
  return row;
}

RunReport run_min_effort(const Scenario& scenario, const std::string& out_dir) {
  RunReport report;
  Trajectory traj;
  RunRow row = min_effort_run(scenario.starts, scenario.goal_positions,
                              scenario, allocate_groups(scenario.n),
                              scenario.seed, &traj);
  row.run = 0;
  export_trajectory(traj, run_csv_path(out_dir, 0));
  report.rows.push_back(row);
  return report;
}

RunReport run_steps_sweep(const Scenario& scenario,
                          const std::string& out_dir) {
  if (scenario.sweep.k_values.empty())
    throw std::invalid_argument("steps-sweep scenario needs sweep.k_values");
  RunReport report;
  const GroupAllocation alloc = allocate_groups(scenario.n);
  report.sweep_rows = steps_vs_length_sweep(
      scenario.starts, scenario.goal_positions, scenario.sweep.k_values,
      scenario.sweep.trials, scenario.seed, alloc, scenario.params,
      scenario.ncca.eps, scenario.params.input_bound,
      solver_options(scenario, scenario.seed));
  std::ofstream out(out_dir + "/sweep.csv");
  out << "k,mean_objective,mean_solve_seconds,converged_trials,excluded_trials\n";
  for (const auto& r : report.sweep_rows) {
    out << r.k << ',' << format_value(r.mean_objective) << ','
        << format_value(r.mean_solve_seconds) << ',' << r.converged_trials
        << ',' << r.excluded_trials << '\n';
  }
  return report;
}

int count_collision_violations(const Trajectory& traj, const Environment& env,
                               const SafetyParams& safety) {
  int violations = 0;
  for (int i = 0; i < traj.num_states(); ++i)
    if (!collision_free(traj.state(i), env, safety)) ++violations;
  return violations;
}

RunRow plan_to_row(const PlanResult& plan, int run) {
  RunRow row;
  row.run = run;
  row.travel = plan.travel;
  row.wall_time = plan.wall_time;
  row.converged = plan.reached_goal;
  row.timed_out = plan.timed_out;
  const PlanMetrics metrics = plan_metrics(plan);
  row.nc_phases = metrics.nc_phases;
  row.walk_phases = metrics.walk_phases;
  return row;
}

RunReport run_ncca_single(const Scenario& scenario,
                          const std::string& out_dir) {
  RunReport report;
  const GroupAllocation alloc = allocate_groups(scenario.n);
  PlanResult plan =
      nc_ca(scenario.starts, scenario.goal_positions, scenario.k, scenario.env,
            scenario.safety, alloc, scenario.params, scenario.seed,
            ncca_options(scenario));
  export_trajectory(plan.trajectory, run_csv_path(out_dir, 0));
  RunRow row = plan_to_row(plan, 0);
  row.collision_violations = count_collision_violations(
      plan.trajectory, scenario.env, scenario.safety);
  row.baseline_travel =
      min_effort_run(scenario.starts, scenario.goal_positions, scenario, alloc,
                     scenario.seed ^ 0x5add1e50ULL, nullptr)
          .travel;
  report.rows.push_back(row);
  return report;
}

RunReport run_rrt_comparison(const Scenario& scenario,
                             const std::string& out_dir) {
  RunReport report;
  const GroupAllocation alloc = allocate_groups(scenario.n);

  PlanResult nc = nc_ca(scenario.starts, scenario.goal_positions, scenario.k,
                        scenario.env, scenario.safety, alloc, scenario.params,
                        scenario.seed, ncca_options(scenario));
  export_trajectory(nc.trajectory, run_csv_path(out_dir, 0));
  report.rows.push_back(plan_to_row(nc, 0));

  RrtOptions rrt_opt;
  rrt_opt.goal_eps = scenario.rrt.goal_eps;
  PlanResult rrt = composition_rrt(
      scenario.starts, scenario.goal_positions, scenario.env, scenario.safety,
      alloc, scenario.params, scenario.seed, scenario.rrt.node_budget, rrt_opt);
  export_trajectory(rrt.trajectory, run_csv_path(out_dir, 1));
  report.rows.push_back(plan_to_row(rrt, 1));
  return report;
}

RunReport run_primitive(const Scenario& scenario, const std::string& out_dir) {
  if (scenario.primitive.sequence.empty())
    throw std::invalid_argument("primitive scenario needs primitive.sequence");
  RunReport report;
  const GroupAllocation alloc = allocate_groups(scenario.n);
  const auto& spec = scenario.primitive;
  const int s = static_cast<int>(spec.sequence.size());

  ActivationSequence nu;
  ControlSequence u;
  nu.reserve(static_cast<std::size_t>(s) * spec.reps);
  for (int rep = 0; rep < spec.reps; ++rep)
    for (int i = 0; i < s; ++i) {
      nu.push_back(spec.sequence[i]);
      u.push_back(spec.input);
    }
  Trajectory traj = rollout(scenario.starts, nu, u, alloc, scenario.params);
  export_trajectory(traj, run_csv_path(out_dir, 0));

  // Positions after each full primitive repetition, per robot.
  for (int j = 0; j < scenario.n; ++j) {
    std::vector<Eigen::Vector2d> points;
    points.reserve(spec.reps + 1);
    for (int rep = 0; rep <= spec.reps; ++rep)
      points.push_back(traj.state(rep * s).position(j));
    const CircleFit fit = fit_circle(points);
    report.primitive.radii.push_back(fit.radius);
    report.primitive.residual_over_radius.push_back(
        fit.radius > 0.0 ? fit.rms_residual / fit.radius
                         : fit.rms_residual);
  }

  SelectiveMotionOptions options;
  options.seed = scenario.seed;
  report.primitive.selective = solve_selective_motion(
      scenario.starts, spec.sequence, spec.target, spec.displacement,
      spec.reps, alloc, scenario.params, options);

  RunRow row;
  row.run = 0;
  row.travel = travel_length(traj);
  row.converged = report.primitive.selective.converged;
  report.rows.push_back(row);
  return report;
}

RunReport run_accessibility(const Scenario& scenario,
                            const std::string& out_dir) {
  RunReport report;
  const GroupAllocation alloc = allocate_groups(scenario.n);
  const auto brackets = enumerate_brackets(DegreeBudget{}, scenario.m);
  const int states = scenario.accessibility.states;
  report.rank.expected = 2 * scenario.n;
  report.rank.position_ranks.resize(states);
  report.rank.orientation_ranks.resize(states);

  parallel_for(states, [&](int i) {
    Rng rng(Rng(scenario.seed ^ 0xacce551b1e570000ull).next() +
            static_cast<std::uint64_t>(i));
    Eigen::VectorXd pos(2 * scenario.n), ori(scenario.n);
    for (int j = 0; j < scenario.n; ++j) {
      pos[2 * j] = rng.uniform(scenario.env.xmin, scenario.env.xmax);
      pos[2 * j + 1] = rng.uniform(scenario.env.ymin, scenario.env.ymax);
      ori[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    const SwarmState state(pos, ori);
    report.rank.position_ranks[i] =
        position_rank(state, brackets, alloc, scenario.params);
    // Orientation-side rank, diagnostic only.
    RankOptions opt;
    report.rank.orientation_ranks[i] =
        rank_report_at(state, brackets, alloc, scenario.params, opt)
            .orientation_rank;
  });
  for (int r : report.rank.position_ranks)
    if (r == report.rank.expected) ++report.rank.full_rank_states;

  // Degenerate diagnostic: every heading equal.
  {
    Eigen::VectorXd pos = scenario.starts.positions();
    Eigen::VectorXd ori = Eigen::VectorXd::Constant(scenario.n, 0.7);
    report.rank.degenerate_rank =
        position_rank(SwarmState(pos, ori), brackets, alloc, scenario.params);
  }

  std::ofstream out(out_dir + "/ranks.csv");
  out << "state,position_rank,orientation_rank\n";
  for (int i = 0; i < states; ++i)
    out << i << ',' << report.rank.position_ranks[i] << ','
        << report.rank.orientation_ranks[i] << '\n';

  RunRow row;
  row.run = 0;
  row.converged = report.rank.full_rank_states == states;
  report.rows.push_back(row);
  return report;
}

}  // namespace

ReportAggregates compute_aggregates(const std::vector<RunRow>& rows) {
  ReportAggregates agg;
  agg.runs = static_cast<int>(rows.size());
  if (rows.empty()) return agg;
  double travel_sum = 0.0, baseline_sum = 0.0, objective_sum = 0.0,
         wall_sum = 0.0;
  agg.min_travel = rows.front().travel;
  for (const auto& r : rows) {
    travel_sum += r.travel;
    baseline_sum += r.baseline_travel;
    objective_sum += r.objective;
    wall_sum += r.wall_time;
    agg.min_travel = std::min(agg.min_travel, r.travel);
    if (r.converged) ++agg.converged_runs;
  }
  agg.mean_travel = travel_sum / agg.runs;
  agg.mean_baseline_travel = baseline_sum / agg.runs;
  agg.mean_objective = objective_sum / agg.runs;
  agg.mean_wall_time = wall_sum / agg.runs;
  int timeouts = 0;
  for (const auto& r : rows)
    if (r.timed_out || r.wall_time > 15.0 * agg.mean_wall_time) ++timeouts;
  agg.timeout_rate = static_cast<double>(timeouts) / agg.runs;
  return agg;
}

void export_trajectory(const Trajectory& traj, const std::string& path) {
  if (traj.num_states() == 0)
    throw std::invalid_argument("cannot export an empty trajectory");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory file: " + path);
  const int n = traj.state(0).num_robots();
  out << "step";
  for (int j = 1; j <= n; ++j)
    out << ",x" << j << ",y" << j << ",theta" << j;
  out << '\n';
  for (int i = 0; i < traj.num_states(); ++i) {
    out << i;
    const SwarmState& s = traj.state(i);
    for (int j = 0; j < n; ++j) {
      const RobotState r = s.robot(j);
      out << ',' << format_value(r.x) << ',' << format_value(r.y) << ','
          << format_value(r.theta);
    }
    out << '\n';
  }
}

Trajectory import_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read trajectory file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("trajectory file is empty: " + path);
  int columns = 1;
  for (char c : line)
    if (c == ',') ++columns;
  if ((columns - 1) % 3 != 0)
    throw std::runtime_error("trajectory header has unexpected column count");
  const int n = (columns - 1) / 3;

  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // step index
    Eigen::VectorXd pos(2 * n), ori(n);
    for (int j = 0; j < n; ++j) {
      std::getline(ss, cell, ',');
      pos[2 * j] = std::stod(cell);
      std::getline(ss, cell, ',');
      pos[2 * j + 1] = std::stod(cell);
      std::getline(ss, cell, ',');
      ori[j] = std::stod(cell);
    }
    traj.push_back(SwarmState(std::move(pos), std::move(ori)));
  }
  return traj;
}

SwarmState sample_configuration(Rng& rng, int n, const Environment& env,
                                const SafetyParams& safety,
                                bool require_clearance) {
  const double rr = safety.robot_radius;
  const double min_dist = require_clearance ? safety.clearance_d
                                            : 2.0 * safety.robot_radius;
  // Clearance also applies to the walls: steering plans constrain the
  // endpoint only, so configurations hugging the boundary force paths
  // through it.
  const double inset = rr + (require_clearance ? safety.clearance_d : 0.0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Eigen::VectorXd pos(2 * n), ori(n);
    bool ok = true;
    for (int j = 0; j < n && ok; ++j) {
      pos[2 * j] = rng.uniform(env.xmin + inset, env.xmax - inset);
      pos[2 * j + 1] = rng.uniform(env.ymin + inset, env.ymax - inset);
      ori[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Eigen::Vector2d p = pos.segment<2>(2 * j);
      for (const auto& o : env.obstacles) {
        const double keep_out =
            o.radius + (require_clearance ? safety.clearance_d : rr);
        if ((p - o.center).squaredNorm() < keep_out * keep_out) ok = false;
      }
      for (int b = 0; b < j && ok; ++b)
        if ((p - Eigen::Vector2d(pos.segment<2>(2 * b))).squaredNorm() <
            min_dist * min_dist)
          ok = false;
    }
    if (ok) return SwarmState(std::move(pos), std::move(ori));
  }
  throw std::runtime_error(
      "could not sample a valid configuration; world too crowded");
}

RunReport batch(const Scenario& scenario, int runs, std::uint64_t base_seed,
                const std::string& out_dir) {
  if (runs < 1) throw std::invalid_argument("batch needs runs >= 1");
  ensure_dir(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const GroupAllocation alloc = allocate_groups(scenario.n);

  std::vector<RunRow> rows(runs);
  std::vector<Trajectory> trajectories(runs);
  const Environment sampling_region = scenario.sampling_region();

  parallel_for(runs, [&](int run) {
    Rng rng(Rng(base_seed).next() + static_cast<std::uint64_t>(run));
    const SwarmState start = sample_configuration(
        rng, scenario.n, sampling_region, scenario.safety, true);
    // Goals also get full clearance: a goal pair inside the inflated
    // prediction margin could never be approached without triggering
    // avoidance forever.
    const SwarmState goal_state = sample_configuration(
        rng, scenario.n, sampling_region, scenario.safety, true);
    const Eigen::VectorXd goals = goal_state.positions();

    PlanResult plan =
        nc_ca(start, goals, scenario.k, scenario.env, scenario.safety, alloc,
              scenario.params, rng.next(), ncca_options(scenario));
    RunRow row = plan_to_row(plan, run);
    row.collision_violations = count_collision_violations(
        plan.trajectory, scenario.env, scenario.safety);
    row.baseline_travel =
        min_effort_run(start, goals, scenario, alloc, rng.next(), nullptr)
            .travel;
    rows[run] = row;
    trajectories[run] = std::move(plan.trajectory);
  });

  for (int run = 0; run < runs; ++run)
    export_trajectory(trajectories[run], run_csv_path(out_dir, run));

  RunReport report;
  report.rows = std::move(rows);
  Scenario stamped = scenario;
  stamped.seed = base_seed;
  stamped.batch.runs = runs;
  finalize_report(report, stamped, out_dir, t0);
  return report;
}

std::string report_to_json(const RunReport& report) {
  json root;
  root["experiment"] = report.experiment;
  root["seed"] = report.seed;
  root["config_hash"] = report.config_hash;
  root["total_wall_time"] = report.total_wall_time;
  json rows = json::array();
  for (const auto& r : report.rows) rows.push_back(row_to_json(r));
  root["rows"] = rows;
  root["aggregates"] = {{"runs", report.aggregates.runs},
                        {"mean_travel", report.aggregates.mean_travel},
                        {"min_travel", report.aggregates.min_travel},
                        {"mean_baseline_travel",
                         report.aggregates.mean_baseline_travel},
                        {"mean_objective", report.aggregates.mean_objective},
                        {"mean_wall_time", report.aggregates.mean_wall_time},
                        {"timeout_rate", report.aggregates.timeout_rate},
                        {"converged_runs", report.aggregates.converged_runs}};
  if (!report.sweep_rows.empty()) {
    json sweep = json::array();
    for (const auto& r : report.sweep_rows)
      sweep.push_back({{"k", r.k},
                       {"mean_objective", r.mean_objective},
                       {"mean_solve_seconds", r.mean_solve_seconds},
                       {"converged_trials", r.converged_trials},
                       {"excluded_trials", r.excluded_trials}});
    root["sweep"] = sweep;
  }
  if (!report.rank.position_ranks.empty()) {
    root["rank"] = {{"expected", report.rank.expected},
                    {"position_ranks", report.rank.position_ranks},
                    {"orientation_ranks", report.rank.orientation_ranks},
                    {"full_rank_states", report.rank.full_rank_states},
                    {"degenerate_rank", report.rank.degenerate_rank}};
  }
  if (!report.primitive.residual_over_radius.empty()) {
    root["primitive"] = {
        {"residual_over_radius", report.primitive.residual_over_radius},
        {"radii", report.primitive.radii},
        {"selective",
         {{"u", report.primitive.selective.u},
          {"target_error", report.primitive.selective.target_error},
          {"max_other_error", report.primitive.selective.max_other_error},
          {"converged", report.primitive.selective.converged}}}};
  }
  return root.dump(2);
}

void write_report(const RunReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file: " + path);
  out << report_to_json(report) << '\n';
}

RunReport run_experiment(const Scenario& scenario, const std::string& out_dir) {
  ensure_dir(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  switch (scenario.experiment) {
    case ExperimentKind::kMinEffort:
      report = run_min_effort(scenario, out_dir);
      break;
    case ExperimentKind::kStepsSweep:
      report = run_steps_sweep(scenario, out_dir);
      break;
    case ExperimentKind::kNcCa:
    case ExperimentKind::kObstacles:
      if (scenario.batch.runs >= 1)
        return batch(scenario, scenario.batch.runs, scenario.seed, out_dir);
      report = run_ncca_single(scenario, out_dir);
      break;
    case ExperimentKind::kRrt:
      report = run_rrt_comparison(scenario, out_dir);
      break;
    case ExperimentKind::kPrimitive:
      report = run_primitive(scenario, out_dir);
      break;
    case ExperimentKind::kAccessibility:
      report = run_accessibility(scenario, out_dir);
      break;
  }
  finalize_report(report, scenario, out_dir, t0);
  return report;
}

}  // namespace microswarm
