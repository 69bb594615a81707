// Acceptance suite: one self-contained check per criterion, each
// printing a single PASS/FAIL line. Run all with no arguments or one
// with --criterion N.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "microswarm/experiments.hpp"
#include "microswarm/geometry.hpp"
#include "microswarm/parallel.hpp"

using namespace microswarm;

namespace {

const std::string kScenarioDir =
    std::string(MICROSWARM_SOURCE_DIR) + "/scenarios";

struct Tally {
  int failures = 0;

  void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string out_dir(const std::string& tag) {
  const auto dir =
      std::filesystem::temp_directory_path() / ("microswarm_acceptance_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

SwarmState random_generic_state(int n, Rng& rng, double span = 20.0) {
  Eigen::VectorXd pos(2 * n), ori(n);
  for (int j = 0; j < n; ++j) {
    pos[2 * j] = rng.uniform(0.0, span);
    pos[2 * j + 1] = rng.uniform(0.0, span);
    ori[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  return SwarmState(pos, ori);
}

// --- criterion 1: position rank over random generic states ------------

void criterion_1(Tally& tally) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (int n : {2, 6, 14}) {
    const GroupAllocation alloc = allocate_groups(n);
    SwarmParams params;
    params.n = n;
    const auto brackets = enumerate_brackets(DegreeBudget{}, alloc.num_groups());
    std::vector<int> ranks(100);
    parallel_for(100, [&](int i) {
      Rng rng(0xACC0 + 1000 * n + i);
      ranks[i] = position_rank(random_generic_state(n, rng), brackets, alloc,
                               params);
    });
    int full = 0;
    for (int r : ranks)
      if (r == 2 * n) ++full;
    detail += "n=" + std::to_string(n) + ": " + std::to_string(full) +
              "/100 at rank " + std::to_string(2 * n) + "; ";
    if (full < 95) pass = false;
  }
  const double elapsed = seconds_since(t0);
  detail += "elapsed " + std::to_string(elapsed) + "s";
  if (elapsed >= 60.0) pass = false;
  tally.report(1, pass, detail);
}

// --- criterion 2: the five nested-bracket patterns ---------------------

BracketExpr chain(std::initializer_list<int> wraps, int a, int b) {
  BracketExpr expr =
      BracketExpr::bracket(BracketExpr::leaf(a), BracketExpr::leaf(b));
  for (int c : wraps) expr = BracketExpr::bracket(BracketExpr::leaf(c), expr);
  return expr;
}

void criterion_2(Tally& tally) {
  const GroupAllocation alloc = allocate_groups(6);
  SwarmParams params;
  params.n = 6;
  params.turn_gain = 0.05;

  struct Block {
    int robot;
    double radial;
    double tangential;
  };
  struct Row {
    BracketExpr expr;
    std::vector<Block> blocks;
  };
  // Deep rows land on robot 1 (0-based), the robot rotated by the wrap
  // field among the surviving pair.
  const std::vector<Row> rows = {
      {chain({}, 0, 1), {{1, 0, 1}, {2, 0, 1}, {3, 0, -1}, {4, 0, -1}}},
      {chain({0}, 0, 1), {{1, -1, 0}, {2, -1, 0}}},
      {chain({0, 0}, 0, 1), {{1, 0, -1}, {2, 0, -1}}},
      {chain({0, 0, 2}, 0, 1), {{1, 1, 0}}},
      {chain({0, 0, 2, 2}, 0, 1), {{1, 0, 1}}},
  };

  double worst = 0.0;
  Rng rng(0xACC2);
  for (int trial = 0; trial < 20; ++trial) {
    const SwarmState q = random_generic_state(6, rng);
    for (const auto& row : rows) {
      Eigen::VectorXd expected = Eigen::VectorXd::Zero(18);
      for (const auto& b : row.blocks) {
        const double c = std::cos(q.orientation(b.robot));
        const double s = std::sin(q.orientation(b.robot));
        expected[2 * b.robot] = b.radial * c - b.tangential * s;
        expected[2 * b.robot + 1] = b.radial * s + b.tangential * c;
      }
      Eigen::VectorXd value = eval_bracket(row.expr, q, alloc, params);
      value /= value.norm();
      expected /= expected.norm();
      worst = std::max(worst,
                       (value - expected).lpNorm<Eigen::Infinity>());
    }
  }
  tally.report(2, worst <= 1e-4,
               "five bracket patterns at 20 random states, max deviation " +
                   std::to_string(worst));
}

// --- criterion 3: minimum effort on the six-robot scenario -------------

void criterion_3(Tally& tally) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = load_scenario(kScenarioDir + "/paper_6robots.json");
  const GroupAllocation alloc = allocate_groups(s.n);

  bool bounds_ok = true;
  bool endpoint_ok = true;
  std::string detail;
  bool pass = true;
  for (int k : {40, 60}) {
    const int trials = 20;
    std::vector<double> objectives(trials, -1.0);
    parallel_for(trials, [&](int t) {
      const std::uint64_t seed = sweep_trial_seed(s.seed, k, t);
      EffortProblem problem{s.starts, s.goal_positions,
                            random_activation_sequence(k, s.m, seed),
                            s.params.input_bound, 1e-3};
      EffortOptions opt;
      opt.seed = seed;
      const EffortSolution sol =
          min_effort_control(problem, alloc, s.params, opt);
      if (!sol.converged) return;
      if (sol.endpoint_error > 1e-3) endpoint_ok = false;
      for (double u : sol.u)
        if (u < 0.0 || u > 3.5) bounds_ok = false;
      objectives[t] = sol.objective;
    });
    double sum = 0.0;
    int converged = 0;
    for (double o : objectives)
      if (o >= 0.0) {
        sum += o;
        ++converged;
      }
    const double mean = converged ? sum / converged : -1.0;
    detail += "k=" + std::to_string(k) + ": mean " + std::to_string(mean) +
              " over " + std::to_string(converged) + "/20; ";
    if (converged == 0 || mean < 110.0 || mean > 180.0) pass = false;
  }
  if (!bounds_ok || !endpoint_ok) pass = false;
  detail += "u-in-box " + std::string(bounds_ok ? "yes" : "no") +
            ", endpoints<=1e-3 " + std::string(endpoint_ok ? "yes" : "no") +
            ", elapsed " + std::to_string(seconds_since(t0)) + "s";
  tally.report(3, pass, detail);
}

// --- criterion 4: planner batch in the empty world ---------------------

void criterion_4(Tally& tally) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = load_scenario(kScenarioDir + "/batch_5robots.json");
  const RunReport report = batch(s, 200, s.seed, out_dir("batch"));

  int violations = 0;
  for (const auto& row : report.rows) violations += row.collision_violations;
  const double ratio = report.aggregates.mean_travel /
                       report.aggregates.mean_baseline_travel;
  const bool pass = violations == 0 &&
                    report.aggregates.timeout_rate <= 0.02 &&
                    ratio >= 1.5 && ratio <= 4.0;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "200 runs: %d violating states, timeout rate %.4f, "
                "travel ratio %.3f (%.2f/%.2f), elapsed %.0fs",
                violations, report.aggregates.timeout_rate, ratio,
                report.aggregates.mean_travel,
                report.aggregates.mean_baseline_travel, seconds_since(t0));
  tally.report(4, pass, buf);
}

// --- criterion 5: obstacle worlds ---------------------------------------

void criterion_5(Tally& tally) {
  const auto t0 = std::chrono::steady_clock::now();

  auto run_env = [&](const std::string& file, const std::string& tag,
                     bool strip_obstacles) {
    Scenario s = load_scenario(kScenarioDir + "/" + file);
    if (strip_obstacles) s.env.obstacles.clear();
    return batch(s, s.batch.runs, s.seed, out_dir(tag));
  };

  const RunReport free_a = run_env("obstacles_a.json", "free_a", true);
  const RunReport env_a = run_env("obstacles_a.json", "env_a", false);
  const RunReport env_b = run_env("obstacles_b.json", "env_b", false);

  int violations = 0;
  for (const auto& row : env_a.rows) violations += row.collision_violations;
  for (const auto& row : env_b.rows) violations += row.collision_violations;

  const double ratio_a =
      env_a.aggregates.mean_travel / free_a.aggregates.mean_travel;
  const double ratio_b =
      env_b.aggregates.mean_travel / free_a.aggregates.mean_travel;
  const bool pass = violations == 0 && ratio_a >= 1.2 && ratio_a <= 4.5 &&
                    ratio_b >= 1.2 && ratio_b <= 4.5 &&
                    env_b.aggregates.timeout_rate >=
                        env_a.aggregates.timeout_rate;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%d penetrating states; travel ratios a=%.2f b=%.2f; "
                "timeout rates a=%.3f b=%.3f; elapsed %.0fs",
                violations, ratio_a, ratio_b, env_a.aggregates.timeout_rate,
                env_b.aggregates.timeout_rate, seconds_since(t0));
  tally.report(5, pass, buf);
}

// --- criterion 6: composition-RRT baseline ------------------------------

void criterion_6(Tally& tally) {
  const Scenario s = load_scenario(kScenarioDir + "/rrt_5robots.json");
  const RunReport report = run_experiment(s, out_dir("rrt"));
  // Row 0 is the planner, row 1 the node-capped baseline tree search;
  // the assertions are the wall-time ratio and the travel comparison.
  const RunRow& nc = report.rows.at(0);
  const RunRow& rrt = report.rows.at(1);
  const bool pass = nc.converged && nc.wall_time <= rrt.wall_time / 10.0 &&
                    nc.travel < rrt.travel;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "nc-ca %.2fs/%.1f travel vs capped rrt %.2fs/%.1f travel "
                "(reached: %d/%d, ratio %.1fx)",
                nc.wall_time, nc.travel, rrt.wall_time, rrt.travel,
                nc.converged ? 1 : 0, rrt.converged ? 1 : 0,
                rrt.wall_time / std::max(nc.wall_time, 1e-9));
  tally.report(6, pass, buf);
}

// --- criterion 7: control primitives ------------------------------------

void criterion_7(Tally& tally) {
  const Scenario s = load_scenario(kScenarioDir + "/primitive_6robots.json");
  const RunReport report = run_experiment(s, out_dir("primitive"));

  double worst_fit = 0.0;
  for (double r : report.primitive.residual_over_radius)
    worst_fit = std::max(worst_fit, r);
  const auto& sel = report.primitive.selective;
  const bool pass = worst_fit <= 0.01 && sel.converged &&
                    sel.target_error <= 1e-2 && sel.max_other_error <= 1e-2;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "circle fit residual/radius max %.2e; selective motion "
                "target err %.2e, others %.2e",
                worst_fit, sel.target_error, sel.max_other_error);
  tally.report(7, pass, buf);
}

// --- criterion 8: random-walk clearance from cramped configurations -----

void criterion_8(Tally& tally) {
  const GroupAllocation alloc = allocate_groups(5);
  SwarmParams params;
  params.n = 5;
  Environment env{0, 0, 20, 20, {}};
  SafetyParams safety;

  int reached = 0;
  bool postcondition = true;
  std::vector<char> ok(100, 0);
  std::vector<char> clear(100, 1);
  parallel_for(100, [&](int i) {
    Rng rng(0xACC8 + i);
    // Cramped ring: pairwise gaps just above contact, all below the
    // required clearance.
    Eigen::VectorXd pos(10), ori(5);
    for (int j = 0; j < 5; ++j) {
      const double angle = 2.0 * std::numbers::pi * j / 5.0;
      pos[2 * j] = 10.0 + 0.45 * std::cos(angle);
      pos[2 * j + 1] = 10.0 + 0.45 * std::sin(angle);
      ori[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    const SwarmState q(pos, ori);
    const WalkResult walk = random_walk(q, env, safety, alloc, params,
                                        rng.next());
    ok[i] = walk.reached_clearance ? 1 : 0;
    if (walk.reached_clearance && !has_clearance(walk.state, env, safety))
      clear[i] = 0;
  });
  for (int i = 0; i < 100; ++i) {
    reached += ok[i];
    if (!clear[i]) postcondition = false;
  }
  const bool pass = reached >= 99 && postcondition;
  tally.report(8, pass,
               std::to_string(reached) +
                   "/100 cramped walks reached clearance; postcondition " +
                   (postcondition ? "exact" : "VIOLATED"));
}

// --- criterion 9: property suites ---------------------------------------

void criterion_9(Tally& tally) {
  bool pass = true;
  std::string detail;

  // Bracket antisymmetry and Jacobi residuals.
  {
    const GroupAllocation alloc = allocate_groups(6);
    SwarmParams params;
    params.n = 6;
    params.turn_gain = 0.05;
    Rng rng(0xACC9);
    double worst_anti = 0.0, worst_jacobi = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const SwarmState q = random_generic_state(6, rng);
      const BracketExpr ab =
          BracketExpr::bracket(BracketExpr::leaf(0), BracketExpr::leaf(1));
      const BracketExpr ba =
          BracketExpr::bracket(BracketExpr::leaf(1), BracketExpr::leaf(0));
      worst_anti = std::max(
          worst_anti, (eval_bracket(ab, q, alloc, params) +
                       eval_bracket(ba, q, alloc, params))
                          .lpNorm<Eigen::Infinity>());
      if (trial < 10) {
        auto nested = [&](int a, int b, int c) {
          return eval_bracket(
              BracketExpr::bracket(BracketExpr::leaf(a),
                                   BracketExpr::bracket(BracketExpr::leaf(b),
                                                        BracketExpr::leaf(c))),
              q, alloc, params);
        };
        worst_jacobi = std::max(
            worst_jacobi, (nested(0, 1, 2) + nested(1, 2, 0) + nested(2, 0, 1))
                              .lpNorm<Eigen::Infinity>());
      }
    }
    if (worst_anti > 1e-6 || worst_jacobi > 1e-4) pass = false;
    detail += "antisym " + std::to_string(worst_anti) + ", jacobi " +
              std::to_string(worst_jacobi) + "; ";
  }

  // Rollout gradient vs central differences.
  {
    const GroupAllocation alloc = allocate_groups(6);
    SwarmParams params;
    params.n = 6;
    Rng rng(0xACCA);
    EffortProblem problem{random_generic_state(6, rng), Eigen::VectorXd(12),
                          random_activation_sequence(15, 3, 5), 3.5, 1e-3};
    for (int j = 0; j < 12; ++j)
      problem.goal_positions[j] = rng.uniform(0, 20);
    Eigen::VectorXd u(15), lambda(12);
    for (int i = 0; i < 15; ++i) u[i] = rng.uniform(0.1, 3.0);
    for (int i = 0; i < 12; ++i) lambda[i] = rng.uniform(-2, 2);
    const double rho = 3.7;
    const Eigen::VectorXd grad =
        rollout_gradient(problem, alloc, params, u, lambda, rho);
    auto phi = [&](const Eigen::VectorXd& uu) {
      ControlSequence useq(uu.data(), uu.data() + uu.size());
      const Trajectory traj =
          rollout(problem.q0, problem.nu, useq, alloc, params);
      const Eigen::VectorXd r =
          traj.back().positions() - problem.goal_positions;
      double w_dot_u = 0.0;
      for (int i = 0; i < 15; ++i)
        w_dot_u += alloc.row(problem.nu[i]).active_count() * uu[i];
      return w_dot_u + lambda.dot(r) + 0.5 * rho * r.squaredNorm();
    };
    double worst_rel = 0.0;
    for (int i = 0; i < 15; ++i) {
      Eigen::VectorXd up = u, dn = u;
      up[i] += 1e-6;
      dn[i] -= 1e-6;
      const double fd = (phi(up) - phi(dn)) / 2e-6;
      worst_rel = std::max(worst_rel, std::fabs(grad[i] - fd) /
                                          std::max(1.0, std::fabs(fd)));
    }
    if (worst_rel > 1e-5) pass = false;
    detail += "gradient rel " + std::to_string(worst_rel) + "; ";
  }

  // Travel identity on random rollouts.
  {
    const GroupAllocation alloc = allocate_groups(6);
    SwarmParams params;
    params.n = 6;
    Rng rng(0xACCB);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const SwarmState q0 = random_generic_state(6, rng);
      const int k = rng.uniform_int(1, 40);
      ActivationSequence nu(k);
      ControlSequence u(k);
      double expected = 0.0;
      for (int i = 0; i < k; ++i) {
        nu[i] = rng.uniform_int(0, 2);
        u[i] = rng.uniform(0.0, params.input_bound);
        expected += alloc.row(nu[i]).active_count() * u[i] * params.delta_t;
      }
      worst = std::max(worst,
                       std::fabs(travel_length(rollout(q0, nu, u, alloc,
                                                       params)) -
                                 expected));
    }
    if (worst > 1e-9) pass = false;
    detail += "travel identity " + std::to_string(worst) + "; ";
  }

  // Byte-identical outputs under repeated seeded runs.
  {
    Scenario s = load_scenario(kScenarioDir + "/paper_6robots.json");
    s.k = 20;
    const std::string dir1 = out_dir("det1");
    const std::string dir2 = out_dir("det2");
    run_experiment(s, dir1);
    run_experiment(s, dir2);
    auto slurp = [](const std::string& path) {
      std::ifstream in(path);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    const bool identical =
        slurp(dir1 + "/run_000.csv") == slurp(dir2 + "/run_000.csv") &&
        slurp(dir1 + "/metrics.csv") == slurp(dir2 + "/metrics.csv");
    if (!identical) pass = false;
    detail += std::string("reruns byte-identical: ") +
              (identical ? "yes" : "NO");
  }

  tally.report(9, pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
  int which = 0;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--criterion") == 0) which = std::atoi(argv[i + 1]);

  Tally tally;
  if (which == 0 || which == 1) criterion_1(tally);
  if (which == 0 || which == 2) criterion_2(tally);
  if (which == 0 || which == 3) criterion_3(tally);
  if (which == 0 || which == 4) criterion_4(tally);
  if (which == 0 || which == 5) criterion_5(tally);
  if (which == 0 || which == 6) criterion_6(tally);
  if (which == 0 || which == 7) criterion_7(tally);
  if (which == 0 || which == 8) criterion_8(tally);
  if (which == 0 || which == 9) criterion_9(tally);
  return tally.failures;
}
