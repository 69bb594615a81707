#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "microswarm/experiments.hpp"
#include "microswarm/parallel.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitTimeoutDominated = 3;

void print_summary(const microswarm::RunReport& report) {
  const auto& agg = report.aggregates;
  std::printf("experiment:      %s\n", report.experiment.c_str());
  std::printf("config hash:     %s\n", report.config_hash.c_str());
  std::printf("runs:            %d\n", agg.runs);
  std::printf("mean travel:     %.4f\n", agg.mean_travel);
  std::printf("min travel:      %.4f\n", agg.min_travel);
  if (agg.mean_baseline_travel > 0.0)
    std::printf("mean baseline:   %.4f (ratio %.2f)\n", agg.mean_baseline_travel,
                agg.mean_travel / agg.mean_baseline_travel);
  if (agg.mean_objective > 0.0)
    std::printf("mean objective:  %.4f\n", agg.mean_objective);
  std::printf("mean wall time:  %.3fs\n", agg.mean_wall_time);
  std::printf("timeout rate:    %.4f\n", agg.timeout_rate);
  for (const auto& row : report.sweep_rows)
    std::printf("sweep k=%-4d mean objective %.4f  mean solve %.3fs  "
                "(%d converged, %d excluded)\n",
                row.k, row.mean_objective, row.mean_solve_seconds,
                row.converged_trials, row.excluded_trials);
  if (!report.rank.position_ranks.empty())
    std::printf("full-rank states: %d / %zu (expected rank %d, degenerate "
                "state rank %d)\n",
                report.rank.full_rank_states,
                report.rank.position_ranks.size(), report.rank.expected,
                report.rank.degenerate_rank);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-based global control of a microrobot swarm: simulator "
               "and experiment drivers"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int runs = -1;
  std::string experiment_override;

  CLI::App* run = app.add_subcommand("run", "Run a scenario experiment");
  run->add_option("scenario", scenario_path, "Scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seed", seed, "Override the scenario seed")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--runs", runs, "Override the batch run count");
  run->add_option("--experiment", experiment_override,
                  "Override the experiment kind");

  std::string rank_scenario;
  int rank_states = 100;
  CLI::App* rank = app.add_subcommand(
      "rank", "Sample states and print the position-rank report");
  rank->add_option("scenario", rank_scenario, "Scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  rank->add_option("--states", rank_states, "Number of sampled states");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      microswarm::Scenario scenario = microswarm::load_scenario(scenario_path);
      if (seed_set) scenario.seed = seed;
      if (runs >= 0) scenario.batch.runs = runs;
      if (!experiment_override.empty())
        scenario.experiment =
            microswarm::experiment_kind_from_string(experiment_override);
      const microswarm::RunReport report =
          microswarm::run_experiment(scenario, out_dir);
      print_summary(report);
      if (report.aggregates.runs > 0 && report.aggregates.timeout_rate > 0.5)
        return kExitTimeoutDominated;
      return kExitOk;
    }
    if (rank->parsed()) {
      microswarm::Scenario scenario = microswarm::load_scenario(rank_scenario);
      scenario.experiment = microswarm::ExperimentKind::kAccessibility;
      scenario.accessibility.states = rank_states;
      const microswarm::RunReport report =
          microswarm::run_experiment(scenario, "out");
      for (std::size_t i = 0; i < report.rank.position_ranks.size(); ++i)
        std::printf("state %3zu: position rank %d, orientation rank %d\n", i,
                    report.rank.position_ranks[i],
                    report.rank.orientation_ranks[i]);
      print_summary(report);
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
