#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cpi2/config.hpp"
#include "cpi2/trainer.hpp"

namespace cpi2 {

/// Doubles rendered with shortest round-trip formatting, locale-independent.
std::string format_double(double x);

std::string rows_to_csv(const std::vector<ResultRow>& rows, bool include_timing);

/// Runs one experiment and writes results.csv, summary.json and the model
/// parameter files into out_dir. Returns the experiment result.
ExperimentResult cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct BenchmarkRow {
  std::string algorithm;
  double mean_s = 0.0;
  double std_s = 0.0;
  double paper_reference_s = 0.0;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  int calls = 0;
};

/// Mean wall-clock planning cost per decision for critic-assisted planning
/// (H=1), the vanilla path-integral planner (H=50), random shooting (H=50)
/// and a bare actor forward pass, all on identical freshly initialized
/// networks. Two warmup calls are discarded.
BenchmarkReport run_latency_benchmark(const ExperimentConfig& cfg);

/// Runs the benchmark, prints the table and writes benchmark.json.
BenchmarkReport cmd_benchmark(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct AblationOutcome {
  std::string variant;
  double mean_final_return = 0.0;
  std::vector<double> final_returns;  // one per seed
  std::vector<double> first_episode_returns;
};

/// Runs the full, no_greedy, no_critic and no_actor_training variants over
/// the configured seed set, writing one run directory per variant and a
/// comparison.json ranking final mean returns.
std::vector<AblationOutcome> cmd_ablation(const ExperimentConfig& cfg,
                                          const std::filesystem::path& out_dir);

}  // namespace cpi2
