#pragma once

// Monte-Carlo experiment orchestration and result persistence.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coopflow/bounds.hpp"
#include "coopflow/config.hpp"
#include "coopflow/metrics.hpp"

namespace coopflow {

enum class RunStatus { ok, diverged, failed };

std::string_view to_string(RunStatus s);

/// One Monte-Carlo realization.
struct RunRecord {
  int run = 0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::ok;
  std::string message;
  std::vector<std::vector<StateVector>> estimates;  // [k][agent], k = 0..K
  std::vector<std::vector<StateVector>> truths;     // [k][agent]
  std::vector<BoundPoint> pcrlb;                    // k = 0..K
  std::vector<double> joint_ms;                     // per step k = 1..K
  std::vector<double> agent_ms;                     // per step: max over agents
  int degenerate_events = 0;
  double final_error_p = 0.0;                       // mean position error at k = K
};

/// Aggregated results of an experiment.
struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunRecord> runs;
  ErrorSeries rmse;            // all runs that completed
  ErrorSeries rmse_converged;  // completed runs that did not diverge
  std::vector<BoundPoint> pcrlb;
  int n_failed = 0;
  int n_diverged = 0;
  double joint_ms_per_step = 0.0;
  double agent_ms_per_step = 0.0;

  /// True when no run both completed and stayed below the divergence threshold.
  bool all_diverged() const { return n_failed + n_diverged == static_cast<int>(runs.size()); }
};

/// Seed of run r for a base seed.
std::uint64_t run_seed(std::uint64_t base, int run);

/// Executes one realization of the configured experiment.
RunRecord execute_run(const ExperimentConfig& cfg, int run);

/// All runs (in parallel across `threads` workers; 0 means hardware concurrency), then aggregates.
ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads = 0);

/// Recomputes the aggregate fields from `runs`.
void aggregate(ExperimentResult& result);

/// Writes rmse.csv, rmse_converged.csv, cf.csv, runtime.csv, runs.csv and manifest.yaml.
/// Throws std::filesystem::filesystem_error or std::runtime_error on I/O failure.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir);

}  // namespace coopflow
