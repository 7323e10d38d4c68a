#pragma once

// Experiment studies. Each study returns its aggregates and, when the
// config names an output directory, writes deterministic data files there.

#include <cstdint>
#include <string>
#include <vector>

#include "uglms/estimator.hpp"
#include "uglms/experiment_config.hpp"

namespace uglms {

/// Nearest-rank percentile (p in [0, 1]); p10/p90 of two samples are the
/// minimum and maximum.
double percentile(std::vector<double> values, double p);

struct Band {
  double mean = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
};

Band summarize(const std::vector<double>& values);

/// Device for run `run_index` of a study (fixed unless vary_device).
DeviceDraw study_device(const ExperimentConfig& cfg, int run_index);

/// Independent runs r = 0..runs-1 with noise seed cfg.seed + r, executed on
/// cfg.workers threads and returned in run order.
std::vector<RunResult> run_batch(const ExperimentConfig& cfg, const EstimatorConfig& est, const RunOptions& options);

struct SingleReport {
  RunResult result;
  std::vector<double> true_inl;
  std::vector<double> true_dnl;
  std::uint64_t device_seed = 0;
};

SingleReport run_single(const ExperimentConfig& cfg);

struct ConvergenceSeries {
  std::string mode;
  std::vector<int> iterations;
  std::vector<Band> inl;
  std::vector<Band> dnl;
  /// [run][checkpoint] raw values.
  std::vector<std::vector<double>> run_inl;
  std::vector<std::vector<double>> run_dnl;
};

struct ConvergenceReport {
  std::vector<ConvergenceSeries> series;  // uniform first, then the aligned mode
};

/// Runs every inflation mode in {uniform, cfg.inflation_mode (aligned)}.
ConvergenceReport run_convergence(const ExperimentConfig& cfg);

struct HeatmapCell {
  double alpha = 0.0;
  double tau = 0.0;
  double mean_dinl = 0.0;
  std::vector<double> run_dinl;
};

struct HeatmapReport {
  std::vector<HeatmapCell> cells;  // alpha-major, tau-minor
};

HeatmapReport run_heatmap(const ExperimentConfig& cfg);

struct EpsilonRun {
  int iterations = 0;
  double dinl_max = 0.0;
  bool terminated = false;
};

struct EpsilonStudy {
  double epsilon = 0.0;
  std::vector<EpsilonRun> runs;
  Band iterations;
  Band dinl;
  int not_converged = 0;
};

struct EpsilonReport {
  std::vector<EpsilonStudy> studies;
};

EpsilonReport run_epsilon(const ExperimentConfig& cfg);

struct TimingRow {
  int n_bits = 0;
  std::string variant;
  int samples = 0;
  int iterations = 0;
  double median_select_us = 0.0;
  double median_update_us = 0.0;
  double compute_ms = 0.0;
  double ops_per_iteration = 0.0;
  double speedup_vs_dense = 0.0;
  double ops_ratio_vs_dense = 0.0;
};

struct TimingReport {
  std::vector<TimingRow> rows;
  const TimingRow* find(int n_bits, const std::string& variant) const;
};

/// Single-threaded: each (resolution, variant) cell is one run of
/// cfg.iteration_budget() iterations.
TimingReport run_timing(const ExperimentConfig& cfg);

}  // namespace uglms
