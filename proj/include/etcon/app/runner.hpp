#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "etcon/app/csv.hpp"
#include "etcon/app/scenario.hpp"
#include "etcon/clock_sync.hpp"
#include "etcon/metrics.hpp"

namespace etcon::app {

/// One simulated repetition with its metrics.
struct Outcome {
  TriggerLaw<double> law;
  Trace<double> trace;
  std::optional<ClockRun<double>> clock;
  Vector<double> alpha_scale;  ///< divides the state to give the quantity the radios compare
  MetricsReport<double> metrics;
};

/// Simulates repetition `run` of the scenario under `law`.
Outcome simulate(const Scenario& s, const TriggerLaw<double>& law, int run = 0);

struct RunSummary {
  Outcome outcome;
  std::optional<double> exp_rate;  ///< lambda = 0 only
  std::string line;
};

/// Single run: writes events, segments, lyapunov, metrics (and clocks) CSVs to outdir.
RunSummary run_command(const Scenario& s, const std::filesystem::path& outdir, std::ostream& log);

struct SweepCell {
  double sigma = 0;
  double lambda = 0;
  std::string law;
  int runs = 0;
  int ok_runs = 0;
  int t_con_reached = 0;
  double mean_n_events = 0;
  double mean_t_con = 0;
  double mean_energy = 0;
  double mean_h2sq = 0;
  bool safety_cap = false;
  std::string error;  ///< first failure in the cell, empty if none
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<MetricsRow> rows;  ///< every successful repetition, in plan order
};

/// sigma x lambda x mc_runs plan on `jobs` worker threads (0: one per core).
/// The result does not depend on the number of workers.
SweepResult sweep(const Scenario& s, unsigned jobs);

void write_sweep_csv(std::ostream& os, const SweepResult& r);

SweepResult sweep_command(const Scenario& s, const std::filesystem::path& outdir, unsigned jobs, std::ostream& log);

}  // namespace etcon::app
