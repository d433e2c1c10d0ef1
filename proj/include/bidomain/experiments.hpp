#pragma once

#include "bidomain/config.hpp"
#include "bidomain/io.hpp"

namespace bidomain {

struct ExperimentRow {
  int subdomains = 0;
  std::string mesh;
  Index dofs = 0;
  Real nit = 0;
  Real lit = 0;
  Real seconds = 0;
  Real speedup = 0;
  bool failed = false;
  std::string error;
};

/// One table in the shape (subds, mesh, dofs, nit, lit, time[, Sp]).
struct ExperimentReport {
  std::string name;
  bool with_speedup = false;
  std::vector<ExperimentRow> rows;

  CsvTable to_csv(bool deterministic) const;
};

/// Per-time-step iteration counts of a long run.
struct StepSeries {
  std::vector<Real> t;
  std::vector<int> nit;
  std::vector<Real> lit;

  CsvTable to_csv() const;
};

struct ExperimentOutputs {
  std::vector<ExperimentReport> reports;
  StepSeries series;               // heartbeat
  std::vector<Snapshot> snapshots;  // single runs with snapshot_every > 0
};

/// Run the configured experiment. Row failures are recorded and the sweep
/// continues.
ExperimentOutputs run_experiment(const RunConfig& cfg);

/// Write all CSV tables (and VTK snapshots, when present) under cfg.out_dir.
void export_outputs(const RunConfig& cfg, const ExperimentOutputs& outputs);

}  // namespace bidomain
