#include "bidomain/experiments.hpp"

#include <filesystem>
#include <sstream>

namespace bidomain {

namespace {

std::string mesh_label(int nx, int ny, int nz) {
  std::ostringstream os;
  os << nx << "x" << ny << "x" << nz;
  return os.str();
}

ExperimentRow run_single_row(const RunConfig& cfg, std::vector<Snapshot>* snapshots,
                             StepSeries* series) {
  ExperimentRow row;
  row.subdomains = cfg.px * cfg.py * cfg.pz;
  row.mesh = mesh_label(cfg.geometry.nx, cfg.geometry.ny, cfg.geometry.nz);
  row.dofs = 3 * Index(cfg.geometry.nx + 1) * (cfg.geometry.ny + 1) *
             (cfg.geometry.nz + 1);
  try {
    const Problem pb = make_problem(cfg);
    const SolverOptions opts = make_solver_options(cfg);
    const StimulusProtocol stim = make_protocol(cfg);
    const TimeLoopConfig loop = make_loop(cfg);
    const TimeLoopResult res =
        run_time_loop(pb, State::rest(pb.n()), loop, stim, opts);
    row.nit = res.stats.avg_nit();
    row.lit = res.stats.avg_lit();
    for (const auto& st : res.stats.steps) row.seconds += st.seconds;
    if (!res.stats.steps.empty()) row.seconds /= Real(res.stats.steps.size());
    if (res.aborted) {
      row.failed = true;
      row.error = res.error;
    }
    if (snapshots) *snapshots = res.snapshots;
    if (series) {
      for (size_t s = 0; s < res.stats.steps.size(); ++s) {
        series->t.push_back(Real(s + 1) * cfg.tau);
        series->nit.push_back(res.stats.steps[s].nit);
        series->lit.push_back(res.stats.steps[s].avg_lit());
      }
    }
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
  }
  return row;
}

const std::array<std::array<int, 3>, 4> kSubGrids = {
    {{1, 1, 1}, {2, 1, 1}, {2, 2, 1}, {2, 2, 2}}};

ExperimentReport weak_scaling(const RunConfig& cfg) {
  // The configured geometry is the per-subdomain block; the domain grows
  // with the subdomain grid so the element size stays fixed.
  ExperimentReport rep;
  rep.name = "weak";
  for (const auto& g : kSubGrids) {
    RunConfig row_cfg = cfg;
    row_cfg.px = g[0];
    row_cfg.py = g[1];
    row_cfg.pz = g[2];
    row_cfg.geometry.nx = cfg.geometry.nx * g[0];
    row_cfg.geometry.ny = cfg.geometry.ny * g[1];
    row_cfg.geometry.nz = cfg.geometry.nz * g[2];
    if (cfg.geometry.kind == "slab") {
      for (int d = 0; d < 3; ++d)
        row_cfg.geometry.extents[d] = cfg.geometry.extents[d] * g[d];
    } else {
      EllipsoidParams& e = row_cfg.geometry.ellipsoid;
      e.theta_max = e.theta_min + (e.theta_max - e.theta_min) * g[0];
      e.phi_max = e.phi_min + (e.phi_max - e.phi_min) * g[1];
    }
    rep.rows.push_back(run_single_row(row_cfg, nullptr, nullptr));
  }
  return rep;
}

ExperimentReport strong_scaling(const RunConfig& cfg) {
  ExperimentReport rep;
  rep.name = "strong";
  rep.with_speedup = true;
  for (const auto& g : kSubGrids) {
    RunConfig row_cfg = cfg;
    row_cfg.px = g[0];
    row_cfg.py = g[1];
    row_cfg.pz = g[2];
    rep.rows.push_back(run_single_row(row_cfg, nullptr, nullptr));
  }
  const Real t1 = rep.rows.empty() ? 0 : rep.rows[0].seconds;
  for (auto& row : rep.rows)
    row.speedup = (row.seconds > 0 && t1 > 0) ? t1 / row.seconds : 0;
  return rep;
}

std::vector<ExperimentReport> optimality(const RunConfig& cfg) {
  std::vector<ExperimentReport> reps;
  const std::array<int, 3> local_sizes = {4, 8, 12};
  for (const std::string scaling : {"rho", "deluxe"})
    for (const std::string primal : {"v", "ve", "vef"}) {
      ExperimentReport rep;
      rep.name = "optimality_" + scaling + "_" + primal;
      for (int hh : local_sizes) {
        RunConfig row_cfg = cfg;
        row_cfg.scaling = scaling;
        row_cfg.primal = primal;
        row_cfg.geometry.nx = hh * cfg.px;
        row_cfg.geometry.ny = hh * cfg.py;
        row_cfg.geometry.nz = hh * cfg.pz;
        rep.rows.push_back(run_single_row(row_cfg, nullptr, nullptr));
      }
      reps.push_back(std::move(rep));
    }
  return reps;
}

}  // namespace

CsvTable ExperimentReport::to_csv(bool deterministic) const {
  CsvTable t;
  t.header = {"subds", "mesh", "dofs", "nit", "lit", "time"};
  if (with_speedup) t.header.push_back("Sp");
  for (const auto& row : rows) {
    std::vector<std::string> r = {std::to_string(row.subdomains), row.mesh,
                                  std::to_string(row.dofs), format_sig(row.nit),
                                  format_sig(row.lit),
                                  format_sig(deterministic ? 0.0 : row.seconds)};
    if (with_speedup) r.push_back(format_sig(deterministic ? 0.0 : row.speedup));
    if (row.failed) r.back() += " [failed: " + row.error + "]";
    t.rows.push_back(std::move(r));
  }
  return t;
}

CsvTable StepSeries::to_csv() const {
  CsvTable out;
  out.header = {"step", "t", "nit", "lit"};
  for (size_t s = 0; s < t.size(); ++s)
    out.rows.push_back({std::to_string(s + 1), format_sig(t[s]),
                        std::to_string(nit[s]), format_sig(lit[s])});
  return out;
}

ExperimentOutputs run_experiment(const RunConfig& cfg) {
  cfg.validate();
  ExperimentOutputs out;
  if (cfg.experiment == "weak") {
    out.reports.push_back(weak_scaling(cfg));
  } else if (cfg.experiment == "strong") {
    out.reports.push_back(strong_scaling(cfg));
  } else if (cfg.experiment == "optimality") {
    out.reports = optimality(cfg);
  } else if (cfg.experiment == "heartbeat") {
    ExperimentReport rep;
    rep.name = "heartbeat";
    rep.rows.push_back(run_single_row(cfg, nullptr, &out.series));
    out.reports.push_back(std::move(rep));
  } else {
    ExperimentReport rep;
    rep.name = "single";
    rep.rows.push_back(run_single_row(cfg, &out.snapshots, nullptr));
    out.reports.push_back(std::move(rep));
  }
  return out;
}

void export_outputs(const RunConfig& cfg, const ExperimentOutputs& outputs) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  for (const auto& rep : outputs.reports)
    export_csv_file(cfg.out_dir + "/" + rep.name + ".csv",
                    rep.to_csv(cfg.deterministic));
  if (!outputs.series.t.empty())
    export_csv_file(cfg.out_dir + "/heartbeat_series.csv", outputs.series.to_csv());
  if (!outputs.snapshots.empty()) {
    const MeshTopology mesh = make_mesh(cfg.geometry);
    for (size_t s = 0; s < outputs.snapshots.size(); ++s) {
      char name[64];
      std::snprintf(name, sizeof(name), "/snapshot_%03zu.vtk", s);
      export_vtk(cfg.out_dir + name, mesh, outputs.snapshots[s].state,
                 outputs.snapshots[s].t);
    }
  }
}

}  // namespace bidomain
