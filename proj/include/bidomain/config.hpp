#pragma once

#include <string>

#include "bidomain/solvers.hpp"

namespace bidomain {

struct GeometryConfig {
  std::string kind = "slab";  // slab | ellipsoid
  int nx = 12, ny = 12, nz = 12;
  std::array<Real, 3> extents = {0.48, 0.48, 0.48};  // slab, cm
  EllipsoidParams ellipsoid;
};

struct StimulusConfig {
  Real amplitude = 100.0;  // mA/cm^3
  Real duration = 1.0;     // ms
  Real radius = 0.1;       // cm
  std::string placement = "corner";  // corner | endocardial
  int sites = 5;
};

struct RunConfig {
  GeometryConfig geometry;
  int px = 2, py = 2, pz = 2;
  IonicParams ionic;
  ConductivityCoeffs conductivity;
  StimulusConfig stimulus;
  GmresConfig gmres;
  NewtonConfig newton;
  std::string scaling = "rho";          // rho | deluxe
  std::string primal = "ve";            // v | ve | vef
  std::string preconditioner = "bddc";  // bddc | bj | none
  std::string experiment = "single";    // single|weak|strong|optimality|heartbeat
  Real t_end = 2.0;          // ms
  Real tau = 0.05;           // ms
  Real snapshot_every = 0.0;  // ms
  std::string out_dir = "out";
  unsigned seed = 1234;
  int threads = 1;
  bool deterministic = true;
  bool lump_ionic = false;
  bool deluxe_sym_minors = true;

  void validate() const;
};

/// Named presets baking in the standard parameter tables at desk-runnable
/// sizes: "slab-paper", "ellipsoid-paper".
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

RunConfig parse_config(const std::string& json_text);
std::string serialize_config(const RunConfig& cfg);
RunConfig load_config_file(const std::string& path);

ScalingKind scaling_kind(const RunConfig& cfg);
PrimalConfig primal_config(const RunConfig& cfg);
PreconditionerKind preconditioner_kind(const RunConfig& cfg);

MeshTopology make_mesh(const GeometryConfig& g);
Problem make_problem(const RunConfig& cfg);
SolverOptions make_solver_options(const RunConfig& cfg);
StimulusProtocol make_protocol(const RunConfig& cfg);
TimeLoopConfig make_loop(const RunConfig& cfg);

}  // namespace bidomain
