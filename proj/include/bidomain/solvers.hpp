#pragma once

#include <memory>
#include <string>

#include "bidomain/bddc.hpp"
#include "bidomain/gmres.hpp"
#include "bidomain/schur.hpp"

namespace bidomain {

enum class PreconditionerKind { Bddc, BlockJacobi, None };

struct NewtonConfig {
  Real tol = 1e-4;  // absolute residual tolerance
  int max_iters = 20;

  void validate() const {
    if (!(tol > 0)) throw InvalidConfig("newton tolerance must be positive");
  }
};

struct StimulusSite {
  Vec3 center;
  Real radius = 0.1;  // cm
};

/// Applied-current protocol: spherical sites carry the intracellular
/// stimulus; the extracellular return current is spread uniformly so the
/// discrete compatibility condition holds exactly.
struct StimulusProtocol {
  Real amplitude = 100.0;  // mA/cm^3
  Real duration = 1.0;     // ms
  std::vector<StimulusSite> sites;

  static StimulusProtocol slab_corner(Real amplitude = 100.0, Real duration = 1.0,
                                      Real radius = 0.1);
  /// Sites spread on the endocardial surface near the apex.
  static StimulusProtocol endocardial(const EllipsoidParams& p, int n_sites = 5,
                                      Real radius = 0.2, Real amplitude = 100.0,
                                      Real duration = 1.0);

  AppliedCurrent build(const MeshTopology& mesh, const FeMatrices& fe, Real t) const;
};

struct SolverOptions {
  GmresConfig gmres;
  NewtonConfig newton;
  PreconditionerKind precond = PreconditionerKind::Bddc;
  ScalingKind scaling = ScalingKind::Rho;
  bool deluxe_sym_minors = true;
  AssemblyOptions assembly;
  int threads = 1;
  bool deterministic = true;
};

/// Everything fixed over a run: mesh, tensors, decomposition, dof
/// partition, and the assembled stiffness/mass matrices.
struct Problem {
  MeshTopology mesh;
  EllipsoidParams ellipsoid;
  ConductivityTensors tensors;
  IonicParams ionic;
  Decomposition dec;
  InterfaceClasses classes;
  DofPartition part;
  FeMatrices fe;
  SubdomainFe sfe;
  Vec kernel_full;   // (1,1,0) over all nodes
  Vec kernel_iface;  // its interface trace

  Index n() const { return mesh.num_nodes(); }
};

Problem build_problem(MeshTopology mesh, const ConductivityCoeffs& coeffs,
                      const IonicParams& ionic, int px, int py, int pz,
                      PrimalConfig primal, const EllipsoidParams& ep = {});

/// The linear solver state rebuilt at every Newton iteration.
struct LinearStack {
  JacobianSystem jac;
  std::vector<SpMat> klocal;
  std::vector<LocalSystem> locals;
  std::unique_ptr<BddcPreconditioner> bddc;
  // block-Jacobi data (full-system route): per-subdomain owned dofs
  std::vector<std::vector<Index>> bj_dofs;
  std::vector<std::unique_ptr<Eigen::SparseLU<SpMat>>> bj_lu;
};

LinearStack build_stack(const Problem& pb, const State& state, Real tau,
                        const SolverOptions& opts);

struct LinearSolveResult {
  Vec increment;
  int iterations = 0;
  bool converged = false;
};

/// Solve J s = rhs with the configured route: condensation to the interface
/// with BDDC-preconditioned GMRES, full-system GMRES (unpreconditioned or
/// block-Jacobi), or a direct bordered solve when there is no interface.
LinearSolveResult solve_linear(const Problem& pb, const LinearStack& stack,
                               const Vec& rhs_full, const SolverOptions& opts);

struct StepStats {
  int nit = 0;
  std::vector<int> lits;             // GMRES iterations per Newton iteration
  std::vector<Real> residuals;       // Newton residual history, length nit+1
  Real seconds = 0;
  bool ok = true;
  std::string error;

  Real avg_lit() const {
    if (lits.empty()) return 0;
    Real s = 0;
    for (int l : lits) s += l;
    return s / Real(lits.size());
  }
};

struct NewtonResult {
  State state;
  StepStats stats;
};

/// One backward-Euler step: Newton on the nonlinear residual with the
/// previous state as initial guess. Divergence (three consecutive residual
/// increases) or a linear-solve failure marks the step failed.
NewtonResult newton_step(const Problem& pb, const State& old_state, Real tau,
                         const AppliedCurrent& iapp, const SolverOptions& opts);

struct SolverStats {
  std::vector<StepStats> steps;

  Real avg_nit() const;
  Real avg_lit() const;  // total GMRES iterations / total Newton iterations
};

struct Snapshot {
  Real t;
  State state;
};

struct TimeLoopConfig {
  Real t_end = 2.0;          // ms
  Real tau = 0.05;           // ms
  Real snapshot_every = 0.0;  // ms; <= 0 disables snapshots
};

struct TimeLoopResult {
  SolverStats stats;
  std::vector<Snapshot> snapshots;
  State final_state;
  bool aborted = false;
  std::string error;
};

TimeLoopResult run_time_loop(const Problem& pb, const State& initial,
                             const TimeLoopConfig& loop, const StimulusProtocol& stim,
                             const SolverOptions& opts);

}  // namespace bidomain
