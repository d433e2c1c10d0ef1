#pragma once

#include "bidomain/solvers.hpp"

namespace bidomain {

/// Empirical stand-ins for the convergence-bound constants: nodal extrema
/// of the reaction derivatives, per-subdomain conductivity extrema, and the
/// derived bound factors. The reported c/C pair is an analytic prediction,
/// not a measurement.
struct TheoryConstants {
  Real k_min_i = 0, k_max_i = 0;  // min/max nodal dI/dv
  Real k_min_r = 0, k_max_r = 0;  // min/max nodal dR/dw
  Real c_iw = 0, c_rv = 0;        // max |dI/dw|, max |dR/dv|
  Real sigma_max_i = 0, sigma_min_i = 0;
  Real sigma_max_e = 0, sigma_min_e = 0;
  Real H = 0, h = 0, tau = 0;
  int log_exponent = 2;  // 2 for rho scaling, 3 for deluxe

  Real k2 = 0;   // skew-coupling constant squared
  Real phi = 0;  // quasi-optimal factor with the (1 + log H/h)^n term
  Real c0 = 0;

  Real c_lower() const { return k2 > 0 ? c0 / k2 : 0; }
  Real c_upper() const { return phi * k2; }
};

TheoryConstants compute_constants(const State& state, const Decomposition& dec,
                                  const ConductivityTensors& tensors, Real tau,
                                  ScalingKind scaling, const IonicParams& ionic);

/// Sampled field-of-values bounds of a preconditioned operator in a given
/// inner product: c_emp = min <u,Tu>/<u,u>, C_emp = max <Tu,Tu>/<u,u>.
struct FovEstimate {
  Real c_emp = 0;
  Real C_emp = 0;
  int samples = 0;
  int hypothesis_failures = 0;  // samples with non-positive <u,u>
};

FovEstimate estimate_c_C(const LinOp& apply_t, const InnerProduct& ip, Index dim,
                         const LinOp& deflate, int samples, unsigned seed,
                         const std::vector<Vec>* extra_samples = nullptr);

/// Measured residual decay against the (1 - c^2/C)^{m/2} envelope.
struct EnvelopeReport {
  std::vector<Real> ratios;
  std::vector<Real> bound;
  Real c_emp = 0, C_emp = 0;
  int violations = 0;           // ratio > bound + 1e-10
  bool uninformative = false;   // c_emp <= 0 degenerates the bound to 1
};

EnvelopeReport check_envelope(const std::vector<Vec>& residuals, const InnerProduct& ip,
                              Real c_emp, Real C_emp);

struct DiagnosticsResult {
  TheoryConstants constants;
  EnvelopeReport envelope;
  Real max_skew_ratio = 0;  // max |<u,u>_Z| / <u,u>_B over samples
  int iterations = 0;
  bool gmres_converged = false;
};

/// Diagnostic solve of one linearized step: GMRES on the preconditioned
/// interface operator, run and measured in the symmetric-part inner
/// product, with every residual vector retained. The empirical constants
/// sample 100 random deflated vectors plus the run's own residual
/// directions. Small cases only.
DiagnosticsResult run_convergence_diagnostics(const Problem& pb, const State& state,
                                              Real tau, const StimulusProtocol& stim,
                                              const SolverOptions& opts,
                                              int samples = 100, unsigned seed = 1234,
                                              int max_iters = 200);

}  // namespace bidomain
