#include "bidomain/theory.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace bidomain {

TheoryConstants compute_constants(const State& state, const Decomposition& dec,
                                  const ConductivityTensors& tensors, Real tau,
                                  ScalingKind scaling, const IonicParams& ionic) {
  TheoryConstants tc;
  tc.tau = tau;
  tc.H = dec.H;
  tc.h = dec.h;
  tc.log_exponent = scaling == ScalingKind::Rho ? 2 : 3;

  const Vec v = state.v();
  tc.k_min_i = std::numeric_limits<Real>::max();
  tc.k_max_i = std::numeric_limits<Real>::lowest();
  for (Index l = 0; l < state.num_nodes(); ++l) {
    const auto d = partials(v[l], state.w[l], ionic);
    tc.k_min_i = std::min(tc.k_min_i, d.dIdv);
    tc.k_max_i = std::max(tc.k_max_i, d.dIdv);
    tc.c_iw = std::max(tc.c_iw, std::abs(d.dIdw));
    tc.c_rv = std::max(tc.c_rv, std::abs(d.dRdv));
  }
  tc.k_min_r = tc.k_max_r = -ionic.eta2;

  // Per-subdomain conductivity extrema; the global max/min drive the bound.
  tc.sigma_max_i = tc.sigma_max_e = 0;
  tc.sigma_min_i = tc.sigma_min_e = std::numeric_limits<Real>::max();
  for (int j = 0; j < dec.num_subdomains(); ++j)
    for (Index e : dec.sub_elems[j]) {
      Eigen::SelfAdjointEigenSolver<Mat3> ei(tensors.Di[e], Eigen::EigenvaluesOnly);
      Eigen::SelfAdjointEigenSolver<Mat3> ee(tensors.De[e], Eigen::EigenvaluesOnly);
      tc.sigma_max_i = std::max(tc.sigma_max_i, ei.eigenvalues().maxCoeff());
      tc.sigma_min_i = std::min(tc.sigma_min_i, ei.eigenvalues().minCoeff());
      tc.sigma_max_e = std::max(tc.sigma_max_e, ee.eigenvalues().maxCoeff());
      tc.sigma_min_e = std::min(tc.sigma_min_e, ee.eigenvalues().minCoeff());
    }

  const Real cm = ionic.chi_cm();
  tc.k2 = 0.25 * tau * tau * std::pow(std::abs(tc.c_iw - tc.c_rv), 2) /
          ((cm + tau * tc.k_min_i) * (1.0 - tau * tc.k_min_r));

  const Real log_factor = std::pow(1.0 + std::log(tc.H / tc.h), tc.log_exponent);
  const Real ratio_i =
      (tau * tc.sigma_max_i + tc.H * tc.H * (cm + tau * tc.k_max_i)) /
      (tau * tc.sigma_min_i);
  const Real ratio_e =
      (tau * tc.sigma_max_e + tc.H * tc.H * (cm + tau * tc.k_max_i)) /
      (tau * tc.sigma_min_e);
  tc.phi = (std::max(ratio_i, ratio_e) +
            (1.0 - tau * tc.k_max_r) / (1.0 - tau * tc.k_min_r)) *
           log_factor;

  const Real sig_term = std::max(std::sqrt(tc.sigma_max_i) / tc.sigma_min_i,
                                 std::sqrt(tc.sigma_max_e) / tc.sigma_min_e) /
                        std::sqrt(tau);
  tc.c0 = 1.0 - tc.k2 * tc.k2 * (tc.H * tc.H / tc.h) * sig_term * tc.phi *
                    std::sqrt(std::max<Real>(0, tc.phi - 1.0));
  return tc;
}

FovEstimate estimate_c_C(const LinOp& apply_t, const InnerProduct& ip, Index dim,
                         const LinOp& deflate, int samples, unsigned seed,
                         const std::vector<Vec>* extra_samples) {
  FovEstimate est;
  est.c_emp = std::numeric_limits<Real>::max();
  est.C_emp = 0;
  std::mt19937 rng(seed);
  std::normal_distribution<Real> dist;

  auto account = [&](const Vec& u0) {
    const Vec u = deflate ? deflate(u0) : u0;
    const Real uu = ip(u, u);
    if (!(uu > 0)) {
      ++est.hypothesis_failures;
      return;
    }
    const Vec tu = apply_t(u);
    est.c_emp = std::min(est.c_emp, ip(u, tu) / uu);
    est.C_emp = std::max(est.C_emp, ip(tu, tu) / uu);
    ++est.samples;
  };

  for (int s = 0; s < samples; ++s) {
    Vec u(dim);
    for (Index i = 0; i < dim; ++i) u[i] = dist(rng);
    account(u);
  }
  if (extra_samples)
    for (const Vec& u : *extra_samples)
      if (u.norm() > 0) account(u);
  return est;
}

EnvelopeReport check_envelope(const std::vector<Vec>& residuals, const InnerProduct& ip,
                              Real c_emp, Real C_emp) {
  EnvelopeReport rep;
  rep.c_emp = c_emp;
  rep.C_emp = C_emp;
  rep.uninformative = !(c_emp > 0) || !(C_emp > 0);
  const Real rate = rep.uninformative
                        ? 1.0
                        : std::max<Real>(0.0, 1.0 - c_emp * c_emp / C_emp);
  if (residuals.empty()) return rep;

  const Real r0 = std::sqrt(std::max<Real>(0, ip(residuals[0], residuals[0])));
  for (size_t m = 0; m < residuals.size(); ++m) {
    const Real rm = std::sqrt(std::max<Real>(0, ip(residuals[m], residuals[m])));
    rep.ratios.push_back(r0 > 0 ? rm / r0 : 0.0);
    rep.bound.push_back(std::pow(rate, Real(m) / 2.0));
    if (rep.ratios.back() > rep.bound.back() + 1e-10) ++rep.violations;
  }
  return rep;
}

DiagnosticsResult run_convergence_diagnostics(const Problem& pb, const State& state,
                                              Real tau, const StimulusProtocol& stim,
                                              const SolverOptions& opts, int samples,
                                              unsigned seed, int max_iters) {
  DiagnosticsResult out;
  out.constants =
      compute_constants(state, pb.dec, pb.tensors, tau, opts.scaling, pb.ionic);

  SolverOptions diag_opts = opts;
  diag_opts.precond = PreconditionerKind::Bddc;
  const LinearStack stack = build_stack(pb, state, tau, diag_opts);
  const AppliedCurrent iapp = stim.build(pb.mesh, pb.fe, 0.0);
  const Vec f = assemble_residual(pb.fe, state, state, tau, iapp, pb.ionic,
                                  diag_opts.assembly);

  const LinOp deflate = make_deflation(pb.kernel_iface);
  SchurOperator schur{&stack.locals, &pb.part};
  const BddcPreconditioner* pc = stack.bddc.get();
  const LinOp apply_t = [&, pc](const Vec& v) {
    return deflate(pc->apply(deflate(schur.apply(v))));
  };
  const InnerProduct ip = [&](const Vec& u, const Vec& v) {
    return b_gamma_inner(GammaForm::B, stack.locals, pb.part, pb.n(), stack.jac.J, u, v);
  };

  const Vec f_gamma = deflate(condense_rhs(stack.locals, pb.part, pb.n(), Vec(-f)));
  const Vec g = deflate(pc->apply(f_gamma));

  const IpGmresResult run = gmres_in_product(apply_t, ip, g, max_iters, 1e-8);
  out.iterations = run.iterations;
  out.gmres_converged = run.converged;

  const FovEstimate est = estimate_c_C(apply_t, ip, pb.part.iface.num_dofs(), deflate,
                                       samples, seed, &run.residuals);
  out.envelope = check_envelope(run.residuals, ip, est.c_emp, est.C_emp);

  // Skew form vanishes on the diagonal; track the worst relative value.
  std::mt19937 rng(seed + 1);
  std::normal_distribution<Real> dist;
  for (int s = 0; s < 20; ++s) {
    Vec u(pb.part.iface.num_dofs());
    for (Index i = 0; i < u.size(); ++i) u[i] = dist(rng);
    u = deflate(u);
    const Real zz = std::abs(
        b_gamma_inner(GammaForm::Z, stack.locals, pb.part, pb.n(), stack.jac.J, u, u));
    const Real bb = ip(u, u);
    if (bb > 0) out.max_skew_ratio = std::max(out.max_skew_ratio, zz / bb);
  }
  return out;
}

}  // namespace bidomain
