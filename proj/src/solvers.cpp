#include "bidomain/solvers.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "bidomain/parallel.hpp"

namespace bidomain {

StimulusProtocol StimulusProtocol::slab_corner(Real amplitude, Real duration,
                                               Real radius) {
  StimulusProtocol s;
  s.amplitude = amplitude;
  s.duration = duration;
  s.sites.push_back({Vec3::Zero(), radius});
  return s;
}

StimulusProtocol StimulusProtocol::endocardial(const EllipsoidParams& p, int n_sites,
                                               Real radius, Real amplitude,
                                               Real duration) {
  StimulusProtocol s;
  s.amplitude = amplitude;
  s.duration = duration;
  // Sites on the inner surface in a band near the apical end of the
  // theta range, spread over phi.
  const Real theta = p.theta_min + 0.08 * (p.theta_max - p.theta_min);
  for (int i = 0; i < n_sites; ++i) {
    const Real phi =
        p.phi_min + (p.phi_max - p.phi_min) * (i + 0.5) / Real(n_sites);
    s.sites.push_back({p.point(theta, phi, 0.0), radius});
  }
  return s;
}

AppliedCurrent StimulusProtocol::build(const MeshTopology& mesh, const FeMatrices& fe,
                                       Real t) const {
  const Index n = mesh.num_nodes();
  AppliedCurrent iapp = AppliedCurrent::zero(n);
  if (t >= duration || sites.empty()) return iapp;
  for (Index node = 0; node < n; ++node)
    for (const StimulusSite& site : sites)
      if ((mesh.node_coords[node] - site.center).norm() <= site.radius) {
        iapp.iapp_i[node] = amplitude;
        break;
      }
  // Uniform extracellular return current balancing the discrete integral.
  const Real total = fe.lumped_m.dot(iapp.iapp_i);
  if (fe.volume > 0) iapp.iapp_e.setConstant(total / fe.volume);
  return iapp;
}

Problem build_problem(MeshTopology mesh, const ConductivityCoeffs& coeffs,
                      const IonicParams& ionic, int px, int py, int pz,
                      PrimalConfig primal, const EllipsoidParams& ep) {
  ionic.validate();
  Problem pb;
  pb.mesh = std::move(mesh);
  pb.ellipsoid = ep;
  pb.ionic = ionic;
  const FiberField fibers = build_fibers(pb.mesh, ep);
  pb.tensors = build_conductivity(fibers, coeffs);
  pb.dec = decompose(pb.mesh, px, py, pz);
  pb.classes = classify_interface(pb.mesh, pb.dec);
  pb.part = build_dof_partition(pb.mesh, pb.dec, pb.classes, primal);
  pb.fe = assemble_stiffness_mass(pb.mesh, pb.tensors);
  pb.sfe = assemble_subdomain_fe(pb.mesh, pb.tensors, pb.dec);
  pb.kernel_full = constant_kernel_vector(pb.mesh.num_nodes());

  const Index ngamma = pb.part.iface.num_gamma();
  pb.kernel_iface = Vec::Zero(3 * ngamma);
  pb.kernel_iface.head(2 * ngamma).setOnes();
  return pb;
}

LinearStack build_stack(const Problem& pb, const State& state, Real tau,
                        const SolverOptions& opts) {
  LinearStack st;
  st.jac = assemble_jacobian(pb.fe, state, tau, pb.ionic, opts.assembly);

  if (opts.precond == PreconditionerKind::Bddc && pb.part.iface.num_gamma() > 0) {
    st.klocal = build_local_jacobians(pb.sfe, pb.dec, state, tau, pb.ionic, opts.assembly);
    st.locals = build_local_systems(st.klocal, pb.part, opts.threads);
    ScalingOp scaling = opts.scaling == ScalingKind::Rho
                            ? build_rho_scaling(pb.dec, pb.tensors, pb.part)
                            : build_deluxe_scaling(st.locals, pb.part,
                                                   opts.deluxe_sym_minors, opts.threads);
    st.bddc = std::make_unique<BddcPreconditioner>(
        build_bddc(st.klocal, pb.part, std::move(scaling), opts.threads));
  } else if (opts.precond == PreconditionerKind::BlockJacobi) {
    // Non-overlapping blocks on the full system: every node goes to its
    // lowest-numbered sharer.
    const Index n = pb.mesh.num_nodes();
    st.bj_dofs.resize(pb.dec.num_subdomains());
    for (Index node = 0; node < n; ++node) {
      const int owner = pb.dec.node_sharers[node][0];
      for (int f = 0; f < 3; ++f)
        st.bj_dofs[owner].push_back(Index(f) * n + node);
    }
    st.bj_lu.resize(pb.dec.num_subdomains());
    parallel_for(pb.dec.num_subdomains(), opts.threads, [&](int j) {
      const auto& dofs = st.bj_dofs[j];
      std::vector<Triplet> t;
      t.reserve(dofs.size());
      for (Index r = 0; r < Index(dofs.size()); ++r) t.emplace_back(r, dofs[r], 1.0);
      SpMat sel(Index(dofs.size()), 3 * n);
      sel.setFromTriplets(t.begin(), t.end());
      const SpMat block = sel * st.jac.J * SpMat(sel.transpose());
      st.bj_lu[j] = std::make_unique<Eigen::SparseLU<SpMat>>();
      st.bj_lu[j]->compute(block);
      if (st.bj_lu[j]->info() != Eigen::Success)
        throw NumericalError("block-Jacobi factorization failed on block " +
                             std::to_string(j));
    });
  }
  return st;
}

LinearSolveResult solve_linear(const Problem& pb, const LinearStack& stack,
                               const Vec& rhs_full, const SolverOptions& opts) {
  LinearSolveResult out;

  // No interface: direct solve of the bordered singular system.
  if (pb.part.iface.num_gamma() == 0 ||
      (opts.precond != PreconditionerKind::Bddc && pb.dec.num_subdomains() == 1)) {
    out.increment = solve_singular_direct(stack.jac.J, rhs_full, pb.kernel_full);
    out.converged = true;
    return out;
  }

  if (opts.precond == PreconditionerKind::Bddc) {
    const LinOp deflate = make_deflation(pb.kernel_iface);
    SchurOperator schur{&stack.locals, &pb.part, opts.threads};
    const Vec f_gamma =
        deflate(condense_rhs(stack.locals, pb.part, pb.n(), rhs_full));
    const LinOp apply_a = [&](const Vec& v) { return deflate(schur.apply(v)); };
    const BddcPreconditioner* pc = stack.bddc.get();
    const LinOp apply_m = [&, pc](const Vec& v) { return deflate(pc->apply(deflate(v))); };
    const GmresResult g = gmres(apply_a, apply_m, f_gamma, opts.gmres);
    out.iterations = g.iterations;
    out.converged = g.converged;
    if (g.converged)
      out.increment = back_substitute(stack.locals, pb.part, pb.n(), g.x, rhs_full);
    return out;
  }

  // Full-system route (unpreconditioned or block-Jacobi).
  const LinOp deflate = make_deflation(pb.kernel_full);
  const Vec b = deflate(rhs_full);
  const SpMat& J = stack.jac.J;
  const LinOp apply_a = [&](const Vec& v) { return deflate(J * v); };
  LinOp apply_m;
  if (opts.precond == PreconditionerKind::BlockJacobi) {
    apply_m = [&](const Vec& v) {
      Vec z = Vec::Zero(v.size());
      for (size_t j = 0; j < stack.bj_dofs.size(); ++j) {
        const auto& dofs = stack.bj_dofs[j];
        Vec vloc(Index(dofs.size()));
        for (Index s = 0; s < Index(dofs.size()); ++s) vloc[s] = v[dofs[s]];
        const Vec zloc = stack.bj_lu[j]->solve(vloc);
        for (Index s = 0; s < Index(dofs.size()); ++s) z[dofs[s]] = zloc[s];
      }
      return deflate(z);
    };
  }
  const GmresResult g = gmres(apply_a, apply_m, b, opts.gmres);
  out.iterations = g.iterations;
  out.converged = g.converged;
  if (g.converged) out.increment = g.x;
  return out;
}

NewtonResult newton_step(const Problem& pb, const State& old_state, Real tau,
                         const AppliedCurrent& iapp, const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  NewtonResult res;
  res.state = old_state;
  opts.newton.validate();

  int growth_streak = 0;
  for (int k = 0;; ++k) {
    const Vec f = assemble_residual(pb.fe, res.state, old_state, tau, iapp, pb.ionic,
                                    opts.assembly);
    const Real rnorm = f.norm();
    res.stats.residuals.push_back(rnorm);
    if (k > 0 && rnorm >= res.stats.residuals[k - 1]) {
      if (++growth_streak >= 3) {
        res.stats.ok = false;
        res.stats.error = "newton divergence: residual grew for 3 iterations";
        break;
      }
    } else {
      growth_streak = 0;
    }
    res.stats.nit = k;
    if (rnorm <= opts.newton.tol) break;
    if (k >= opts.newton.max_iters) {
      res.stats.ok = false;
      res.stats.error = "newton: max iterations exceeded";
      break;
    }

    const LinearStack stack = build_stack(pb, res.state, tau, opts);
    const LinearSolveResult lin = solve_linear(pb, stack, Vec(-f), opts);
    res.stats.lits.push_back(lin.iterations);
    if (!lin.converged) {
      res.stats.ok = false;
      res.stats.error = "gmres: convergence failure";
      res.stats.nit = int(res.stats.lits.size());
      break;
    }
    res.state += State::from_stacked(lin.increment);
  }

  res.stats.seconds =
      std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

Real SolverStats::avg_nit() const {
  if (steps.empty()) return 0;
  Real s = 0;
  for (const auto& st : steps) s += st.nit;
  return s / Real(steps.size());
}

Real SolverStats::avg_lit() const {
  Real lits = 0, nits = 0;
  for (const auto& st : steps)
    for (int l : st.lits) {
      lits += l;
      nits += 1;
    }
  return nits > 0 ? lits / nits : 0;
}

TimeLoopResult run_time_loop(const Problem& pb, const State& initial,
                             const TimeLoopConfig& loop, const StimulusProtocol& stim,
                             const SolverOptions& opts) {
  if (loop.tau > 0.37)
    std::cerr << "warning: time step " << loop.tau
              << " ms exceeds the 0.37 ms coercivity bound\n";
  const CoercivityReport rep = coercivity_check(initial, loop.tau, pb.ionic);
  if (!rep.all_ok())
    std::cerr << "warning: coercivity hypothesis violated at node " << rep.argmin_h3
              << " (minima " << rep.min_h1 << ", " << rep.min_h2 << ", " << rep.min_h3
              << ")\n";

  TimeLoopResult out;
  State state = initial;
  const int nsteps = int(std::round(loop.t_end / loop.tau));
  if (loop.snapshot_every > 0) out.snapshots.push_back({0.0, state});

  for (int step = 0; step < nsteps; ++step) {
    const Real t = step * loop.tau;
    const AppliedCurrent iapp = stim.build(pb.mesh, pb.fe, t);
    NewtonResult nr = newton_step(pb, state, loop.tau, iapp, opts);
    out.stats.steps.push_back(nr.stats);
    if (!nr.stats.ok) {
      out.aborted = true;
      out.error = nr.stats.error;
      break;
    }
    state = std::move(nr.state);
    const Real t_new = (step + 1) * loop.tau;
    if (loop.snapshot_every > 0 &&
        std::abs(std::remainder(t_new, loop.snapshot_every)) < 0.25 * loop.tau)
      out.snapshots.push_back({t_new, state});
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace bidomain
