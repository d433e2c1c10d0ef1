#include "bidomain/bddc.hpp"

#include <Eigen/Eigenvalues>

#include "bidomain/parallel.hpp"

#include <algorithm>

namespace bidomain {

namespace {

int sharer_position(const std::vector<int>& sharers, int j) {
  const auto it = std::lower_bound(sharers.begin(), sharers.end(), j);
  return int(it - sharers.begin());
}

// Position of a global node inside the field-major local interface trace.
Index gamma_position(const SubdomainDofs& sd, Index global_node) {
  const Index local = sd.node_g2l.at(global_node);
  const auto it =
      std::lower_bound(sd.gamma_nodes.begin(), sd.gamma_nodes.end(), local);
  return Index(it - sd.gamma_nodes.begin());
}

}  // namespace

Vec ScalingOp::apply(const DofPartition& part, int class_id, int sharer_pos,
                     const Vec& x, bool transpose) const {
  const ClassScaling& cs = classes[class_id];
  if (kind == ScalingKind::Rho) {
    const int spf = part.class_dofs[class_id].slots_per_field;
    Vec out(x.size());
    for (int f = 0; f < 3; ++f)
      out.segment(Index(f) * spf, spf) =
          cs.rho[sharer_pos][f] * x.segment(Index(f) * spf, spf);
    return out;
  }
  const Mat& d = cs.deluxe[sharer_pos];
  return transpose ? Vec(d.transpose() * x) : Vec(d * x);
}

ScalingOp build_rho_scaling(const Decomposition& dec, const ConductivityTensors& tensors,
                            const DofPartition& part) {
  const int nsub = dec.num_subdomains();
  std::vector<Real> sigma_i(nsub, 0.0), sigma_e(nsub, 0.0);
  for (int j = 0; j < nsub; ++j) {
    for (Index e : dec.sub_elems[j]) {
      Eigen::SelfAdjointEigenSolver<Mat3> esi(tensors.Di[e], Eigen::EigenvaluesOnly);
      Eigen::SelfAdjointEigenSolver<Mat3> ese(tensors.De[e], Eigen::EigenvaluesOnly);
      sigma_i[j] = std::max(sigma_i[j], esi.eigenvalues().maxCoeff());
      sigma_e[j] = std::max(sigma_e[j], ese.eigenvalues().maxCoeff());
    }
  }

  ScalingOp sc;
  sc.kind = ScalingKind::Rho;
  sc.classes.resize(part.classes.size());
  for (size_t c = 0; c < part.classes.size(); ++c) {
    ClassScaling& cs = sc.classes[c];
    cs.sharers = part.classes[c].sharers;
    Real sum_i = 0, sum_e = 0;
    for (int j : cs.sharers) {
      sum_i += sigma_i[j];
      sum_e += sigma_e[j];
    }
    const Real inv_count = 1.0 / Real(cs.sharers.size());
    for (int j : cs.sharers)
      cs.rho.push_back({sigma_i[j] / sum_i, sigma_e[j] / sum_e, inv_count});
  }
  return sc;
}

namespace {

// Class dual-coordinate basis as columns over the local interface trace.
SpMat class_basis(const DofPartition& part, const SubdomainDofs& sd, int class_id) {
  const ClassDofInfo& info = part.class_dofs[class_id];
  const Index ng = Index(sd.gamma_nodes.size());
  const int spf = info.slots_per_field;
  std::vector<Triplet> t;
  for (int f = 0; f < 3; ++f)
    for (int s = 0; s < spf; ++s) {
      const Index col = Index(f) * spf + s;
      if (info.averaged) {
        t.emplace_back(Index(f) * ng + gamma_position(sd, info.dual_nodes[s + 1]), col,
                       1.0);
        t.emplace_back(Index(f) * ng + gamma_position(sd, info.dual_nodes[0]), col,
                       -1.0);
      } else {
        t.emplace_back(Index(f) * ng + gamma_position(sd, info.dual_nodes[s]), col, 1.0);
      }
    }
  SpMat g(3 * ng, 3 * Index(spf));
  g.setFromTriplets(t.begin(), t.end());
  return g;
}

SpMat selection(const std::vector<Index>& rows, Index ncols) {
  std::vector<Triplet> t;
  for (Index r = 0; r < Index(rows.size()); ++r) t.emplace_back(r, rows[r], 1.0);
  SpMat s(Index(rows.size()), ncols);
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

}  // namespace

ScalingOp build_deluxe_scaling(const std::vector<LocalSystem>& locals,
                               const DofPartition& part, bool sym_minors,
                               int threads) {
  ScalingOp sc;
  sc.kind = ScalingKind::Deluxe;
  sc.classes.resize(part.classes.size());
  for (size_t c = 0; c < part.classes.size(); ++c) {
    sc.classes[c].sharers = part.classes[c].sharers;
    sc.classes[c].deluxe.resize(part.classes[c].sharers.size());
  }

  // Each subdomain writes its own sharer slot of each touched class.
  parallel_for(int(locals.size()), threads, [&](int ji) {
    const size_t j = size_t(ji);
    const LocalSystem& ls = locals[j];
    const SubdomainDofs& sd = part.sub[j];
    if (ls.n_gamma() == 0) return;

    SpMat a = ls.K;
    if (sym_minors) a = SpMat(0.5 * (a + SpMat(a.transpose())));
    const SpMat pi = selection(ls.interior_dofs, a.rows());
    const SpMat pg = selection(ls.gamma_dofs, a.rows());
    const SpMat a_ii = pi * a * pi.transpose();
    const SpMat a_ig = pi * a * pg.transpose();
    const SpMat a_gi = pg * a * pi.transpose();
    const SpMat a_gg = pg * a * pg.transpose();

    Eigen::SparseLU<SpMat> lu;
    if (ls.n_interior() > 0) {
      lu.compute(a_ii);
      if (lu.info() != Eigen::Success)
        throw NumericalError("deluxe: interior factorization failed");
    }

    for (size_t c = 0; c < part.classes.size(); ++c) {
      const ClassDofInfo& info = part.class_dofs[c];
      const InterfaceClass& cl = part.classes[c];
      if (info.slots_per_field == 0) continue;
      if (!std::binary_search(cl.sharers.begin(), cl.sharers.end(), int(j))) continue;

      const SpMat g = class_basis(part, sd, int(c));
      const Mat gd = Mat(g);
      Mat w = a_gg * gd;
      if (ls.n_interior() > 0) {
        const Mat rhs = a_ig * gd;
        const Mat x = lu.solve(rhs);
        w.noalias() -= a_gi * x;
      }
      const Mat minor = gd.transpose() * w;
      sc.classes[c].deluxe[sharer_position(cl.sharers, int(j))] = minor;
    }
  });

  // Normalize: D^(j) = (sum_k S^(k))^{-1} S^(j).
  for (size_t c = 0; c < part.classes.size(); ++c) {
    const ClassDofInfo& info = part.class_dofs[c];
    if (info.slots_per_field == 0) continue;
    ClassScaling& cs = sc.classes[c];
    Mat sum = Mat::Zero(cs.deluxe[0].rows(), cs.deluxe[0].cols());
    for (const Mat& m : cs.deluxe) sum += m;
    Eigen::PartialPivLU<Mat> slu(sum);
    const Vec pivots = slu.matrixLU().diagonal().cwiseAbs();
    if (pivots.size() > 0 &&
        !(pivots.minCoeff() > 1e4 * std::numeric_limits<Real>::min() *
                                  std::max<Real>(1.0, pivots.maxCoeff())))
      throw NumericalError("deluxe: singular class sum on class " + std::to_string(c));
    for (Mat& m : cs.deluxe) m = slu.solve(m);
  }
  return sc;
}

namespace {

// Primal functionals of a partially assembled vector, averaged over
// sharers (the sharers agree for a valid input).
Vec primal_coords(const DofPartition& part, const TildeVector& u) {
  Vec p = Vec::Zero(part.n_primal);
  Vec count = Vec::Zero(part.n_primal);
  for (size_t j = 0; j < part.sub.size(); ++j) {
    const SubdomainDofs& sd = part.sub[j];
    const Index ng = Index(sd.gamma_nodes.size());
    for (Index k = 0; k < Index(part.corner_nodes.size()); ++k) {
      const Index node = part.corner_nodes[k];
      auto it = sd.node_g2l.find(node);
      if (it == sd.node_g2l.end()) continue;
      const Index gp = gamma_position(sd, node);
      for (int f = 0; f < 3; ++f) {
        p[part.corner_primal_dof(k, f)] += u.sub[j][Index(f) * ng + gp];
        count[part.corner_primal_dof(k, f)] += 1;
      }
    }
    for (size_t c = 0; c < part.classes.size(); ++c) {
      const ClassDofInfo& info = part.class_dofs[c];
      const InterfaceClass& cl = part.classes[c];
      if (!info.averaged) continue;
      if (!std::binary_search(cl.sharers.begin(), cl.sharers.end(), int(j))) continue;
      for (int f = 0; f < 3; ++f) {
        Real mean = 0;
        for (Index n : info.dual_nodes) mean += u.sub[j][Index(f) * ng + gamma_position(sd, n)];
        mean /= Real(info.dual_nodes.size());
        p[info.avg_primal_base + f] += mean;
        count[info.avg_primal_base + f] += 1;
      }
    }
  }
  for (Index i = 0; i < p.size(); ++i)
    if (count[i] > 0) p[i] /= count[i];
  return p;
}

// Dual coordinates of one subdomain's trace on one class.
Vec dual_coords(const DofPartition& part, const SubdomainDofs& sd, int class_id,
                const Vec& trace) {
  const ClassDofInfo& info = part.class_dofs[class_id];
  const Index ng = Index(sd.gamma_nodes.size());
  const int spf = info.slots_per_field;
  Vec d(3 * Index(spf));
  for (int f = 0; f < 3; ++f) {
    if (info.averaged) {
      Real mean = 0;
      for (Index n : info.dual_nodes) mean += trace[Index(f) * ng + gamma_position(sd, n)];
      mean /= Real(info.dual_nodes.size());
      for (int s = 0; s < spf; ++s)
        d[Index(f) * spf + s] =
            trace[Index(f) * ng + gamma_position(sd, info.dual_nodes[s + 1])] - mean;
    } else {
      for (int s = 0; s < spf; ++s)
        d[Index(f) * spf + s] = trace[Index(f) * ng + gamma_position(sd, info.dual_nodes[s])];
    }
  }
  return d;
}

}  // namespace

Vec ed_average(const ScalingOp& sc, const DofPartition& part, const TildeVector& u) {
  Vec zt = Vec::Zero(part.num_transformed());
  zt.tail(part.n_primal) = primal_coords(part, u);

  for (size_t c = 0; c < part.classes.size(); ++c) {
    const ClassDofInfo& info = part.class_dofs[c];
    const InterfaceClass& cl = part.classes[c];
    if (info.slots_per_field == 0) continue;
    Vec avg = Vec::Zero(3 * Index(info.slots_per_field));
    for (size_t pos = 0; pos < cl.sharers.size(); ++pos) {
      const int j = cl.sharers[pos];
      const Vec d = dual_coords(part, part.sub[j], int(c), u.sub[j]);
      avg += sc.apply(part, int(c), int(pos), d, /*transpose=*/false);
    }
    zt.segment(info.dual_offset, 3 * Index(info.slots_per_field)) = avg;
  }
  return part.That * zt;
}

std::pair<TildeVector, TildeVector> apply_ED_PD(const ScalingOp& sc,
                                                const DofPartition& part,
                                                const TildeVector& u) {
  const Vec averaged = ed_average(sc, part, u);
  RestrictionOps ops{&part};
  TildeVector ed = ops.R_tilde_gamma(averaged);
  TildeVector pd;
  pd.sub.resize(u.sub.size());
  for (size_t j = 0; j < u.sub.size(); ++j) pd.sub[j] = u.sub[j] - ed.sub[j];
  return {std::move(ed), std::move(pd)};
}

Vec CoarseProblem::solve(const Vec& rhs) const {
  if (dim() == 0) return Vec();
  Vec r = rhs;
  if (kernel.size() > 0) r -= kernel * kernel.dot(r);
  Vec y = lu.solve(r);
  if (kernel.size() > 0) y -= kernel * kernel.dot(y);
  return y;
}

BddcPreconditioner build_bddc(const std::vector<SpMat>& local_jacobians,
                              const DofPartition& part, ScalingOp scaling,
                              int threads) {
  BddcPreconditioner pc;
  pc.part = &part;
  pc.scaling = std::move(scaling);
  pc.threads = threads;
  if (part.iface.num_gamma() == 0) {
    // No interface: nothing to precondition, empty coarse problem.
    pc.coarse.s_pp = Mat::Zero(0, 0);
    return pc;
  }
  pc.locals.resize(local_jacobians.size());
  pc.coarse.s_pp = Mat::Zero(part.n_primal, part.n_primal);

  parallel_for(int(local_jacobians.size()), threads, [&](int ji) {
    const size_t j = size_t(ji);
    const SubdomainDofs& sd = part.sub[j];
    BddcLocal& bl = pc.locals[j];
    bl.n_interior = sd.n_interior();
    bl.n_dual = sd.n_dual;
    bl.n_pi = sd.n_primal;
    bl.n_rr = bl.n_interior + bl.n_dual;

    const SpMat t_t = SpMat(sd.T.transpose());
    bl.Khat = t_t * local_jacobians[j] * sd.T;

    const SpMat k_rr = bl.Khat.block(0, 0, bl.n_rr, bl.n_rr);
    bl.K_rP = bl.Khat.block(0, bl.n_rr, bl.n_rr, bl.n_pi);
    bl.K_Pr = bl.Khat.block(bl.n_rr, 0, bl.n_pi, bl.n_rr);
    bl.K_PP = Mat(bl.Khat.block(bl.n_rr, bl.n_rr, bl.n_pi, bl.n_pi));

    if (bl.n_rr > 0) {
      bl.lu_rr = std::make_unique<Eigen::SparseLU<SpMat>>();
      bl.lu_rr->compute(k_rr);
      if (bl.lu_rr->info() != Eigen::Success)
        throw NumericalError("bddc: local factorization failed on subdomain " +
                             std::to_string(j));
      bl.phi_r = -bl.lu_rr->solve(Mat(bl.K_rP));
      bl.spp_local = bl.K_PP + Mat(bl.K_Pr * bl.phi_r);
    } else {
      bl.spp_local = bl.K_PP;
    }
  });

  for (size_t j = 0; j < local_jacobians.size(); ++j) {
    const SubdomainDofs& sd = part.sub[j];
    const BddcLocal& bl = pc.locals[j];
    for (Index a = 0; a < bl.n_pi; ++a)
      for (Index b = 0; b < bl.n_pi; ++b)
        pc.coarse.s_pp(sd.primal_global[a], sd.primal_global[b]) += bl.spp_local(a, b);
  }

  if (part.n_primal > 0) {
    Vec ker = Vec::Zero(part.n_primal);
    for (Index k = 0; k < Index(part.corner_nodes.size()); ++k) {
      ker[part.corner_primal_dof(k, 0)] = 1.0;
      ker[part.corner_primal_dof(k, 1)] = 1.0;
    }
    for (const ClassDofInfo& info : part.class_dofs)
      if (info.averaged) {
        ker[info.avg_primal_base + 0] = 1.0;
        ker[info.avg_primal_base + 1] = 1.0;
      }
    pc.coarse.kernel = ker.normalized();
    // Shift on the scale of the coarse matrix itself.
    pc.coarse.shift = pc.coarse.s_pp.diagonal().cwiseAbs().maxCoeff();
    if (!(pc.coarse.shift > 0)) pc.coarse.shift = 1.0;
    const Mat shifted =
        pc.coarse.s_pp +
        pc.coarse.shift * pc.coarse.kernel * pc.coarse.kernel.transpose();
    pc.coarse.lu.compute(shifted);
  }
  return pc;
}

Vec BddcPreconditioner::apply(const Vec& r_iface_nodal) const {
  const DofPartition& p = *part;
  const Vec rt = p.That.transpose() * r_iface_nodal;
  const Vec r_dual = rt.head(p.n_dual);
  const Vec r_pi = rt.tail(p.n_primal);

  // Local (interior+dual) solves with scaled dual residuals.
  std::vector<Vec> x_r(locals.size()), pi_contrib(locals.size());
  parallel_for(int(locals.size()), threads, [&](int ji) {
    const size_t j = size_t(ji);
    const BddcLocal& bl = locals[j];
    const SubdomainDofs& sd = p.sub[j];
    if (bl.n_rr == 0) return;
    Vec rhs = Vec::Zero(bl.n_rr);
    Index slot = 0;
    while (slot < bl.n_dual) {
      const int c = sd.dual_class[slot];
      const ClassDofInfo& info = p.class_dofs[c];
      const Index len = 3 * Index(info.slots_per_field);
      const int pos = sharer_position(p.classes[c].sharers, int(j));
      rhs.segment(bl.n_interior + slot, len) =
          scaling.apply(p, c, pos, r_dual.segment(info.dual_offset, len),
                        /*transpose=*/true);
      slot += len;
    }
    x_r[j] = bl.lu_rr->solve(rhs);
    if (bl.n_pi > 0) pi_contrib[j] = bl.K_Pr * x_r[j];
  });
  Vec rho_pi = r_pi;
  for (size_t j = 0; j < locals.size(); ++j) {
    const SubdomainDofs& sd = p.sub[j];
    for (Index a = 0; a < locals[j].n_pi; ++a)
      rho_pi[sd.primal_global[a]] -= pi_contrib[j][a];
  }

  const Vec y_pi = coarse.solve(rho_pi);

  // Back substitution, then weighted reassembly of the dual part in fixed
  // subdomain order.
  Vec z_dual = Vec::Zero(p.n_dual);
  parallel_for(int(locals.size()), threads, [&](int ji) {
    const size_t j = size_t(ji);
    const BddcLocal& bl = locals[j];
    const SubdomainDofs& sd = p.sub[j];
    if (bl.n_rr == 0) return;
    if (bl.n_pi > 0) {
      Vec y_loc(bl.n_pi);
      for (Index a = 0; a < bl.n_pi; ++a) y_loc[a] = y_pi[sd.primal_global[a]];
      x_r[j].noalias() += bl.phi_r * y_loc;
    }
  });
  for (size_t j = 0; j < locals.size(); ++j) {
    const BddcLocal& bl = locals[j];
    const SubdomainDofs& sd = p.sub[j];
    if (bl.n_rr == 0) continue;
    const Vec& u_r = x_r[j];
    Index slot = 0;
    while (slot < bl.n_dual) {
      const int c = sd.dual_class[slot];
      const ClassDofInfo& info = p.class_dofs[c];
      const Index len = 3 * Index(info.slots_per_field);
      const int pos = sharer_position(p.classes[c].sharers, int(j));
      z_dual.segment(info.dual_offset, len) +=
          scaling.apply(p, c, pos, u_r.segment(bl.n_interior + slot, len),
                        /*transpose=*/false);
      slot += len;
    }
  }

  Vec zt(p.num_transformed());
  zt.head(p.n_dual) = z_dual;
  zt.tail(p.n_primal) = y_pi;
  return p.That * zt;
}

}  // namespace bidomain
