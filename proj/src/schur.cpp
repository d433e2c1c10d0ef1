#include "bidomain/schur.hpp"

#include "bidomain/parallel.hpp"

namespace bidomain {

namespace {

SpMat selection(const std::vector<Index>& rows, Index ncols) {
  std::vector<Triplet> t;
  t.reserve(rows.size());
  for (Index r = 0; r < Index(rows.size()); ++r) t.emplace_back(r, rows[r], 1.0);
  SpMat s(Index(rows.size()), ncols);
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

}  // namespace

SubdomainFe assemble_subdomain_fe(const MeshTopology& mesh,
                                  const ConductivityTensors& tensors,
                                  const Decomposition& dec) {
  SubdomainFe out;
  out.fe.reserve(dec.num_subdomains());
  for (int j = 0; j < dec.num_subdomains(); ++j) {
    std::unordered_map<Index, Index> g2l;
    for (Index l = 0; l < Index(dec.sub_nodes[j].size()); ++l)
      g2l[dec.sub_nodes[j][l]] = l;
    out.fe.push_back(assemble_stiffness_mass_on(mesh, tensors, dec.sub_elems[j], g2l,
                                                Index(dec.sub_nodes[j].size())));
  }
  return out;
}

std::vector<SpMat> build_local_jacobians(const SubdomainFe& sfe, const Decomposition& dec,
                                         const State& state, Real tau,
                                         const IonicParams& params,
                                         const AssemblyOptions& opts) {
  const Vec v = state.v();
  std::vector<SpMat> out;
  out.reserve(dec.num_subdomains());
  for (int j = 0; j < dec.num_subdomains(); ++j) {
    const auto& nodes = dec.sub_nodes[j];
    const Index nl = Index(nodes.size());
    Vec dIdv(nl), dIdw(nl), dRdv(nl), dRdw(nl);
    for (Index l = 0; l < nl; ++l) {
      const auto d = partials(v[nodes[l]], state.w[nodes[l]], params);
      dIdv[l] = d.dIdv;
      dIdw[l] = d.dIdw;
      dRdv[l] = d.dRdv;
      dRdw[l] = d.dRdw;
    }
    out.push_back(build_jacobian_blocks(sfe.fe[j], dIdv, dIdw, dRdv, dRdw, tau,
                                        params.chi_cm(), opts));
  }
  return out;
}

Vec LocalSystem::apply_schur(const Vec& x_gamma) const {
  if (n_gamma() == 0) return Vec();
  Vec out = K_GG * x_gamma;
  if (n_interior() > 0) out.noalias() -= K_GI * lu_II->solve(K_IG * x_gamma);
  return out;
}

std::vector<LocalSystem> build_local_systems(const std::vector<SpMat>& local_jacobians,
                                             const DofPartition& part, int threads) {
  std::vector<LocalSystem> out(local_jacobians.size());
  parallel_for(int(local_jacobians.size()), threads, [&](int ji) {
    const size_t j = size_t(ji);
    const SubdomainDofs& sd = part.sub[j];
    LocalSystem& ls = out[j];
    ls.nodes = sd.nodes;
    ls.K = local_jacobians[j];
    for (int f = 0; f < 3; ++f)
      for (Index l : sd.interior_nodes) ls.interior_dofs.push_back(sd.nodal_dof(f, l));
    for (int f = 0; f < 3; ++f)
      for (Index l : sd.gamma_nodes) ls.gamma_dofs.push_back(sd.nodal_dof(f, l));

    const SpMat PI = selection(ls.interior_dofs, ls.K.rows());
    const SpMat PG = selection(ls.gamma_dofs, ls.K.rows());
    ls.K_II = PI * ls.K * PI.transpose();
    ls.K_IG = PI * ls.K * PG.transpose();
    ls.K_GI = PG * ls.K * PI.transpose();
    ls.K_GG = PG * ls.K * PG.transpose();

    if (ls.n_interior() > 0) {
      ls.lu_II = std::make_unique<Eigen::SparseLU<SpMat>>();
      ls.lu_II->compute(ls.K_II);
      if (ls.lu_II->info() != Eigen::Success)
        throw NumericalError("interior factorization failed on subdomain " +
                             std::to_string(j));
    }
  });
  return out;
}

Vec SchurOperator::apply(const Vec& u_iface) const {
  Vec out = Vec::Zero(dim());
  const Index ngamma = part->iface.num_gamma();
  std::vector<Vec> s_locs(locals->size());
  parallel_for(int(locals->size()), threads, [&](int ji) {
    const size_t j = size_t(ji);
    const LocalSystem& ls = (*locals)[j];
    const SubdomainDofs& sd = part->sub[j];
    const Index ng = Index(sd.gamma_nodes.size());
    if (ng == 0) return;
    Vec u_loc(3 * ng);
    for (int f = 0; f < 3; ++f)
      for (Index idx = 0; idx < ng; ++idx) {
        const Index g = part->iface.node_to_gamma.at(sd.nodes[sd.gamma_nodes[idx]]);
        u_loc[Index(f) * ng + idx] = u_iface[Index(f) * ngamma + g];
      }
    s_locs[j] = ls.apply_schur(u_loc);
  });
  // Fixed-order accumulation keeps results identical for any thread count.
  for (size_t j = 0; j < locals->size(); ++j) {
    const SubdomainDofs& sd = part->sub[j];
    const Index ng = Index(sd.gamma_nodes.size());
    for (int f = 0; f < 3; ++f)
      for (Index idx = 0; idx < ng; ++idx) {
        const Index g = part->iface.node_to_gamma.at(sd.nodes[sd.gamma_nodes[idx]]);
        out[Index(f) * ngamma + g] += s_locs[j][Index(f) * ng + idx];
      }
  }
  return out;
}

Mat SchurOperator::dense() const {
  Mat d(dim(), dim());
  Vec e = Vec::Zero(dim());
  for (Index c = 0; c < dim(); ++c) {
    e[c] = 1.0;
    d.col(c) = apply(e);
    e[c] = 0.0;
  }
  return d;
}

namespace {

// Gather the subdomain-local piece of a global field-major vector.
Vec gather_local(const std::vector<Index>& nodes, Index num_global_nodes,
                 const Vec& global, const std::vector<Index>& local_dofs,
                 Index n_local_nodes) {
  Vec out(Index(local_dofs.size()));
  for (Index s = 0; s < Index(local_dofs.size()); ++s) {
    const Index ld = local_dofs[s];
    const int f = int(ld / n_local_nodes);
    const Index node = nodes[ld % n_local_nodes];
    out[s] = global[Index(f) * num_global_nodes + node];
  }
  return out;
}

}  // namespace

Vec condense_rhs(const std::vector<LocalSystem>& locals, const DofPartition& part,
                 Index num_global_nodes, const Vec& rhs_full) {
  const Index ngamma = part.iface.num_gamma();
  Vec f_gamma(3 * ngamma);
  for (int f = 0; f < 3; ++f)
    for (Index g = 0; g < ngamma; ++g)
      f_gamma[Index(f) * ngamma + g] =
          rhs_full[Index(f) * num_global_nodes + part.iface.gamma_nodes[g]];

  for (size_t j = 0; j < locals.size(); ++j) {
    const LocalSystem& ls = locals[j];
    const SubdomainDofs& sd = part.sub[j];
    if (ls.n_gamma() == 0 || ls.n_interior() == 0) continue;
    const Vec g_i =
        gather_local(ls.nodes, num_global_nodes, rhs_full, ls.interior_dofs, sd.n_nodes());
    const Vec corr = ls.K_GI * ls.lu_II->solve(g_i);
    const Index ng = Index(sd.gamma_nodes.size());
    for (int f = 0; f < 3; ++f)
      for (Index idx = 0; idx < ng; ++idx) {
        const Index g = part.iface.node_to_gamma.at(sd.nodes[sd.gamma_nodes[idx]]);
        f_gamma[Index(f) * ngamma + g] -= corr[Index(f) * ng + idx];
      }
  }
  return f_gamma;
}

namespace {

Vec local_gamma_trace(const LocalSystem&, const SubdomainDofs& sd,
                      const DofPartition& part, const Vec& u_iface) {
  const Index ng = Index(sd.gamma_nodes.size());
  const Index ngamma = part.iface.num_gamma();
  Vec u_loc(3 * ng);
  for (int f = 0; f < 3; ++f)
    for (Index idx = 0; idx < ng; ++idx) {
      const Index g = part.iface.node_to_gamma.at(sd.nodes[sd.gamma_nodes[idx]]);
      u_loc[Index(f) * ng + idx] = u_iface[Index(f) * ngamma + g];
    }
  return u_loc;
}

void scatter_interior(const LocalSystem& ls, const SubdomainDofs& sd,
                      Index num_global_nodes, const Vec& u_i, Vec* full) {
  for (Index s = 0; s < Index(ls.interior_dofs.size()); ++s) {
    const Index ld = ls.interior_dofs[s];
    const int f = int(ld / sd.n_nodes());
    const Index node = ls.nodes[ld % sd.n_nodes()];
    (*full)[Index(f) * num_global_nodes + node] = u_i[s];
  }
}

}  // namespace

Vec back_substitute(const std::vector<LocalSystem>& locals, const DofPartition& part,
                    Index num_global_nodes, const Vec& u_iface, const Vec& rhs_full) {
  Vec full = Vec::Zero(3 * num_global_nodes);
  const Index ngamma = part.iface.num_gamma();
  for (int f = 0; f < 3; ++f)
    for (Index g = 0; g < ngamma; ++g)
      full[Index(f) * num_global_nodes + part.iface.gamma_nodes[g]] =
          u_iface[Index(f) * ngamma + g];

  for (size_t j = 0; j < locals.size(); ++j) {
    const LocalSystem& ls = locals[j];
    const SubdomainDofs& sd = part.sub[j];
    if (ls.n_interior() == 0) continue;
    Vec rhs_i = gather_local(ls.nodes, num_global_nodes, rhs_full, ls.interior_dofs,
                             sd.n_nodes());
    if (ls.n_gamma() > 0)
      rhs_i.noalias() -= ls.K_IG * local_gamma_trace(ls, sd, part, u_iface);
    const Vec u_i = ls.lu_II->solve(rhs_i);
    scatter_interior(ls, sd, num_global_nodes, u_i, &full);
  }
  return full;
}

Vec harmonic_extend(const std::vector<LocalSystem>& locals, const DofPartition& part,
                    Index num_global_nodes, const Vec& u_iface) {
  return back_substitute(locals, part, num_global_nodes, u_iface,
                         Vec::Zero(3 * num_global_nodes));
}

Real b_gamma_inner(GammaForm which, const std::vector<LocalSystem>& locals,
                   const DofPartition& part, Index num_global_nodes, const SpMat& J,
                   const Vec& u_iface, const Vec& v_iface) {
  if (which == GammaForm::S) {
    SchurOperator op{&locals, &part};
    return v_iface.dot(op.apply(u_iface));
  }
  const Vec ua = harmonic_extend(locals, part, num_global_nodes, u_iface);
  const Vec va = harmonic_extend(locals, part, num_global_nodes, v_iface);
  const Real vju = va.dot(J * ua);
  const Real vjtu = (J * va).dot(ua);
  return which == GammaForm::B ? vju + vjtu : vju - vjtu;
}

Real b_gamma_inner_tilde(GammaForm which, const std::vector<LocalSystem>& locals,
                         const TildeVector& u, const TildeVector& v) {
  Real acc = 0;
  for (size_t j = 0; j < locals.size(); ++j) {
    const LocalSystem& ls = locals[j];
    if (ls.n_gamma() == 0) continue;
    auto extend = [&](const Vec& trace) {
      Vec full = Vec::Zero(ls.K.rows());
      for (Index s = 0; s < ls.n_gamma(); ++s) full[ls.gamma_dofs[s]] = trace[s];
      if (ls.n_interior() > 0) {
        const Vec ui = ls.lu_II->solve(Vec(-(ls.K_IG * trace)));
        for (Index s = 0; s < ls.n_interior(); ++s) full[ls.interior_dofs[s]] = ui[s];
      }
      return full;
    };
    const Vec ua = extend(u.sub[j]);
    const Vec va = extend(v.sub[j]);
    if (which == GammaForm::S) {
      acc += va.dot(ls.K * ua);
    } else {
      const Real vju = va.dot(ls.K * ua);
      const Real vjtu = (ls.K * va).dot(ua);
      acc += which == GammaForm::B ? vju + vjtu : vju - vjtu;
    }
  }
  return acc;
}

Vec solve_singular_direct(const SpMat& K, const Vec& b, const Vec& kernel) {
  const Index n = K.rows();
  std::vector<Triplet> t;
  t.reserve(K.nonZeros() + 2 * n);
  for (Index k = 0; k < K.outerSize(); ++k)
    for (SpMat::InnerIterator it(K, k); it; ++it)
      t.emplace_back(it.row(), it.col(), it.value());
  for (Index i = 0; i < n; ++i)
    if (kernel[i] != 0) {
      t.emplace_back(i, n, kernel[i]);
      t.emplace_back(n, i, kernel[i]);
    }
  SpMat bordered(n + 1, n + 1);
  bordered.setFromTriplets(t.begin(), t.end());

  Eigen::SparseLU<SpMat> lu;
  lu.compute(bordered);
  if (lu.info() != Eigen::Success)
    throw NumericalError("bordered direct factorization failed");
  Vec rhs(n + 1);
  rhs << b, 0.0;
  const Vec x = lu.solve(rhs);
  return x.head(n);
}

}  // namespace bidomain
