#include "bidomain/partition.hpp"

#include <algorithm>
#include <map>

namespace bidomain {

namespace {

// Subdomain index range containing lattice coordinate idx in one direction.
std::pair<int, int> dir_members(int idx, int m, int p) {
  if (idx % m == 0) {
    const int s = idx / m;
    return {std::max(0, s - 1), std::min(p - 1, s)};
  }
  return {idx / m, idx / m};
}

}  // namespace

Decomposition decompose(const MeshTopology& mesh, int px, int py, int pz) {
  if (px < 1 || py < 1 || pz < 1)
    throw InvalidConfig("subdomain counts must be >= 1");
  if (mesh.nx % px || mesh.ny % py || mesh.nz % pz)
    throw InvalidConfig("subdomain grid must tile the element grid exactly");

  Decomposition d;
  d.px = px;
  d.py = py;
  d.pz = pz;
  d.nx = mesh.nx;
  d.ny = mesh.ny;
  d.nz = mesh.nz;
  d.mx = mesh.nx / px;
  d.my = mesh.ny / py;
  d.mz = mesh.nz / pz;
  d.h = mesh.h;

  const int nsub = d.num_subdomains();
  d.sub_elems.resize(nsub);
  d.sub_nodes.resize(nsub);
  for (Index e = 0; e < mesh.num_elems(); ++e) {
    const auto [i, j, k] = mesh.elem_ijk(e);
    d.sub_elems[d.sub_index(i / d.mx, j / d.my, k / d.mz)].push_back(e);
  }

  d.node_sharers.resize(mesh.num_nodes());
  for (Index n = 0; n < mesh.num_nodes(); ++n) {
    const auto [i, j, k] = mesh.node_ijk(n);
    const auto [x0, x1] = dir_members(i, d.mx, px);
    const auto [y0, y1] = dir_members(j, d.my, py);
    const auto [z0, z1] = dir_members(k, d.mz, pz);
    for (int sz = z0; sz <= z1; ++sz)
      for (int sy = y0; sy <= y1; ++sy)
        for (int sx = x0; sx <= x1; ++sx) {
          const int s = d.sub_index(sx, sy, sz);
          d.node_sharers[n].push_back(s);
          d.sub_nodes[s].push_back(n);
        }
    std::sort(d.node_sharers[n].begin(), d.node_sharers[n].end());
  }
  for (auto& nodes : d.sub_nodes) std::sort(nodes.begin(), nodes.end());

  Real hmax = 0;
  for (int sz = 0; sz < pz; ++sz)
    for (int sy = 0; sy < py; ++sy)
      for (int sx = 0; sx < px; ++sx) {
        std::array<Vec3, 8> corners;
        for (int c = 0; c < 8; ++c)
          corners[c] = mesh.node_coords[mesh.node_index(
              (sx + (c & 1)) * d.mx, (sy + ((c >> 1) & 1)) * d.my,
              (sz + ((c >> 2) & 1)) * d.mz)];
        for (int a = 0; a < 8; ++a)
          for (int b = a + 1; b < 8; ++b)
            hmax = std::max(hmax, (corners[a] - corners[b]).norm());
      }
  d.H = hmax;
  return d;
}

InterfaceClasses classify_interface(const MeshTopology& mesh, const Decomposition& dec) {
  std::map<std::vector<int>, std::vector<Index>> by_sharers;
  for (Index n = 0; n < mesh.num_nodes(); ++n)
    if (dec.node_sharers[n].size() >= 2) by_sharers[dec.node_sharers[n]].push_back(n);

  InterfaceClasses out;
  out.classes.reserve(by_sharers.size());
  for (auto& [sharers, nodes] : by_sharers) {
    InterfaceClass c;
    c.sharers = sharers;
    c.nodes = std::move(nodes);
    c.kind = sharers.size() == 2   ? ClassKind::Face
             : sharers.size() >= 8 ? ClassKind::Vertex
                                   : ClassKind::Edge;
    out.classes.push_back(std::move(c));
  }
  return out;
}

InterfaceSpace build_interface_space(const MeshTopology& mesh, const Decomposition& dec) {
  InterfaceSpace s;
  for (Index n = 0; n < mesh.num_nodes(); ++n)
    if (dec.node_sharers[n].size() >= 2) {
      s.node_to_gamma[n] = Index(s.gamma_nodes.size());
      s.gamma_nodes.push_back(n);
    }
  return s;
}

DofPartition build_dof_partition(const MeshTopology& mesh, const Decomposition& dec,
                                 const InterfaceClasses& classes, PrimalConfig primal) {
  DofPartition p;
  p.primal = primal;
  p.iface = build_interface_space(mesh, dec);
  p.classes = classes.classes;

  // Subdomain-box lattice corners on the interface become vertex primal dofs.
  for (Index n : p.iface.gamma_nodes) {
    const auto [i, j, k] = mesh.node_ijk(n);
    if (i % dec.mx == 0 && j % dec.my == 0 && k % dec.mz == 0) {
      p.corner_of_node[n] = Index(p.corner_nodes.size());
      p.corner_nodes.push_back(n);
    }
  }

  const bool avg_edges = primal != PrimalConfig::V;
  const bool avg_faces = primal == PrimalConfig::VEF;

  p.class_dofs.resize(p.classes.size());
  Index dual_offset = 0;
  Index n_avg_classes = 0;
  for (size_t c = 0; c < p.classes.size(); ++c) {
    const InterfaceClass& cl = p.classes[c];
    ClassDofInfo& info = p.class_dofs[c];
    for (Index n : cl.nodes)
      if (!p.corner_of_node.count(n)) info.dual_nodes.push_back(n);
    const int m = int(info.dual_nodes.size());
    info.averaged = m > 0 && ((cl.kind == ClassKind::Edge && avg_edges) ||
                              (cl.kind == ClassKind::Face && avg_faces));
    info.slots_per_field = info.averaged ? m - 1 : m;
    info.dual_offset = dual_offset;
    dual_offset += 3 * info.slots_per_field;
    if (info.averaged) {
      info.avg_primal_base = 3 * Index(p.corner_nodes.size()) + 3 * n_avg_classes;
      ++n_avg_classes;
    }
  }
  p.n_dual = dual_offset;
  p.n_primal = 3 * Index(p.corner_nodes.size()) + 3 * n_avg_classes;

  // Per-subdomain transformed layouts.
  const int nsub = dec.num_subdomains();
  p.sub.resize(nsub);
  for (int j = 0; j < nsub; ++j) {
    SubdomainDofs& sd = p.sub[j];
    sd.nodes = dec.sub_nodes[j];
    for (Index l = 0; l < sd.n_nodes(); ++l) sd.node_g2l[sd.nodes[l]] = l;
    for (Index l = 0; l < sd.n_nodes(); ++l) {
      if (dec.node_sharers[sd.nodes[l]].size() >= 2)
        sd.gamma_nodes.push_back(l);
      else
        sd.interior_nodes.push_back(l);
    }

    std::vector<Triplet> t;
    // Interior columns: identity on interior nodal dofs, field-major.
    const Index n_il = Index(sd.interior_nodes.size());
    for (int f = 0; f < 3; ++f)
      for (Index idx = 0; idx < n_il; ++idx)
        t.emplace_back(sd.nodal_dof(f, sd.interior_nodes[idx]), Index(f) * n_il + idx,
                       1.0);
    Index col = 3 * n_il;

    // Dual columns, grouped per class (fields contiguous within a class).
    for (size_t c = 0; c < p.classes.size(); ++c) {
      const ClassDofInfo& info = p.class_dofs[c];
      const InterfaceClass& cl = p.classes[c];
      if (info.slots_per_field == 0) continue;
      if (!std::binary_search(cl.sharers.begin(), cl.sharers.end(), j)) continue;
      for (int f = 0; f < 3; ++f)
        for (int s = 0; s < info.slots_per_field; ++s) {
          if (info.averaged) {
            t.emplace_back(sd.nodal_dof(f, sd.node_g2l.at(info.dual_nodes[s + 1])), col,
                           1.0);
            t.emplace_back(sd.nodal_dof(f, sd.node_g2l.at(info.dual_nodes[0])), col,
                           -1.0);
          } else {
            t.emplace_back(sd.nodal_dof(f, sd.node_g2l.at(info.dual_nodes[s])), col, 1.0);
          }
          sd.dual_global.push_back(info.dual_dof(f, s));
          sd.dual_class.push_back(int(c));
          ++col;
        }
    }
    sd.n_dual = col - 3 * n_il;

    // Primal columns: corners on this subdomain, then class averages.
    for (Index k = 0; k < Index(p.corner_nodes.size()); ++k) {
      const Index n = p.corner_nodes[k];
      auto it = sd.node_g2l.find(n);
      if (it == sd.node_g2l.end()) continue;
      for (int f = 0; f < 3; ++f) {
        t.emplace_back(sd.nodal_dof(f, it->second), col, 1.0);
        sd.primal_global.push_back(p.corner_primal_dof(k, f));
        ++col;
      }
    }
    for (size_t c = 0; c < p.classes.size(); ++c) {
      const ClassDofInfo& info = p.class_dofs[c];
      const InterfaceClass& cl = p.classes[c];
      if (!info.averaged) continue;
      if (!std::binary_search(cl.sharers.begin(), cl.sharers.end(), j)) continue;
      for (int f = 0; f < 3; ++f) {
        for (Index n : info.dual_nodes)
          t.emplace_back(sd.nodal_dof(f, sd.node_g2l.at(n)), col, 1.0);
        sd.primal_global.push_back(info.avg_primal_base + f);
        ++col;
      }
    }
    sd.n_primal = col - 3 * n_il - sd.n_dual;

    if (col != sd.n_nodal_dofs())
      throw NumericalError("dof partition does not cover subdomain dofs");
    sd.T.resize(sd.n_nodal_dofs(), sd.n_nodal_dofs());
    sd.T.setFromTriplets(t.begin(), t.end());
  }

  // Global interface change of basis.
  {
    std::vector<Triplet> t;
    auto gdof = [&](int f, Index node) { return p.iface.dof(f, p.iface.node_to_gamma.at(node)); };
    for (size_t c = 0; c < p.classes.size(); ++c) {
      const ClassDofInfo& info = p.class_dofs[c];
      for (int f = 0; f < 3; ++f)
        for (int s = 0; s < info.slots_per_field; ++s) {
          const Index col = info.dual_dof(f, s);
          if (info.averaged) {
            t.emplace_back(gdof(f, info.dual_nodes[s + 1]), col, 1.0);
            t.emplace_back(gdof(f, info.dual_nodes[0]), col, -1.0);
          } else {
            t.emplace_back(gdof(f, info.dual_nodes[s]), col, 1.0);
          }
        }
      if (info.averaged)
        for (int f = 0; f < 3; ++f)
          for (Index n : info.dual_nodes)
            t.emplace_back(gdof(f, n), p.n_dual + info.avg_primal_base + f, 1.0);
    }
    for (Index k = 0; k < Index(p.corner_nodes.size()); ++k)
      for (int f = 0; f < 3; ++f)
        t.emplace_back(gdof(f, p.corner_nodes[k]), p.n_dual + p.corner_primal_dof(k, f),
                       1.0);
    p.That.resize(p.iface.num_dofs(), p.num_transformed());
    p.That.setFromTriplets(t.begin(), t.end());
  }

  return p;
}

SpMat RestrictionOps::R_gamma(int j) const {
  const SubdomainDofs& sd = part->sub[j];
  const Index ng = Index(sd.gamma_nodes.size());
  std::vector<Triplet> t;
  for (int f = 0; f < 3; ++f)
    for (Index idx = 0; idx < ng; ++idx) {
      const Index gnode = sd.nodes[sd.gamma_nodes[idx]];
      t.emplace_back(Index(f) * ng + idx,
                     part->iface.dof(f, part->iface.node_to_gamma.at(gnode)), 1.0);
    }
  SpMat r(3 * ng, part->iface.num_dofs());
  r.setFromTriplets(t.begin(), t.end());
  return r;
}

TildeVector RestrictionOps::R_tilde_gamma(const Vec& iface_nodal) const {
  TildeVector out;
  out.sub.reserve(part->sub.size());
  for (size_t j = 0; j < part->sub.size(); ++j)
    out.sub.push_back(R_gamma(int(j)) * iface_nodal);
  return out;
}

SpMat RestrictionOps::R_gamma_delta() const {
  std::vector<Triplet> t;
  auto gdof = [&](int f, Index node) {
    return part->iface.dof(f, part->iface.node_to_gamma.at(node));
  };
  for (size_t c = 0; c < part->classes.size(); ++c) {
    const ClassDofInfo& info = part->class_dofs[c];
    const Real m = Real(info.dual_nodes.size());
    for (int f = 0; f < 3; ++f)
      for (int s = 0; s < info.slots_per_field; ++s) {
        const Index row = info.dual_dof(f, s);
        if (info.averaged) {
          t.emplace_back(row, gdof(f, info.dual_nodes[s + 1]), 1.0);
          for (Index n : info.dual_nodes) t.emplace_back(row, gdof(f, n), -1.0 / m);
        } else {
          t.emplace_back(row, gdof(f, info.dual_nodes[s]), 1.0);
        }
      }
  }
  SpMat r(part->n_dual, part->iface.num_dofs());
  r.setFromTriplets(t.begin(), t.end());
  return r;
}

SpMat RestrictionOps::R_gamma_pi() const {
  std::vector<Triplet> t;
  auto gdof = [&](int f, Index node) {
    return part->iface.dof(f, part->iface.node_to_gamma.at(node));
  };
  for (Index k = 0; k < Index(part->corner_nodes.size()); ++k)
    for (int f = 0; f < 3; ++f)
      t.emplace_back(part->corner_primal_dof(k, f), gdof(f, part->corner_nodes[k]), 1.0);
  for (size_t c = 0; c < part->classes.size(); ++c) {
    const ClassDofInfo& info = part->class_dofs[c];
    if (!info.averaged) continue;
    const Real m = Real(info.dual_nodes.size());
    for (int f = 0; f < 3; ++f)
      for (Index n : info.dual_nodes)
        t.emplace_back(info.avg_primal_base + f, gdof(f, n), 1.0 / m);
  }
  SpMat r(part->n_primal, part->iface.num_dofs());
  r.setFromTriplets(t.begin(), t.end());
  return r;
}

SpMat RestrictionOps::R_delta(int j) const {
  const SubdomainDofs& sd = part->sub[j];
  std::vector<Triplet> t;
  for (Index s = 0; s < sd.n_dual; ++s) t.emplace_back(s, sd.dual_global[s], 1.0);
  SpMat r(sd.n_dual, part->n_dual);
  r.setFromTriplets(t.begin(), t.end());
  return r;
}

SpMat RestrictionOps::R_pi(int j) const {
  const SubdomainDofs& sd = part->sub[j];
  std::vector<Triplet> t;
  for (Index s = 0; s < sd.n_primal; ++s) t.emplace_back(s, sd.primal_global[s], 1.0);
  SpMat r(sd.n_primal, part->n_primal);
  r.setFromTriplets(t.begin(), t.end());
  return r;
}

RestrictionOps build_restrictions(const DofPartition& part) { return RestrictionOps{&part}; }

}  // namespace bidomain
