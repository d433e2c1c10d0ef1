#pragma once

#include <unordered_map>
#include <vector>

#include "bidomain/geometry.hpp"
#include "bidomain/types.hpp"

namespace bidomain {

/// Non-overlapping box decomposition of a structured mesh. Subdomain
/// (sx,sy,sz) owns the element box [sx*mx, (sx+1)*mx) x ... ; every node is
/// shared by the subdomains whose closed box contains it.
struct Decomposition {
  int px = 1, py = 1, pz = 1;  // subdomain grid
  int mx = 0, my = 0, mz = 0;  // elements per subdomain per direction
  int nx = 0, ny = 0, nz = 0;  // global element counts
  Real H = 0.0;                // max subdomain diameter
  Real h = 0.0;                // max element diameter

  std::vector<std::vector<int>> node_sharers;  // per node, sorted subdomain ids
  std::vector<std::vector<Index>> sub_elems;   // per subdomain
  std::vector<std::vector<Index>> sub_nodes;   // per subdomain, sorted node ids

  int num_subdomains() const { return px * py * pz; }
  int sub_index(int sx, int sy, int sz) const { return sx + px * (sy + py * sz); }

  /// Local-to-element-size ratio per direction (uniform boxes).
  Real h_over_H_elems() const { return Real(std::min({mx, my, mz})); }
};

Decomposition decompose(const MeshTopology& mesh, int px, int py, int pz);

enum class ClassKind { Face, Edge, Vertex };

/// One equivalence class of interface nodes, keyed by the set of
/// subdomains sharing them.
struct InterfaceClass {
  ClassKind kind = ClassKind::Face;
  std::vector<int> sharers;   // sorted
  std::vector<Index> nodes;   // sorted global node ids
};

struct InterfaceClasses {
  std::vector<InterfaceClass> classes;

  Index count(ClassKind k) const {
    Index c = 0;
    for (const auto& cl : classes) c += (cl.kind == k);
    return c;
  }
};

InterfaceClasses classify_interface(const MeshTopology& mesh, const Decomposition& dec);

/// Global numbering of interface nodes; interface dofs are field-major:
/// dof(f, g) = f * num_gamma + g.
struct InterfaceSpace {
  std::vector<Index> gamma_nodes;  // sorted global node ids with >= 2 sharers
  std::unordered_map<Index, Index> node_to_gamma;

  Index num_gamma() const { return Index(gamma_nodes.size()); }
  Index num_dofs() const { return 3 * num_gamma(); }
  Index dof(int f, Index g) const { return Index(f) * num_gamma() + g; }
};

InterfaceSpace build_interface_space(const MeshTopology& mesh, const Decomposition& dec);

/// Which interface functionals are made continuous (primal): subdomain-box
/// corners only, plus edge averages, plus face averages.
enum class PrimalConfig { V, VE, VEF };

/// Per-class dual/primal layout under the explicit change of basis: an
/// averaged class exchanges its nodal values for one average (primal) and
/// m-1 zero-mean deviations (dual) per field.
struct ClassDofInfo {
  std::vector<Index> dual_nodes;  // class nodes minus primal corners, sorted
  bool averaged = false;
  int slots_per_field = 0;   // averaged ? m-1 : m
  Index dual_offset = -1;    // base of this class's global dual dofs
  Index avg_primal_base = -1;  // primal dof of the field-0 average

  Index dual_dof(int f, int slot) const {
    return dual_offset + Index(f) * slots_per_field + slot;
  }
};

/// Per-subdomain dof bookkeeping. Local nodal dofs are field-major over the
/// sorted local node list; the transformed basis orders columns as
/// [interior | dual | primal], realized by the sparse map T with
/// nodal = T * transformed.
struct SubdomainDofs {
  std::vector<Index> nodes;  // sorted global node ids
  std::unordered_map<Index, Index> node_g2l;
  std::vector<Index> interior_nodes;  // local node ids with a single sharer
  std::vector<Index> gamma_nodes;     // local node ids on the interface

  Index n_dual = 0, n_primal = 0;
  std::vector<Index> dual_global;    // per local dual slot
  std::vector<Index> primal_global;  // per local primal slot
  std::vector<int> dual_class;       // class id per local dual slot
  SpMat T;

  Index n_nodes() const { return Index(nodes.size()); }
  Index n_nodal_dofs() const { return 3 * n_nodes(); }
  Index n_interior() const { return 3 * Index(interior_nodes.size()); }
  Index nodal_dof(int f, Index local_node) const { return Index(f) * n_nodes() + local_node; }
};

struct DofPartition {
  PrimalConfig primal = PrimalConfig::VE;
  InterfaceSpace iface;
  std::vector<InterfaceClass> classes;
  std::vector<ClassDofInfo> class_dofs;  // parallel to classes
  std::vector<Index> corner_nodes;       // sorted global node ids
  std::unordered_map<Index, Index> corner_of_node;
  Index n_primal = 0, n_dual = 0;
  std::vector<SubdomainDofs> sub;

  /// Global change of basis on the interface: nodal = That * [dual; primal].
  SpMat That;

  Index corner_primal_dof(Index corner_idx, int f) const { return 3 * corner_idx + f; }
  Index num_transformed() const { return n_dual + n_primal; }
};

DofPartition build_dof_partition(const MeshTopology& mesh, const Decomposition& dec,
                                 const InterfaceClasses& classes, PrimalConfig primal);

/// A vector of the partially assembled interface space, stored as
/// per-subdomain nodal traces (field-major over each subdomain's
/// interface nodes).
struct TildeVector {
  std::vector<Vec> sub;
};

/// Restriction/injection operators realized as sparse 0-1 (or +-1 under the
/// change of basis) matrices, for tests and diagnostics.
struct RestrictionOps {
  const DofPartition* part;

  /// Local interface trace extraction: (3 * #gamma_j) x (3 * #Gamma).
  SpMat R_gamma(int j) const;
  /// Injection of a continuous interface vector into per-subdomain traces.
  TildeVector R_tilde_gamma(const Vec& iface_nodal) const;
  /// Dual/primal pieces of the interface change of basis.
  SpMat R_gamma_delta() const;  // (n_dual) x (3 * #Gamma): dual coords of a nodal vector
  SpMat R_gamma_pi() const;     // (n_primal) x (3 * #Gamma): primal functionals
  /// Local dual / primal extraction from the global transformed coords.
  SpMat R_delta(int j) const;  // (n_dual_j) x (n_dual)
  SpMat R_pi(int j) const;     // (n_primal_j) x (n_primal)
};

RestrictionOps build_restrictions(const DofPartition& part);

}  // namespace bidomain
