#pragma once

#include <Eigen/SparseLU>

#include <memory>

#include "bidomain/assembly.hpp"
#include "bidomain/partition.hpp"

namespace bidomain {

/// Per-subdomain stiffness/mass matrices with local node numbering
/// (interface rows unassembled across subdomains).
struct SubdomainFe {
  std::vector<FeMatrices> fe;  // one per subdomain, over dec.sub_nodes order
};

SubdomainFe assemble_subdomain_fe(const MeshTopology& mesh,
                                  const ConductivityTensors& tensors,
                                  const Decomposition& dec);

/// Local Jacobians at the given state, one unassembled block per subdomain.
std::vector<SpMat> build_local_jacobians(const SubdomainFe& sfe,
                                         const Decomposition& dec, const State& state,
                                         Real tau, const IonicParams& params,
                                         const AssemblyOptions& opts = {});

/// One subdomain's Jacobian reordered into interior/interface blocks, with a
/// factorization of the interior block. The lower-left block is stored
/// separately: the system is non-symmetric and K_GI != K_IG^T.
struct LocalSystem {
  std::vector<Index> nodes;          // global node ids, local order
  std::vector<Index> interior_dofs;  // local nodal dofs (field-major)
  std::vector<Index> gamma_dofs;     // local nodal dofs (field-major)
  SpMat K;
  SpMat K_II, K_IG, K_GI, K_GG;
  std::unique_ptr<Eigen::SparseLU<SpMat>> lu_II;

  Index n_gamma() const { return Index(gamma_dofs.size()); }
  Index n_interior() const { return Index(interior_dofs.size()); }

  /// S^(j) x = K_GG x - K_GI K_II^{-1} K_IG x (matrix-free).
  Vec apply_schur(const Vec& x_gamma) const;
};

std::vector<LocalSystem> build_local_systems(const std::vector<SpMat>& local_jacobians,
                                             const DofPartition& part,
                                             int threads = 1);

/// Matrix-free action of the assembled interface operator
/// S_hat u = sum_j R_j^T S^(j) R_j u.
struct SchurOperator {
  const std::vector<LocalSystem>* locals = nullptr;
  const DofPartition* part = nullptr;
  int threads = 1;

  Index dim() const { return part->iface.num_dofs(); }
  Vec apply(const Vec& u_iface) const;
  Mat dense() const;  // small cases only
};

/// Interface right-hand side of the condensed system:
/// f_Gamma = g_Gamma - sum_j R_j^T K_GI K_II^{-1} g_I^(j),
/// with g taken from the assembled full residual (field-major, 3N).
Vec condense_rhs(const std::vector<LocalSystem>& locals, const DofPartition& part,
                 Index num_global_nodes, const Vec& rhs_full);

/// Recover interior unknowns: u_I = K_II^{-1} (g_I - K_IG u_Gamma).
Vec back_substitute(const std::vector<LocalSystem>& locals, const DofPartition& part,
                    Index num_global_nodes, const Vec& u_iface, const Vec& rhs_full);

/// Discrete harmonic extension of an interface vector: interior values are
/// -K_II^{-1} K_IG u_Gamma per subdomain; interface values are kept.
Vec harmonic_extend(const std::vector<LocalSystem>& locals, const DofPartition& part,
                    Index num_global_nodes, const Vec& u_iface);

enum class GammaForm { B, Z, S };

/// Interface bilinear forms: extend both arguments harmonically, then apply
/// the symmetric (B = J + J^T), skew (Z = J - J^T) or plain Schur form.
Real b_gamma_inner(GammaForm which, const std::vector<LocalSystem>& locals,
                   const DofPartition& part, Index num_global_nodes, const SpMat& J,
                   const Vec& u_iface, const Vec& v_iface);

/// Same forms on partially assembled vectors, summed per subdomain with the
/// local matrices and local harmonic extensions.
Real b_gamma_inner_tilde(GammaForm which, const std::vector<LocalSystem>& locals,
                         const TildeVector& u, const TildeVector& v);

/// Direct solution of the rank-one-deficient full system via bordering with
/// the known null vector; returns the solution orthogonal to the kernel.
Vec solve_singular_direct(const SpMat& K, const Vec& b, const Vec& kernel);

}  // namespace bidomain
