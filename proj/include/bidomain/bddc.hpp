#pragma once

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <memory>

#include "bidomain/partition.hpp"
#include "bidomain/schur.hpp"

namespace bidomain {

enum class ScalingKind { Rho, Deluxe };

/// Interface averaging weights for one equivalence class. For rho scaling a
/// scalar weight per sharer and field; for deluxe a dense operator per
/// sharer acting on the class's dual coordinates, built from Schur-
/// complement minors so that the sharer operators sum to the identity.
struct ClassScaling {
  std::vector<int> sharers;
  std::vector<std::array<Real, 3>> rho;  // [sharer][field]
  std::vector<Mat> deluxe;               // [sharer], (3*slots) x (3*slots)
};

struct ScalingOp {
  ScalingKind kind = ScalingKind::Rho;
  std::vector<ClassScaling> classes;  // parallel to DofPartition::class_dofs

  /// Apply the sharer's class operator (or its transpose) to class dual
  /// coordinates, laid out field-major.
  Vec apply(const DofPartition& part, int class_id, int sharer_pos, const Vec& x,
            bool transpose) const;
};

/// Coefficient-based weights: potentials by the ratio of each sharer's
/// largest conductivity, gating by the reciprocal sharing count.
ScalingOp build_rho_scaling(const Decomposition& dec, const ConductivityTensors& tensors,
                            const DofPartition& part);

/// Deluxe weights from dense class minors of the per-subdomain Schur
/// complements. By default the minors are taken from the Schur complement
/// of the symmetric part of the local matrix, which keeps every class sum
/// positive definite; sym_minors=false uses the raw non-symmetric blocks.
ScalingOp build_deluxe_scaling(const std::vector<LocalSystem>& locals,
                               const DofPartition& part, bool sym_minors = true,
                               int threads = 1);

/// Weighted average of a partially assembled vector: primal functionals are
/// kept, dual class coordinates are combined across sharers. The result is
/// a continuous interface vector in nodal coordinates.
Vec ed_average(const ScalingOp& sc, const DofPartition& part, const TildeVector& u);

/// The averaging projection E_D and its complementary jump projection
/// P_D = I - E_D, both returned as partially assembled vectors.
std::pair<TildeVector, TildeVector> apply_ED_PD(const ScalingOp& sc,
                                                const DofPartition& part,
                                                const TildeVector& u);

/// One subdomain's matrix in the transformed basis [interior | dual | primal]
/// with its (interior+dual) factorization and primal coupling blocks.
struct BddcLocal {
  SpMat Khat;
  Index n_rr = 0, n_pi = 0, n_interior = 0, n_dual = 0;
  std::unique_ptr<Eigen::SparseLU<SpMat>> lu_rr;
  SpMat K_rP, K_Pr;
  Mat K_PP;
  Mat phi_r;      // -K_rr^{-1} K_rP: primal basis, interior+dual rows
  Mat spp_local;  // K_PP - K_Pr K_rr^{-1} K_rP
};

/// The coarse problem: primal basis residuals and the assembled primal
/// Schur complement, factorized with the constant mode deflated.
struct CoarseProblem {
  Mat s_pp;
  Eigen::PartialPivLU<Mat> lu;
  Vec kernel;  // normalized primal coordinates of the constant mode
  Real shift = 0.0;

  Index dim() const { return s_pp.rows(); }
  Vec solve(const Vec& rhs) const;
};

struct BddcPreconditioner {
  const DofPartition* part = nullptr;
  ScalingOp scaling;
  std::vector<BddcLocal> locals;
  CoarseProblem coarse;
  int threads = 1;

  /// z = Rdt^T Stilde^{-1} Rdt r, evaluated by scaled splitting, local
  /// (interior+dual) solves, a coarse solve, and weighted reassembly.
  Vec apply(const Vec& r_iface_nodal) const;
};

/// Build the transformed local systems and the coarse problem for the given
/// local (nodal-basis) subdomain matrices.
BddcPreconditioner build_bddc(const std::vector<SpMat>& local_jacobians,
                              const DofPartition& part, ScalingOp scaling,
                              int threads = 1);

}  // namespace bidomain
