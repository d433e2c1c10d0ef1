#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "bidomain/geometry.hpp"
#include "bidomain/ionic.hpp"
#include "bidomain/state.hpp"
#include "bidomain/types.hpp"

namespace bidomain {

/// Stiffness matrices of the two media and the consistent mass matrix,
/// over one node set (the whole mesh or one subdomain).
struct FeMatrices {
  SpMat A_i;     // intracellular stiffness
  SpMat A_e;     // extracellular stiffness
  SpMat M;       // consistent mass
  Vec lumped_m;  // row sums of M
  Real volume = 0.0;

  Index num_nodes() const { return M.rows(); }
};

struct AssemblyOptions {
  bool lump_ionic = false;  // lump the mass in ionic interpolation terms
};

/// Global dof ordering is field-major: dof(f, node) = f * num_nodes + node.
inline Index dof_of(Field f, Index node, Index num_nodes) {
  return Index(f) * num_nodes + node;
}

/// Assemble A_i, A_e, M over the whole mesh with 2x2x2 Gauss quadrature.
/// Throws NumericalError if an element is inverted.
FeMatrices assemble_stiffness_mass(const MeshTopology& mesh,
                                   const ConductivityTensors& tensors);

/// Same, restricted to a subset of elements with a caller-supplied
/// global-to-local node renumbering (interface rows stay unassembled
/// across subsets by construction).
FeMatrices assemble_stiffness_mass_on(
    const MeshTopology& mesh, const ConductivityTensors& tensors,
    std::span<const Index> elems,
    const std::unordered_map<Index, Index>& global_to_local, Index num_local_nodes);

/// Applied currents of the two media; the discrete integrals must agree.
struct AppliedCurrent {
  Vec iapp_i;
  Vec iapp_e;

  static AppliedCurrent zero(Index n) { return {Vec::Zero(n), Vec::Zero(n)}; }
};

/// Backward-Euler residual of the coupled system at the new state:
///   F1 =  chiCm M (v - v_old) + tau A_i ui + tau M Iion(v,w) - tau M iapp_i
///   F2 = -chiCm M (v - v_old) + tau A_e ue - tau M Iion(v,w) + tau M iapp_e
///   F3 =        M (w - w_old)              - tau M R(v,w)
/// Ionic terms are interpolated nodally, then mass-multiplied.
Vec assemble_residual(const FeMatrices& fe, const State& state_new,
                      const State& state_old, Real tau, const AppliedCurrent& iapp,
                      const IonicParams& params, const AssemblyOptions& opts = {});

/// The 3x3-block Jacobian of the residual, as one sparse operator over
/// field-major dofs. Derivative couplings are M * diag(nodal derivative).
struct JacobianSystem {
  SpMat J;
  Index num_nodes = 0;
};

JacobianSystem assemble_jacobian(const FeMatrices& fe, const State& state, Real tau,
                                 const IonicParams& params,
                                 const AssemblyOptions& opts = {});

/// Jacobian blocks from precomputed nodal derivative values; used both for
/// the global system and for per-subdomain unassembled systems.
SpMat build_jacobian_blocks(const FeMatrices& fe, const Vec& dIdv, const Vec& dIdw,
                            const Vec& dRdv, const Vec& dRdw, Real tau, Real chi_cm,
                            const AssemblyOptions& opts = {});

/// B = J + J^T (symmetric part doubled) and Z = J - J^T, so J = (B + Z)/2.
std::pair<SpMat, SpMat> split_symmetric_skew(const SpMat& J);

/// The (1,1,0) constant null vector of the Jacobian (both potentials
/// constant, gating zero), unnormalized.
Vec constant_kernel_vector(Index num_nodes);

}  // namespace bidomain
