#pragma once

#include <array>
#include <vector>

#include "bidomain/types.hpp"

namespace bidomain {

enum class MeshKind { Slab, Ellipsoid };

/// Axis coefficients and angular range of a truncated ellipsoidal shell.
/// The wall is swept by r in [0,1] between the inner (r=0, endocardial)
/// and outer (r=1, epicardial) surfaces.
struct EllipsoidParams {
  Real a1 = 1.5, a2 = 2.7;  // cm
  Real b1 = 1.5, b2 = 2.7;  // cm
  Real c1 = 4.4, c2 = 5.0;  // cm
  Real phi_min = -M_PI / 2, phi_max = M_PI / 2;
  Real theta_min = -3 * M_PI / 8, theta_max = M_PI / 8;

  void validate() const;

  Real a(Real r) const { return a1 + r * (a2 - a1); }
  Real b(Real r) const { return b1 + r * (b2 - b1); }
  Real c(Real r) const { return c1 + r * (c2 - c1); }

  /// Point on the shell at angular position (theta, phi) and depth r.
  Vec3 point(Real theta, Real phi, Real r) const;
};

/// Structured hexahedral grid over a slab or a truncated ellipsoidal shell.
/// Nodes are laid out x-fastest: node (i,j,k) sits at index
/// i + (nx+1)*(j + (ny+1)*k). For the ellipsoid the three lattice
/// directions are (theta, phi, r); the k=0 node layer is the endocardium,
/// k=nz the epicardium.
struct MeshTopology {
  MeshKind kind = MeshKind::Slab;
  int nx = 0, ny = 0, nz = 0;         // element counts per direction
  std::vector<Vec3> node_coords;      // (nx+1)(ny+1)(nz+1) points, cm
  Real h = 0.0;                       // max element diameter
  std::array<Real, 3> extents{};      // slab only: physical lengths, cm

  Index num_nodes() const { return Index(nx + 1) * (ny + 1) * (nz + 1); }
  Index num_elems() const { return Index(nx) * ny * nz; }
  Index num_dofs() const { return kNumFields * num_nodes(); }

  Index node_index(int i, int j, int k) const {
    return i + Index(nx + 1) * (j + Index(ny + 1) * k);
  }
  std::array<int, 3> node_ijk(Index n) const {
    const Index nxp = nx + 1, nyp = ny + 1;
    return {int(n % nxp), int((n / nxp) % nyp), int(n / (nxp * nyp))};
  }

  Index elem_index(int i, int j, int k) const {
    return i + Index(nx) * (j + Index(ny) * k);
  }
  std::array<int, 3> elem_ijk(Index e) const {
    return {int(e % nx), int((e / nx) % ny), int(e / (Index(nx) * ny))};
  }

  /// The 8 corner nodes of element e, lexicographic in (i,j,k):
  /// local corner c = ci + 2*cj + 4*ck.
  std::array<Index, 8> elem_nodes(Index e) const;

  bool is_endocardial(Index node) const {
    return kind == MeshKind::Ellipsoid && node_ijk(node)[2] == 0;
  }
};

/// Per-element orthonormal frame (a_l, a_t, a_n): fiber direction,
/// in-sheet transverse direction, sheet normal.
struct FiberField {
  std::vector<Mat3> frames;  // columns: a_l | a_t | a_n

  Vec3 fiber(Index e) const { return frames[e].col(0); }
  Vec3 transverse(Index e) const { return frames[e].col(1); }
  Vec3 normal(Index e) const { return frames[e].col(2); }
};

/// Conductivity coefficients along (l, t, n) for both media, in 1/(Ohm cm).
struct ConductivityCoeffs {
  Real sigma_l_i = 3.0e-3;
  Real sigma_t_i = 3.1525e-4;
  Real sigma_n_i = 3.1525e-5;
  Real sigma_l_e = 2.0e-3;
  Real sigma_t_e = 1.3514e-3;
  Real sigma_n_e = 6.757e-4;

  void validate() const;
  Real max_i() const { return std::max({sigma_l_i, sigma_t_i, sigma_n_i}); }
  Real min_i() const { return std::min({sigma_l_i, sigma_t_i, sigma_n_i}); }
  Real max_e() const { return std::max({sigma_l_e, sigma_t_e, sigma_n_e}); }
  Real min_e() const { return std::min({sigma_l_e, sigma_t_e, sigma_n_e}); }
};

/// Per-element anisotropic conductivity tensors of the two media.
struct ConductivityTensors {
  ConductivityCoeffs coeffs;
  std::vector<Mat3> Di;
  std::vector<Mat3> De;
};

/// Uniform Cartesian slab grid. Throws InvalidConfig on non-positive sizes.
MeshTopology build_slab(int nx, int ny, int nz, const std::array<Real, 3>& lengths);

/// Truncated-ellipsoid grid on a uniform (theta, phi, r) lattice.
MeshTopology build_ellipsoid(int nx, int ny, int nz, const EllipsoidParams& p);

/// Continuous fiber law for the slab: frame at a given wall-depth fraction.
/// The fiber angle in the x-y plane turns linearly by 120 degrees between
/// depth 0 and depth 1; a_n is the z axis.
Mat3 slab_fiber_frame(Real depth_fraction);

/// Continuous fiber law for the ellipsoid: the fiber lies in the tangent
/// plane of the r-surface, turning linearly by 120 degrees from the
/// endocardium (r=0) to the epicardium (r=1).
Mat3 ellipsoid_fiber_frame(const EllipsoidParams& p, Real theta, Real phi, Real r);

/// Per-element frames evaluated at element centers.
FiberField build_fibers(const MeshTopology& mesh, const EllipsoidParams& p = {});

/// D = sigma_l a_l a_l^T + sigma_t a_t a_t^T + sigma_n a_n a_n^T per element
/// for both coefficient sets. Throws InvalidConfig on non-positive sigma.
ConductivityTensors build_conductivity(const FiberField& fibers,
                                       const ConductivityCoeffs& coeffs);

/// Determinant of the trilinear map at the 8 corners of element e.
std::array<Real, 8> corner_jacobians(const MeshTopology& mesh, Index e);

/// Smallest corner Jacobian over the whole mesh (positivity check).
Real min_corner_jacobian(const MeshTopology& mesh);

}  // namespace bidomain
