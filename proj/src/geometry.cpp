#include "bidomain/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace bidomain {

void EllipsoidParams::validate() const {
  if (!(a2 > a1 && a1 > 0) || !(b2 > b1 && b1 > 0) || !(c2 > c1 && c1 > 0))
    throw InvalidConfig("ellipsoid axes must satisfy 0 < inner < outer");
  if (!(phi_max > phi_min) || !(theta_max > theta_min))
    throw InvalidConfig("ellipsoid angle ranges must be nonempty");
}

Vec3 EllipsoidParams::point(Real theta, Real phi, Real r) const {
  return {a(r) * std::cos(theta) * std::cos(phi),
          b(r) * std::cos(theta) * std::sin(phi),
          c(r) * std::sin(theta)};
}

void ConductivityCoeffs::validate() const {
  for (Real s : {sigma_l_i, sigma_t_i, sigma_n_i, sigma_l_e, sigma_t_e, sigma_n_e})
    if (!(s > 0)) throw InvalidConfig("conductivity coefficients must be positive");
}

std::array<Index, 8> MeshTopology::elem_nodes(Index e) const {
  const auto [i, j, k] = elem_ijk(e);
  std::array<Index, 8> n;
  for (int c = 0; c < 8; ++c)
    n[c] = node_index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
  return n;
}

MeshTopology build_slab(int nx, int ny, int nz, const std::array<Real, 3>& lengths) {
  if (nx < 1 || ny < 1 || nz < 1)
    throw InvalidConfig("slab element counts must be >= 1");
  if (!(lengths[0] > 0 && lengths[1] > 0 && lengths[2] > 0))
    throw InvalidConfig("slab extents must be positive");

  MeshTopology m;
  m.kind = MeshKind::Slab;
  m.nx = nx;
  m.ny = ny;
  m.nz = nz;
  m.extents = lengths;
  m.node_coords.resize(m.num_nodes());
  const Real hx = lengths[0] / nx, hy = lengths[1] / ny, hz = lengths[2] / nz;
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        m.node_coords[m.node_index(i, j, k)] = {i * hx, j * hy, k * hz};
  m.h = std::sqrt(hx * hx + hy * hy + hz * hz);
  return m;
}

MeshTopology build_ellipsoid(int nx, int ny, int nz, const EllipsoidParams& p) {
  if (nx < 1 || ny < 1 || nz < 1)
    throw InvalidConfig("ellipsoid element counts must be >= 1");
  p.validate();

  MeshTopology m;
  m.kind = MeshKind::Ellipsoid;
  m.nx = nx;
  m.ny = ny;
  m.nz = nz;
  m.node_coords.resize(m.num_nodes());
  // Lattice directions are (phi, theta, r): this ordering keeps the
  // trilinear maps positively oriented for any admissible angle box.
  for (int k = 0; k <= nz; ++k) {
    const Real r = Real(k) / nz;
    for (int j = 0; j <= ny; ++j) {
      const Real theta = p.theta_min + (p.theta_max - p.theta_min) * Real(j) / ny;
      for (int i = 0; i <= nx; ++i) {
        const Real phi = p.phi_min + (p.phi_max - p.phi_min) * Real(i) / nx;
        m.node_coords[m.node_index(i, j, k)] = p.point(theta, phi, r);
      }
    }
  }
  Real hmax = 0;
  for (Index e = 0; e < m.num_elems(); ++e) {
    const auto nodes = m.elem_nodes(e);
    for (int a = 0; a < 8; ++a)
      for (int b = a + 1; b < 8; ++b)
        hmax = std::max(hmax, (m.node_coords[nodes[a]] - m.node_coords[nodes[b]]).norm());
  }
  m.h = hmax;
  return m;
}

Mat3 slab_fiber_frame(Real depth_fraction) {
  const Real alpha = (2.0 * M_PI / 3.0) * (depth_fraction - 0.5);
  Mat3 f;
  f.col(0) = Vec3(std::cos(alpha), std::sin(alpha), 0.0);
  f.col(1) = Vec3(-std::sin(alpha), std::cos(alpha), 0.0);
  f.col(2) = Vec3(0.0, 0.0, 1.0);
  return f;
}

Mat3 ellipsoid_fiber_frame(const EllipsoidParams& p, Real theta, Real phi, Real r) {
  // Tangent basis of the r-surface at (theta, phi).
  const Real a = p.a(r), b = p.b(r), c = p.c(r);
  const Vec3 t_theta{-a * std::sin(theta) * std::cos(phi),
                     -b * std::sin(theta) * std::sin(phi), c * std::cos(theta)};
  const Vec3 t_phi{-a * std::cos(theta) * std::sin(phi),
                   b * std::cos(theta) * std::cos(phi), 0.0};

  const Vec3 e1 = t_phi.normalized();  // circumferential
  Vec3 n = t_phi.cross(t_theta).normalized();
  // Orient the normal outward (with increasing r).
  const Vec3 dr{(p.a2 - p.a1) * std::cos(theta) * std::cos(phi),
                (p.b2 - p.b1) * std::cos(theta) * std::sin(phi),
                (p.c2 - p.c1) * std::sin(theta)};
  if (n.dot(dr) < 0) n = -n;
  const Vec3 e2 = n.cross(e1).normalized();

  const Real alpha = (2.0 * M_PI / 3.0) * (0.5 - r);
  Mat3 f;
  f.col(0) = std::cos(alpha) * e1 + std::sin(alpha) * e2;
  f.col(1) = -std::sin(alpha) * e1 + std::cos(alpha) * e2;
  f.col(2) = n;
  return f;
}

FiberField build_fibers(const MeshTopology& mesh, const EllipsoidParams& p) {
  FiberField f;
  f.frames.resize(mesh.num_elems());
  for (Index e = 0; e < mesh.num_elems(); ++e) {
    const auto [i, j, k] = mesh.elem_ijk(e);
    if (mesh.kind == MeshKind::Slab) {
      const Real depth = (k + 0.5) / mesh.nz;
      f.frames[e] = slab_fiber_frame(depth);
    } else {
      const Real phi = p.phi_min + (p.phi_max - p.phi_min) * (i + 0.5) / mesh.nx;
      const Real theta =
          p.theta_min + (p.theta_max - p.theta_min) * (j + 0.5) / mesh.ny;
      const Real r = (k + 0.5) / mesh.nz;
      f.frames[e] = ellipsoid_fiber_frame(p, theta, phi, r);
    }
  }
  return f;
}

ConductivityTensors build_conductivity(const FiberField& fibers,
                                       const ConductivityCoeffs& coeffs) {
  coeffs.validate();
  ConductivityTensors t;
  t.coeffs = coeffs;
  const Index ne = Index(fibers.frames.size());
  t.Di.resize(ne);
  t.De.resize(ne);
  for (Index e = 0; e < ne; ++e) {
    const Vec3 al = fibers.fiber(e), at = fibers.transverse(e), an = fibers.normal(e);
    t.Di[e] = coeffs.sigma_l_i * al * al.transpose() +
              coeffs.sigma_t_i * at * at.transpose() +
              coeffs.sigma_n_i * an * an.transpose();
    t.De[e] = coeffs.sigma_l_e * al * al.transpose() +
              coeffs.sigma_t_e * at * at.transpose() +
              coeffs.sigma_n_e * an * an.transpose();
  }
  return t;
}

namespace {

// Gradients of the 8 trilinear shape functions at reference point xi.
// Corner ordering matches MeshTopology::elem_nodes.
void shape_gradients(const Vec3& xi, Mat* dn) {
  for (int c = 0; c < 8; ++c) {
    const Real sx = (c & 1) ? 1.0 : -1.0;
    const Real sy = ((c >> 1) & 1) ? 1.0 : -1.0;
    const Real sz = ((c >> 2) & 1) ? 1.0 : -1.0;
    (*dn)(c, 0) = 0.125 * sx * (1 + sy * xi[1]) * (1 + sz * xi[2]);
    (*dn)(c, 1) = 0.125 * (1 + sx * xi[0]) * sy * (1 + sz * xi[2]);
    (*dn)(c, 2) = 0.125 * (1 + sx * xi[0]) * (1 + sy * xi[1]) * sz;
  }
}

}  // namespace

std::array<Real, 8> corner_jacobians(const MeshTopology& mesh, Index e) {
  const auto nodes = mesh.elem_nodes(e);
  Mat coords(8, 3);
  for (int c = 0; c < 8; ++c) coords.row(c) = mesh.node_coords[nodes[c]].transpose();

  std::array<Real, 8> det;
  Mat dn(8, 3);
  for (int c = 0; c < 8; ++c) {
    const Vec3 xi{(c & 1) ? 1.0 : -1.0, ((c >> 1) & 1) ? 1.0 : -1.0,
                  ((c >> 2) & 1) ? 1.0 : -1.0};
    shape_gradients(xi, &dn);
    const Mat3 jac = coords.transpose() * dn;  // dx/dxi
    det[c] = jac.determinant();
  }
  return det;
}

Real min_corner_jacobian(const MeshTopology& mesh) {
  Real mn = std::numeric_limits<Real>::max();
  for (Index e = 0; e < mesh.num_elems(); ++e)
    for (Real d : corner_jacobians(mesh, e)) mn = std::min(mn, d);
  return mn;
}

}  // namespace bidomain
