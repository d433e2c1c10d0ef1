#include "bidomain/assembly.hpp"

#include <Eigen/LU>

#include <cmath>

namespace bidomain {

namespace {

// 2x2x2 Gauss points (weights are all 1 on [-1,1]^3).
const std::array<Vec3, 8> kGaussPoints = [] {
  std::array<Vec3, 8> pts;
  const Real a = 1.0 / std::sqrt(3.0);
  for (int c = 0; c < 8; ++c)
    pts[c] = Vec3((c & 1) ? a : -a, ((c >> 1) & 1) ? a : -a, ((c >> 2) & 1) ? a : -a);
  return pts;
}();

void shape_values(const Vec3& xi, Eigen::Matrix<Real, 8, 1>* n) {
  for (int c = 0; c < 8; ++c) {
    const Real sx = (c & 1) ? 1.0 : -1.0;
    const Real sy = ((c >> 1) & 1) ? 1.0 : -1.0;
    const Real sz = ((c >> 2) & 1) ? 1.0 : -1.0;
    (*n)(c) = 0.125 * (1 + sx * xi[0]) * (1 + sy * xi[1]) * (1 + sz * xi[2]);
  }
}

void shape_gradients(const Vec3& xi, Eigen::Matrix<Real, 8, 3>* dn) {
  for (int c = 0; c < 8; ++c) {
    const Real sx = (c & 1) ? 1.0 : -1.0;
    const Real sy = ((c >> 1) & 1) ? 1.0 : -1.0;
    const Real sz = ((c >> 2) & 1) ? 1.0 : -1.0;
    (*dn)(c, 0) = 0.125 * sx * (1 + sy * xi[1]) * (1 + sz * xi[2]);
    (*dn)(c, 1) = 0.125 * (1 + sx * xi[0]) * sy * (1 + sz * xi[2]);
    (*dn)(c, 2) = 0.125 * (1 + sx * xi[0]) * (1 + sy * xi[1]) * sz;
  }
}

struct ElementMatrices {
  Eigen::Matrix<Real, 8, 8> Ki, Ke, M;
  Real volume;
};

ElementMatrices element_matrices(const Eigen::Matrix<Real, 8, 3>& coords,
                                 const Mat3& Di, const Mat3& De, Index elem_id) {
  ElementMatrices out;
  out.Ki.setZero();
  out.Ke.setZero();
  out.M.setZero();
  out.volume = 0;

  Eigen::Matrix<Real, 8, 1> n;
  Eigen::Matrix<Real, 8, 3> dn;
  for (const Vec3& xi : kGaussPoints) {
    shape_values(xi, &n);
    shape_gradients(xi, &dn);
    const Mat3 jac = coords.transpose() * dn;  // dx/dxi
    const Real det = jac.determinant();
    if (det <= 0)
      throw NumericalError("inverted element " + std::to_string(elem_id) +
                           " during assembly");
    const Eigen::Matrix<Real, 8, 3> grad = dn * jac.inverse();  // physical gradients
    out.Ki.noalias() += det * grad * Di * grad.transpose();
    out.Ke.noalias() += det * grad * De * grad.transpose();
    out.M.noalias() += det * n * n.transpose();
    out.volume += det;
  }
  return out;
}

FeMatrices assemble_impl(const MeshTopology& mesh, const ConductivityTensors& tensors,
                         std::span<const Index> elems,
                         const std::unordered_map<Index, Index>* renumber,
                         Index num_nodes) {
  std::vector<Triplet> ti, te, tm;
  ti.reserve(elems.size() * 64);
  te.reserve(elems.size() * 64);
  tm.reserve(elems.size() * 64);

  FeMatrices fe;
  Eigen::Matrix<Real, 8, 3> coords;
  for (Index e : elems) {
    const auto nodes = mesh.elem_nodes(e);
    for (int c = 0; c < 8; ++c) coords.row(c) = mesh.node_coords[nodes[c]].transpose();
    const ElementMatrices em = element_matrices(coords, tensors.Di[e], tensors.De[e], e);
    fe.volume += em.volume;

    std::array<Index, 8> rows;
    for (int c = 0; c < 8; ++c)
      rows[c] = renumber ? renumber->at(nodes[c]) : nodes[c];
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        ti.emplace_back(rows[a], rows[b], em.Ki(a, b));
        te.emplace_back(rows[a], rows[b], em.Ke(a, b));
        tm.emplace_back(rows[a], rows[b], em.M(a, b));
      }
  }

  fe.A_i.resize(num_nodes, num_nodes);
  fe.A_e.resize(num_nodes, num_nodes);
  fe.M.resize(num_nodes, num_nodes);
  fe.A_i.setFromTriplets(ti.begin(), ti.end());
  fe.A_e.setFromTriplets(te.begin(), te.end());
  fe.M.setFromTriplets(tm.begin(), tm.end());
  fe.lumped_m = fe.M * Vec::Ones(num_nodes);
  return fe;
}

}  // namespace

FeMatrices assemble_stiffness_mass(const MeshTopology& mesh,
                                   const ConductivityTensors& tensors) {
  std::vector<Index> all(mesh.num_elems());
  for (Index e = 0; e < mesh.num_elems(); ++e) all[e] = e;
  return assemble_impl(mesh, tensors, all, nullptr, mesh.num_nodes());
}

FeMatrices assemble_stiffness_mass_on(
    const MeshTopology& mesh, const ConductivityTensors& tensors,
    std::span<const Index> elems,
    const std::unordered_map<Index, Index>& global_to_local, Index num_local_nodes) {
  return assemble_impl(mesh, tensors, elems, &global_to_local, num_local_nodes);
}

Vec assemble_residual(const FeMatrices& fe, const State& state_new,
                      const State& state_old, Real tau, const AppliedCurrent& iapp,
                      const IonicParams& params, const AssemblyOptions& opts) {
  const Index n = fe.num_nodes();
  if (state_new.num_nodes() != n || state_old.num_nodes() != n ||
      iapp.iapp_i.size() != n || iapp.iapp_e.size() != n)
    throw InvalidConfig("residual assembly: vector sizes do not match node count");

  const Real int_i = fe.lumped_m.dot(iapp.iapp_i);
  const Real int_e = fe.lumped_m.dot(iapp.iapp_e);
  const Real scale = std::abs(int_i) + std::abs(int_e) + 1.0;
  if (std::abs(int_i - int_e) > 1e-10 * scale)
    throw InvalidConfig("applied currents violate the compatibility condition");

  const Vec v_new = state_new.v();
  const Vec v_old = state_old.v();
  Vec ion(n), rg(n);
  for (Index l = 0; l < n; ++l) {
    ion[l] = i_ion(v_new[l], state_new.w[l], params);
    rg[l] = r_gate(v_new[l], state_new.w[l], params);
  }

  const Real cm = params.chi_cm();
  const Vec m_dv = fe.M * (v_new - v_old);
  const Vec m_ion = opts.lump_ionic ? Vec(fe.lumped_m.cwiseProduct(ion)) : Vec(fe.M * ion);
  const Vec m_r = opts.lump_ionic ? Vec(fe.lumped_m.cwiseProduct(rg)) : Vec(fe.M * rg);

  Vec f(3 * n);
  f.segment(0, n) =
      cm * m_dv + tau * (fe.A_i * state_new.ui) + tau * m_ion - tau * (fe.M * iapp.iapp_i);
  f.segment(n, n) = -cm * m_dv + tau * (fe.A_e * state_new.ue) - tau * m_ion +
                    tau * (fe.M * iapp.iapp_e);
  f.segment(2 * n, n) = fe.M * (state_new.w - state_old.w) - tau * m_r;
  return f;
}

SpMat build_jacobian_blocks(const FeMatrices& fe, const Vec& dIdv, const Vec& dIdw,
                            const Vec& dRdv, const Vec& dRdw, Real tau, Real chi_cm,
                            const AssemblyOptions& opts) {
  const Index n = fe.num_nodes();
  const SpMat& mi = fe.M;  // mass used for ionic interpolation couplings
  SpMat m_ion = opts.lump_ionic
                    ? SpMat(Vec(fe.lumped_m).asDiagonal())
                    : mi;

  const SpMat m_dIdv = m_ion * dIdv.asDiagonal();
  const SpMat m_dIdw = m_ion * dIdw.asDiagonal();
  const SpMat m_dRdv = m_ion * dRdv.asDiagonal();
  const SpMat m_dRdw = m_ion * dRdw.asDiagonal();

  const SpMat b11 = chi_cm * fe.M + tau * fe.A_i + tau * m_dIdv;
  const SpMat b12 = -chi_cm * fe.M - tau * m_dIdv;
  const SpMat b13 = tau * m_dIdw;
  const SpMat b21 = -chi_cm * fe.M - tau * m_dIdv;
  const SpMat b22 = chi_cm * fe.M + tau * fe.A_e + tau * m_dIdv;
  const SpMat b23 = -tau * m_dIdw;
  const SpMat b31 = -tau * m_dRdv;
  const SpMat b32 = tau * m_dRdv;
  SpMat b33 = fe.M - tau * m_dRdw;

  std::vector<Triplet> trips;
  trips.reserve(9 * b11.nonZeros());
  auto add_block = [&](const SpMat& b, Index ro, Index co) {
    for (Index k = 0; k < b.outerSize(); ++k)
      for (SpMat::InnerIterator it(b, k); it; ++it)
        trips.emplace_back(it.row() + ro, it.col() + co, it.value());
  };
  add_block(b11, 0, 0);
  add_block(b12, 0, n);
  add_block(b13, 0, 2 * n);
  add_block(b21, n, 0);
  add_block(b22, n, n);
  add_block(b23, n, 2 * n);
  add_block(b31, 2 * n, 0);
  add_block(b32, 2 * n, n);
  add_block(b33, 2 * n, 2 * n);

  SpMat j(3 * n, 3 * n);
  j.setFromTriplets(trips.begin(), trips.end());
  return j;
}

JacobianSystem assemble_jacobian(const FeMatrices& fe, const State& state, Real tau,
                                 const IonicParams& params, const AssemblyOptions& opts) {
  const Index n = fe.num_nodes();
  const Vec v = state.v();
  Vec dIdv(n), dIdw(n), dRdv(n), dRdw(n);
  for (Index l = 0; l < n; ++l) {
    const auto d = partials(v[l], state.w[l], params);
    dIdv[l] = d.dIdv;
    dIdw[l] = d.dIdw;
    dRdv[l] = d.dRdv;
    dRdw[l] = d.dRdw;
  }
  JacobianSystem sys;
  sys.num_nodes = n;
  sys.J = build_jacobian_blocks(fe, dIdv, dIdw, dRdv, dRdw, tau, params.chi_cm(), opts);
  return sys;
}

std::pair<SpMat, SpMat> split_symmetric_skew(const SpMat& J) {
  SpMat jt = SpMat(J.transpose());
  return {SpMat(J + jt), SpMat(J - jt)};
}

Vec constant_kernel_vector(Index num_nodes) {
  Vec c = Vec::Zero(3 * num_nodes);
  c.segment(0, 2 * num_nodes).setOnes();
  return c;
}

}  // namespace bidomain
