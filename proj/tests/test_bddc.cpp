#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseLU>

#include <random>

#include "bidomain/solvers.hpp"
#include "test_util.hpp"

using namespace bidomain;
using namespace bidomain::testutil;

namespace {

struct Fixture {
  Problem pb;
  State state;
  std::vector<SpMat> klocal;
  std::vector<LocalSystem> locals;
  Real tau = 0.05;
};

Fixture make_fixture(int nx, int ny, int nz, int px, int py, int pz,
                     PrimalConfig primal, Real vmax = 8.0, unsigned seed = 19) {
  Fixture f;
  f.pb = build_problem(
      build_slab(nx, ny, nz, {Real(nx) * 0.1, Real(ny) * 0.1, Real(nz) * 0.1}), {},
      {}, px, py, pz, primal);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<Real> dv(0.0, vmax), due(-2.0, 2.0), dw(0.0, 0.3);
  f.state = State::rest(f.pb.n());
  for (Index i = 0; i < f.pb.n(); ++i) {
    f.state.ue[i] = due(rng);
    f.state.ui[i] = f.state.ue[i] + dv(rng);
    f.state.w[i] = dw(rng);
  }
  f.klocal = build_local_jacobians(f.pb.sfe, f.pb.dec, f.state, f.tau, f.pb.ionic);
  f.locals = build_local_systems(f.klocal, f.pb.part);
  return f;
}

std::vector<SpMat> symmetric_halves(const std::vector<SpMat>& klocal) {
  std::vector<SpMat> out;
  for (const SpMat& k : klocal) out.push_back(SpMat(0.5 * (k + SpMat(k.transpose()))));
  return out;
}

// A random partially assembled vector: independent dual coordinates per
// subdomain, shared primal coordinates.
TildeVector random_tilde(const DofPartition& part, std::mt19937& rng) {
  std::normal_distribution<Real> dist;
  const Vec primal = random_vec(part.n_primal, rng);
  TildeVector tv;
  tv.sub.resize(part.sub.size());
  for (size_t j = 0; j < part.sub.size(); ++j) {
    const SubdomainDofs& sd = part.sub[j];
    Vec x = Vec::Zero(sd.n_nodal_dofs());
    for (Index s = 0; s < sd.n_dual; ++s) x[sd.n_interior() + s] = dist(rng);
    for (Index s = 0; s < sd.n_primal; ++s)
      x[sd.n_interior() + sd.n_dual + s] = primal[sd.primal_global[s]];
    const Vec nodal = sd.T * x;
    const Index ng = Index(sd.gamma_nodes.size());
    Vec trace(3 * ng);
    for (int fld = 0; fld < 3; ++fld)
      for (Index idx = 0; idx < ng; ++idx)
        trace[Index(fld) * ng + idx] = nodal[sd.nodal_dof(fld, sd.gamma_nodes[idx])];
    tv.sub[j] = trace;
  }
  return tv;
}

Real tilde_norm(const TildeVector& tv) {
  Real acc = 0;
  for (const Vec& v : tv.sub) acc += v.squaredNorm();
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("rho scaling is uniform for equal coefficients") {
  const Fixture f = make_fixture(4, 2, 2, 2, 1, 1, PrimalConfig::V);
  const ScalingOp sc = build_rho_scaling(f.pb.dec, f.pb.tensors, f.pb.part);
  REQUIRE(sc.classes.size() == 1);
  for (const auto& w : sc.classes[0].rho)
    for (int fld = 0; fld < 3; ++fld) CHECK(w[fld] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("rho scaling follows a 3:1 conductivity jump for potentials only") {
  Fixture f = make_fixture(4, 2, 2, 2, 1, 1, PrimalConfig::V);
  // Scale the tensors of the second subdomain by 3.
  for (Index e : f.pb.dec.sub_elems[1]) {
    f.pb.tensors.Di[e] *= 3.0;
    f.pb.tensors.De[e] *= 3.0;
  }
  const ScalingOp sc = build_rho_scaling(f.pb.dec, f.pb.tensors, f.pb.part);
  const auto& cs = sc.classes[0];
  CHECK(cs.rho[0][0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(cs.rho[1][0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(cs.rho[0][1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(cs.rho[1][1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(cs.rho[0][2] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(cs.rho[1][2] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("partition of unity for both scalings and both orientations") {
  const Fixture f = make_fixture(6, 6, 6, 2, 2, 2, PrimalConfig::VE);
  const ScalingOp rho = build_rho_scaling(f.pb.dec, f.pb.tensors, f.pb.part);
  const ScalingOp deluxe = build_deluxe_scaling(f.locals, f.pb.part);
  std::mt19937 rng(3);
  for (const ScalingOp* sc : {&rho, &deluxe}) {
    for (size_t c = 0; c < f.pb.part.classes.size(); ++c) {
      const ClassDofInfo& info = f.pb.part.class_dofs[c];
      if (info.slots_per_field == 0) continue;
      const Vec x = random_vec(3 * info.slots_per_field, rng);
      for (bool transpose : {false, true}) {
        Vec sum = Vec::Zero(x.size());
        for (size_t pos = 0; pos < f.pb.part.classes[c].sharers.size(); ++pos)
          sum += sc->apply(f.pb.part, int(c), int(pos), x, transpose);
        CHECK((sum - x).lpNorm<Eigen::Infinity>() <
              1e-10 * x.lpNorm<Eigen::Infinity>());
      }
    }
  }
}

TEST_CASE("deluxe scaling is one half identity for twin subdomains") {
  // Rest state, isotropic tensors, mirror-symmetric split: the two local
  // Schur minors agree exactly.
  ConductivityCoeffs iso;
  iso.sigma_l_i = iso.sigma_t_i = iso.sigma_n_i = 1e-3;
  iso.sigma_l_e = iso.sigma_t_e = iso.sigma_n_e = 2e-3;
  Fixture f;
  f.pb = build_problem(build_slab(4, 2, 2, {0.4, 0.2, 0.2}), iso, {}, 2, 1, 1,
                       PrimalConfig::V);
  f.state = State::rest(f.pb.n());
  f.klocal = build_local_jacobians(f.pb.sfe, f.pb.dec, f.state, f.tau, f.pb.ionic);
  f.locals = build_local_systems(f.klocal, f.pb.part);
  const ScalingOp sc = build_deluxe_scaling(f.locals, f.pb.part);
  REQUIRE(sc.classes.size() == 1);
  for (const Mat& d : sc.classes[0].deluxe) {
    CHECK((d - 0.5 * Mat::Identity(d.rows(), d.cols())).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("deluxe minors match a dense extraction oracle on a four-sharer edge") {
  const Fixture f = make_fixture(8, 8, 2, 2, 2, 1, PrimalConfig::V);
  const DofPartition& part = f.pb.part;
  const ScalingOp sc = build_deluxe_scaling(f.locals, part);

  // Find the edge class shared by all four subdomains.
  int edge_class = -1;
  for (size_t c = 0; c < part.classes.size(); ++c)
    if (part.classes[c].sharers.size() == 4) edge_class = int(c);
  REQUIRE(edge_class >= 0);
  const ClassDofInfo& info = part.class_dofs[edge_class];
  REQUIRE(info.slots_per_field > 0);

  // Dense oracle: form each sharer's symmetric-part Schur complement
  // explicitly and extract the class rows/columns.
  std::vector<Mat> minors;
  for (int j : part.classes[edge_class].sharers) {
    const SubdomainDofs& sd = part.sub[size_t(j)];
    const LocalSystem& ls = f.locals[size_t(j)];
    const Mat a = 0.5 * (Mat(ls.K) + Mat(ls.K).transpose());
    Mat a_ii(ls.n_interior(), ls.n_interior());
    Mat a_ig(ls.n_interior(), ls.n_gamma());
    Mat a_gi(ls.n_gamma(), ls.n_interior());
    Mat a_gg(ls.n_gamma(), ls.n_gamma());
    for (Index r = 0; r < ls.n_interior(); ++r)
      for (Index s = 0; s < ls.n_interior(); ++s)
        a_ii(r, s) = a(ls.interior_dofs[r], ls.interior_dofs[s]);
    for (Index r = 0; r < ls.n_interior(); ++r)
      for (Index s = 0; s < ls.n_gamma(); ++s) {
        a_ig(r, s) = a(ls.interior_dofs[r], ls.gamma_dofs[s]);
        a_gi(s, r) = a(ls.gamma_dofs[s], ls.interior_dofs[r]);
      }
    for (Index r = 0; r < ls.n_gamma(); ++r)
      for (Index s = 0; s < ls.n_gamma(); ++s)
        a_gg(r, s) = a(ls.gamma_dofs[r], ls.gamma_dofs[s]);
    const Mat schur = a_gg - a_gi * a_ii.partialPivLu().solve(a_ig);

    // Class node positions inside the local field-major trace.
    const Index ng = Index(sd.gamma_nodes.size());
    std::vector<Index> cols;
    for (int fld = 0; fld < 3; ++fld)
      for (Index node : info.dual_nodes) {
        const Index local = sd.node_g2l.at(node);
        const auto it =
            std::lower_bound(sd.gamma_nodes.begin(), sd.gamma_nodes.end(), local);
        cols.push_back(Index(fld) * ng + Index(it - sd.gamma_nodes.begin()));
      }
    Mat minor(cols.size(), cols.size());
    for (size_t r = 0; r < cols.size(); ++r)
      for (size_t s = 0; s < cols.size(); ++s) minor(r, s) = schur(cols[r], cols[s]);
    minors.push_back(minor);
  }
  Mat sum = Mat::Zero(minors[0].rows(), minors[0].cols());
  for (const Mat& m : minors) sum += m;
  const Eigen::PartialPivLU<Mat> lu(sum);
  Mat check = Mat::Zero(sum.rows(), sum.cols());
  for (size_t pos = 0; pos < minors.size(); ++pos) {
    const Mat d_ref = lu.solve(minors[pos]);
    CHECK((sc.classes[edge_class].deluxe[pos] - d_ref).cwiseAbs().maxCoeff() < 1e-10);
    check += sc.classes[edge_class].deluxe[pos];
  }
  CHECK((check - Mat::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("averaging fixes continuous vectors and kills their jumps") {
  for (PrimalConfig primal : {PrimalConfig::V, PrimalConfig::VE}) {
    const Fixture f = make_fixture(6, 6, 6, 2, 2, 2, primal);
    const RestrictionOps ops = build_restrictions(f.pb.part);
    const ScalingOp rho = build_rho_scaling(f.pb.dec, f.pb.tensors, f.pb.part);
    const ScalingOp deluxe = build_deluxe_scaling(f.locals, f.pb.part);
    std::mt19937 rng(11);
    const Vec u = random_vec(f.pb.part.iface.num_dofs(), rng);
    const TildeVector tu = ops.R_tilde_gamma(u);
    for (const ScalingOp* sc : {&rho, &deluxe}) {
      const auto [ed, pd] = apply_ED_PD(*sc, f.pb.part, tu);
      CHECK(tilde_norm(pd) < 1e-11 * u.norm());
      Real diff = 0;
      for (size_t j = 0; j < ed.sub.size(); ++j)
        diff = std::max(diff, (ed.sub[j] - tu.sub[j]).lpNorm<Eigen::Infinity>());
      CHECK(diff < 1e-11 * u.norm());
    }
  }
}

TEST_CASE("the weighted average is a projection") {
  const Fixture f = make_fixture(6, 6, 6, 2, 2, 2, PrimalConfig::VE);
  const ScalingOp rho = build_rho_scaling(f.pb.dec, f.pb.tensors, f.pb.part);
  const ScalingOp deluxe = build_deluxe_scaling(f.locals, f.pb.part);
  std::mt19937 rng(13);
  for (const ScalingOp* sc : {&rho, &deluxe}) {
    for (int t = 0; t < 5; ++t) {
      const TildeVector u = random_tilde(f.pb.part, rng);
      const auto [ed, pd] = apply_ED_PD(*sc, f.pb.part, u);
      const auto [ed2, pd2] = apply_ED_PD(*sc, f.pb.part, ed);
      Real diff = 0;
      for (size_t j = 0; j < ed.sub.size(); ++j)
        diff = std::max(diff, (ed2.sub[j] - ed.sub[j]).lpNorm<Eigen::Infinity>());
      CHECK(diff < 1e-11 * (tilde_norm(u) + 1));
      CHECK(tilde_norm(pd2) < 1e-11 * (tilde_norm(u) + 1));
      // P_D composed with E_D vanishes.
      for (size_t j = 0; j < pd2.sub.size(); ++j)
        CHECK(pd2.sub[j].lpNorm<Eigen::Infinity>() < 1e-11 * (tilde_norm(u) + 1));
    }
  }
}

TEST_CASE("rho averaging on an equal-coefficient face is the arithmetic mean") {
  const Fixture f = make_fixture(4, 2, 2, 2, 1, 1, PrimalConfig::V);
  const ScalingOp rho = build_rho_scaling(f.pb.dec, f.pb.tensors, f.pb.part);
  std::mt19937 rng(17);
  const TildeVector u = random_tilde(f.pb.part, rng);
  const Vec avg = ed_average(rho, f.pb.part, u);

  // Both subdomains see the same interface nodes here, in the same order.
  const auto [ed, pd] = apply_ED_PD(rho, f.pb.part, u);
  for (size_t j = 0; j < 2; ++j)
    CHECK((ed.sub[j] - 0.5 * (u.sub[0] + u.sub[1])).lpNorm<Eigen::Infinity>() <
          1e-12 * (tilde_norm(u) + 1));
  CHECK(avg.size() == f.pb.part.iface.num_dofs());
}

TEST_CASE("primal basis columns are discrete harmonic") {
  const Fixture f = make_fixture(6, 6, 6, 2, 2, 2, PrimalConfig::VE);
  const ScalingOp rho = build_rho_scaling(f.pb.dec, f.pb.tensors, f.pb.part);
  const BddcPreconditioner pc = build_bddc(f.klocal, f.pb.part, rho);
  for (const BddcLocal& bl : pc.locals) {
    if (bl.n_rr == 0 || bl.n_pi == 0) continue;
    const SpMat k_rr = bl.Khat.block(0, 0, bl.n_rr, bl.n_rr);
    const Mat residual = k_rr * bl.phi_r + Mat(bl.K_rP);
    CHECK(residual.cwiseAbs().maxCoeff() <
          1e-11 * (Mat(bl.K_rP).cwiseAbs().maxCoeff() + 1));
  }
}

TEST_CASE("coarse matrix of a symmetric input is symmetric positive semidefinite") {
  const Fixture f = make_fixture(4, 4, 4, 2, 2, 2, PrimalConfig::VE, 0.0);
  const std::vector<SpMat> sym = symmetric_halves(f.klocal);
  const ScalingOp rho = build_rho_scaling(f.pb.dec, f.pb.tensors, f.pb.part);
  const BddcPreconditioner pc = build_bddc(sym, f.pb.part, rho);
  const Mat& s = pc.coarse.s_pp;
  CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-10 * s.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
  CHECK(es.eigenvalues().minCoeff() > -1e-10 * es.eigenvalues().maxCoeff());
  // Exactly the constant primal mode is (near) null.
  Index near_null = 0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < 1e-10 * es.eigenvalues().maxCoeff()) ++near_null;
  CHECK(near_null == 1);
}

TEST_CASE("single subdomain yields an empty coarse problem") {
  const Fixture f = make_fixture(3, 3, 3, 1, 1, 1, PrimalConfig::VE);
  const ScalingOp rho = build_rho_scaling(f.pb.dec, f.pb.tensors, f.pb.part);
  const BddcPreconditioner pc = build_bddc(f.klocal, f.pb.part, rho);
  CHECK(pc.coarse.dim() == 0);
}

TEST_CASE("preconditioner application is linear") {
  const Fixture f = make_fixture(6, 6, 6, 2, 2, 2, PrimalConfig::VE);
  const ScalingOp rho = build_rho_scaling(f.pb.dec, f.pb.tensors, f.pb.part);
  const BddcPreconditioner pc = build_bddc(f.klocal, f.pb.part, rho);
  std::mt19937 rng(23);
  const Vec r1 = random_vec(f.pb.part.iface.num_dofs(), rng);
  const Vec r2 = random_vec(f.pb.part.iface.num_dofs(), rng);
  const Real alpha = -1.7;
  const Vec lhs = pc.apply(Vec(alpha * r1 + r2));
  const Vec rhs = alpha * pc.apply(r1) + pc.apply(r2);
  CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <
        1e-12 * (rhs.lpNorm<Eigen::Infinity>() + 1));
}

TEST_CASE("classical spectral bound on a symmetric positive definite input") {
  for (ScalingKind kind : {ScalingKind::Rho, ScalingKind::Deluxe}) {
    const Fixture f = make_fixture(4, 4, 2, 2, 2, 1, PrimalConfig::VE, 0.0);
    const std::vector<SpMat> sym = symmetric_halves(f.klocal);
    const std::vector<LocalSystem> sym_locals = build_local_systems(sym, f.pb.part);
    const ScalingOp sc = kind == ScalingKind::Rho
                             ? build_rho_scaling(f.pb.dec, f.pb.tensors, f.pb.part)
                             : build_deluxe_scaling(sym_locals, f.pb.part);
    const BddcPreconditioner pc = build_bddc(sym, f.pb.part, sc);
    SchurOperator schur{&sym_locals, &f.pb.part};
    const LinOp deflate = make_deflation(f.pb.kernel_iface);

    const Index ni = f.pb.part.iface.num_dofs();
    Mat t_full(ni, ni);
    Vec e = Vec::Zero(ni);
    for (Index c = 0; c < ni; ++c) {
      e[c] = 1.0;
      t_full.col(c) = deflate(pc.apply(deflate(schur.apply(deflate(e)))));
      e[c] = 0.0;
    }
    Eigen::EigenSolver<Mat> es(t_full);
    for (Index i = 0; i < ni; ++i) {
      const std::complex<Real> lambda = es.eigenvalues()[i];
      if (std::abs(lambda) < 1e-6) continue;  // deflated directions
      CHECK(lambda.real() >= 1.0 - 1e-8);
      CHECK(std::abs(lambda.imag()) <= 1e-8 * std::abs(lambda));
    }
  }
}
