#include <doctest.h>

#include <Eigen/SparseLU>

#include <random>
#include <set>

#include "bidomain/partition.hpp"
#include "test_util.hpp"

using namespace bidomain;
using namespace bidomain::testutil;

namespace {

DofPartition make_partition(int n, int px, int py, int pz, PrimalConfig primal) {
  const MeshTopology mesh = build_slab(n, n, n, {1, 1, 1});
  const Decomposition dec = decompose(mesh, px, py, pz);
  const InterfaceClasses classes = classify_interface(mesh, dec);
  return build_dof_partition(mesh, dec, classes, primal);
}

}  // namespace

TEST_CASE("decompose records the local size") {
  const MeshTopology mesh = build_slab(48, 48, 48, {1, 1, 1});
  const Decomposition dec = decompose(mesh, 4, 4, 4);
  CHECK(dec.mx == 12);
  CHECK(dec.my == 12);
  CHECK(dec.mz == 12);
  CHECK(dec.num_subdomains() == 64);
}

TEST_CASE("non-divisible decompositions are rejected") {
  const MeshTopology mesh = build_slab(8, 8, 8, {1, 1, 1});
  CHECK_THROWS_AS(decompose(mesh, 3, 2, 2), InvalidConfig);
}

TEST_CASE("single subdomain has no interface") {
  const MeshTopology mesh = build_slab(4, 4, 4, {1, 1, 1});
  const Decomposition dec = decompose(mesh, 1, 1, 1);
  const InterfaceClasses classes = classify_interface(mesh, dec);
  CHECK(classes.classes.empty());
  const InterfaceSpace iface = build_interface_space(mesh, dec);
  CHECK(iface.num_gamma() == 0);
  for (Index n = 0; n < mesh.num_nodes(); ++n)
    CHECK(dec.node_sharers[n].size() == 1);
}

TEST_CASE("two subdomains share one face of nodes") {
  const MeshTopology mesh = build_slab(8, 4, 4, {2, 1, 1});
  const Decomposition dec = decompose(mesh, 2, 1, 1);
  const InterfaceClasses classes = classify_interface(mesh, dec);
  CHECK(classes.classes.size() == 1);
  CHECK(classes.classes[0].kind == ClassKind::Face);
  CHECK(classes.classes[0].nodes.size() == 25);
  for (Index n : classes.classes[0].nodes) CHECK(dec.node_sharers[n].size() == 2);
}

TEST_CASE("interface class census on small grids") {
  {
    const MeshTopology mesh = build_slab(4, 4, 4, {1, 1, 1});
    const Decomposition dec = decompose(mesh, 2, 2, 1);
    const InterfaceClasses classes = classify_interface(mesh, dec);
    CHECK(classes.count(ClassKind::Face) == 4);
    CHECK(classes.count(ClassKind::Edge) == 1);
    CHECK(classes.count(ClassKind::Vertex) == 0);
  }
  {
    const MeshTopology mesh = build_slab(4, 4, 4, {1, 1, 1});
    const Decomposition dec = decompose(mesh, 2, 2, 2);
    const InterfaceClasses classes = classify_interface(mesh, dec);
    CHECK(classes.count(ClassKind::Face) == 12);
    CHECK(classes.count(ClassKind::Edge) == 6);
    CHECK(classes.count(ClassKind::Vertex) == 1);
  }
}

TEST_CASE("class counts match the combinatorial formulas for all grids <= 3^3") {
  const MeshTopology mesh = build_slab(6, 6, 6, {1, 1, 1});
  for (int px = 1; px <= 3; ++px)
    for (int py = 1; py <= 3; ++py)
      for (int pz = 1; pz <= 3; ++pz) {
        const Decomposition dec = decompose(mesh, px, py, pz);
        const InterfaceClasses classes = classify_interface(mesh, dec);
        const Index faces = (px - 1) * py * pz + px * (py - 1) * pz + px * py * (pz - 1);
        const Index edges = (px - 1) * (py - 1) * pz + (px - 1) * (pz - 1) * py +
                            (py - 1) * (pz - 1) * px;
        const Index verts = Index(px - 1) * (py - 1) * (pz - 1);
        CHECK(classes.count(ClassKind::Face) == faces);
        CHECK(classes.count(ClassKind::Edge) == edges);
        CHECK(classes.count(ClassKind::Vertex) == verts);

        // Classes partition the interface.
        const InterfaceSpace iface = build_interface_space(mesh, dec);
        Index covered = 0;
        std::set<Index> seen;
        for (const auto& cl : classes.classes) {
          covered += Index(cl.nodes.size());
          for (Index nn : cl.nodes) CHECK(seen.insert(nn).second);
        }
        CHECK(covered == iface.num_gamma());
      }
}

TEST_CASE("dof partition covers every subdomain dof exactly once") {
  for (PrimalConfig primal : {PrimalConfig::V, PrimalConfig::VE, PrimalConfig::VEF}) {
    const DofPartition part = make_partition(6, 2, 2, 2, primal);
    for (const SubdomainDofs& sd : part.sub) {
      CHECK(sd.n_interior() + sd.n_dual + sd.n_primal == sd.n_nodal_dofs());
      CHECK(Index(sd.interior_nodes.size() + sd.gamma_nodes.size()) == sd.n_nodes());
    }
  }
}

TEST_CASE("vertex primal set on 2x2x2 is the 19 box corners on the interface") {
  const DofPartition part = make_partition(12, 2, 2, 2, PrimalConfig::V);
  CHECK(part.corner_nodes.size() == 19);
  CHECK(part.n_primal == 3 * 19);
  const MeshTopology mesh = build_slab(12, 12, 12, {1, 1, 1});
  const Decomposition dec = decompose(mesh, 2, 2, 2);
  Index interior_crosses = 0;
  for (Index n : part.corner_nodes)
    if (dec.node_sharers[n].size() == 8) ++interior_crosses;
  CHECK(interior_crosses == 1);
}

TEST_CASE("edge averages add three primal dofs per edge class") {
  const DofPartition v = make_partition(12, 2, 2, 2, PrimalConfig::V);
  const DofPartition ve = make_partition(12, 2, 2, 2, PrimalConfig::VE);
  const DofPartition vef = make_partition(12, 2, 2, 2, PrimalConfig::VEF);
  Index edge_classes = 0, face_classes = 0;
  for (size_t c = 0; c < ve.classes.size(); ++c) {
    if (ve.classes[c].kind == ClassKind::Edge && !ve.class_dofs[c].dual_nodes.empty())
      ++edge_classes;
    if (ve.classes[c].kind == ClassKind::Face && !ve.class_dofs[c].dual_nodes.empty())
      ++face_classes;
  }
  CHECK(ve.n_primal == v.n_primal + 3 * edge_classes);
  CHECK(vef.n_primal == ve.n_primal + 3 * face_classes);
  CHECK(v.n_dual + v.n_primal == ve.n_dual + ve.n_primal);
}

TEST_CASE("unscaled restrictions are boolean selections") {
  const DofPartition part = make_partition(6, 2, 2, 1, PrimalConfig::VE);
  const RestrictionOps ops = build_restrictions(part);
  for (int j = 0; j < 4; ++j) {
    const SpMat r = ops.R_gamma(j);
    const SpMat rrt = r * SpMat(r.transpose());
    CHECK((Mat(rrt) - Mat::Identity(r.rows(), r.rows())).cwiseAbs().maxCoeff() == 0.0);
    for (Index k = 0; k < r.outerSize(); ++k)
      for (SpMat::InnerIterator it(r, k); it; ++it) CHECK(it.value() == 1.0);
  }
}

TEST_CASE("summed restriction weights equal the sharing multiplicities") {
  const MeshTopology mesh = build_slab(6, 6, 6, {1, 1, 1});
  const Decomposition dec = decompose(mesh, 2, 1, 1);
  const DofPartition part =
      build_dof_partition(mesh, dec, classify_interface(mesh, dec), PrimalConfig::V);
  const RestrictionOps ops = build_restrictions(part);
  Mat acc = Mat::Zero(part.iface.num_dofs(), part.iface.num_dofs());
  for (int j = 0; j < 2; ++j) {
    const SpMat r = ops.R_gamma(j);
    acc += Mat(SpMat(r.transpose()) * r);
  }
  // Every interface node of a two-subdomain split is shared by both.
  CHECK((acc - 2.0 * Mat::Identity(acc.rows(), acc.cols())).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("injection copies continuous vectors consistently") {
  const DofPartition part = make_partition(6, 2, 2, 2, PrimalConfig::VE);
  const RestrictionOps ops = build_restrictions(part);
  std::mt19937 rng(3);
  const Vec u = random_vec(part.iface.num_dofs(), rng);
  const TildeVector tv = ops.R_tilde_gamma(u);

  const Index ngamma = part.iface.num_gamma();
  for (size_t j = 0; j < part.sub.size(); ++j) {
    const SubdomainDofs& sd = part.sub[j];
    const Index ng = Index(sd.gamma_nodes.size());
    for (int f = 0; f < 3; ++f)
      for (Index idx = 0; idx < ng; ++idx) {
        const Index gnode = sd.nodes[sd.gamma_nodes[idx]];
        const Index g = part.iface.node_to_gamma.at(gnode);
        CHECK(tv.sub[j][Index(f) * ng + idx] == u[Index(f) * ngamma + g]);
      }
  }
}

TEST_CASE("interface change of basis is invertible with the stated inverse") {
  for (PrimalConfig primal : {PrimalConfig::V, PrimalConfig::VE, PrimalConfig::VEF}) {
    const DofPartition part = make_partition(6, 2, 2, 2, primal);
    const RestrictionOps ops = build_restrictions(part);
    Mat inv(part.num_transformed(), part.iface.num_dofs());
    inv.topRows(part.n_dual) = Mat(ops.R_gamma_delta());
    inv.bottomRows(part.n_primal) = Mat(ops.R_gamma_pi());
    const Mat prod = inv * Mat(part.That);
    CHECK((prod - Mat::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff() <
          1e-13);
  }
}

TEST_CASE("average constraints have disjoint support across classes") {
  const DofPartition part = make_partition(6, 2, 2, 2, PrimalConfig::VEF);
  const RestrictionOps ops = build_restrictions(part);
  const SpMat rp = ops.R_gamma_pi();
  std::vector<int> touched(part.iface.num_dofs(), 0);
  const Index corner_rows = 3 * Index(part.corner_nodes.size());
  for (Index k = 0; k < rp.outerSize(); ++k)
    for (SpMat::InnerIterator it(rp, k); it; ++it)
      if (it.row() >= corner_rows) ++touched[it.col()];
  for (int count : touched) CHECK(count <= 1);
}

TEST_CASE("local transformation is invertible") {
  const DofPartition part = make_partition(6, 2, 2, 2, PrimalConfig::VE);
  std::mt19937 rng(9);
  for (const SubdomainDofs& sd : part.sub) {
    const Vec x = random_vec(sd.n_nodal_dofs(), rng);
    const Vec nodal = sd.T * x;
    SpMat t = sd.T;
    t.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(t);
    REQUIRE(lu.info() == Eigen::Success);
    CHECK((lu.solve(nodal) - x).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}
