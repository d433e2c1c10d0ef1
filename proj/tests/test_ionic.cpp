#include <doctest.h>

#include <random>

#include "bidomain/ionic.hpp"

using namespace bidomain;

TEST_CASE("rest state is an exact equilibrium") {
  const IonicParams p;
  CHECK(i_ion(0.0, 0.0, p) == 0.0);
  CHECK(r_gate(0.0, 0.0, p) == 0.0);
}

TEST_CASE("cubic factor vanishes at the plateau potential") {
  const IonicParams p;
  for (Real w : {0.0, 0.3, 1.0})
    CHECK(i_ion(100.0, w, p) == doctest::Approx(p.eta1 * 100.0 * w).epsilon(1e-14));
}

TEST_CASE("current value against an expanded-polynomial oracle") {
  const IonicParams p;
  // Independent route: the expanded cubic evaluated in extended precision.
  const long double v = 50.0L, w = 0.1L;
  const long double g = p.G, vth = p.v_th, vp = p.v_p;
  const long double poly = g * v - g * (1.0L / vth + 1.0L / vp) * v * v +
                           g / (vth * vp) * v * v * v + (long double)p.eta1 * v * w;
  CHECK(i_ion(50.0, 0.1, p) == doctest::Approx(double(poly)).epsilon(1e-14));
}

TEST_CASE("gating rate values") {
  const IonicParams p;
  CHECK(r_gate(p.v_p, 1.0, p) == 0.0);
  CHECK(r_gate(13.0, 0.05, p) ==
        doctest::Approx(p.eta2 * (13.0 / 100.0 - 0.05)).epsilon(1e-14));
}

TEST_CASE("closed-form partial derivatives") {
  const IonicParams p;
  auto d = partials(27.0, 0.4, p);
  CHECK(d.dRdw == -p.eta2);
  CHECK(1.0 - 0.05 * d.dRdw == doctest::Approx(1.0 + p.eta2 * 0.05).epsilon(1e-15));
  CHECK(d.dRdv == doctest::Approx(p.eta2 / p.v_p).epsilon(1e-15));
  CHECK(partials(0.0, 0.77, p).dIdw == 0.0);
}

namespace {

template <typename F>
double central_diff(F f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

}  // namespace

TEST_CASE("partials match finite differences with a step sweep") {
  const IonicParams p;
  const double v = 40.0, w = 0.2;
  const auto d = partials(v, w, p);

  double best_iv = 1e9, best_iw = 1e9, best_rv = 1e9, best_rw = 1e9;
  for (double h : {1e-3, 1e-4, 1e-5, 1e-6}) {
    best_iv = std::min(
        best_iv, std::abs(central_diff([&](double x) { return i_ion(x, w, p); }, v, h) -
                          d.dIdv) /
                     std::abs(d.dIdv));
    best_iw = std::min(
        best_iw, std::abs(central_diff([&](double x) { return i_ion(v, x, p); }, w, h) -
                          d.dIdw) /
                     std::abs(d.dIdw));
    best_rv = std::min(
        best_rv, std::abs(central_diff([&](double x) { return r_gate(x, w, p); }, v, h) -
                          d.dRdv) /
                     std::abs(d.dRdv));
    best_rw = std::min(
        best_rw, std::abs(central_diff([&](double x) { return r_gate(v, x, p); }, w, h) -
                          d.dRdw) /
                     std::abs(d.dRdw));
  }
  CHECK(best_iv < 1e-7);
  CHECK(best_iw < 1e-7);
  CHECK(best_rv < 1e-7);
  CHECK(best_rw < 1e-7);
}

TEST_CASE("derivative consistency at 100 random points") {
  const IonicParams p;
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> dv(-20.0, 120.0), dw(0.0, 2.0);
  for (int s = 0; s < 100; ++s) {
    const double v = dv(rng), w = dw(rng);
    const auto d = partials(v, w, p);
    const double h = 1e-5;
    const double fd_iv = central_diff([&](double x) { return i_ion(x, w, p); }, v, h);
    const double fd_iw = central_diff([&](double x) { return i_ion(v, x, p); }, w, h);
    const double scale_i = std::max({1.0, std::abs(d.dIdv), std::abs(d.dIdw)});
    CHECK(std::abs(fd_iv - d.dIdv) / scale_i < 1e-6);
    CHECK(std::abs(fd_iw - d.dIdw) / scale_i < 1e-6);
  }
}

TEST_CASE("coercivity report at rest") {
  const IonicParams p;
  const State rest = State::rest(10);
  const CoercivityReport rep = coercivity_check(rest, 0.05, p);
  // dI/dv at the origin is G, so the first expression is chi*C_m + tau*G.
  CHECK(rep.min_h1 == doctest::Approx(p.chi_cm() + 0.05 * p.G).epsilon(1e-14));
  CHECK(rep.h1_ok);
  CHECK(rep.min_h2 == doctest::Approx(1.0 + p.eta2 * 0.05).epsilon(1e-14));
  CHECK(rep.h2_ok);
  // Near rest the third hypothesis fails by a physiologically tiny margin.
  CHECK(rep.min_h3 == doctest::Approx(-p.eta2 / p.v_p).epsilon(1e-12));
  CHECK(!rep.h3_ok);
}

TEST_CASE("hypothesis 2 is state independent") {
  const IonicParams p;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dv(-50.0, 150.0), dw(-1.0, 2.0);
  for (int s = 0; s < 50; ++s) {
    const auto d = partials(dv(rng), dw(rng), p);
    CHECK(1.0 - 0.05 * d.dRdw == doctest::Approx(1.0 + p.eta2 * 0.05).epsilon(1e-15));
  }
}

TEST_CASE("hypothesis 1 holds over the physiological sweep at tau=0.05") {
  const IonicParams p;
  const int nv = 101, nw = 21;
  State sweep = State::rest(nv * nw);
  for (int i = 0; i < nv; ++i)
    for (int j = 0; j < nw; ++j) {
      sweep.ui[i * nw + j] = 100.0 * i / (nv - 1);
      sweep.w[i * nw + j] = 1.0 * j / (nw - 1);
    }
  const CoercivityReport rep = coercivity_check(sweep, 0.05, p);
  CHECK(rep.min_h1 > 0);
  CHECK(rep.h1_ok);
}

TEST_CASE("invalid ionic params throw") {
  IonicParams p;
  p.v_th = 120.0;  // above v_p
  CHECK_THROWS_AS(p.validate(), InvalidConfig);
  IonicParams q;
  q.G = 0;
  CHECK_THROWS_AS(q.validate(), InvalidConfig);
}
