#include "bidomain/gmres.hpp"

#include <Eigen/QR>

#include <cmath>

namespace bidomain {

namespace {

void apply_givens(Real c, Real s, Real& a, Real& b) {
  const Real t = c * a + s * b;
  b = -s * a + c * b;
  a = t;
}

void make_givens(Real a, Real b, Real& c, Real& s) {
  const Real r = std::hypot(a, b);
  if (r == 0) {
    c = 1;
    s = 0;
  } else {
    c = a / r;
    s = b / r;
  }
}

}  // namespace

GmresResult gmres(const LinOp& apply_a, const LinOp& precond, const Vec& b,
                  const GmresConfig& cfg, const Vec* x0) {
  cfg.validate();
  GmresResult res;
  const Index n = b.size();
  res.x = x0 ? *x0 : Vec(Vec::Zero(n));

  const Real bnorm = b.norm();
  if (bnorm == 0) {
    res.x.setZero();
    res.history = {0.0};
    res.converged = true;
    return res;
  }

  auto prec = [&](const Vec& v) { return precond ? precond(v) : v; };

  const int m = cfg.restart;
  Mat v_basis(n, m + 1);
  Mat hess = Mat::Zero(m + 1, m);
  Vec g(m + 1), cs(m), sn(m);

  res.history.push_back((b - apply_a(res.x)).norm() / bnorm);
  Real best = res.history[0];
  if (best <= cfg.rtol) {
    res.converged = true;
    return res;
  }

  while (res.iterations < cfg.max_iters) {
    Vec r = b - apply_a(res.x);
    Real beta = r.norm();
    v_basis.col(0) = r / beta;
    g.setZero();
    g[0] = beta;

    int j = 0;
    for (; j < m && res.iterations < cfg.max_iters; ++j) {
      Vec w = apply_a(prec(v_basis.col(j)));
      // Modified Gram-Schmidt.
      for (int i = 0; i <= j; ++i) {
        hess(i, j) = v_basis.col(i).dot(w);
        w.noalias() -= hess(i, j) * v_basis.col(i);
      }
      hess(j + 1, j) = w.norm();
      if (hess(j + 1, j) > 0) v_basis.col(j + 1) = w / hess(j + 1, j);

      for (int i = 0; i < j; ++i) apply_givens(cs[i], sn[i], hess(i, j), hess(i + 1, j));
      make_givens(hess(j, j), hess(j + 1, j), cs[j], sn[j]);
      apply_givens(cs[j], sn[j], hess(j, j), hess(j + 1, j));
      g[j + 1] = 0;
      apply_givens(cs[j], sn[j], g[j], g[j + 1]);

      ++res.iterations;
      res.history.push_back(std::abs(g[j + 1]) / bnorm);
      if (res.history.back() <= cfg.rtol || hess(j + 1, j) == 0) {
        ++j;
        break;
      }
    }

    // x += M^{-1} V y with H y = g.
    Vec y = g.head(j);
    for (int i = j - 1; i >= 0; --i) {
      for (int k = i + 1; k < j; ++k) y[i] -= hess(i, k) * y[k];
      y[i] /= hess(i, i);
    }
    Vec update = v_basis.leftCols(j) * y;
    res.x += prec(update);

    const Real true_rel = (b - apply_a(res.x)).norm() / bnorm;
    res.history.back() = true_rel;
    best = std::min(best, true_rel);
    if (true_rel <= cfg.rtol) {
      res.converged = true;
      return res;
    }
  }
  res.converged = false;
  return res;
}

IpGmresResult gmres_in_product(const LinOp& apply_a, const InnerProduct& ip,
                               const Vec& b, int max_iters, Real rtol) {
  IpGmresResult res;
  const Index n = b.size();
  res.x = Vec::Zero(n);
  res.residuals.push_back(b);

  const Real bnorm = std::sqrt(ip(b, b));
  res.history.push_back(1.0);
  if (bnorm == 0) {
    res.converged = true;
    return res;
  }

  const int m = max_iters;
  std::vector<Vec> basis;
  basis.push_back(b / bnorm);
  Mat hbar = Mat::Zero(m + 1, m);

  for (int j = 0; j < m; ++j) {
    Vec w = apply_a(basis[j]);
    for (int i = 0; i <= j; ++i) {
      hbar(i, j) = ip(basis[size_t(i)], w);
      w.noalias() -= hbar(i, j) * basis[size_t(i)];
    }
    hbar(j + 1, j) = std::sqrt(std::max<Real>(0, ip(w, w)));
    const bool breakdown = hbar(j + 1, j) <= 1e-14 * bnorm;
    if (!breakdown) basis.push_back(w / hbar(j + 1, j));

    // Least squares min || beta e1 - Hbar y || via dense QR each step
    // (diagnostic sizes are small).
    const int cols = j + 1;
    Vec rhs = Vec::Zero(cols + 1);
    rhs[0] = bnorm;
    const Mat h = hbar.topLeftCorner(cols + 1, cols);
    const Vec y = h.colPivHouseholderQr().solve(rhs);

    res.x = Vec::Zero(n);
    for (int i = 0; i < cols; ++i) res.x += y[i] * basis[size_t(i)];
    res.iterations = cols;

    // Residual from the Arnoldi relation: r = V_{m+1} (beta e1 - Hbar y).
    Vec coeff = rhs - h * y;
    Vec r = Vec::Zero(n);
    for (int i = 0; i < int(basis.size()) && i <= cols; ++i)
      r += coeff[i] * basis[size_t(i)];
    res.residuals.push_back(r);
    res.history.push_back(std::sqrt(std::max<Real>(0, ip(r, r))) / bnorm);

    if (res.history.back() <= rtol || breakdown) {
      res.converged = res.history.back() <= rtol;
      break;
    }
  }
  return res;
}

LinOp make_deflation(const Vec& q) {
  const Real qq = q.squaredNorm();
  if (qq == 0) return [](const Vec& v) { return v; };
  Vec qn = q / std::sqrt(qq);
  return [qn](const Vec& v) { return Vec(v - qn * qn.dot(v)); };
}

}  // namespace bidomain
