#pragma once

#include <functional>
#include <vector>

#include "bidomain/types.hpp"

namespace bidomain {

using LinOp = std::function<Vec(const Vec&)>;
using InnerProduct = std::function<Real(const Vec&, const Vec&)>;

struct GmresConfig {
  int restart = 200;
  int max_iters = 2000;
  Real rtol = 1e-6;  // relative true-residual tolerance

  void validate() const {
    if (restart < 1) throw InvalidConfig("gmres restart must be >= 1");
    if (!(rtol > 0 && rtol < 1)) throw InvalidConfig("gmres rtol must be in (0,1)");
  }
};

struct GmresResult {
  Vec x;
  std::vector<Real> history;  // true relative residuals, history[0] = 1
  bool converged = false;
  int iterations = 0;
};

/// Restarted GMRES with right preconditioning, so the minimized residual is
/// the true residual of the original system. `precond` may be empty.
GmresResult gmres(const LinOp& apply_a, const LinOp& precond, const Vec& b,
                  const GmresConfig& cfg, const Vec* x0 = nullptr);

struct IpGmresResult {
  Vec x;
  std::vector<Real> history;   // residual norms in the custom inner product, relative
  std::vector<Vec> residuals;  // r_m = b - A x_m, including r_0
  bool converged = false;
  int iterations = 0;
};

/// Non-restarted GMRES in a caller-supplied inner product, keeping every
/// residual vector. Diagnostic use on small systems only.
IpGmresResult gmres_in_product(const LinOp& apply_a, const InnerProduct& ip,
                               const Vec& b, int max_iters, Real rtol);

/// Orthogonal projector onto the complement of span{q} (q need not be
/// normalized); used to deflate the constant null space.
LinOp make_deflation(const Vec& q);

}  // namespace bidomain
