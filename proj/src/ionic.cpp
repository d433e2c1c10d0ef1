#include "bidomain/ionic.hpp"

namespace bidomain {

CoercivityReport coercivity_check(const State& state, Real tau, const IonicParams& p) {
  CoercivityReport r;
  const Vec v = state.v();
  const Index n = state.num_nodes();

  r.min_h1 = std::numeric_limits<Real>::max();
  r.min_h3 = std::numeric_limits<Real>::max();
  for (Index l = 0; l < n; ++l) {
    const auto d = partials(v[l], state.w[l], p);
    const Real h1 = p.chi_cm() + tau * d.dIdv;
    const Real h3 = d.dIdw - d.dRdv;
    if (h1 < r.min_h1) {
      r.min_h1 = h1;
      r.argmin_h1 = l;
    }
    if (h3 < r.min_h3) {
      r.min_h3 = h3;
      r.argmin_h3 = l;
    }
  }
  r.min_h2 = 1.0 + p.eta2 * tau;  // 1 - tau*dR/dw, constant in (v,w)
  r.h1_ok = r.min_h1 > 0;
  r.h2_ok = r.min_h2 > 0;
  r.h3_ok = r.min_h3 >= 0;
  return r;
}

}  // namespace bidomain
