#pragma once

#include "bidomain/state.hpp"
#include "bidomain/types.hpp"

namespace bidomain {

/// Two-variable membrane kinetics: a cubic recovery current plus a linear
/// gating equation. Defaults are the standard parameter set.
struct IonicParams {
  Real G = 1.2;       // 1/(Ohm cm^2)
  Real v_th = 13.0;   // mV
  Real v_p = 100.0;   // mV
  Real eta1 = 4.4;    // 1/(Ohm cm)
  Real eta2 = 0.012;  // dimensionless
  Real C_m = 1.0;     // mF/cm^2
  Real chi = 1.0;     // surface-to-volume factor

  void validate() const {
    for (Real x : {G, v_th, v_p, eta1, eta2, C_m, chi})
      if (!(x > 0)) throw InvalidConfig("ionic parameters must be positive");
    if (!(v_th < v_p)) throw InvalidConfig("ionic model requires v_th < v_p");
  }

  Real chi_cm() const { return chi * C_m; }
};

/// Membrane current density at transmembrane potential v and gating w.
template <typename Scalar>
Scalar i_ion(Scalar v, Scalar w, const IonicParams& p) {
  return Scalar(p.G) * v * (Scalar(1) - v / Scalar(p.v_th)) *
             (Scalar(1) - v / Scalar(p.v_p)) +
         Scalar(p.eta1) * v * w;
}

/// Gating rate.
template <typename Scalar>
Scalar r_gate(Scalar v, Scalar w, const IonicParams& p) {
  return Scalar(p.eta2) * (v / Scalar(p.v_p) - w);
}

/// The four partial derivatives of (i_ion, r_gate).
template <typename Scalar>
struct IonicPartials {
  Scalar dIdv, dIdw, dRdv, dRdw;
};

template <typename Scalar>
IonicPartials<Scalar> partials(Scalar v, Scalar w, const IonicParams& p) {
  const Scalar vth = Scalar(p.v_th), vp = Scalar(p.v_p), g = Scalar(p.G);
  IonicPartials<Scalar> d;
  d.dIdv = g * ((Scalar(1) - v / vth) * (Scalar(1) - v / vp) -
                v / vth * (Scalar(1) - v / vp) - v / vp * (Scalar(1) - v / vth)) +
           Scalar(p.eta1) * w;
  d.dIdw = Scalar(p.eta1) * v;
  d.dRdv = Scalar(p.eta2) / vp;
  d.dRdw = -Scalar(p.eta2);
  return d;
}

/// Nodal minima of the three coercivity hypotheses of the linearized system:
///   h1 = chi*C_m + tau * dI/dv,  h2 = 1 - tau * dR/dw,  h3 = dI/dw - dR/dv.
/// h1,h2 must be positive, h3 nonnegative; h3 fails only near rest and is
/// reported rather than fatal.
struct CoercivityReport {
  Real min_h1 = 0, min_h2 = 0, min_h3 = 0;
  Index argmin_h1 = -1, argmin_h3 = -1;
  bool h1_ok = false, h2_ok = false, h3_ok = false;

  bool all_ok() const { return h1_ok && h2_ok && h3_ok; }
};

CoercivityReport coercivity_check(const State& state, Real tau, const IonicParams& p);

}  // namespace bidomain
