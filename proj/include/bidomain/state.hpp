#pragma once

#include "bidomain/types.hpp"

namespace bidomain {

/// Nodal unknowns of the coupled system. The transmembrane potential is
/// derived on demand so it can never go stale.
struct State {
  Vec ui;  // intracellular potential, mV
  Vec ue;  // extracellular potential, mV
  Vec w;   // gating variable

  static State rest(Index num_nodes) {
    State s;
    s.ui = Vec::Zero(num_nodes);
    s.ue = Vec::Zero(num_nodes);
    s.w = Vec::Zero(num_nodes);
    return s;
  }

  Index num_nodes() const { return ui.size(); }
  Vec v() const { return ui - ue; }

  /// Stacked (ui, ue, w) vector in field-major dof ordering.
  Vec stacked() const {
    Vec s(3 * ui.size());
    s << ui, ue, w;
    return s;
  }

  static State from_stacked(const Vec& s) {
    const Index n = s.size() / 3;
    State st;
    st.ui = s.segment(0, n);
    st.ue = s.segment(n, n);
    st.w = s.segment(2 * n, n);
    return st;
  }

  State& operator+=(const State& d) {
    ui += d.ui;
    ue += d.ue;
    w += d.w;
    return *this;
  }
};

}  // namespace bidomain
