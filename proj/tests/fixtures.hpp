#pragma once

#include "trajpred/singular_space.hpp"

namespace fixtures {

using trajpred::Mat;
using trajpred::SingularSpace;
using trajpred::Vec;

// A hand-built motion basis whose span contains straight and gently
// bending paths that start at the origin: per-channel linear and
// quadratic ramps, orthonormalized. Adaptation fixtures need shifts along
// a path to be representable, which a random basis does not guarantee.
inline SingularSpace structured_space() {
  const int t_win = 12;
  Mat v = Mat::Zero(2 * t_win, 4);
  for (int t = 0; t < t_win; ++t) {
    v(2 * t, 0) = t;          // x linear
    v(2 * t + 1, 1) = t;      // y linear
    v(2 * t, 2) = t * t;      // x quadratic
    v(2 * t + 1, 3) = t * t;  // y quadratic
  }
  // Gram–Schmidt
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < j; ++i) v.col(j) -= v.col(i).dot(v.col(j)) * v.col(i);
    v.col(j).normalize();
  }
  SingularSpace s;
  s.k = 4;
  s.t_win = t_win;
  s.v_k = v;
  s.sigma = Vec::Ones(4);
  return s;
}

}  // namespace fixtures
