#pragma once

#include <Eigen/Dense>

#include "trajpred/common.hpp"

namespace trajpred {

// Cubic B-spline resampling.
//
// Interprets a length-n sequence of samples as points on a clamped
// uniform cubic B-spline curve (control points recovered by collocation)
// and re-evaluates the curve at m uniformly spaced parameters. The
// resulting m x n matrix maps samples to resampled points; it is the
// identity for m == n, each row sums to 1, and the first/last resampled
// points coincide with the first/last samples.

namespace detail {

// Clamped uniform knot vector for n control points, degree 3.
inline std::vector<double> clamped_knots(int n) {
  const int degree = 3;
  std::vector<double> t(n + degree + 1);
  for (int i = 0; i <= degree; ++i) t[i] = 0.0;
  for (int i = degree + 1; i < n; ++i) t[i] = static_cast<double>(i - degree);
  for (int i = n; i < n + degree + 1; ++i) t[i] = static_cast<double>(n - degree);
  return t;
}

// Cox-de Boor, all n basis values at parameter u.
inline Vec basis_row(double u, int n, const std::vector<double>& knots) {
  const int degree = 3;
  const double u_max = knots[n];
  if (u >= u_max) {  // right endpoint: only the last basis function is active
    Vec row = Vec::Zero(n);
    row(n - 1) = 1.0;
    return row;
  }
  Vec row = Vec::Zero(n);
  // degree-0 seeds
  std::vector<double> b(n + degree, 0.0);
  for (int i = 0; i < n + degree; ++i) {
    b[i] = (u >= knots[i] && u < knots[i + 1]) ? 1.0 : 0.0;
  }
  for (int d = 1; d <= degree; ++d) {
    for (int i = 0; i < n + degree - d; ++i) {
      double left = 0.0, right = 0.0;
      const double den1 = knots[i + d] - knots[i];
      const double den2 = knots[i + d + 1] - knots[i + 1];
      if (den1 > 0.0) left = (u - knots[i]) / den1 * b[i];
      if (den2 > 0.0) right = (knots[i + d + 1] - u) / den2 * b[i + 1];
      b[i] = left + right;
    }
  }
  for (int i = 0; i < n; ++i) row(i) = b[i];
  return row;
}

// m x n matrix of basis values at m uniform parameters over the domain.
inline Mat basis_at_uniform(int m, int n) {
  const auto knots = clamped_knots(n);
  const double u_max = knots[n];
  Mat out(m, n);
  for (int i = 0; i < m; ++i) {
    const double u = (m == 1) ? 0.0 : u_max * static_cast<double>(i) / static_cast<double>(m - 1);
    out.row(i) = basis_row(u, n, knots).transpose();
  }
  return out;
}

}  // namespace detail

// Single-channel resampling matrix, t_target x t_win.
inline Mat bspline_channel_matrix(int t_target, int t_win) {
  if (t_target < 2) throw ArgError("bspline_matrix: target length must be >= 2");
  if (t_win < 4) throw ArgError("bspline_matrix: window length must be >= 4 for a cubic spline");
  const Mat collocation = detail::basis_at_uniform(t_win, t_win);
  const Mat eval = detail::basis_at_uniform(t_target, t_win);
  // samples -> control points -> resampled curve: eval * collocation^-1,
  // via collocation^T x^T = eval^T
  return collocation.transpose().partialPivLu().solve(eval.transpose()).transpose();
}

// Two-channel resampling matrix over interleaved (x1,y1,...,xT,yT)
// vectors, shape (2*t_target) x (2*t_win): maps a column vector of
// 2*t_win interleaved coordinates to 2*t_target resampled ones. The x
// and y channels form one block each after de-interleaving.
inline Mat bspline_matrix(int t_target, int t_win) {
  const Mat block = bspline_channel_matrix(t_target, t_win);
  Mat c = Mat::Zero(2 * t_target, 2 * t_win);
  for (int i = 0; i < t_target; ++i)
    for (int j = 0; j < t_win; ++j) {
      c(2 * i, 2 * j) = block(i, j);
      c(2 * i + 1, 2 * j + 1) = block(i, j);
    }
  return c;
}

}  // namespace trajpred
