#pragma once

#include <Eigen/Dense>

#include "trajpred/common.hpp"

namespace trajpred {

// Diffusion variance schedule. betas are linear between beta_start and
// beta_end; alphas_bar(m-1) = prod_{i<=m} (1 - beta_i).
struct NoiseSchedule {
  int m_steps = 10;
  Vec betas;
  Vec alphas_bar;

  static NoiseSchedule make(int m, double beta_start = 1e-4, double beta_end = 0.05) {
    if (m < 1) throw ArgError("noise schedule: m must be >= 1");
    if (beta_start <= 0.0 || beta_end >= 1.0 || beta_end < beta_start)
      throw ArgError("noise schedule: need 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.m_steps = m;
    s.betas.resize(m);
    for (int i = 0; i < m; ++i) {
      s.betas(i) = (m == 1) ? beta_start
                            : beta_start + (beta_end - beta_start) * static_cast<double>(i) /
                                               static_cast<double>(m - 1);
    }
    s.alphas_bar.resize(m);
    double prod = 1.0;
    for (int i = 0; i < m; ++i) {
      prod *= 1.0 - s.betas(i);
      s.alphas_bar(i) = prod;
    }
    return s;
  }

  // alpha_bar at step m, with alpha_bar(0) = 1.
  double alpha_bar(int m) const {
    if (m < 0 || m > m_steps) throw ArgError("alpha_bar: step out of range");
    return m == 0 ? 1.0 : alphas_bar(m - 1);
  }
};

// Closed-form forward corruption: y_m = sqrt(abar_m) y0 + sqrt(1-abar_m) eps.
inline Mat forward_diffuse(const Mat& y0, int m, const Mat& noise, const NoiseSchedule& s) {
  if (m < 1 || m > s.m_steps) throw ArgError("forward_diffuse: m out of [1, M]");
  if (noise.rows() != y0.rows() || noise.cols() != y0.cols())
    throw ShapeError("forward_diffuse: noise shape != y0 shape");
  const double ab = s.alpha_bar(m);
  return std::sqrt(ab) * y0 + std::sqrt(1.0 - ab) * noise;
}

// Deterministic (eta = 0) DDIM reverse update from step m to m-1 given the
// predicted noise. clip_y0 bounds the implied clean sample; with
// normalized latents this keeps a half-trained estimator from feeding
// back on itself over the chain. Infinity disables it.
inline Mat ddim_step(const Mat& y_m, const Mat& eps_hat, int m, const NoiseSchedule& s,
                     double clip_y0 = std::numeric_limits<double>::infinity()) {
  if (m < 1 || m > s.m_steps) throw ArgError("ddim_step: m out of [1, M]");
  if (eps_hat.rows() != y_m.rows() || eps_hat.cols() != y_m.cols())
    throw ShapeError("ddim_step: eps shape != y shape");
  const double ab_m = s.alpha_bar(m);
  const double ab_prev = s.alpha_bar(m - 1);
  Mat y0_pred = (y_m - std::sqrt(1.0 - ab_m) * eps_hat) / std::sqrt(ab_m);
  if (std::isfinite(clip_y0)) y0_pred = y0_pred.cwiseMax(-clip_y0).cwiseMin(clip_y0);
  return std::sqrt(ab_prev) * y0_pred + std::sqrt(1.0 - ab_prev) * eps_hat;
}

}  // namespace trajpred
