#pragma once

#include <Eigen/Dense>

#include <array>

#include "trajpred/common.hpp"

namespace trajpred {

// World (meters) <-> pixel transform. Pixel coordinates are (u, v) with
// u = column and v = row; integer coordinates sit on cell centers.
class Homography {
 public:
  Homography() : h_(Eigen::Matrix3d::Identity()), hinv_(Eigen::Matrix3d::Identity()) {}

  explicit Homography(const Eigen::Matrix3d& world_to_pixel) : h_(world_to_pixel) {
    if (std::abs(h_.determinant()) < 1e-15) throw ConfigError("homography is not invertible");
    hinv_ = h_.inverse();
  }

  static Homography from_row_major(const std::array<double, 9>& a) {
    Eigen::Matrix3d m;
    m << a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8];
    return Homography(m);
  }

  Eigen::Vector2d to_pixel(const Eigen::Vector2d& world) const { return apply(h_, world); }
  Eigen::Vector2d to_world(const Eigen::Vector2d& pixel) const { return apply(hinv_, pixel); }

  // Meters per pixel, from the linear part. Informational; exact cell
  // positions always go through to_world.
  double meters_per_pixel() const {
    const double det = h_(0, 0) * h_(1, 1) - h_(0, 1) * h_(1, 0);
    if (std::abs(det) < 1e-15) throw ConfigError("homography has degenerate linear part");
    return 1.0 / std::sqrt(std::abs(det));
  }

  const Eigen::Matrix3d& matrix() const { return h_; }

  std::array<double, 9> row_major() const {
    return {h_(0, 0), h_(0, 1), h_(0, 2), h_(1, 0), h_(1, 1), h_(1, 2), h_(2, 0), h_(2, 1), h_(2, 2)};
  }

 private:
  static Eigen::Vector2d apply(const Eigen::Matrix3d& m, const Eigen::Vector2d& p) {
    Eigen::Vector3d q = m * Eigen::Vector3d(p.x(), p.y(), 1.0);
    if (std::abs(q.z()) < 1e-15) throw DataError("homography maps point to infinity");
    return {q.x() / q.z(), q.y() / q.z()};
  }

  Eigen::Matrix3d h_;
  Eigen::Matrix3d hinv_;
};

}  // namespace trajpred
