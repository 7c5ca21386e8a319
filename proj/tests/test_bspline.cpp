#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "trajpred/bspline.hpp"

using namespace trajpred;

TEST_CASE("same-length resampling is the identity") {
  const Mat c = bspline_matrix(12, 12);
  REQUIRE(c.rows() == 24);
  REQUIRE(c.cols() == 24);
  const double err = (c - Mat::Identity(24, 24)).cwiseAbs().maxCoeff();
  REQUIRE(err < 1e-6);
}

TEST_CASE("rows are a partition of unity") {
  for (int t_target : {2, 3, 5, 8, 12, 20}) {
    const Mat b = bspline_channel_matrix(t_target, 12);
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      REQUIRE(std::abs(b.row(i).sum() - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("constant path stays constant at any length") {
  const Mat c = bspline_matrix(7, 12);
  RowVec path(24);
  for (int t = 0; t < 12; ++t) {
    path(2 * t) = 3.25;
    path(2 * t + 1) = -1.5;
  }
  const RowVec out = path * c.transpose();
  for (int t = 0; t < 7; ++t) {
    REQUIRE(out(2 * t) == Catch::Approx(3.25).margin(1e-9));
    REQUIRE(out(2 * t + 1) == Catch::Approx(-1.5).margin(1e-9));
  }
}

TEST_CASE("straight line downsampled to 2 points stays on the line") {
  // unit steps along x
  std::vector<double> xs(12), ys(12);
  for (int t = 0; t < 12; ++t) {
    xs[static_cast<std::size_t>(t)] = t;
    ys[static_cast<std::size_t>(t)] = 0.5 * t + 1.0;
  }
  const Mat b = bspline_channel_matrix(2, 12);
  Eigen::Map<const Vec> xv(xs.data(), 12), yv(ys.data(), 12);
  const Vec rx = b * xv, ry = b * yv;
  // oracle: direct evaluation of the interpolating spline at both parameters
  for (int i = 0; i < 2; ++i) {
    const double frac = i;  // 0 and 1
    REQUIRE(rx(i) == Catch::Approx(oracle::spline_interp_eval(xs, frac)).margin(1e-3));
    REQUIRE(ry(i) == Catch::Approx(oracle::spline_interp_eval(ys, frac)).margin(1e-3));
    // and the resampled point sits on the original line y = x/2 + 1
    REQUIRE(ry(i) == Catch::Approx(0.5 * rx(i) + 1.0).margin(1e-3));
  }
}

TEST_CASE("channel matrix matches the independent spline evaluation at interior points") {
  Rng rng(99);
  std::vector<double> ys(12);
  for (auto& y : ys) y = rng.uniform(-2.0, 2.0);
  Eigen::Map<const Vec> yv(ys.data(), 12);
  for (int t_target : {5, 8}) {
    const Mat b = bspline_channel_matrix(t_target, 12);
    const Vec out = b * yv;
    for (int i = 0; i < t_target; ++i) {
      const double frac = static_cast<double>(i) / (t_target - 1);
      REQUIRE(out(i) == Catch::Approx(oracle::spline_interp_eval(ys, frac)).margin(1e-8));
    }
  }
}

TEST_CASE("endpoints interpolate the first and last samples") {
  Rng rng(5);
  Vec y = rng.gaussian_matrix(12, 1);
  const Mat b = bspline_channel_matrix(9, 12);
  const Vec out = b * y;
  REQUIRE(out(0) == Catch::Approx(y(0)).margin(1e-9));
  REQUIRE(out(8) == Catch::Approx(y(11)).margin(1e-9));
}

TEST_CASE("target length below 2 is rejected") {
  REQUIRE_THROWS_AS(bspline_matrix(1, 12), ArgError);
  REQUIRE_THROWS_AS(bspline_matrix(0, 12), ArgError);
}
