#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "trajpred/anchors.hpp"

using namespace trajpred;

namespace {

SingularSpace toy_space(std::uint64_t seed = 11) {
  Rng rng(seed);
  GistMatrix g;
  g.t_win = 12;
  g.rows = rng.gaussian_matrix(60, 24);
  g.rows.col(0).setZero();
  g.rows.col(1).setZero();
  return fit_svd(g, 4);
}

TraversabilityMap open_map(int n = 30, double m_per_px = 1.0) {
  Eigen::Matrix3d h;
  h << 1.0 / m_per_px, 0, 0, 0, 1.0 / m_per_px, 0, 0, 0, 1;
  return TraversabilityMap::from_grid(
      n, n, std::vector<std::uint8_t>(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 1),
      Homography(h));
}

}  // namespace

TEST_CASE("one cluster is the mean") {
  Mat pts(2, 4);
  pts << 1, 0, 0, 0, 3, 0, 0, 0;
  const AnchorSet a = cluster_prototypes(pts, 1, 9);
  REQUIRE(a.p.rows() == 1);
  REQUIRE(a.p(0, 0) == Catch::Approx(2.0));
  REQUIRE(a.p.row(0).tail(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two well-separated blobs match the exhaustive 2-means oracle") {
  Rng rng(123);
  Mat pts(20, 4);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 4; ++j) pts(i, j) = (j == 0 ? 5.0 : 0.0) + 0.2 * rng.gaussian();
  for (int i = 10; i < 20; ++i)
    for (int j = 0; j < 4; ++j) pts(i, j) = (j == 0 ? -5.0 : 1.0) + 0.2 * rng.gaussian();

  const AnchorSet a = cluster_prototypes(pts, 2, 9);
  Mat expect = oracle::exhaustive_two_means(pts);
  // order both lexicographically before comparing
  if (expect(0, 0) > expect(1, 0)) expect.row(0).swap(expect.row(1));
  REQUIRE((a.p - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("as many clusters as points returns the points") {
  Rng rng(5);
  Mat pts = rng.gaussian_matrix(6, 4);
  const AnchorSet a = cluster_prototypes(pts, 6, 9);
  // every point appears exactly once among the centroids
  for (int i = 0; i < 6; ++i) {
    double best = 1e9;
    for (int c = 0; c < 6; ++c) best = std::min(best, (a.p.row(c) - pts.row(i)).norm());
    REQUIRE(best < 1e-12);
  }
}

TEST_CASE("clustering is deterministic given the seed") {
  Rng rng(6);
  const Mat pts = rng.gaussian_matrix(40, 4);
  const AnchorSet a = cluster_prototypes(pts, 5, 1234);
  const AnchorSet b = cluster_prototypes(pts, 5, 1234);
  REQUIRE((a.p - b.p).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fewer rows than clusters is an error") {
  Mat pts = Mat::Zero(3, 4);
  REQUIRE_THROWS_AS(cluster_prototypes(pts, 4, 9), ClusterError);
}

TEST_CASE("adaptation is the identity on an all-traversable map") {
  const SingularSpace space = toy_space();
  const VectorField field = build_vector_field(open_map());
  Rng rng(8);
  AnchorSet a;
  a.p = rng.gaussian_matrix(5, 4);
  const AnchorSet b = adapt_anchors(a, field, space, {15.0, 15.0});
  REQUIRE((b.p - a.p).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(b.adapted);
  REQUIRE_FALSE(b.max_iter_reached);
  REQUIRE(b.iterations == 0);
}

TEST_CASE("adaptation pushes a path off a blocked strip") {
  // 30x30 open map with a blocked horizontal band; ego frame below it
  const int n = 30;
  std::vector<std::uint8_t> g(static_cast<std::size_t>(n) * n, 1);
  for (int r = 12; r <= 13; ++r)
    for (int c = 0; c < n; ++c) g[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(c)] = 0;
  const auto map = TraversabilityMap::from_grid(n, n, std::move(g), Homography());
  const VectorField field = build_vector_field(map);
  const SingularSpace space = fixtures::structured_space();

  // anchor whose reconstructed path climbs diagonally across the band
  Path ramp(12, 2);
  for (int t = 0; t < 12; ++t) {
    ramp(t, 0) = 0.5 * t;
    ramp(t, 1) = 0.55 * t;
  }
  RowVec flat = flatten_path(ramp);
  AnchorSet a;
  a.p = project(flat, space, 12);

  const Eigen::Vector2d ego(8.0, 8.0);
  auto blocked_count = [&](const Mat& coords) {
    const Mat path = reconstruct(coords, space, 12);
    int blocked = 0;
    for (int t = 0; t < 12; ++t) {
      const Eigen::Vector2d pt(path(0, 2 * t) + ego.x(), path(0, 2 * t + 1) + ego.y());
      if (!point_traversable(field, pt)) ++blocked;
    }
    return blocked;
  };
  const int before = blocked_count(a.p);
  REQUIRE(before > 0);  // the fixture really crosses the band
  const AnchorSet b = adapt_anchors(a, field, space, ego);
  REQUIRE(b.adapted);
  const int after = blocked_count(b.p);
  REQUIRE(after <= before);
  if (!b.max_iter_reached) REQUIRE(after == 0);
}

TEST_CASE("single-step convergence on the 1x3 corridor matches the field value") {
  // toy 1-step case: a space whose only pattern moves every point equally,
  // so one field application lands exactly on the traversable cell
  Mat rows(4, 24);
  rows.setZero();
  for (int t = 0; t < 12; ++t) rows(0, 2 * t) = 1.0;  // constant x pattern
  rows.row(1) = rows.row(0);
  rows.row(2) = rows.row(0);
  rows.row(3) = rows.row(0);
  const SingularSpace space = fit_svd(GistMatrix{rows, 12}, 1);

  const auto map = TraversabilityMap::from_grid(1, 3, {0, 1, 0}, Homography());
  const VectorField field = build_vector_field(map);

  AnchorSet a;
  a.p = Mat::Zero(1, 1);  // path identically at the ego position
  const Eigen::Vector2d ego(0.0, 0.0);  // blocked cell, F = +1 m in x
  const AnchorSet b = adapt_anchors(a, field, space, ego);
  // displacement (+1 m at every point) projected on the constant pattern
  // and applied once moves the whole path onto the traversable cell
  const Mat path = reconstruct(b.p, space, 12);
  for (int t = 0; t < 12; ++t) {
    REQUIRE(path(0, 2 * t) == Catch::Approx(1.0).margin(1e-3));
  }
  REQUIRE_FALSE(b.max_iter_reached);
}

TEST_CASE("adaptation at equilibrium is idempotent") {
  const int n = 30;
  std::vector<std::uint8_t> g(static_cast<std::size_t>(n) * n, 1);
  for (int r = 10; r <= 14; ++r)
    for (int c = 10; c <= 14; ++c) g[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(c)] = 0;
  const auto map = TraversabilityMap::from_grid(n, n, std::move(g), Homography());
  const VectorField field = build_vector_field(map);
  const SingularSpace space = fixtures::structured_space();

  Rng rng(12);
  AnchorSet a;
  a.p = 2.0 * rng.gaussian_matrix(6, 4);
  const Eigen::Vector2d ego(9.0, 12.0);
  const AnchorSet once = adapt_anchors(a, field, space, ego);
  REQUIRE_FALSE(once.max_iter_reached);  // the fixture really reaches equilibrium
  const AnchorSet twice = adapt_anchors(once, field, space, ego);
  REQUIRE((twice.p - once.p).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("adaptation commutes with a world translation") {
  // translate the map's world frame and the ego position together
  const int n = 24;
  std::vector<std::uint8_t> g(static_cast<std::size_t>(n) * n, 1);
  for (int r = 8; r <= 12; ++r)
    for (int c = 8; c <= 12; ++c) g[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(c)] = 0;

  const Eigen::Vector2d shift(100.0, -40.0);
  Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d h2 = Eigen::Matrix3d::Identity();
  h2(0, 2) = -shift.x();  // world' = world + shift maps to the same pixels
  h2(1, 2) = -shift.y();

  auto grid_copy = g;
  const auto map1 = TraversabilityMap::from_grid(n, n, std::move(g), Homography(h));
  const auto map2 = TraversabilityMap::from_grid(n, n, std::move(grid_copy), Homography(h2));
  const VectorField f1 = build_vector_field(map1);
  const VectorField f2 = build_vector_field(map2);

  const SingularSpace space = toy_space();
  Rng rng(21);
  AnchorSet a;
  a.p = 2.0 * rng.gaussian_matrix(4, 4);
  const Eigen::Vector2d ego(7.0, 10.0);
  const AnchorSet b1 = adapt_anchors(a, f1, space, ego);
  const AnchorSet b2 = adapt_anchors(a, f2, space, ego + shift);
  REQUIRE((b1.p - b2.p).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("anchor shape is preserved") {
  const SingularSpace space = toy_space();
  const VectorField field = build_vector_field(open_map());
  Rng rng(31);
  AnchorSet a;
  a.p = rng.gaussian_matrix(7, 4);
  const AnchorSet b = adapt_anchors(a, field, space, {3.0, 3.0});
  REQUIRE(b.p.rows() == 7);
  REQUIRE(b.p.cols() == 4);
}
