#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

#include "trajpred/common.hpp"
#include "trajpred/singular_space.hpp"
#include "trajpred/traversability.hpp"

namespace trajpred {

struct ClusterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// S prototype paths as Singular-space coordinates.
struct AnchorSet {
  Mat p;  // S x K
  bool adapted = false;
  bool max_iter_reached = false;
  std::uint64_t seed = 0;   // clustering seed
  int iterations = 0;       // k-means iterations, then adaptation iterations

  int count() const { return static_cast<int>(p.rows()); }
  int dim() const { return static_cast<int>(p.cols()); }
};

namespace detail {

inline double kmeans_assign(const Mat& x, const Mat& centroids, std::vector<int>& assign) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::max();
    int arg = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = (x.row(i) - centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    assign[static_cast<std::size_t>(i)] = arg;
    inertia += best;
  }
  return inertia;
}

// k-means++ seeding.
inline Mat kmeans_seed(const Mat& x, int s, Rng& rng) {
  const Eigen::Index n = x.rows();
  Mat c(s, x.cols());
  c.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Vec d2 = (x.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < s; ++j) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    } else {
      double target = rng.uniform() * total, acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    }
    c.row(j) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - c.row(j)).rowwise().squaredNorm());
  }
  return c;
}

inline std::pair<Mat, int> kmeans_run(const Mat& x, int s, Rng& rng, double* inertia_out) {
  Mat centroids = kmeans_seed(x, s, rng);
  std::vector<int> assign(static_cast<std::size_t>(x.rows()), -1);
  std::vector<int> prev;
  int iters = 0;
  for (; iters < 100; ++iters) {
    kmeans_assign(x, centroids, assign);
    if (assign == prev) break;
    prev = assign;
    Mat sums = Mat::Zero(s, x.cols());
    std::vector<int> counts(static_cast<std::size_t>(s), 0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < s; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      } else {
        // re-seed an empty cluster at the point farthest from its centroid
        Eigen::Index far = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          const double d = (x.row(i) - centroids.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
          if (d > best) {
            best = d;
            far = i;
          }
        }
        centroids.row(c) = x.row(far);
      }
    }
  }
  *inertia_out = kmeans_assign(x, centroids, assign);
  return {centroids, iters};
}

}  // namespace detail

// K-means over future-trajectory coordinates; deterministic given the
// seed. Centroid rows come back sorted lexicographically.
inline AnchorSet cluster_prototypes(const Mat& coords, int s, std::uint64_t seed, int restarts = 8) {
  if (s < 1) throw ArgError("cluster_prototypes: s must be >= 1");
  if (coords.rows() < s) {
    throw ClusterError("cluster_prototypes: " + std::to_string(coords.rows()) +
                       " rows < s=" + std::to_string(s));
  }
  Rng rng(derive_seed(seed, "kmeans"));
  Mat best_c;
  double best_inertia = std::numeric_limits<double>::max();
  int best_iters = 0;
  for (int r = 0; r < restarts; ++r) {
    double inertia = 0.0;
    auto [c, iters] = detail::kmeans_run(coords, s, rng, &inertia);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_c = c;
      best_iters = iters;
    }
  }
  std::vector<int> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (Eigen::Index j = 0; j < best_c.cols(); ++j) {
      if (best_c(a, j) != best_c(b, j)) return best_c(a, j) < best_c(b, j);
    }
    return a < b;
  });
  AnchorSet set;
  set.p.resize(s, coords.cols());
  for (int i = 0; i < s; ++i) set.p.row(i) = best_c.row(order[static_cast<std::size_t>(i)]);
  set.seed = seed;
  set.iterations = best_iters;
  return set;
}

struct AdaptOptions {
  double eps_eq = 1e-3;  // meters
  int max_iter = 50;
  int t_fut = 12;
};

// Fixed-point anchor deformation: reconstruct each prototype to a world
// path around the agent's last observed position, read the traversability
// field along it, project the displacement sequence back into Singular
// space and add it, until the field vanishes along the path.
inline AnchorSet adapt_anchors(const AnchorSet& anchors, const VectorField& field,
                               const SingularSpace& space, const Eigen::Vector2d& last_obs_world,
                               const AdaptOptions& opt = {}) {
  AnchorSet out = anchors;
  out.adapted = true;
  out.max_iter_reached = false;
  int max_iters_used = 0;

  const Mat to_coord = space.resampling(opt.t_fut) * space.v_k;  // (2*t_fut) x K

  for (Eigen::Index s = 0; s < out.p.rows(); ++s) {
    double step = 1.0;
    RowVec prev_dp;
    int it = 0;
    bool converged = false;
    for (; it <= opt.max_iter; ++it) {
      const Mat path_ego = reconstruct(out.p.row(s), space, opt.t_fut);  // 1 x (2*t_fut)
      RowVec disp(2 * opt.t_fut);
      double max_disp = 0.0;
      for (int t = 0; t < opt.t_fut; ++t) {
        const Eigen::Vector2d pt(path_ego(0, 2 * t) + last_obs_world.x(),
                                 path_ego(0, 2 * t + 1) + last_obs_world.y());
        const Eigen::Vector2d d = sample_field(field, pt);
        disp(2 * t) = d.x();
        disp(2 * t + 1) = d.y();
        max_disp = std::max(max_disp, d.norm());
      }
      if (max_disp < opt.eps_eq) {
        converged = true;
        break;
      }
      if (it == opt.max_iter) break;
      RowVec dp = disp * to_coord;  // back into Singular space
      if (prev_dp.size() > 0) {
        if (dp.dot(prev_dp) < 0.0) {
          step = std::max(0.5 * step, 1.0 / 64.0);  // oscillation damping
        } else {
          // the interpolated field fades toward obstacle boundaries; grow
          // the step while progress stays monotone so the escape does not
          // crawl
          step = std::min(1.2 * step, 4.0);
        }
      }
      out.p.row(s) += step * dp;
      prev_dp = dp;
    }
    max_iters_used = std::max(max_iters_used, it);
    if (!converged) out.max_iter_reached = true;
  }
  out.iterations = max_iters_used;
  return out;
}

}  // namespace trajpred
