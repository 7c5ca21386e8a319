#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>

#include <nlohmann/json.hpp>

#include "trajpred/bspline.hpp"
#include "trajpred/common.hpp"
#include "trajpred/dataset.hpp"

namespace trajpred {

// L x (2*t_win) matrix of flattened trajectory segments. Each row is a
// contiguous t_win-frame segment translated so its first point is the
// origin, interleaved (x1,y1,...,xT,yT).
struct GistMatrix {
  Mat rows;
  int t_win = 12;

  Eigen::Index count() const { return rows.rows(); }
};

namespace detail {

inline void append_gists_from_track(const Path& track, int t_win, std::vector<RowVec>& out) {
  for (Eigen::Index s = 0; s + t_win <= track.rows(); ++s) {
    Path seg = track.middleRows(s, t_win);
    const Eigen::RowVector2d origin = seg.row(0);
    seg.rowwise() -= origin;  // first point at the origin
    out.push_back(flatten_path(seg));
  }
}

}  // namespace detail

inline GistMatrix build_gists(const std::vector<WindowSet>& train, int t_win, int k) {
  std::vector<RowVec> segs;
  for (const auto& set : train) {
    for (const auto& w : set.windows) {
      Path track(w.hist.rows() + w.fut.rows(), 2);
      track << w.hist, w.fut;
      detail::append_gists_from_track(track, t_win, segs);
    }
  }
  if (segs.size() < static_cast<std::size_t>(k)) {
    throw BuildError("gist matrix needs at least " + std::to_string(k) + " segments, got " +
                     std::to_string(segs.size()));
  }
  GistMatrix g;
  g.t_win = t_win;
  g.rows.resize(static_cast<Eigen::Index>(segs.size()), 2 * t_win);
  for (std::size_t i = 0; i < segs.size(); ++i) g.rows.row(static_cast<Eigen::Index>(i)) = segs[i];
  return g;
}

// Shared motion basis: the top-K right singular vectors of the gist
// matrix, plus cached B-spline resampling matrices per trajectory length.
class SingularSpace {
 public:
  SingularSpace() : cache_(std::make_shared<Cache>()) {}

  Mat v_k;      // (2*t_win) x k, orthonormal columns
  Vec sigma;    // k singular values, descending (0 for padded directions)
  int k = 4;
  int t_win = 12;
  bool rank_deficient = false;
  std::string normalization = "ego-last-obs";

  const Mat& resampling(int t) const {
    if (t == t_win) return identity_resampling();
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->c.find(t);
    if (it == cache_->c.end()) it = cache_->c.emplace(t, bspline_matrix(t, t_win)).first;
    return it->second;
  }

  const Mat& resampling_pinv(int t) const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->cpinv.find(t);
    if (it == cache_->cpinv.end()) {
      Mat c = (t == t_win) ? Mat::Identity(2 * t_win, 2 * t_win) : bspline_matrix(t, t_win);
      it = cache_->cpinv.emplace(t, pseudo_inverse(c)).first;
    }
    return it->second;
  }

  static Mat pseudo_inverse(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double tol = std::max(m.rows(), m.cols()) * svd.singularValues()(0) * 1e-14;
    Vec inv = svd.singularValues();
    for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) > tol ? 1.0 / inv(i) : 0.0;
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  }

 private:
  const Mat& identity_resampling() const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->c.find(t_win);
    if (it == cache_->c.end()) it = cache_->c.emplace(t_win, Mat::Identity(2 * t_win, 2 * t_win)).first;
    return it->second;
  }

  struct Cache {
    std::mutex mu;
    std::map<int, Mat> c;
    std::map<int, Mat> cpinv;
  };
  std::shared_ptr<Cache> cache_;  // shared across copies; guarded by mu
};

inline SingularSpace fit_svd(const GistMatrix& g, int k) {
  const Eigen::Index dim = g.rows.cols();
  if (k < 1 || k > std::min<Eigen::Index>(g.rows.rows(), dim)) {
    throw ArgError("fit_svd: k must be in [1, min(L, 2*t_win)]");
  }
  if (!g.rows.allFinite()) throw ArgError("fit_svd: gist matrix has non-finite entries");

  Eigen::BDCSVD<Mat> svd(g.rows, Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double tol = std::max(g.rows.rows(), dim) * (sv.size() ? sv(0) : 0.0) *
                     std::numeric_limits<double>::epsilon();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;

  SingularSpace space;
  space.k = k;
  space.t_win = g.t_win;
  space.v_k = Mat::Zero(dim, k);
  space.sigma = Vec::Zero(k);

  const int take = std::min(rank, k);
  space.v_k.leftCols(take) = svd.matrixV().leftCols(take);
  space.sigma.head(take) = sv.head(take);

  if (take < k) {
    space.rank_deficient = true;
    std::cerr << "warning: gist matrix rank " << rank << " < k=" << k
              << "; padding basis with an orthonormal completion\n";
    // Gram-Schmidt over canonical vectors.
    int filled = take;
    for (Eigen::Index cand = 0; cand < dim && filled < k; ++cand) {
      Vec v = Vec::Zero(dim);
      v(cand) = 1.0;
      for (int j = 0; j < filled; ++j) v -= space.v_k.col(j).dot(v) * space.v_k.col(j);
      const double n = v.norm();
      if (n > 1e-8) {
        space.v_k.col(filled++) = v / n;
      }
    }
    if (filled < k) throw BuildError("fit_svd: could not complete an orthonormal basis");
  }

  // Deterministic sign: largest-magnitude entry of each basis vector is
  // positive.
  for (int j = 0; j < k; ++j) {
    Eigen::Index imax = 0;
    space.v_k.col(j).cwiseAbs().maxCoeff(&imax);
    if (space.v_k(imax, j) < 0) space.v_k.col(j) = -space.v_k.col(j);
  }
  return space;
}

// batch: N x (2*t) of interleaved, frame-normalized trajectories.
// Returns N x k coordinates in the Singular space.
inline Mat project(const Mat& batch, const SingularSpace& space, int t) {
  if (batch.cols() != 2 * t) {
    throw ShapeError("project: batch width " + std::to_string(batch.cols()) + " != 2*t=" +
                     std::to_string(2 * t));
  }
  if (t == space.t_win) return batch * space.v_k;
  return batch * space.resampling(t) * space.v_k;
}

// coords: N x k. Returns N x (2*t) trajectories in the normalized frame.
inline Mat reconstruct(const Mat& coords, const SingularSpace& space, int t) {
  if (coords.cols() != space.k) throw ShapeError("reconstruct: coordinate width != k");
  if (t == space.t_win) return coords * space.v_k.transpose();
  return coords * space.v_k.transpose() * space.resampling_pinv(t);
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json space_to_json(const SingularSpace& s) {
  nlohmann::ordered_json j;
  j["k"] = s.k;
  j["t_win"] = s.t_win;
  j["normalization"] = s.normalization;
  j["rank_deficient"] = s.rank_deficient;
  j["sigma"] = std::vector<double>(s.sigma.data(), s.sigma.data() + s.sigma.size());
  std::vector<std::vector<double>> v(static_cast<std::size_t>(s.v_k.rows()));
  for (Eigen::Index i = 0; i < s.v_k.rows(); ++i) {
    v[static_cast<std::size_t>(i)].assign(s.v_k.row(i).begin(), s.v_k.row(i).end());
  }
  j["v_k"] = v;
  return j;
}

inline SingularSpace space_from_json(const nlohmann::ordered_json& j) {
  SingularSpace s;
  s.k = j.at("k").get<int>();
  s.t_win = j.at("t_win").get<int>();
  s.normalization = j.at("normalization").get<std::string>();
  s.rank_deficient = j.at("rank_deficient").get<bool>();
  const auto sig = j.at("sigma").get<std::vector<double>>();
  s.sigma = Eigen::Map<const Vec>(sig.data(), static_cast<Eigen::Index>(sig.size()));
  const auto v = j.at("v_k").get<std::vector<std::vector<double>>>();
  s.v_k.resize(static_cast<Eigen::Index>(v.size()), s.k);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (static_cast<int>(v[i].size()) != s.k) throw ConfigError("space artifact: bad v_k row width");
    for (int c = 0; c < s.k; ++c) s.v_k(static_cast<Eigen::Index>(i), c) = v[i][static_cast<std::size_t>(c)];
  }
  return s;
}

inline void save_space(const SingularSpace& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << space_to_json(s).dump(1) << "\n";
}

inline SingularSpace load_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  nlohmann::ordered_json j;
  in >> j;
  return space_from_json(j);
}

}  // namespace trajpred
