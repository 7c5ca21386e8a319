#pragma once

#include <memory>
#include <string>
#include <vector>

#include "trajpred/common.hpp"
#include "trajpred/dataset.hpp"
#include "trajpred/model.hpp"

namespace trajpred {

enum class PredictorKind { singular_trajectory, constant_velocity, nearest_anchor };

inline std::string predictor_name(PredictorKind k) {
  switch (k) {
    case PredictorKind::singular_trajectory: return "singular_trajectory";
    case PredictorKind::constant_velocity: return "constant_velocity";
    case PredictorKind::nearest_anchor: return "nearest_anchor";
  }
  return "?";
}

inline PredictorKind predictor_from_name(const std::string& s) {
  for (PredictorKind k : {PredictorKind::singular_trajectory, PredictorKind::constant_velocity,
                          PredictorKind::nearest_anchor}) {
    if (predictor_name(k) == s) return k;
  }
  throw ConfigError("unknown predictor: " + s);
}

// Last-step velocity extrapolated for t_fut frames, tiled S times.
inline std::vector<Path> constant_velocity_baseline(const Path& hist, int t_fut, int samples) {
  if (hist.rows() < 2) throw ArgError("constant velocity baseline needs at least 2 observed frames");
  const Eigen::RowVector2d last = hist.row(hist.rows() - 1);
  const Eigen::RowVector2d vel = last - hist.row(hist.rows() - 2);
  Path fut(t_fut, 2);
  for (int t = 0; t < t_fut; ++t) fut.row(t) = last + static_cast<double>(t + 1) * vel;
  return std::vector<Path>(static_cast<std::size_t>(samples), fut);
}

// Uniform prediction interface over the model and the sanity baselines.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual PredictorKind kind() const = 0;
  // S world-frame sample paths for each window of a co-present group.
  virtual std::vector<std::vector<Path>> predict(const std::vector<const TrajectoryWindow*>& group,
                                                 const VectorField& field, Rng& rng) = 0;
};

class ConstantVelocityPredictor final : public Predictor {
 public:
  ConstantVelocityPredictor(int t_fut, int samples) : t_fut_(t_fut), samples_(samples) {}
  PredictorKind kind() const override { return PredictorKind::constant_velocity; }
  std::vector<std::vector<Path>> predict(const std::vector<const TrajectoryWindow*>& group,
                                         const VectorField&, Rng&) override {
    std::vector<std::vector<Path>> out;
    out.reserve(group.size());
    for (const auto* w : group) out.push_back(constant_velocity_baseline(w->hist, t_fut_, samples_));
    return out;
  }

 private:
  int t_fut_;
  int samples_;
};

// Adapted prototype paths used directly as the prediction set. When fewer
// samples than anchors are requested, anchors whose first reconstructed
// step best matches the observed last-step velocity are kept.
class NearestAnchorPredictor final : public Predictor {
 public:
  NearestAnchorPredictor(SingularSpace space, AnchorSet anchors, int t_fut, int samples)
      : space_(std::move(space)), anchors_(std::move(anchors)), t_fut_(t_fut), samples_(samples) {}

  PredictorKind kind() const override { return PredictorKind::nearest_anchor; }

  std::vector<std::vector<Path>> predict(const std::vector<const TrajectoryWindow*>& group,
                                         const VectorField& field, Rng&) override {
    std::vector<std::vector<Path>> out;
    out.reserve(group.size());
    for (const auto* w : group) {
      AdaptOptions opt;
      opt.t_fut = t_fut_;
      const Mat p = adapt_anchors(anchors_, field, space_, w->last_obs(), opt).p;
      const Mat paths = reconstruct(p, space_, t_fut_);
      const Eigen::RowVector2d vel = w->hist.row(w->hist.rows() - 1) - w->hist.row(w->hist.rows() - 2);
      std::vector<std::pair<double, int>> ranked;
      for (Eigen::Index s = 0; s < paths.rows(); ++s) {
        const Eigen::RowVector2d first_step(paths(s, 0), paths(s, 1));
        ranked.emplace_back((first_step - vel).norm(), static_cast<int>(s));
      }
      std::sort(ranked.begin(), ranked.end());
      std::vector<Path> samples;
      for (int i = 0; i < samples_; ++i) {
        const int s = ranked[static_cast<std::size_t>(i % static_cast<int>(ranked.size()))].second;
        Path path = unflatten_path(paths.row(s));
        path.rowwise() += w->last_obs().transpose();
        samples.push_back(std::move(path));
      }
      out.push_back(std::move(samples));
    }
    return out;
  }

 private:
  SingularSpace space_;
  AnchorSet anchors_;
  int t_fut_;
  int samples_;
};

class ModelPredictor final : public Predictor {
 public:
  explicit ModelPredictor(DiffusionPredictor model) : model_(std::move(model)) {}
  PredictorKind kind() const override { return PredictorKind::singular_trajectory; }
  std::vector<std::vector<Path>> predict(const std::vector<const TrajectoryWindow*>& group,
                                         const VectorField& field, Rng& rng) override {
    return model_.predict_group(group, field, rng);
  }
  const DiffusionPredictor& model() const { return model_; }

 private:
  DiffusionPredictor model_;
};

}  // namespace trajpred
