#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trajpred/baselines.hpp"
#include "trajpred/common.hpp"
#include "trajpred/dataset.hpp"
#include "trajpred/metrics.hpp"
#include "trajpred/model.hpp"

namespace trajpred {

struct EvalResult {
  std::string task;
  std::string scene;  // scene name, or "<train>2<test>" for domain pairs
  double ade = 0.0;
  double fde = 0.0;
  int samples = 0;     // S
  long windows = 0;    // evaluated windows
  std::string config_hash;
  bool aggregate = false;
};

struct ProtocolOptions {
  ModelConfig model;
  std::uint64_t seed = 17;
  std::optional<std::string> scene_filter;  // restrict to one instance label
  std::filesystem::path checkpoint_dir;     // save (and reuse) trained models here
  bool eval_only = false;                   // fail instead of training when no checkpoint
  std::ostream* log = nullptr;
};

// One protocol instance: its split spec and display label.
struct ProtocolInstance {
  TaskSpec spec;
  std::string label;
};

inline std::vector<ProtocolInstance> protocol_instances(Task task,
                                                        const std::vector<std::string>& scenes) {
  std::vector<ProtocolInstance> out;
  if (task == Task::domain_adaptation) {
    for (const auto& [train, test] : domain_adaptation_pairs(scenes)) {
      out.push_back({TaskSpec::domain_pair(train, test, scenes), train + "2" + test});
    }
  } else {
    for (const auto& s : scenes) {
      out.push_back({TaskSpec::leave_one_out(task, s, scenes), s});
    }
  }
  return out;
}

// Evaluate a predictor over every window of the given sets.
inline AdeFde evaluate_predictor(Predictor& pred, const std::vector<WindowSet>& test,
                                 FieldCache& fields, Rng& rng, long* windows_out = nullptr) {
  MetricAccumulator acc;
  for (const auto& set : test) {
    const VectorField& field = fields.get(set.scene);
    for (const auto& idx : group_windows(set.windows)) {
      std::vector<const TrajectoryWindow*> group;
      std::vector<Path> gt;
      for (int i : idx) {
        group.push_back(&set.windows[static_cast<std::size_t>(i)]);
        gt.push_back(set.windows[static_cast<std::size_t>(i)].fut);
      }
      acc.add(ade_fde(pred.predict(group, field, rng), gt), static_cast<long>(group.size()));
    }
  }
  if (windows_out) *windows_out = acc.count;
  return acc.mean();
}

// Fraction of predicted path points that land on traversable cells.
inline double traversable_fraction(Predictor& pred, const std::vector<WindowSet>& test,
                                   FieldCache& fields, Rng& rng) {
  long on = 0, total = 0;
  for (const auto& set : test) {
    const VectorField& field = fields.get(set.scene);
    for (const auto& idx : group_windows(set.windows)) {
      std::vector<const TrajectoryWindow*> group;
      for (int i : idx) group.push_back(&set.windows[static_cast<std::size_t>(i)]);
      for (const auto& samples : pred.predict(group, field, rng)) {
        for (const Path& p : samples) {
          for (Eigen::Index t = 0; t < p.rows(); ++t) {
            ++total;
            if (point_traversable(field, p.row(t).transpose())) ++on;
          }
        }
      }
    }
  }
  if (total == 0) throw DataError("traversable_fraction: no predictions");
  return static_cast<double>(on) / static_cast<double>(total);
}

namespace detail {

inline std::unique_ptr<Predictor> build_predictor(PredictorKind kind, const Split& split,
                                                  FieldCache& fields, const TaskSpec& spec,
                                                  const ProtocolOptions& opt,
                                                  const std::string& label) {
  switch (kind) {
    case PredictorKind::constant_velocity:
      return std::make_unique<ConstantVelocityPredictor>(spec.t_fut, spec.samples);
    case PredictorKind::nearest_anchor: {
      ModelConfig cfg = opt.model;
      const GistMatrix g = build_gists(split.train, cfg.t_win, cfg.k);
      SingularSpace space = fit_svd(g, cfg.k);
      std::vector<const TrajectoryWindow*> all;
      for (const auto& set : split.train)
        for (const auto& w : set.windows) all.push_back(&w);
      const Mat coords = project(ego_rows(all, true), space, spec.t_fut);
      AnchorSet anchors = cluster_prototypes(coords, spec.samples, derive_seed(opt.seed, "anchors"));
      return std::make_unique<NearestAnchorPredictor>(std::move(space), std::move(anchors),
                                                      spec.t_fut, spec.samples);
    }
    case PredictorKind::singular_trajectory: {
      std::filesystem::path ck;
      if (!opt.checkpoint_dir.empty()) {
        ck = opt.checkpoint_dir /
             (task_name(spec.task) + "_" + label + "_" + opt.model.hash() + ".json");
        if (std::filesystem::exists(ck)) {
          if (opt.log) (*opt.log) << "loading checkpoint " << ck << "\n";
          return std::make_unique<ModelPredictor>(DiffusionPredictor::load(ck));
        }
      }
      if (opt.eval_only) {
        throw ConfigError("eval-only run but no checkpoint for instance " + label +
                          (ck.empty() ? "" : " (expected " + ck.string() + ")"));
      }
      DiffusionPredictor model = DiffusionPredictor::fit(split, fields, spec, opt.model, opt.log);
      if (!ck.empty()) {
        std::filesystem::create_directories(opt.checkpoint_dir);
        model.save(ck);
      }
      return std::make_unique<ModelPredictor>(std::move(model));
    }
  }
  throw ConfigError("unknown predictor kind");
}

}  // namespace detail

inline std::vector<EvalResult> run_protocol(Task task, PredictorKind kind, const SceneRegistry& reg,
                                            const ProtocolOptions& opt) {
  FieldCache fields(reg);
  const auto scenes = reg.scene_names();
  auto instances = protocol_instances(task, scenes);
  if (opt.scene_filter) {
    std::vector<ProtocolInstance> kept;
    for (auto& inst : instances)
      if (inst.label == *opt.scene_filter) kept.push_back(inst);
    if (kept.empty()) throw ConfigError("no protocol instance labelled " + *opt.scene_filter);
    instances = kept;
  }

  // Windows depend only on t_hist, shared across instances of the task.
  const auto by_scene = load_all_windows(reg, instances.front().spec);

  std::vector<EvalResult> results;
  for (const auto& inst : instances) {
    const Split split = make_split(inst.spec, by_scene, opt.seed);
    auto pred = detail::build_predictor(kind, split, fields, inst.spec, opt, inst.label);
    Rng rng(derive_seed(opt.seed, "eval-" + task_name(task) + "-" + inst.label));
    long windows = 0;
    const AdeFde m = evaluate_predictor(*pred, split.test, fields, rng, &windows);
    EvalResult r;
    r.task = task_name(task);
    r.scene = inst.label;
    r.ade = m.ade;
    r.fde = m.fde;
    r.samples = inst.spec.samples;
    r.windows = windows;
    r.config_hash = opt.model.hash();
    results.push_back(r);
    if (opt.log) {
      (*opt.log) << task_name(task) << " " << inst.label << ": ADE " << m.ade << " FDE " << m.fde
                 << " over " << windows << " windows\n";
    }
  }

  // Aggregate rows (means over scene values, the usual benchmark
  // convention). Skipped when a filter restricted the run.
  if (!opt.scene_filter) {
    if (task == Task::domain_adaptation) {
      auto cross = [&](const EvalResult& r) {
        const auto pos = r.scene.find('2');
        return r.scene.substr(0, pos) != r.scene.substr(pos + 1);
      };
      for (const auto& src : scenes) {
        double a = 0.0, f = 0.0;
        int n = 0;
        for (const auto& r : results) {
          if (!r.aggregate && r.scene.rfind(src + "2", 0) == 0 && cross(r)) {
            a += r.ade;
            f += r.fde;
            ++n;
          }
        }
        if (n > 0) {
          results.push_back({task_name(task), src + "2AVG", a / n, f / n, results.front().samples, 0,
                             opt.model.hash(), true});
        }
      }
      double a = 0.0, f = 0.0;
      int n = 0;
      for (const auto& r : results) {
        if (!r.aggregate && cross(r)) {
          a += r.ade;
          f += r.fde;
          ++n;
        }
      }
      results.push_back(
          {task_name(task), "AVG", a / n, f / n, results.front().samples, 0, opt.model.hash(), true});
    } else {
      double a = 0.0, f = 0.0;
      int n = 0;
      for (const auto& r : results) {
        a += r.ade;
        f += r.fde;
        ++n;
      }
      results.push_back(
          {task_name(task), "AVG", a / n, f / n, results.front().samples, 0, opt.model.hash(), true});
    }
  }
  return results;
}

}  // namespace trajpred
