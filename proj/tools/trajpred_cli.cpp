// Command-line front end: corpus generation, space building, training,
// evaluation under the five task protocols, prediction dumps, report
// rendering and the ablation sweeps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "trajpred/manifest.hpp"
#include "trajpred/model.hpp"
#include "trajpred/protocol.hpp"
#include "trajpred/report.hpp"
#include "trajpred/synthetic.hpp"

namespace fs = std::filesystem;
using namespace trajpred;

namespace {

struct CommonArgs {
  std::string config;
  std::string task = "stochastic";
  std::string scene;
  std::string checkpoint;
  std::string out_dir = "out";
  std::uint64_t seed = 17;
  bool desk_scale = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool need_config = true) {
  auto* c = cmd->add_option("--config", a.config, "scene registry / config JSON");
  if (need_config) c->required();
  cmd->add_option("--task", a.task, "stochastic|deterministic|momentary|domain_adaptation|few_shot");
  cmd->add_option("--scene", a.scene, "restrict to one protocol instance (scene or trainScene2testScene)");
  cmd->add_option("--checkpoint", a.checkpoint, "checkpoint file or directory");
  cmd->add_option("--out-dir", a.out_dir, "output directory");
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_flag("--desk-scale", a.desk_scale, "reduced training preset for CPU-scale runs");
}

ModelConfig resolve_config(const CommonArgs& a, const SceneRegistry& reg) {
  ModelConfig cfg = a.desk_scale ? ModelConfig::desk_scale() : ModelConfig();
  cfg.seed = a.seed;
  if (!reg.model_overrides.is_null()) cfg = ModelConfig::apply_json(cfg, reg.model_overrides);
  return cfg;
}

int cmd_synth(const std::string& out_dir, SynthOptions opt) {
  const auto reg = write_synthetic_corpus(out_dir, opt);
  std::cout << "synthetic corpus written; registry at " << reg << "\n";
  return 0;
}

int cmd_build_space(const CommonArgs& a) {
  const SceneRegistry reg = SceneRegistry::load(a.config);
  const ModelConfig cfg = resolve_config(a, reg);
  const Task task = task_from_name(a.task);
  auto instances = protocol_instances(task, reg.scene_names());
  std::string label = a.scene.empty() ? instances.front().label : a.scene;
  const TaskSpec* spec = nullptr;
  for (const auto& inst : instances)
    if (inst.label == label) spec = &inst.spec;
  if (!spec) throw ConfigError("no protocol instance labelled " + label);

  const auto by_scene = load_all_windows(reg, *spec);
  const Split split = make_split(*spec, by_scene, a.seed);
  const GistMatrix g = build_gists(split.train, cfg.t_win, cfg.k);
  const SingularSpace space = fit_svd(g, cfg.k);

  fs::create_directories(a.out_dir);
  const fs::path out = fs::path(a.out_dir) / ("space_" + a.task + "_" + label + ".json");
  save_space(space, out);
  std::cout << "space built from " << g.count() << " gists; sigma = " << space.sigma.transpose()
            << "\nwritten to " << out << "\n";
  write_manifest(fs::path(a.out_dir) / "manifest_build_space.json", "build-space", cfg, a.seed);
  return 0;
}

int cmd_train(const CommonArgs& a) {
  const SceneRegistry reg = SceneRegistry::load(a.config);
  const ModelConfig cfg = resolve_config(a, reg);
  const Task task = task_from_name(a.task);
  auto instances = protocol_instances(task, reg.scene_names());
  const std::string label = a.scene.empty() ? instances.front().label : a.scene;
  const TaskSpec* spec = nullptr;
  for (const auto& inst : instances)
    if (inst.label == label) spec = &inst.spec;
  if (!spec) throw ConfigError("no protocol instance labelled " + label);

  const auto by_scene = load_all_windows(reg, *spec);
  const Split split = make_split(*spec, by_scene, a.seed);
  FieldCache fields(reg);
  DiffusionPredictor model = DiffusionPredictor::fit(split, fields, *spec, cfg, &std::cout);

  fs::create_directories(a.out_dir);
  const fs::path ck = fs::path(a.out_dir) /
                      (task_name(task) + "_" + label + "_" + cfg.hash() + ".json");
  model.save(ck);
  std::cout << "checkpoint written to " << ck << "\n";
  write_manifest(fs::path(a.out_dir) / ("manifest_train_" + label + ".json"), "train", cfg, a.seed,
                 {"instance: " + label, "train windows: " + std::to_string(split.train_count())});
  return 0;
}

int cmd_evaluate(const CommonArgs& a, const std::string& predictor, bool eval_only) {
  const SceneRegistry reg = SceneRegistry::load(a.config);
  ProtocolOptions opt;
  opt.model = resolve_config(a, reg);
  opt.seed = a.seed;
  if (!a.scene.empty()) opt.scene_filter = a.scene;
  opt.checkpoint_dir = a.checkpoint.empty() ? fs::path(a.out_dir) / "checkpoints"
                                            : fs::path(a.checkpoint);
  opt.eval_only = eval_only;
  opt.log = &std::cout;

  const Task task = task_from_name(a.task);
  const auto results = run_protocol(task, predictor_from_name(predictor), reg, opt);

  fs::create_directories(a.out_dir);
  report(results, "csv", a.out_dir);
  report(results, "markdown", a.out_dir);
  report(results, "json", a.out_dir);
  write_manifest(fs::path(a.out_dir) / ("manifest_evaluate_" + a.task + ".json"), "evaluate",
                 opt.model, a.seed, {"predictor: " + predictor});
  std::cout << results_markdown(results);
  return 0;
}

int cmd_predict(const CommonArgs& a, bool plot) {
  if (a.checkpoint.empty()) throw ConfigError("predict needs --checkpoint");
  const SceneRegistry reg = SceneRegistry::load(a.config);
  DiffusionPredictor model = DiffusionPredictor::load(a.checkpoint);
  const std::string scene = a.scene.empty() ? model.spec.test_scenes.front() : a.scene;

  const auto records = parse_scene(reg.at(scene).trajectories);
  const auto windows = make_windows(records, scene, model.spec);
  FieldCache fields(reg);
  const VectorField& field = fields.get(scene);
  Rng rng(derive_seed(a.seed, "predict-" + scene));

  nlohmann::ordered_json out_json = nlohmann::ordered_json::array();
  std::vector<std::vector<Path>> all_preds;
  for (const auto& idx : group_windows(windows)) {
    std::vector<const TrajectoryWindow*> group;
    for (int i : idx) group.push_back(&windows[static_cast<std::size_t>(i)]);
    auto preds = model.predict_group(group, field, rng);
    for (std::size_t i = 0; i < group.size(); ++i) {
      nlohmann::ordered_json j;
      j["scene"] = scene;
      j["ped"] = group[i]->ped;
      j["start_frame"] = group[i]->start_frame;
      auto path_json = [](const Path& p) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (Eigen::Index t = 0; t < p.rows(); ++t) arr.push_back({p(t, 0), p(t, 1)});
        return arr;
      };
      j["hist"] = path_json(group[i]->hist);
      j["gt"] = path_json(group[i]->fut);
      nlohmann::ordered_json samples = nlohmann::ordered_json::array();
      for (const auto& p : preds[i]) samples.push_back(path_json(p));
      j["samples"] = samples;
      out_json.push_back(j);
      all_preds.push_back(preds[i]);
    }
  }

  fs::create_directories(a.out_dir);
  const fs::path out = fs::path(a.out_dir) / ("predictions_" + scene + ".json");
  std::ofstream os(out);
  os << out_json.dump(1) << "\n";
  std::cout << "predictions for " << windows.size() << " windows written to " << out << "\n";

  if (plot) {
    const SceneEntry& e = reg.at(scene);
    TraversabilityMap map = (!e.map.empty() && fs::exists(e.map))
                                ? TraversabilityMap::load(e.map, e.world_to_pixel)
                                : TraversabilityMap::from_grid(2, 2, {1, 1, 1, 1}, Homography());
    ScenePlot sp(map);
    for (std::size_t i = 0; i < windows.size() && i < 24; ++i) {
      for (const auto& p : all_preds[i]) sp.polyline(p, 230, 120, 120);
      sp.polyline(windows[i].hist, 90, 90, 220);
      sp.polyline(windows[i].fut, 60, 170, 60);
    }
    const fs::path png = fs::path(a.out_dir) / ("plot_" + scene + ".png");
    sp.save(png);
    std::cout << "plot written to " << png << "\n";
  }
  return 0;
}

int cmd_report(const std::string& results_path, const std::string& format, const std::string& out_dir) {
  const auto results = load_results_json(results_path);
  const auto p = report(results, format, out_dir);
  std::cout << "report written to " << p << "\n";
  return 0;
}

int cmd_ablate(const CommonArgs& a, const std::string& axis, std::vector<std::string> tasks) {
  const SceneRegistry reg = SceneRegistry::load(a.config);
  const auto scenes = reg.scene_names();
  if (tasks.empty())
    tasks = {"deterministic", "stochastic", "momentary", "domain_adaptation", "few_shot"};

  // One instance per task keeps the sweep desk-sized: the benchmark scene
  // (4th in registry order, ZARA1-like) or --scene.
  const std::string bench = a.scene.empty() ? scenes[std::min<std::size_t>(3, scenes.size() - 1)]
                                            : a.scene;
  auto instance_label = [&](const std::string& task) {
    if (task != "domain_adaptation") return bench;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      if (scenes[i] == bench) return scenes[(i + scenes.size() - 1) % scenes.size()] + "2" + bench;
    }
    throw ConfigError("unknown scene name: " + bench);
  };

  struct Variant {
    std::string label;
    ModelConfig cfg;
  };
  std::vector<Variant> variants;
  const ModelConfig base = resolve_config(a, reg);
  if (axis == "k") {
    for (int k = 1; k <= 6; ++k) {
      ModelConfig c = base;
      c.k = k;
      variants.push_back({"K=" + std::to_string(k), c});
    }
  } else if (axis == "m") {
    for (int m : {1, 2, 5, 10, 25}) {
      ModelConfig c = base;
      c.m_steps = m;
      variants.push_back({"M=" + std::to_string(m), c});
    }
  } else if (axis == "mode") {
    for (const std::string mode : {"direct", "initial", "residual", "independent", "jointly"}) {
      ModelConfig c = base;
      if (mode == "independent") {
        c.target = "residual";
        c.joint = false;
      } else if (mode == "jointly") {
        c.target = "residual";
        c.joint = true;
      } else {
        c.target = mode;
        c.joint = true;
      }
      variants.push_back({mode, c});
    }
  } else {
    throw ConfigError("ablate: unknown axis \"" + axis + "\" (k, m, mode)");
  }

  std::vector<AblationRow> rows;
  std::vector<EvalResult> flat;
  for (const auto& v : variants) {
    AblationRow row;
    row.value = v.label;
    for (const auto& task : tasks) {
      ProtocolOptions opt;
      opt.model = v.cfg;
      opt.seed = a.seed;
      opt.scene_filter = instance_label(task);
      opt.log = nullptr;
      const auto rs = run_protocol(task_from_name(task), PredictorKind::singular_trajectory, reg, opt);
      row.per_task.emplace_back(task, AdeFde{rs.front().ade, rs.front().fde});
      EvalResult r = rs.front();
      r.scene = v.label + ":" + r.scene;
      flat.push_back(r);
      std::cout << v.label << " " << task << " " << rs.front().ade << " / " << rs.front().fde
                << "\n";
    }
    rows.push_back(std::move(row));
  }

  fs::create_directories(a.out_dir);
  const fs::path md = fs::path(a.out_dir) / ("ablation_" + axis + ".md");
  std::ofstream os(md);
  os << ablation_markdown(axis == "k" ? "K" : axis == "m" ? "M" : "Mode", rows);
  write_results_csv(flat, fs::path(a.out_dir) / ("ablation_" + axis + ".csv"));
  write_manifest(fs::path(a.out_dir) / ("manifest_ablate_" + axis + ".json"), "ablate", base,
                 a.seed, {"axis: " + axis, "instance scene: " + bench});
  std::cout << "ablation table written to " << md << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory prediction in a shared singular motion space"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark corpus");
  std::string synth_out = "synth_data";
  SynthOptions sopt;
  synth->add_option("--out-dir", synth_out, "corpus directory");
  synth->add_option("--scenes", sopt.scenes, "scene count");
  synth->add_option("--agents", sopt.agents_per_scene, "agents per scene");
  synth->add_option("--turn-fraction", sopt.turn_fraction, "fraction of turning agents");
  synth->add_option("--seed", sopt.seed, "random seed");

  CommonArgs bs_args, tr_args, ev_args, pr_args, ab_args;
  auto* build_space = app.add_subcommand("build-space", "fit the SVD motion basis for one split");
  add_common(build_space, bs_args);

  auto* train = app.add_subcommand("train", "train the diffusion predictor for one split");
  add_common(train, tr_args);

  auto* evaluate = app.add_subcommand("evaluate", "run a task protocol end to end");
  add_common(evaluate, ev_args);
  std::string predictor = "singular_trajectory";
  bool eval_only = false;
  evaluate->add_option("--predictor", predictor,
                       "singular_trajectory|constant_velocity|nearest_anchor");
  evaluate->add_flag("--eval-only", eval_only, "require existing checkpoints; never train");

  auto* predict = app.add_subcommand("predict", "sample futures for every window of a scene");
  add_common(predict, pr_args);
  bool plot = false;
  predict->add_flag("--plot", plot, "render a PNG of predictions over the map");

  auto* report_cmd = app.add_subcommand("report", "render stored results");
  std::string results_path, format = "markdown", report_out = "out";
  report_cmd->add_option("--results", results_path, "results JSON from evaluate")->required();
  report_cmd->add_option("--format", format, "csv|markdown|json");
  report_cmd->add_option("--out-dir", report_out, "output directory");

  auto* ablate = app.add_subcommand("ablate", "sweep K, M or the denoising mode");
  add_common(ablate, ab_args);
  std::string axis = "k";
  std::vector<std::string> ab_tasks;
  ablate->add_option("--axis", axis, "k|m|mode");
  ablate->add_option("--tasks", ab_tasks, "tasks to include (default: all five)")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_out, sopt);
    if (build_space->parsed()) return cmd_build_space(bs_args);
    if (train->parsed()) return cmd_train(tr_args);
    if (evaluate->parsed()) return cmd_evaluate(ev_args, predictor, eval_only);
    if (predict->parsed()) return cmd_predict(pr_args, plot);
    if (report_cmd->parsed()) return cmd_report(results_path, format, report_out);
    if (ablate->parsed()) return cmd_ablate(ab_args, axis, ab_tasks);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
