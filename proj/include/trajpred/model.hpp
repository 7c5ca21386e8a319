#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajpred/anchors.hpp"
#include "trajpred/common.hpp"
#include "trajpred/dataset.hpp"
#include "trajpred/denoiser.hpp"
#include "trajpred/schedule.hpp"
#include "trajpred/singular_space.hpp"
#include "trajpred/traversability.hpp"

namespace trajpred {

// Reference training setup; every field that deviates from these defaults
// in a run is listed in the manifest.
struct ModelConfig {
  int k = 4;
  int t_win = 12;
  int m_steps = 10;
  // Linear schedule spanning full corruption: alpha_bar(M) ~ 0.04, so the
  // reverse chain's N(0, I) start matches the forward endpoint.
  double beta_start = 1e-4;
  double beta_end = 0.5;
  int width = 256;
  int heads = 4;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int batch_size = 512;
  int epochs = 256;
  std::uint64_t seed = 17;
  bool adapt_in_training = true;
  bool normalize_inputs = true;
  bool precondition = true;         // analytic linear skip in the estimator
  std::string target = "residual";  // residual | direct | initial
  bool joint = true;                // refine the S channels jointly

  static ModelConfig desk_scale() {
    ModelConfig c;
    c.width = 64;
    c.epochs = 60;
    c.batch_size = 256;
    return c;
  }

  void validate() const {
    if (k < 1) throw ConfigError("model config: k must be >= 1");
    if (m_steps < 1) throw ConfigError("model config: m_steps must be >= 1");
    if (epochs < 1 || batch_size < 1) throw ConfigError("model config: bad training sizes");
    if (target != "residual" && target != "direct" && target != "initial")
      throw ConfigError("model config: unknown target mode " + target);
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["k"] = k;
    j["t_win"] = t_win;
    j["m_steps"] = m_steps;
    j["beta_start"] = beta_start;
    j["beta_end"] = beta_end;
    j["width"] = width;
    j["heads"] = heads;
    j["lr"] = lr;
    j["weight_decay"] = weight_decay;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["seed"] = seed;
    j["adapt_in_training"] = adapt_in_training;
    j["normalize_inputs"] = normalize_inputs;
    j["precondition"] = precondition;
    j["target"] = target;
    j["joint"] = joint;
    return j;
  }

  // Overlays the keys present in j onto base (partial configs are fine).
  static ModelConfig apply_json(ModelConfig c, const nlohmann::ordered_json& j) {
    auto get = [&](const char* name, auto& slot) {
      if (j.contains(name)) slot = j.at(name).get<std::decay_t<decltype(slot)>>();
    };
    get("k", c.k);
    get("t_win", c.t_win);
    get("m_steps", c.m_steps);
    get("beta_start", c.beta_start);
    get("beta_end", c.beta_end);
    get("width", c.width);
    get("heads", c.heads);
    get("lr", c.lr);
    get("weight_decay", c.weight_decay);
    get("batch_size", c.batch_size);
    get("epochs", c.epochs);
    get("seed", c.seed);
    get("adapt_in_training", c.adapt_in_training);
    get("normalize_inputs", c.normalize_inputs);
    get("precondition", c.precondition);
    get("target", c.target);
    get("joint", c.joint);
    c.validate();
    return c;
  }

  static ModelConfig from_json(const nlohmann::ordered_json& j) { return apply_json(ModelConfig{}, j); }

  std::string hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(to_json().dump())));
    return buf;
  }

  std::vector<std::string> deviations_from_reference() const {
    const ModelConfig ref;
    std::vector<std::string> d;
    auto note = [&](const std::string& field, auto mine, auto theirs) {
      if (mine != theirs) {
        std::ostringstream os;
        os << field << ": " << mine << " (reference " << theirs << ")";
        d.push_back(os.str());
      }
    };
    note("k", k, ref.k);
    note("m_steps", m_steps, ref.m_steps);
    note("width", width, ref.width);
    note("heads", heads, ref.heads);
    note("lr", lr, ref.lr);
    note("batch_size", batch_size, ref.batch_size);
    note("epochs", epochs, ref.epochs);
    note("target", target, ref.target);
    note("joint", joint, ref.joint);
    return d;
  }
};

// Lazily built per-scene traversability fields. Scenes without a map get
// a small all-traversable grid, which makes anchor adaptation the
// identity.
class FieldCache {
 public:
  explicit FieldCache(const SceneRegistry& reg) : reg_(&reg) {}

  const VectorField& get(const std::string& scene) {
    auto it = cache_.find(scene);
    if (it != cache_.end()) return it->second;
    const SceneEntry& e = reg_->at(scene);
    TraversabilityMap map;
    if (!e.map.empty() && std::filesystem::exists(e.map)) {
      map = TraversabilityMap::load(e.map, e.world_to_pixel);
    } else {
      map = TraversabilityMap::from_grid(2, 2, {1, 1, 1, 1}, Homography());
    }
    return cache_.emplace(scene, build_vector_field(map)).first->second;
  }

 private:
  const SceneRegistry* reg_;
  std::map<std::string, VectorField> cache_;
};

// ---------------------------------------------------------------------------
// Batch tensors shared by the trainer and the tests.
// ---------------------------------------------------------------------------

struct GroupTensors {
  Mat x;             // N x K        normalized history coords
  Mat p;             // N x (S*K)    normalized anchors (condition)
  Mat y0;            // N x (S*K)    clean latents
  Eigen::VectorXi m; // N            diffusion step per agent
  Mat eps;           // N x (S*K)    the noise the net must recover
};

namespace detail {

inline Mat corrupt(const GroupTensors& g, const NoiseSchedule& sched) {
  Mat ym(g.y0.rows(), g.y0.cols());
  for (Eigen::Index i = 0; i < g.y0.rows(); ++i) {
    const double ab = sched.alpha_bar(g.m(i));
    ym.row(i) = std::sqrt(ab) * g.y0.row(i) + std::sqrt(1.0 - ab) * g.eps.row(i);
  }
  return ym;
}

}  // namespace detail

// Mean-squared error of the noise estimate over a prepared batch, without
// touching parameters.
inline double prepared_loss(const Denoiser& net, const NoiseSchedule& sched,
                            const std::vector<GroupTensors>& batch, bool precondition = true) {
  double total_elems = 0.0;
  for (const auto& g : batch) total_elems += static_cast<double>(g.eps.size());
  double loss = 0.0;
  for (const auto& g : batch) {
    const Vec pc = precondition ? Denoiser::precondition(g.m, sched.alphas_bar) : Vec();
    const Mat out = net.eps(g.x, g.p, detail::corrupt(g, sched), g.m, pc);
    loss += (out - g.eps).squaredNorm() / total_elems;
  }
  return loss;
}

// One optimizer update on a prepared batch; returns the pre-update loss.
inline double train_step_prepared(Denoiser& net, const NoiseSchedule& sched,
                                  const std::vector<GroupTensors>& batch, AdamW& opt,
                                  bool precondition = true) {
  double total_elems = 0.0;
  for (const auto& g : batch) total_elems += static_cast<double>(g.eps.size());

  ad::Tape tape;
  std::vector<int> param_ids;
  param_ids.reserve(net.params().size());
  for (const auto& p : net.params()) param_ids.push_back(tape.input(p.value));

  double loss = 0.0;
  for (const auto& g : batch) {
    const Vec pc = precondition ? Denoiser::precondition(g.m, sched.alphas_bar) : Vec();
    const int out = net.build(tape, param_ids, tape.input(g.x), tape.input(g.p),
                              tape.input(detail::corrupt(g, sched)),
                              tape.input(net.time_embedding(g.m)), pc);
    loss += tape.accumulate_sq_error(out, g.eps, 1.0 / total_elems);
  }
  if (!std::isfinite(loss)) {
    throw TrainError("non-finite loss in training step (batch of " +
                     std::to_string(batch.size()) + " groups)");
  }
  tape.backward();

  std::vector<Mat> grads;
  grads.reserve(param_ids.size());
  for (int id : param_ids) grads.push_back(tape.grad(id));
  opt.step(net.params(), grads);
  return loss;
}

// ---------------------------------------------------------------------------
// The full predictor
// ---------------------------------------------------------------------------

namespace detail {

inline Mat ego_rows(const std::vector<const TrajectoryWindow*>& group, bool future) {
  const Eigen::Index t = future ? group[0]->fut.rows() : group[0]->hist.rows();
  Mat out(static_cast<Eigen::Index>(group.size()), 2 * t);
  for (std::size_t i = 0; i < group.size(); ++i) {
    const Path& p = future ? group[i]->fut : group[i]->hist;
    Path ego = p;
    ego.rowwise() -= group[i]->last_obs().transpose();
    out.row(static_cast<Eigen::Index>(i)) = flatten_path(ego);
  }
  return out;
}

}  // namespace detail

class DiffusionPredictor {
 public:
  ModelConfig cfg;
  TaskSpec spec;
  SingularSpace space;
  AnchorSet anchors;  // global prototypes, before per-agent adaptation
  NoiseSchedule sched;
  Denoiser net;
  Vec hist_scale;      // K per-dim input standardization
  Vec fut_scale;       // K
  Vec latent_scale;    // K, broadcast over the S channels
  bool trained = false;
  std::vector<double> epoch_loss;

  int model_s() const { return cfg.joint ? spec.samples : 1; }

  // --- training -----------------------------------------------------------

  static DiffusionPredictor fit(const Split& split, FieldCache& fields, const TaskSpec& spec,
                                const ModelConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    spec.validate();
    DiffusionPredictor mdl;
    mdl.cfg = cfg;
    mdl.spec = spec;
    mdl.sched = NoiseSchedule::make(cfg.m_steps, cfg.beta_start, cfg.beta_end);

    const GistMatrix gists = build_gists(split.train, cfg.t_win, cfg.k);
    mdl.space = fit_svd(gists, cfg.k);

    // Prototype anchors from the train futures, in Singular space.
    struct SceneGroup {
      std::string scene;
      std::vector<const TrajectoryWindow*> windows;
    };
    std::vector<SceneGroup> groups;
    std::vector<const TrajectoryWindow*> all_train;
    for (const auto& set : split.train) {
      for (const auto& idx : group_windows(set.windows)) {
        SceneGroup g;
        g.scene = set.scene;
        for (int i : idx) g.windows.push_back(&set.windows[static_cast<std::size_t>(i)]);
        groups.push_back(std::move(g));
      }
      for (const auto& w : set.windows) all_train.push_back(&w);
    }
    if (all_train.empty()) throw TrainError("fit: no training windows");

    const Mat fut_coords = project(detail::ego_rows(all_train, true), mdl.space, spec.t_fut);
    mdl.anchors = cluster_prototypes(fut_coords, spec.samples, derive_seed(cfg.seed, "anchors"));

    // Per-window adapted anchors (the condition and the residual base).
    std::map<const TrajectoryWindow*, Mat> adapted;
    for (const auto& g : groups) {
      const VectorField& field = fields.get(g.scene);
      for (const auto* w : g.windows) {
        if (cfg.adapt_in_training) {
          AdaptOptions opt;
          opt.t_fut = spec.t_fut;
          adapted[w] = adapt_anchors(mdl.anchors, field, mdl.space, w->last_obs(), opt).p;
        } else {
          adapted[w] = mdl.anchors.p;
        }
      }
    }

    const Mat hist_coords = project(detail::ego_rows(all_train, false), mdl.space, spec.t_hist);
    mdl.hist_scale = column_scale(hist_coords, cfg.normalize_inputs);
    mdl.fut_scale = column_scale(fut_coords, cfg.normalize_inputs);

    // Latent scale: spread of the clean latents the chain must match.
    {
      Mat devs(static_cast<Eigen::Index>(all_train.size()) * spec.samples, cfg.k);
      Eigen::Index r = 0;
      for (std::size_t i = 0; i < all_train.size(); ++i) {
        const Mat& p = adapted[all_train[i]];
        for (int s = 0; s < spec.samples; ++s) {
          if (cfg.target == "residual") {
            devs.row(r++) = fut_coords.row(static_cast<Eigen::Index>(i)) - p.row(s);
          } else {
            devs.row(r++) = fut_coords.row(static_cast<Eigen::Index>(i));
          }
        }
      }
      mdl.latent_scale = column_scale(devs, cfg.normalize_inputs);
    }

    DenoiserConfig nc;
    nc.k = cfg.k;
    nc.s = mdl.model_s();
    nc.width = cfg.width;
    nc.heads = cfg.heads;
    nc.seed = derive_seed(cfg.seed, "net-init");
    mdl.net = Denoiser(nc);

    AdamW opt;
    opt.lr = cfg.lr;
    opt.weight_decay = cfg.weight_decay;

    Rng rng(derive_seed(cfg.seed, "train"));
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      rng.shuffle(order);
      double ep_loss = 0.0;
      long ep_windows = 0;
      std::vector<GroupTensors> batch;
      long batch_windows = 0;
      auto flush = [&]() {
        if (batch.empty()) return;
        ep_loss += train_step_prepared(mdl.net, mdl.sched, batch, opt, cfg.precondition) *
                   static_cast<double>(batch_windows);
        ep_windows += batch_windows;
        batch.clear();
        batch_windows = 0;
      };
      for (std::size_t gi : order) {
        batch.push_back(mdl.make_tensors(groups[gi].windows, adapted, rng));
        batch_windows += static_cast<long>(groups[gi].windows.size());
        if (batch_windows >= cfg.batch_size) flush();
      }
      flush();
      mdl.epoch_loss.push_back(ep_loss / static_cast<double>(ep_windows));
      if (log && (epoch % 10 == 0 || epoch + 1 == cfg.epochs)) {
        (*log) << "epoch " << epoch << " loss " << mdl.epoch_loss.back() << "\n";
      }
    }
    mdl.trained = true;
    return mdl;
  }

  // --- sampling -----------------------------------------------------------

  // S sampled future paths (world frame) for each window of a co-present
  // group.
  std::vector<std::vector<Path>> predict_group(const std::vector<const TrajectoryWindow*>& group,
                                               const VectorField& field, Rng& rng) const {
    if (!trained) throw TrainError("predict: model has not been trained");
    const Eigen::Index n = static_cast<Eigen::Index>(group.size());
    const int s_total = spec.samples;
    const int s_model = model_s();
    const int k = cfg.k;

    Mat x = project(detail::ego_rows(group, false), space, spec.t_hist);
    for (Eigen::Index i = 0; i < n; ++i)
      x.row(i) = x.row(i).cwiseQuotient(hist_scale.transpose());

    std::vector<Mat> adapted(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
      AdaptOptions opt;
      opt.t_fut = spec.t_fut;
      adapted[i] = adapt_anchors(anchors, field, space, group[i]->last_obs(), opt).p;
    }

    // channel blocks: jointly -> one pass over all S, independently -> S
    // single-channel passes
    Mat coords(n * s_total, k);
    const int passes = cfg.joint ? 1 : s_total;
    for (int pass = 0; pass < passes; ++pass) {
      Mat p_cond(n, s_model * k);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int s = 0; s < s_model; ++s) {
          const int src = cfg.joint ? s : pass;
          p_cond.block(i, s * k, 1, k) =
              adapted[static_cast<std::size_t>(i)].row(src).cwiseQuotient(fut_scale.transpose());
        }
      }
      Mat y = rng.gaussian_matrix(n, s_model * k);
      if (cfg.target == "initial") {
        const double ab = sched.alpha_bar(sched.m_steps);
        Mat base(n, s_model * k);
        for (Eigen::Index i = 0; i < n; ++i)
          for (int s = 0; s < s_model; ++s) {
            const int src = cfg.joint ? s : pass;
            base.block(i, s * k, 1, k) =
                adapted[static_cast<std::size_t>(i)].row(src).cwiseQuotient(latent_scale.transpose());
          }
        y = std::sqrt(ab) * base + std::sqrt(1.0 - ab) * y;
      }
      Eigen::VectorXi mvec(n);
      for (int m = sched.m_steps; m >= 1; --m) {
        mvec.setConstant(m);
        const Vec pc = cfg.precondition ? Denoiser::precondition(mvec, sched.alphas_bar) : Vec();
        // eps estimates a unit-Gaussian draw; clamping it (and the implied
        // clean latent, which is normalized per dimension) keeps estimator
        // error at low noise levels from feeding back over the chain
        Mat eps_hat = net.eps(x, p_cond, y, mvec, pc).cwiseMax(-4.0).cwiseMin(4.0);
        y = ddim_step(y, eps_hat, m, sched, 6.0);
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int s = 0; s < s_model; ++s) {
          const int dst = cfg.joint ? s : pass;
          RowVec latent = y.block(i, s * k, 1, k).cwiseProduct(latent_scale.transpose());
          RowVec c = (cfg.target == "residual")
                         ? RowVec(adapted[static_cast<std::size_t>(i)].row(dst) + latent)
                         : latent;
          coords.row(i * s_total + dst) = c;
        }
      }
    }

    const Mat ego_paths = reconstruct(coords, space, spec.t_fut);
    std::vector<std::vector<Path>> out(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
      out[i].reserve(static_cast<std::size_t>(s_total));
      for (int s = 0; s < s_total; ++s) {
        Path p = unflatten_path(ego_paths.row(static_cast<Eigen::Index>(i) * s_total + s));
        p.rowwise() += group[i]->last_obs().transpose();
        out[i].push_back(std::move(p));
      }
    }
    return out;
  }

  // --- checkpointing ------------------------------------------------------

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "trajpred-checkpoint-v1";
    j["task"] = task_name(spec.task);
    j["t_hist"] = spec.t_hist;
    j["t_fut"] = spec.t_fut;
    j["samples"] = spec.samples;
    j["train_scenes"] = spec.train_scenes;
    j["test_scenes"] = spec.test_scenes;
    j["train_fraction"] = spec.train_fraction;
    j["config"] = cfg.to_json();
    j["config_hash"] = cfg.hash();
    j["space"] = space_to_json(space);
    j["anchors"] = mat_to_json(anchors.p);
    j["anchor_seed"] = anchors.seed;
    j["schedule"] = {{"m_steps", sched.m_steps}, {"beta_start", cfg.beta_start}, {"beta_end", cfg.beta_end}};
    j["hist_scale"] = std::vector<double>(hist_scale.data(), hist_scale.data() + hist_scale.size());
    j["fut_scale"] = std::vector<double>(fut_scale.data(), fut_scale.data() + fut_scale.size());
    j["latent_scale"] = std::vector<double>(latent_scale.data(), latent_scale.data() + latent_scale.size());
    j["net"] = net.to_json();
    j["trained"] = trained;
    j["epoch_loss"] = epoch_loss;
    return j;
  }

  static DiffusionPredictor from_json(const nlohmann::ordered_json& j) {
    if (j.value("format", "") != "trajpred-checkpoint-v1")
      throw ConfigError("not a trajpred checkpoint");
    DiffusionPredictor m;
    m.cfg = ModelConfig::from_json(j.at("config"));
    m.spec.task = task_from_name(j.at("task").get<std::string>());
    m.spec.t_hist = j.at("t_hist").get<int>();
    m.spec.t_fut = j.at("t_fut").get<int>();
    m.spec.samples = j.at("samples").get<int>();
    m.spec.train_scenes = j.at("train_scenes").get<std::vector<std::string>>();
    m.spec.test_scenes = j.at("test_scenes").get<std::vector<std::string>>();
    m.spec.train_fraction = j.at("train_fraction").get<double>();
    m.space = space_from_json(j.at("space"));
    m.anchors.p = mat_from_json(j.at("anchors"));
    m.anchors.seed = j.at("anchor_seed").get<std::uint64_t>();
    m.sched = NoiseSchedule::make(j.at("schedule").at("m_steps").get<int>(),
                                  j.at("schedule").at("beta_start").get<double>(),
                                  j.at("schedule").at("beta_end").get<double>());
    m.hist_scale = vec_from_json(j.at("hist_scale"));
    m.fut_scale = vec_from_json(j.at("fut_scale"));
    m.latent_scale = vec_from_json(j.at("latent_scale"));
    m.net = Denoiser::from_json(j.at("net"));
    m.trained = j.at("trained").get<bool>();
    if (j.contains("epoch_loss")) m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
    return m;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint " + path.string());
    out << to_json().dump() << "\n";
  }

  static DiffusionPredictor load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    nlohmann::ordered_json j;
    in >> j;
    return from_json(j);
  }

 private:
  static Vec column_scale(const Mat& m, bool enabled) {
    Vec s = Vec::Ones(m.cols());
    if (!enabled || m.rows() < 2) return s;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double mu = m.col(c).mean();
      const double var = (m.col(c).array() - mu).square().mean();
      s(c) = std::max(std::sqrt(var), 1e-6);
    }
    return s;
  }

  static nlohmann::ordered_json mat_to_json(const Mat& m) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    return rows;
  }

  static Mat mat_from_json(const nlohmann::ordered_json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw ConfigError("checkpoint: empty matrix");
    Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t c = 0; c < rows[i].size(); ++c)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    return m;
  }

  static Vec vec_from_json(const nlohmann::ordered_json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  // Tensors for one co-present group, with fresh step and noise draws.
  GroupTensors make_tensors(const std::vector<const TrajectoryWindow*>& group,
                            const std::map<const TrajectoryWindow*, Mat>& adapted,
                            Rng& rng) const {
    const Eigen::Index n = static_cast<Eigen::Index>(group.size());
    const int s_model = model_s();
    const int k = cfg.k;
    GroupTensors g;
    g.x = project(detail::ego_rows(group, false), space, spec.t_hist);
    for (Eigen::Index i = 0; i < n; ++i) g.x.row(i) = g.x.row(i).cwiseQuotient(hist_scale.transpose());

    const Mat fut = project(detail::ego_rows(group, true), space, spec.t_fut);
    g.p.resize(n, s_model * k);
    g.y0.resize(n, s_model * k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Mat& panc = adapted.at(group[static_cast<std::size_t>(i)]);
      // independent mode trains on one uniformly drawn channel per sample
      const int base = cfg.joint ? 0 : static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.samples)));
      for (int s = 0; s < s_model; ++s) {
        const int src = cfg.joint ? s : base;
        g.p.block(i, s * k, 1, k) = panc.row(src).cwiseQuotient(fut_scale.transpose());
        RowVec latent = (cfg.target == "residual")
                            ? RowVec(fut.row(i) - panc.row(src))
                            : RowVec(fut.row(i));
        g.y0.block(i, s * k, 1, k) = latent.cwiseQuotient(latent_scale.transpose());
      }
    }
    g.m.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      g.m(i) = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.m_steps)));
    g.eps = rng.gaussian_matrix(n, s_model * k);
    return g;
  }
};

}  // namespace trajpred
