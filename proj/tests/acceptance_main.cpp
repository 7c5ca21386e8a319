// Acceptance suite. Runs every gate at its pinned tolerance and prints one
// pass/fail line per criterion. Hard gates fail the process; the
// real-data reproduction target is skipped (not failed) when the dataset
// is not present, since the corpus cannot be redistributed with the code.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "trajpred/model.hpp"
#include "trajpred/protocol.hpp"
#include "trajpred/report.hpp"
#include "trajpred/synthetic.hpp"

using namespace trajpred;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void line(const std::string& name, bool pass, const std::string& detail = "") {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << name;
  if (!detail.empty()) std::cout << "  (" << detail << ")";
  std::cout << std::endl;
  if (!pass) ++g_failures;
}

void skip(const std::string& name, const std::string& why) {
  std::cout << "[SKIP] " << name << "  (" << why << ")" << std::endl;
}

template <typename F>
void checked(const std::string& name, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    line(name, false, std::string("exception: ") + e.what());
  }
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Property gates
// ---------------------------------------------------------------------------

void property_svd() {
  Rng rng(101);
  double worst_orth = 0.0, worst_ey = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    GistMatrix g;
    g.t_win = 12;
    g.rows = rng.gaussian_matrix(50, 24);
    const SingularSpace s = fit_svd(g, 4);
    worst_orth = std::max(worst_orth,
                          (s.v_k.transpose() * s.v_k - Mat::Identity(4, 4)).cwiseAbs().maxCoeff());
    const double err = (g.rows - g.rows * s.v_k * s.v_k.transpose()).norm();
    const auto ora = oracle::jacobi_svd(g.rows);
    double tail = 0.0;
    for (Eigen::Index i = 4; i < ora.singular_values.size(); ++i)
      tail += ora.singular_values(i) * ora.singular_values(i);
    worst_ey = std::max(worst_ey, std::abs(err - std::sqrt(tail)));
  }
  line("property: SVD orthonormality <= 1e-8", worst_orth < 1e-8, "max " + num(worst_orth));
  line("property: Eckart-Young matches independent SVD oracle <= 1e-8", worst_ey < 1e-8,
       "max " + num(worst_ey));
}

void property_bspline() {
  double worst_pu = 0.0;
  for (int t : {2, 3, 5, 8, 12, 16, 20}) {
    const Mat b = bspline_channel_matrix(t, 12);
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      worst_pu = std::max(worst_pu, std::abs(b.row(i).sum() - 1.0));
  }
  line("property: B-spline partition of unity <= 1e-9", worst_pu < 1e-9, "max " + num(worst_pu));
  const double id_err = (bspline_matrix(12, 12) - Mat::Identity(24, 24)).cwiseAbs().maxCoeff();
  line("property: B-spline identity at T_win <= 1e-6", id_err < 1e-6, "max " + num(id_err));
}

void property_field() {
  Rng rng(202);
  bool ok = true;
  int grids = 0;
  for (int rows = 1; rows <= 10 && ok; ++rows) {
    for (int cols = 1; cols <= 10 && ok; ++cols) {
      for (int rep = 0; rep < 3 && ok; ++rep) {
        std::vector<std::uint8_t> cells(static_cast<std::size_t>(rows * cols));
        bool any = false;
        for (auto& c : cells) {
          c = rng.uniform() < 0.45 ? 0 : 1;
          any = any || c == 1;
        }
        if (!any) cells[0] = 1;
        const auto map = TraversabilityMap::from_grid(rows, cols, std::move(cells), Homography());
        const VectorField f = build_vector_field(map);
        const auto [fx, fy] = oracle::brute_force_field(map);
        if ((f.fx - fx).cwiseAbs().maxCoeff() != 0.0 || (f.fy - fy).cwiseAbs().maxCoeff() != 0.0)
          ok = false;
        ++grids;
      }
    }
  }
  line("property: vector field equals exhaustive oracle on all grids <= 10x10", ok,
       std::to_string(grids) + " grids, exact");
}

void property_adapt() {
  Rng rng(303);
  const SingularSpace space = fixtures::structured_space();

  const int n = 30;
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(n) * n, 1);
  for (int r = 10; r <= 14; ++r)
    for (int c = 10; c <= 14; ++c) cells[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(c)] = 0;
  const auto map = TraversabilityMap::from_grid(n, n, std::move(cells), Homography());
  const VectorField field = build_vector_field(map);

  AnchorSet a;
  a.p = 2.0 * rng.gaussian_matrix(8, 4);
  const Eigen::Vector2d ego(9.0, 12.0);
  const AnchorSet once = adapt_anchors(a, field, space, ego);
  const AnchorSet twice = adapt_anchors(once, field, space, ego);
  const double drift = (twice.p - once.p).cwiseAbs().maxCoeff();
  line("property: anchor adaptation idempotent within 1e-3 m", drift < 1e-3, "drift " + num(drift));
}

void property_ddim() {
  const NoiseSchedule s = NoiseSchedule::make(10);
  Rng rng(404);
  const Mat y0 = rng.gaussian_matrix(4, 8);
  double worst = 0.0;
  for (int m = 1; m <= 10; ++m) {
    const Mat eps = rng.gaussian_matrix(4, 8);
    const Mat ym = forward_diffuse(y0, m, eps, s);
    const Mat prev = ddim_step(ym, eps, m, s);
    const Mat want = (m == 1) ? y0 : forward_diffuse(y0, m - 1, eps, s);
    worst = std::max(worst, (prev - want).cwiseAbs().maxCoeff());
  }
  line("property: DDIM forward/reverse round trip <= 1e-6", worst < 1e-6, "max " + num(worst));
}

void property_gradients() {
  DenoiserConfig cfg;
  cfg.k = 3;
  cfg.s = 2;
  cfg.width = 8;
  cfg.heads = 2;
  cfg.seed = 2024;
  Denoiser net(cfg);
  const NoiseSchedule sched = NoiseSchedule::make(10);
  Rng rng(505);
  std::vector<GroupTensors> batch;
  for (int n : {3, 2}) {
    GroupTensors g;
    g.x = rng.gaussian_matrix(n, cfg.k);
    g.p = rng.gaussian_matrix(n, cfg.s * cfg.k);
    g.y0 = rng.gaussian_matrix(n, cfg.s * cfg.k);
    g.m.resize(n);
    for (int i = 0; i < n; ++i) g.m(i) = 1 + static_cast<int>(rng.below(10));
    g.eps = rng.gaussian_matrix(n, cfg.s * cfg.k);
    batch.push_back(std::move(g));
  }

  ad::Tape tape;
  std::vector<int> ids;
  for (const auto& p : net.params()) ids.push_back(tape.input(p.value));
  double total = 0.0;
  for (const auto& g : batch) total += static_cast<double>(g.eps.size());
  for (const auto& g : batch) {
    Mat ym(g.y0.rows(), g.y0.cols());
    for (Eigen::Index i = 0; i < g.y0.rows(); ++i) {
      const double ab = sched.alpha_bar(g.m(i));
      ym.row(i) = std::sqrt(ab) * g.y0.row(i) + std::sqrt(1.0 - ab) * g.eps.row(i);
    }
    const int out = net.build(tape, ids, tape.input(g.x), tape.input(g.p), tape.input(ym),
                              tape.input(net.time_embedding(g.m)),
                              Denoiser::precondition(g.m, sched.alphas_bar));
    tape.accumulate_sq_error(out, g.eps, 1.0 / total);
  }
  tape.backward();

  double worst = 0.0;
  for (std::size_t pi = 0; pi < net.params().size(); ++pi) {
    auto& p = net.params()[pi];
    const Mat& analytic = tape.grad(ids[pi]);
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        const double orig = p.value(r, c);
        const double h = 1e-5 * std::max(1.0, std::abs(orig));
        p.value(r, c) = orig + h;
        const double up = prepared_loss(net, sched, batch);
        p.value(r, c) = orig - h;
        const double down = prepared_loss(net, sched, batch);
        p.value(r, c) = orig;
        const double fd = (up - down) / (2.0 * h);
        const double rel = std::abs(fd - analytic(r, c)) /
                           std::max({std::abs(fd), std::abs(analytic(r, c)), 1e-6});
        worst = std::max(worst, rel);
      }
    }
  }
  line("property: analytic gradients vs central differences <= 1e-4 relative", worst < 1e-4,
       "worst " + num(worst));
}

void property_metrics() {
  Rng rng(606);
  const int agents = 3, s = 4, t = 12;
  std::vector<Path> gt;
  std::vector<std::vector<Path>> pred(agents);
  for (int n = 0; n < agents; ++n) {
    Path g(t, 2);
    for (int i = 0; i < t; ++i) {
      g(i, 0) = 0.4 * (i + 1) + 0.1 * n;
      g(i, 1) = 0.05 * n * (i + 1);
    }
    gt.push_back(g);
    for (int k = 0; k < s; ++k) {
      Path p = g;
      for (int i = 0; i < t; ++i) {
        p(i, 0) += 0.4 * rng.gaussian();
        p(i, 1) += 0.4 * rng.gaussian();
      }
      pred[static_cast<std::size_t>(n)].push_back(p);
    }
  }
  const auto m = ade_fde(pred, gt);
  double ade_sum = 0.0, fde_sum = 0.0;
  for (int n = 0; n < agents; ++n) {
    double ba = 1e18, bf = 1e18;
    for (int k = 0; k < s; ++k) {
      double a = 0.0;
      for (int i = 0; i < t; ++i)
        a += (pred[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)].row(i) -
              gt[static_cast<std::size_t>(n)].row(i))
                 .norm();
      ba = std::min(ba, a / t);
      bf = std::min(bf, (pred[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)].row(t - 1) -
                         gt[static_cast<std::size_t>(n)].row(t - 1))
                            .norm());
    }
    ade_sum += ba;
    fde_sum += bf;
  }
  const double diff = std::max(std::abs(m.ade - ade_sum / agents), std::abs(m.fde - fde_sum / agents));
  line("property: ADE/FDE equals explicit enumeration oracle", diff < 1e-12, "max " + num(diff));

  bool mono = true;
  std::vector<Path> growing;
  double pa = 1e18, pf = 1e18;
  for (int k = 0; k < 8; ++k) {
    Path p = gt[0];
    for (int i = 0; i < t; ++i) {
      p(i, 0) += 0.5 * rng.gaussian();
      p(i, 1) += 0.5 * rng.gaussian();
    }
    growing.push_back(p);
    const auto mm = ade_fde({growing}, {gt[0]});
    if (mm.ade > pa + 1e-15 || mm.fde > pf + 1e-15) mono = false;
    pa = mm.ade;
    pf = mm.fde;
  }
  line("property: min-over-S monotonicity", mono);
}

// ---------------------------------------------------------------------------
// End-to-end gates
// ---------------------------------------------------------------------------

fs::path work_dir() {
  const fs::path d = fs::temp_directory_path() / "tp_acceptance";
  fs::create_directories(d);
  return d;
}

void synthetic_end_to_end() {
  const fs::path dir = work_dir() / "synth";
  SynthOptions sopt;
  sopt.scenes = 5;
  sopt.agents_per_scene = 40;
  sopt.turn_fraction = 0.55;
  sopt.seed = 2028;
  const fs::path reg_path = write_synthetic_corpus(dir, sopt);
  const SceneRegistry reg = SceneRegistry::load(reg_path);

  ModelConfig cfg = ModelConfig::desk_scale();
  cfg.seed = 17;

  ProtocolOptions mopt;
  mopt.model = cfg;
  mopt.seed = 17;
  mopt.scene_filter = "synthA";
  mopt.checkpoint_dir = work_dir() / "ckpt";
  const auto model_rs =
      run_protocol(Task::stochastic, PredictorKind::singular_trajectory, reg, mopt);

  ProtocolOptions copt;
  copt.model = cfg;
  copt.seed = 17;
  copt.scene_filter = "synthA";
  const auto cv_rs = run_protocol(Task::stochastic, PredictorKind::constant_velocity, reg, copt);

  const double model_ade = model_rs.front().ade;
  const double cv_ade = cv_rs.front().ade;
  line("synthetic e2e: trained stochastic ADE < 0.5x constant-velocity ADE",
       model_ade < 0.5 * cv_ade, num(model_ade) + " vs cv " + num(cv_ade));

  // traversability of the sampled points, via the saved checkpoint
  const TaskSpec spec = TaskSpec::leave_one_out(Task::stochastic, "synthA", reg.scene_names());
  fs::path ck;
  for (const auto& e : fs::directory_iterator(mopt.checkpoint_dir)) {
    if (e.path().string().find("stochastic_synthA") != std::string::npos) ck = e.path();
  }
  DiffusionPredictor model = DiffusionPredictor::load(ck);
  ModelPredictor pred(std::move(model));
  FieldCache fields(reg);
  const auto by_scene = load_all_windows(reg, spec);
  const Split split = make_split(spec, by_scene, 17);
  Rng rng(derive_seed(17, "traversability"));
  const double frac = traversable_fraction(pred, split.test, fields, rng);
  line("synthetic e2e: >= 95% of sampled path points on traversable cells", frac >= 0.95,
       num(100.0 * frac) + "%");
}

void zara1_reproduction() {
  const char* env = std::getenv("TRAJPRED_ETH_UCY_REGISTRY");
  if (!env) {
    skip("ZARA1 desk-scale stochastic ADE/FDE within 2x of 0.19/0.32",
         "set TRAJPRED_ETH_UCY_REGISTRY to the ETH/UCY registry JSON to run");
    skip("ZARA1 desk-scale deterministic ADE/FDE within 2x of 0.44/0.93", "dataset not present");
    skip("ZARA1 desk-scale beats the constant-velocity baseline", "dataset not present");
    return;
  }
  const SceneRegistry reg = SceneRegistry::load(env);
  ModelConfig cfg = ModelConfig::desk_scale();
  const char* epochs = std::getenv("TRAJPRED_ZARA1_EPOCHS");
  if (epochs) cfg.epochs = std::atoi(epochs);

  ProtocolOptions opt;
  opt.model = cfg;
  opt.seed = 17;
  opt.scene_filter = "ZARA1";
  opt.checkpoint_dir = work_dir() / "ckpt_zara1";
  opt.log = &std::cout;
  const auto sto = run_protocol(Task::stochastic, PredictorKind::singular_trajectory, reg, opt);
  line("ZARA1 desk-scale stochastic ADE/FDE within 2x of 0.19/0.32",
       sto.front().ade <= 2.0 * 0.19 && sto.front().fde <= 2.0 * 0.32,
       num(sto.front().ade) + "/" + num(sto.front().fde));

  ProtocolOptions dopt = opt;
  dopt.checkpoint_dir = work_dir() / "ckpt_zara1_det";
  const auto det = run_protocol(Task::deterministic, PredictorKind::singular_trajectory, reg, dopt);
  line("ZARA1 desk-scale deterministic ADE/FDE within 2x of 0.44/0.93",
       det.front().ade <= 2.0 * 0.44 && det.front().fde <= 2.0 * 0.93,
       num(det.front().ade) + "/" + num(det.front().fde));

  ProtocolOptions copt;
  copt.model = cfg;
  copt.seed = 17;
  copt.scene_filter = "ZARA1";
  const auto cv = run_protocol(Task::stochastic, PredictorKind::constant_velocity, reg, copt);
  line("ZARA1 desk-scale beats the constant-velocity baseline", sto.front().ade < cv.front().ade,
       num(sto.front().ade) + " vs cv " + num(cv.front().ade));
}

void ablation_smoke() {
  const fs::path dir = work_dir() / "synth_ablate";
  SynthOptions sopt;
  sopt.scenes = 5;
  sopt.agents_per_scene = 22;
  sopt.turn_fraction = 0.55;
  sopt.seed = 4040;
  const SceneRegistry reg = SceneRegistry::load(write_synthetic_corpus(dir, sopt));
  const auto scenes = reg.scene_names();
  const std::string bench = scenes[3];

  ModelConfig base = ModelConfig::desk_scale();
  base.width = 32;
  base.epochs = 14;
  base.seed = 23;

  const std::vector<std::string> tasks{"deterministic", "stochastic", "momentary",
                                       "domain_adaptation", "few_shot"};
  auto label_for = [&](const std::string& task) {
    return task == "domain_adaptation" ? scenes[2] + "2" + bench : bench;
  };

  auto run_cell = [&](const ModelConfig& cfg, const std::string& task) {
    ProtocolOptions opt;
    opt.model = cfg;
    opt.seed = 23;
    opt.scene_filter = label_for(task);
    const auto rs =
        run_protocol(task_from_name(task), PredictorKind::singular_trajectory, reg, opt);
    return AdeFde{rs.front().ade, rs.front().fde};
  };

  std::vector<AblationRow> k_rows;
  double k1_ade = -1.0, k4_ade = -1.0;
  for (int k = 1; k <= 6; ++k) {
    ModelConfig cfg = base;
    cfg.k = k;
    AblationRow row;
    row.value = "K=" + std::to_string(k);
    for (const auto& t : tasks) row.per_task.emplace_back(t, run_cell(cfg, t));
    double stoch = 0.0;
    for (const auto& [t, m] : row.per_task)
      if (t == "stochastic") stoch = m.ade;
    if (k == 1) k1_ade = stoch;
    if (k == 4) k4_ade = stoch;
    k_rows.push_back(std::move(row));
    std::cout << "  swept K=" << k << std::endl;
  }
  std::vector<AblationRow> m_rows;
  for (int m : {1, 2, 5, 10, 25}) {
    ModelConfig cfg = base;
    cfg.m_steps = m;
    AblationRow row;
    row.value = "M=" + std::to_string(m);
    for (const auto& t : tasks) row.per_task.emplace_back(t, run_cell(cfg, t));
    m_rows.push_back(std::move(row));
    std::cout << "  swept M=" << m << std::endl;
  }

  const fs::path out = work_dir() / "ablation";
  fs::create_directories(out);
  {
    std::ofstream os(out / "ablation_k.md");
    os << ablation_markdown("K", k_rows);
  }
  {
    std::ofstream os(out / "ablation_m.md");
    os << ablation_markdown("M", m_rows);
  }

  const std::string k_md = ablation_markdown("K", k_rows);
  const std::string m_md = ablation_markdown("M", m_rows);
  const bool k_shape = k_rows.size() == 6 && k_rows.front().per_task.size() == 5 &&
                       k_md.find("| K |") != std::string::npos &&
                       k_md.find("Average") != std::string::npos;
  const bool m_shape = m_rows.size() == 5 && m_md.find("M=25") != std::string::npos;
  line("ablation: K sweep completes and emits a five-task table with Average", k_shape);
  line("ablation: M sweep completes and emits a five-task table with Average", m_shape);
  line("ablation: K=1 strictly worse stochastic ADE than K=4", k1_ade > k4_ade,
       "K=1 " + num(k1_ade) + " vs K=4 " + num(k4_ade));
}

void protocol_structure() {
  const fs::path dir = work_dir() / "synth_proto";
  SynthOptions sopt;
  sopt.scenes = 5;
  sopt.agents_per_scene = 10;
  sopt.seed = 91;
  const SceneRegistry reg = SceneRegistry::load(write_synthetic_corpus(dir, sopt));

  ProtocolOptions opt;
  opt.seed = 5;
  const auto rs =
      run_protocol(Task::domain_adaptation, PredictorKind::constant_velocity, reg, opt);
  int pairs = 0;
  for (const auto& r : rs)
    if (!r.aggregate) ++pairs;
  line("protocol: domain adaptation emits exactly 25 pair results", pairs == 25,
       std::to_string(pairs) + " pairs");

  const TaskSpec fs_spec = TaskSpec::leave_one_out(Task::few_shot, "synthA", reg.scene_names());
  const auto by_scene = load_all_windows(reg, fs_spec);
  std::size_t full = 0;
  for (const auto& s : fs_spec.train_scenes) full += by_scene.at(s).size();
  const Split split = make_split(fs_spec, by_scene, 7);
  line("protocol: few-shot retains exactly floor(0.1 * train windows)",
       split.train_count() == full / 10,
       std::to_string(split.train_count()) + " of " + std::to_string(full));

  const TaskSpec mom = TaskSpec::leave_one_out(Task::momentary, "synthA", reg.scene_names());
  const auto mw = load_all_windows(reg, mom);
  bool ok = true;
  for (const auto& [scene, ws] : mw)
    for (const auto& w : ws) ok = ok && w.hist.rows() == 2;
  line("protocol: momentary windows have T_hist = 2", ok);
}

}  // namespace

int main() {
  std::cout << "== acceptance: property gates ==" << std::endl;
  checked("property: SVD", [] { property_svd(); });
  checked("property: bspline", [] { property_bspline(); });
  checked("property: vector field", [] { property_field(); });
  checked("property: anchor adaptation", [] { property_adapt(); });
  checked("property: DDIM", [] { property_ddim(); });
  checked("property: gradients", [] { property_gradients(); });
  checked("property: metrics", [] { property_metrics(); });

  std::cout << "== acceptance: protocol structure ==" << std::endl;
  checked("protocol structure", [] { protocol_structure(); });

  std::cout << "== acceptance: synthetic end-to-end ==" << std::endl;
  checked("synthetic e2e", [] { synthetic_end_to_end(); });

  std::cout << "== acceptance: ablation smoke ==" << std::endl;
  checked("ablation", [] { ablation_smoke(); });

  std::cout << "== acceptance: real-data reproduction target ==" << std::endl;
  checked("ZARA1", [] { zara1_reproduction(); });

  std::cout << (g_failures == 0 ? "ACCEPTANCE: all gates passed"
                                : "ACCEPTANCE: " + std::to_string(g_failures) + " gate(s) failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
