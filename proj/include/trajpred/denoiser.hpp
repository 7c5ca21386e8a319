#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajpred/autodiff.hpp"
#include "trajpred/common.hpp"

namespace trajpred {

struct DenoiserConfig {
  int k = 4;       // Singular-space dimension
  int s = 20;      // anchor channels denoised jointly
  int width = 256; // model width
  int heads = 4;
  std::uint64_t seed = 1;
};

struct ParamTensor {
  std::string name;
  Mat value;
  Mat m;  // AdamW first moment
  Mat v;  // AdamW second moment
};

// Noise estimator eps(y_m, m, X, P): per-agent embeddings of the history
// coordinates, the anchor set and the noisy residual, one multi-head
// attention layer across the agents of a scene for the interaction
// feature, a sinusoidal timestep embedding, and a two-layer head that
// emits the S x K noise estimate. All rows are agents; every op is
// row-parallel except the attention, so the whole net is permutation
// equivariant over agents.
class Denoiser {
 public:
  Denoiser() = default;

  explicit Denoiser(const DenoiserConfig& cfg) : cfg_(cfg) {
    if (cfg.width % 2 != 0) throw ConfigError("denoiser width must be even");
    if (cfg.width % cfg.heads != 0) throw ConfigError("denoiser width must divide by head count");
    Rng rng(derive_seed(cfg.seed, "denoiser-init"));
    const int d = cfg.width;
    const int sk = cfg.s * cfg.k;
    add_param("w_x", cfg.k, d, rng);
    add_bias("b_x", d);
    add_param("w_p", sk, d, rng);
    add_bias("b_p", d);
    add_param("w_q", d, d, rng);
    add_param("w_k", d, d, rng);
    add_param("w_v", d, d, rng);
    add_param("w_o", d, d, rng);
    add_bias("b_o", d);
    params_.push_back({"ln_gamma", Mat::Ones(1, d), Mat::Zero(1, d), Mat::Zero(1, d)});
    add_bias("ln_beta", d);
    add_param("w_y", sk, d, rng);
    add_bias("b_y", d);
    add_param("w_1", 5 * d, d, rng);
    add_bias("b_1", d);
    // zero-init output: the untrained chain reduces to the anchor prior
    params_.push_back({"w_2", Mat::Zero(d, sk), Mat::Zero(d, sk), Mat::Zero(d, sk)});
    add_bias("b_2", sk);
  }

  const DenoiserConfig& config() const { return cfg_; }
  std::vector<ParamTensor>& params() { return params_; }
  const std::vector<ParamTensor>& params() const { return params_; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  // Sinusoidal embedding of per-agent diffusion steps, N x width.
  Mat time_embedding(const Eigen::VectorXi& m) const {
    const int d = cfg_.width;
    Mat e(m.size(), d);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      for (int j = 0; j < d / 2; ++j) {
        const double freq = std::pow(10000.0, -2.0 * j / static_cast<double>(d));
        e(i, 2 * j) = std::sin(m(i) * freq);
        e(i, 2 * j + 1) = std::cos(m(i) * freq);
      }
    }
    return e;
  }

  // Analytic part of the estimate: with unit-variance latents the best
  // linear predictor of the noise from y_m alone is sqrt(1-abar_m) * y_m.
  // The learned head predicts the correction on top of it, which keeps the
  // estimator well conditioned over the whole chain.
  static Vec precondition(const Eigen::VectorXi& m, const Vec& alphas_bar) {
    Vec c(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const int mi = m(i);
      if (mi < 1 || mi > alphas_bar.size()) throw ArgError("denoiser: step out of range");
      c(i) = std::sqrt(1.0 - alphas_bar(mi - 1));
    }
    return c;
  }

  // Builds the estimator on a tape. param_ids must hold one input node per
  // parameter, in params() order (shared across groups within a batch).
  // x: N x K, p: N x (S*K), y: N x (S*K), temb: N x width. precond holds
  // one linear-skip coefficient per agent (zeros disable the skip).
  int build(ad::Tape& t, const std::vector<int>& param_ids, int x, int p, int y, int temb,
            const Vec& precond) const {
    int i = 0;
    auto next = [&]() { return param_ids[static_cast<std::size_t>(i++)]; };
    const int w_x = next(), b_x = next(), w_p = next(), b_p = next();
    const int w_q = next(), w_k = next(), w_v = next(), w_o = next(), b_o = next();
    const int ln_g = next(), ln_b = next();
    const int w_y = next(), b_y = next();
    const int w_1 = next(), b_1 = next(), w_2 = next(), b_2 = next();

    const int h = t.add_rowvec(t.matmul(x, w_x), b_x);
    const int pe = t.add_rowvec(t.matmul(p, w_p), b_p);
    const int tok = t.add(h, pe);

    // one multi-head self-attention layer over agents
    const int q = t.matmul(tok, w_q);
    const int k = t.matmul(tok, w_k);
    const int v = t.matmul(tok, w_v);
    const int dh = cfg_.width / cfg_.heads;
    std::vector<int> heads;
    for (int hh = 0; hh < cfg_.heads; ++hh) {
      const int qh = t.slice_cols(q, hh * dh, dh);
      const int kh = t.slice_cols(k, hh * dh, dh);
      const int vh = t.slice_cols(v, hh * dh, dh);
      const int scores = t.scale(t.matmul(qh, kh, false, true), 1.0 / std::sqrt(static_cast<double>(dh)));
      heads.push_back(t.matmul(t.softmax_rows(scores), vh));
    }
    const int attn = t.add_rowvec(t.matmul(t.concat_cols(heads), w_o), b_o);
    const int g = t.layer_norm(t.add(tok, attn), ln_g, ln_b);

    const int ye = t.add_rowvec(t.matmul(y, w_y), b_y);
    const int cond = t.concat_cols({h, pe, g, temb, ye});
    const int z = t.gelu(t.add_rowvec(t.matmul(cond, w_1), b_1));
    const int head = t.add_rowvec(t.matmul(z, w_2), b_2);
    if (precond.size() == 0 || precond.isZero(0.0)) return head;
    return t.add(head, t.scale_rows(y, precond));
  }

  // Inference-only forward.
  Mat eps(const Mat& x, const Mat& p, const Mat& y, const Eigen::VectorXi& m,
          const Vec& precond = Vec()) const {
    check_shapes(x, p, y, m);
    ad::Tape t;
    std::vector<int> ids;
    ids.reserve(params_.size());
    for (const auto& pr : params_) ids.push_back(t.input(pr.value));
    const int out = build(t, ids, t.input(x), t.input(p), t.input(y), t.input(time_embedding(m)),
                          precond);
    return t.val(out);
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["k"] = cfg_.k;
    j["s"] = cfg_.s;
    j["width"] = cfg_.width;
    j["heads"] = cfg_.heads;
    j["seed"] = cfg_.seed;
    nlohmann::ordered_json ps;
    for (const auto& p : params_) {
      nlohmann::ordered_json e;
      e["rows"] = p.value.rows();
      e["cols"] = p.value.cols();
      e["data"] = std::vector<double>(p.value.data(), p.value.data() + p.value.size());
      ps[p.name] = e;
    }
    j["params"] = ps;
    return j;
  }

  static Denoiser from_json(const nlohmann::ordered_json& j) {
    DenoiserConfig cfg;
    cfg.k = j.at("k").get<int>();
    cfg.s = j.at("s").get<int>();
    cfg.width = j.at("width").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    Denoiser d(cfg);
    for (auto& p : d.params_) {
      const auto& e = j.at("params").at(p.name);
      const auto rows = e.at("rows").get<Eigen::Index>();
      const auto cols = e.at("cols").get<Eigen::Index>();
      const auto data = e.at("data").get<std::vector<double>>();
      if (rows != p.value.rows() || cols != p.value.cols() ||
          static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw ConfigError("checkpoint parameter " + p.name + " has wrong shape");
      }
      p.value = Eigen::Map<const Mat>(data.data(), rows, cols);
      p.m.setZero();
      p.v.setZero();
    }
    return d;
  }

 private:
  void check_shapes(const Mat& x, const Mat& p, const Mat& y, const Eigen::VectorXi& m) const {
    const Eigen::Index n = x.rows();
    if (x.cols() != cfg_.k) throw ShapeError("denoiser: history coords must be N x K");
    if (p.rows() != n || p.cols() != cfg_.s * cfg_.k) throw ShapeError("denoiser: anchors must be N x S*K");
    if (y.rows() != n || y.cols() != cfg_.s * cfg_.k) throw ShapeError("denoiser: latents must be N x S*K");
    if (m.size() != n) throw ShapeError("denoiser: one diffusion step per agent");
  }

  void add_param(const std::string& name, int rows, int cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Mat w(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform(-bound, bound);
    params_.push_back({name, std::move(w), Mat::Zero(rows, cols), Mat::Zero(rows, cols)});
  }

  void add_bias(const std::string& name, int cols) {
    params_.push_back({name, Mat::Zero(1, cols), Mat::Zero(1, cols), Mat::Zero(1, cols)});
  }

  DenoiserConfig cfg_;
  std::vector<ParamTensor> params_;
};

// Decoupled weight-decay Adam. Decay skips biases and the layer-norm
// gain/offset.
struct AdamW {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  long step_count = 0;

  void step(std::vector<ParamTensor>& params, const std::vector<Mat>& grads) {
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      const Mat& g = grads[i];
      p.m = beta1 * p.m + (1.0 - beta1) * g;
      p.v = beta2 * p.v + (1.0 - beta2) * g.cwiseProduct(g);
      const Mat mhat = p.m / bc1;
      const Mat vhat = p.v / bc2;
      const bool decay = p.value.rows() > 1;  // matrices only
      if (decay && weight_decay > 0.0) p.value -= lr * weight_decay * p.value;
      p.value -= lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
    }
  }
};

}  // namespace trajpred
