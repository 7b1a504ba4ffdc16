#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "masklab/error.hpp"
#include "masklab/rng.hpp"

namespace masklab {

// Bidirectional pre-norm transformer sized per task. mlp_ratio is 4: the
// published per-size parameter totals (0.4M addition, 21.3M countdown, 6.4M
// sudoku, ...) reconcile with a 4x hidden dim and not with 3x.
struct ModelConfig {
  int layers = 2;
  int heads = 2;
  int embed_dim = 128;
  int vocab_size = 0;
  int max_seq_len = 0;
  int mlp_ratio = 4;

  void validate() const {
    check(layers >= 1 && heads >= 1 && embed_dim >= 1, "model config: bad shape");
    check(embed_dim % heads == 0, "model config: embed_dim not divisible by heads");
    check(vocab_size >= 1 && max_seq_len >= 1, "model config: vocab/seq unset");
    check(mlp_ratio >= 1, "model config: bad mlp_ratio");
  }
};

struct ParamSlice {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

namespace detail {

template <typename T>
inline T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(0.7071067811865476)));
}

template <typename T>
inline T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865476)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
  return cdf + x * pdf;
}

}  // namespace detail

// Dense activations and gradients for one forward/backward pass. Rows are
// flattened (batch * position); reuse one workspace across steps to avoid
// reallocation.
template <typename T>
struct Workspace {
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix x_in;       // block input
    Matrix ln1_xhat;   // normalized input, pre gain/bias
    Vector ln1_rstd;
    Matrix h1;         // ln1 output
    Matrix qkv;
    Matrix attn;       // concatenated head outputs
    Matrix x2;         // x_in + attention residual
    Matrix ln2_xhat;
    Vector ln2_rstd;
    Matrix h2;         // ln2 output
    Matrix m1;         // pre-GELU
    Matrix gm;         // post-GELU
  };

  int batch = 0;
  int len = 0;
  std::vector<Layer> layers;
  Matrix lnf_xhat;
  Vector lnf_rstd;
  Matrix hf;       // final hidden states feeding the tied head
  Matrix logits;   // (batch*len, vocab)

  // backward scratch
  Matrix d_x, d_branch, d_qkv, d_mid;
  Matrix scores, probs, d_probs, d_scores;
};

// Transformer with a single flat parameter vector plus a named-slice table.
// Templated on the scalar so training runs in float and the finite-difference
// gradient check runs the identical code in double.
template <typename T>
class Transformer {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using Map = Eigen::Map<Matrix>;
  using ConstMap = Eigen::Map<const Matrix>;

  explicit Transformer(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int d = cfg_.embed_dim;
    const int hd = d * cfg_.mlp_ratio;
    auto add = [&](const std::string& name, int rows, int cols) {
      slices_.push_back({name, total_, rows, cols});
      total_ += static_cast<std::size_t>(rows) * cols;
    };
    add("embed.tok", cfg_.vocab_size, d);
    add("embed.pos", cfg_.max_seq_len, d);
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      add(p + "ln1.g", 1, d);
      add(p + "ln1.b", 1, d);
      add(p + "attn.wqkv", d, 3 * d);
      add(p + "attn.bqkv", 1, 3 * d);
      add(p + "attn.wo", d, d);
      add(p + "attn.bo", 1, d);
      add(p + "ln2.g", 1, d);
      add(p + "ln2.b", 1, d);
      add(p + "mlp.w1", d, hd);
      add(p + "mlp.b1", 1, hd);
      add(p + "mlp.w2", hd, d);
      add(p + "mlp.b2", 1, d);
    }
    add("lnf.g", 1, d);
    add("lnf.b", 1, d);
    params_ = Vector::Zero(static_cast<Eigen::Index>(total_));
    grads_ = Vector::Zero(static_cast<Eigen::Index>(total_));
  }

  const ModelConfig& config() const { return cfg_; }
  std::size_t param_count() const { return total_; }
  const std::vector<ParamSlice>& slices() const { return slices_; }
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }
  Vector& grads() { return grads_; }
  const Vector& grads() const { return grads_; }
  void zero_grads() { grads_.setZero(); }

  const ParamSlice& slice(const std::string& name) const {
    for (const ParamSlice& s : slices_) {
      if (s.name == name) return s;
    }
    fail("unknown parameter slice: " + name);
  }

  // Projections and embeddings start truncated-normal; biases zero; the two
  // branch layer-norm gains start at zero so every block begins as the
  // identity, keeping step-0 confidences flat; the head layer-norm gain is 1.
  void init(Rng& rng) {
    params_.setZero();
    for (const ParamSlice& s : slices_) {
      const bool weight = s.name.find(".w") != std::string::npos ||
                          s.name.rfind("embed.", 0) == 0;
      if (weight) {
        T* p = params_.data() + s.offset;
        for (std::size_t i = 0; i < s.size(); ++i) p[i] = static_cast<T>(rng.trunc_normal(0.02));
      } else if (s.name == "lnf.g") {
        view(s).setOnes();
      }
    }
  }

  Map view(const ParamSlice& s) { return Map(params_.data() + s.offset, s.rows, s.cols); }
  ConstMap view(const ParamSlice& s) const {
    return ConstMap(params_.data() + s.offset, s.rows, s.cols);
  }
  ConstMap view(const std::string& name) const { return view(slice(name)); }

  // tokens: batch*len indices, row-major by sequence. Fills ws.logits with
  // (batch*len, vocab) raw scores and caches activations for backward.
  void forward(const std::vector<int>& tokens, int batch, int len, Workspace<T>& ws) const {
    check(batch >= 1 && len >= 1 && tokens.size() == static_cast<std::size_t>(batch) * len,
          "forward: token buffer shape mismatch");
    check(len <= cfg_.max_seq_len, "forward: sequence longer than max_seq_len");
    const int d = cfg_.embed_dim;
    const int rows = batch * len;
    ensure(ws, batch, len);

    ConstMap tok = view("embed.tok");
    ConstMap pos = view("embed.pos");
    Matrix* x = &ws.layers[0].x_in;
    x->resize(rows, d);
    for (int r = 0; r < rows; ++r) {
      const int t = tokens[static_cast<std::size_t>(r)];
      check(t >= 0 && t < cfg_.vocab_size, "forward: token index out of range");
      x->row(r) = tok.row(t) + pos.row(r % len);
    }

    for (int l = 0; l < cfg_.layers; ++l) {
      auto& L = ws.layers[l];  // x already points at L.x_in
      layer_norm(L.x_in, view(name(l, "ln1.g")), view(name(l, "ln1.b")), L.ln1_xhat, L.ln1_rstd,
                 L.h1);
      L.qkv.noalias() = L.h1 * view(name(l, "attn.wqkv"));
      L.qkv.rowwise() += view(name(l, "attn.bqkv")).row(0);
      attention(L.qkv, batch, len, L.attn, ws);
      L.x2.noalias() = L.attn * view(name(l, "attn.wo"));
      L.x2.rowwise() += view(name(l, "attn.bo")).row(0);
      L.x2 += L.x_in;
      layer_norm(L.x2, view(name(l, "ln2.g")), view(name(l, "ln2.b")), L.ln2_xhat, L.ln2_rstd,
                 L.h2);
      L.m1.noalias() = L.h2 * view(name(l, "mlp.w1"));
      L.m1.rowwise() += view(name(l, "mlp.b1")).row(0);
      L.gm = L.m1.unaryExpr([](T v) { return detail::gelu(v); });
      ws.d_mid.resize(rows, d);
      ws.d_mid.noalias() = L.gm * view(name(l, "mlp.w2"));
      ws.d_mid.rowwise() += view(name(l, "mlp.b2")).row(0);
      ws.d_mid += L.x2;
      x = (l + 1 < cfg_.layers) ? &ws.layers[l + 1].x_in : &ws.hf;
      *x = ws.d_mid;
    }

    layer_norm(ws.hf, view("lnf.g"), view("lnf.b"), ws.lnf_xhat, ws.lnf_rstd, ws.hf);
    ws.logits.resize(rows, cfg_.vocab_size);
    ws.logits.noalias() = ws.hf * tok.transpose();
  }

  // Accumulates parameter gradients for d(loss)/d(logits) into grads().
  // Requires the workspace of the matching forward call.
  void backward(const std::vector<int>& tokens, int batch, int len, Workspace<T>& ws,
                const Matrix& d_logits) {
    const int d = cfg_.embed_dim;
    const int rows = batch * len;
    check(d_logits.rows() == rows && d_logits.cols() == cfg_.vocab_size,
          "backward: d_logits shape mismatch");

    ConstMap tok = view("embed.tok");
    Map d_tok = gview("embed.tok");
    Map d_pos = gview("embed.pos");

    // head: logits = hf_normed * tok^T (hf holds the normed value after forward)
    d_tok.noalias() += d_logits.transpose() * ws.hf;
    ws.d_x.resize(rows, d);
    ws.d_x.noalias() = d_logits * tok;
    layer_norm_backward(ws.lnf_xhat, ws.lnf_rstd, view("lnf.g"), gview("lnf.g"), gview("lnf.b"),
                        ws.d_x);

    for (int l = cfg_.layers - 1; l >= 0; --l) {
      auto& L = ws.layers[l];
      // MLP branch
      ws.d_mid.resize(rows, cfg_.embed_dim * cfg_.mlp_ratio);
      ws.d_mid.noalias() = ws.d_x * view(name(l, "mlp.w2")).transpose();
      gview(name(l, "mlp.w2")).noalias() += L.gm.transpose() * ws.d_x;
      gview(name(l, "mlp.b2")).row(0) += ws.d_x.colwise().sum();
      ws.d_mid.array() *= L.m1.unaryExpr([](T v) { return detail::gelu_grad(v); }).array();
      gview(name(l, "mlp.w1")).noalias() += L.h2.transpose() * ws.d_mid;
      gview(name(l, "mlp.b1")).row(0) += ws.d_mid.colwise().sum();
      ws.d_branch.resize(rows, d);
      ws.d_branch.noalias() = ws.d_mid * view(name(l, "mlp.w1")).transpose();
      layer_norm_backward(L.ln2_xhat, L.ln2_rstd, view(name(l, "ln2.g")), gview(name(l, "ln2.g")),
                          gview(name(l, "ln2.b")), ws.d_branch);
      ws.d_x += ws.d_branch;  // residual: d_x now holds d(x2)

      // attention branch
      gview(name(l, "attn.wo")).noalias() += L.attn.transpose() * ws.d_x;
      gview(name(l, "attn.bo")).row(0) += ws.d_x.colwise().sum();
      ws.d_branch.noalias() = ws.d_x * view(name(l, "attn.wo")).transpose();
      attention_backward(L.qkv, ws.d_branch, batch, len, ws);
      gview(name(l, "attn.wqkv")).noalias() += L.h1.transpose() * ws.d_qkv;
      gview(name(l, "attn.bqkv")).row(0) += ws.d_qkv.colwise().sum();
      ws.d_branch.noalias() = ws.d_qkv * view(name(l, "attn.wqkv")).transpose();
      layer_norm_backward(L.ln1_xhat, L.ln1_rstd, view(name(l, "ln1.g")), gview(name(l, "ln1.g")),
                          gview(name(l, "ln1.b")), ws.d_branch);
      ws.d_x += ws.d_branch;
    }

    for (int r = 0; r < rows; ++r) {
      d_tok.row(tokens[static_cast<std::size_t>(r)]) += ws.d_x.row(r);
      d_pos.row(r % len) += ws.d_x.row(r);
    }
  }

 private:
  static constexpr T kLnEps = T(1e-5);

  std::string name(int layer, const char* tail) const {
    return "layer" + std::to_string(layer) + "." + tail;
  }

  Map gview(const std::string& n) {
    const ParamSlice& s = slice(n);
    return Map(grads_.data() + s.offset, s.rows, s.cols);
  }

  void ensure(Workspace<T>& ws, int batch, int len) const {
    ws.batch = batch;
    ws.len = len;
    ws.layers.resize(cfg_.layers);
  }

  void layer_norm(const Matrix& x, ConstMap g, ConstMap b, Matrix& xhat, Vector& rstd,
                  Matrix& out) const {
    const Eigen::Index rows = x.rows(), cols = x.cols();
    xhat.resize(rows, cols);
    rstd.resize(rows);
    out.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const T mean = x.row(r).mean();
      const T var = (x.row(r).array() - mean).square().mean();
      const T rs = T(1) / std::sqrt(var + kLnEps);
      rstd(r) = rs;
      xhat.row(r) = (x.row(r).array() - mean) * rs;
      out.row(r) = xhat.row(r).cwiseProduct(g.row(0)) + b.row(0);
    }
  }

  void layer_norm_backward(const Matrix& xhat, const Vector& rstd, ConstMap g, Map dg, Map db,
                           Matrix& d_inout) const {
    const Eigen::Index rows = xhat.rows();
    for (Eigen::Index r = 0; r < rows; ++r) {
      dg.row(0) += d_inout.row(r).cwiseProduct(xhat.row(r));
      db.row(0) += d_inout.row(r);
      d_inout.row(r).array() *= g.row(0).array();  // now holds dy * gain
      const T m1 = d_inout.row(r).mean();
      const T m2 = d_inout.row(r).cwiseProduct(xhat.row(r)).mean();
      d_inout.row(r) =
          ((d_inout.row(r).array() - m1) - xhat.row(r).array() * m2) * rstd(r);
    }
  }

  void attention(const Matrix& qkv, int batch, int len, Matrix& out, Workspace<T>& ws) const {
    const int d = cfg_.embed_dim;
    const int hd = d / cfg_.heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    out.resize(static_cast<Eigen::Index>(batch) * len, d);
    ws.scores.resize(len, len);
    ws.probs.resize(len, len);
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index r0 = static_cast<Eigen::Index>(b) * len;
      for (int h = 0; h < cfg_.heads; ++h) {
        auto Q = qkv.block(r0, h * hd, len, hd);
        auto K = qkv.block(r0, d + h * hd, len, hd);
        auto V = qkv.block(r0, 2 * d + h * hd, len, hd);
        ws.scores.noalias() = Q * K.transpose() * scale;
        softmax_rows(ws.scores, ws.probs);
        out.block(r0, h * hd, len, hd).noalias() = ws.probs * V;
      }
    }
  }

  // Recomputes attention probabilities from the cached qkv instead of storing
  // (heads, len, len) tensors per layer; d_attn is consumed, d_qkv is filled.
  void attention_backward(const Matrix& qkv, const Matrix& d_attn, int batch, int len,
                          Workspace<T>& ws) {
    const int d = cfg_.embed_dim;
    const int hd = d / cfg_.heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    ws.d_qkv.resize(qkv.rows(), qkv.cols());
    ws.scores.resize(len, len);
    ws.probs.resize(len, len);
    ws.d_probs.resize(len, len);
    ws.d_scores.resize(len, len);
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index r0 = static_cast<Eigen::Index>(b) * len;
      for (int h = 0; h < cfg_.heads; ++h) {
        auto Q = qkv.block(r0, h * hd, len, hd);
        auto K = qkv.block(r0, d + h * hd, len, hd);
        auto V = qkv.block(r0, 2 * d + h * hd, len, hd);
        auto dA = d_attn.block(r0, h * hd, len, hd);
        ws.scores.noalias() = Q * K.transpose() * scale;
        softmax_rows(ws.scores, ws.probs);
        ws.d_probs.noalias() = dA * V.transpose();
        for (int r = 0; r < len; ++r) {
          const T dot = ws.d_probs.row(r).dot(ws.probs.row(r));
          ws.d_scores.row(r).array() =
              ws.probs.row(r).array() * (ws.d_probs.row(r).array() - dot);
        }
        ws.d_qkv.block(r0, 2 * d + h * hd, len, hd).noalias() = ws.probs.transpose() * dA;
        ws.d_qkv.block(r0, h * hd, len, hd).noalias() = ws.d_scores * K * scale;
        ws.d_qkv.block(r0, d + h * hd, len, hd).noalias() = ws.d_scores.transpose() * Q * scale;
      }
    }
  }

  static void softmax_rows(const Matrix& in, Matrix& out) {
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      const T mx = in.row(r).maxCoeff();
      out.row(r) = (in.row(r).array() - mx).exp();
      out.row(r) /= out.row(r).sum();
    }
  }

  ModelConfig cfg_;
  std::vector<ParamSlice> slices_;
  std::size_t total_ = 0;
  Vector params_;
  Vector grads_;
};

}  // namespace masklab
