#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stylo/nn.hpp"
#include "stylo/rng.hpp"
#include "stylo/types.hpp"

namespace stylo {

/// Shape of a from-scratch encoder classifier.
struct ModelShape {
  int vocab_size = 0;
  int hidden = 256;
  int heads = 4;
  int layers = 4;
  int ffn_dim = 1024;
  int max_len = 512;
  int head_dim = 256;  // inner width of the classification head
  double dropout = 0.2;

  void validate() const {
    if (vocab_size < 5) throw ValidationError("vocabulary too small");
    if (hidden < 1 || heads < 1 || hidden % heads != 0)
      throw ValidationError("hidden size must be a positive multiple of the head count");
    if (layers < 1 || ffn_dim < 1 || head_dim < 1) throw ValidationError("layer sizes must be positive");
    if (max_len < 2) throw ValidationError("max_len must be at least 2");
    if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("dropout must be in [0, 1)");
  }

  bool operator==(const ModelShape&) const = default;
};

/// Pre-LayerNorm transformer encoder with learned positions, followed by a
/// two-layer head (linear, ReLU, dropout, linear) that reads only the output
/// vector at position 0.
template <typename Scalar>
class SequenceClassifier {
 public:
  using Matrix = nn::Matrix<Scalar>;
  using Param = nn::Parameter<Scalar>;

  struct LayerParams {
    Param ln1_gamma, ln1_beta, wq, bq, wk, bk, wv, bv, wo, bo;
    Param ln2_gamma, ln2_beta, w1, b1, w2, b2;
  };

  struct LayerTrace {
    nn::LayerNormCache<Scalar> ln1, ln2;
    Matrix y1, q, k, v, concat, y2, ffn_pre, ffn_act;
    std::vector<Matrix> attention;  // per head, T x T
  };

  struct EncoderTrace {
    std::vector<int> ids;
    std::vector<LayerTrace> layers;
    nn::LayerNormCache<Scalar> final_ln;
  };

  struct HeadTrace {
    Matrix h0, pre, act, dropped;
    Matrix mask;  // scaled keep-mask, ones in eval mode
  };

  SequenceClassifier() = default;

  SequenceClassifier(const ModelShape& shape, Rng& rng) : shape_(shape) {
    shape_.validate();
    const int d = shape.hidden;
    token_embedding_ = Param("embed.token", shape.vocab_size, d, false);
    position_embedding_ = Param("embed.position", shape.max_len, d, false);
    init_normal(token_embedding_, 0.02, rng);
    init_normal(position_embedding_, 0.02, rng);
    layers_.resize(static_cast<std::size_t>(shape.layers));
    for (int l = 0; l < shape.layers; ++l) {
      auto& L = layers_[static_cast<std::size_t>(l)];
      const std::string p = "layer" + std::to_string(l) + ".";
      L.ln1_gamma = gain(p + "ln1.gamma", d);
      L.ln1_beta = Param(p + "ln1.beta", 1, d, false);
      L.wq = weight(p + "attn.wq", d, d, rng);
      L.bq = Param(p + "attn.bq", 1, d, false);
      L.wk = weight(p + "attn.wk", d, d, rng);
      L.bk = Param(p + "attn.bk", 1, d, false);
      L.wv = weight(p + "attn.wv", d, d, rng);
      L.bv = Param(p + "attn.bv", 1, d, false);
      L.wo = weight(p + "attn.wo", d, d, rng);
      L.bo = Param(p + "attn.bo", 1, d, false);
      L.ln2_gamma = gain(p + "ln2.gamma", d);
      L.ln2_beta = Param(p + "ln2.beta", 1, d, false);
      L.w1 = weight(p + "ffn.w1", d, shape.ffn_dim, rng);
      L.b1 = Param(p + "ffn.b1", 1, shape.ffn_dim, false);
      L.w2 = weight(p + "ffn.w2", shape.ffn_dim, d, rng);
      L.b2 = Param(p + "ffn.b2", 1, d, false);
    }
    final_gamma_ = gain("final_ln.gamma", d);
    final_beta_ = Param("final_ln.beta", 1, d, false);
    reset_head(rng);
  }

  /// Fresh classification head, encoder untouched.
  void reset_head(Rng& rng) {
    head_w1_ = weight("head.w1", shape_.hidden, shape_.head_dim, rng);
    head_b1_ = Param("head.b1", 1, shape_.head_dim, false);
    head_w2_ = weight("head.w2", shape_.head_dim, 2, rng);
    head_b2_ = Param("head.b2", 1, 2, false);
  }

  const ModelShape& shape() const { return shape_; }
  void set_dropout(double p) { shape_.dropout = p; }

  /// Encoder output, one row per token.
  Matrix encode(const std::vector<int>& ids, EncoderTrace* trace = nullptr) const {
    const auto t = static_cast<Eigen::Index>(ids.size());
    if (t == 0) throw std::invalid_argument("empty token sequence");
    if (t > shape_.max_len) throw std::invalid_argument("sequence longer than model max_len");
    Matrix x(t, shape_.hidden);
    for (Eigen::Index i = 0; i < t; ++i) {
      int id = ids[static_cast<std::size_t>(i)];
      if (id < 0 || id >= shape_.vocab_size) throw std::invalid_argument("token id out of range");
      x.row(i) = token_embedding_.value.row(id) + position_embedding_.value.row(i);
    }
    EncoderTrace local;
    EncoderTrace& tr = trace ? *trace : local;
    tr.ids = ids;
    tr.layers.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) x = layer_forward(layers_[l], x, tr.layers[l]);
    return nn::layer_norm(x, final_gamma_, final_beta_, tr.final_ln);
  }

  /// Two logits (human, ai) computed from row 0 of `hidden_states` only.
  /// Dropout is applied iff `dropout_rng` is non-null.
  std::array<Scalar, 2> head_logits(const Matrix& hidden_states, HeadTrace* trace = nullptr,
                                    Rng* dropout_rng = nullptr) const {
    HeadTrace local;
    HeadTrace& tr = trace ? *trace : local;
    tr.h0 = hidden_states.topRows(1);
    tr.pre = nn::linear(tr.h0, head_w1_, head_b1_);
    tr.act = tr.pre.cwiseMax(Scalar(0));
    tr.mask = Matrix::Ones(1, shape_.head_dim);
    if (dropout_rng && shape_.dropout > 0.0) {
      const Scalar keep_scale = Scalar(1) / Scalar(1.0 - shape_.dropout);
      for (Eigen::Index j = 0; j < tr.mask.cols(); ++j)
        tr.mask(0, j) = dropout_rng->uniform() < shape_.dropout ? Scalar(0) : keep_scale;
    }
    tr.dropped = tr.act.cwiseProduct(tr.mask);
    Matrix logits = nn::linear(tr.dropped, head_w2_, head_b2_);
    return {logits(0, 0), logits(0, 1)};
  }

  /// Deterministic eval-mode forward pass.
  Prediction predict(const std::vector<int>& ids) const {
    auto logits = head_logits(encode(ids));
    return prediction_from_logits(static_cast<double>(logits[0]), static_cast<double>(logits[1]));
  }

  /// Cross-entropy of one example; adds its gradient to every parameter.
  Scalar accumulate_gradients(const std::vector<int>& ids, Label label, Rng* dropout_rng) {
    EncoderTrace etr;
    HeadTrace htr;
    Matrix hidden = encode(ids, &etr);
    auto logits = head_logits(hidden, &htr, dropout_rng);
    const int y = static_cast<int>(label);
    const Scalar m = std::max(logits[0], logits[1]);
    const Scalar lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
    Matrix dlogits(1, 2);
    for (int c = 0; c < 2; ++c) dlogits(0, c) = std::exp(logits[static_cast<std::size_t>(c)] - lse) - (c == y ? 1 : 0);

    Matrix d_dropped = nn::linear_backward(htr.dropped, dlogits, head_w2_, head_b2_);
    Matrix d_act = d_dropped.cwiseProduct(htr.mask);
    Matrix d_pre = d_act.cwiseProduct((htr.pre.array() > Scalar(0)).template cast<Scalar>().matrix());
    Matrix d_h0 = nn::linear_backward(htr.h0, d_pre, head_w1_, head_b1_);
    Matrix d_hidden = Matrix::Zero(hidden.rows(), hidden.cols());
    d_hidden.row(0) = d_h0.row(0);
    backward(etr, d_hidden);
    return lse - logits[static_cast<std::size_t>(y)];
  }

  /// Backpropagates d(loss)/d(encoder output) through the encoder.
  void backward(const EncoderTrace& tr, const Matrix& d_hidden) {
    Matrix dx = nn::layer_norm_backward(d_hidden, tr.final_ln, final_gamma_, final_beta_);
    for (std::size_t l = layers_.size(); l-- > 0;) dx = layer_backward(layers_[l], tr.layers[l], dx);
    for (Eigen::Index i = 0; i < dx.rows(); ++i) {
      token_embedding_.grad.row(tr.ids[static_cast<std::size_t>(i)]) += dx.row(i);
      position_embedding_.grad.row(i) += dx.row(i);
    }
  }

  std::vector<Param*> parameters() {
    std::vector<Param*> out{&token_embedding_, &position_embedding_};
    for (auto& L : layers_)
      for (Param* p : {&L.ln1_gamma, &L.ln1_beta, &L.wq, &L.bq, &L.wk, &L.bk, &L.wv, &L.bv, &L.wo, &L.bo,
                       &L.ln2_gamma, &L.ln2_beta, &L.w1, &L.b1, &L.w2, &L.b2})
        out.push_back(p);
    for (Param* p : {&final_gamma_, &final_beta_, &head_w1_, &head_b1_, &head_w2_, &head_b2_}) out.push_back(p);
    return out;
  }

  std::vector<const Param*> parameters() const {
    auto mut = const_cast<SequenceClassifier*>(this)->parameters();
    return {mut.begin(), mut.end()};
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

 private:
  static void init_normal(Param& p, double stddev, Rng& rng) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<Scalar>(stddev * rng.normal());
  }

  static Param weight(const std::string& name, int in, int out, Rng& rng) {
    Param p(name, in, out, true);
    init_normal(p, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    return p;
  }

  static Param gain(const std::string& name, int d) {
    Param p(name, 1, d, false);
    p.value.setOnes();
    return p;
  }

  Matrix layer_forward(const LayerParams& L, const Matrix& x, LayerTrace& tr) const {
    const int heads = shape_.heads;
    const int dh = shape_.hidden / heads;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    tr.y1 = nn::layer_norm(x, L.ln1_gamma, L.ln1_beta, tr.ln1);
    tr.q = nn::linear(tr.y1, L.wq, L.bq);
    tr.k = nn::linear(tr.y1, L.wk, L.bk);
    tr.v = nn::linear(tr.y1, L.wv, L.bv);
    tr.concat.resize(x.rows(), shape_.hidden);
    tr.attention.resize(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      Matrix scores = tr.q.middleCols(h * dh, dh) * tr.k.middleCols(h * dh, dh).transpose() * scale;
      nn::softmax_rows(scores);
      tr.concat.middleCols(h * dh, dh) = scores * tr.v.middleCols(h * dh, dh);
      tr.attention[static_cast<std::size_t>(h)] = std::move(scores);
    }
    Matrix mid = x + nn::linear(tr.concat, L.wo, L.bo);
    tr.y2 = nn::layer_norm(mid, L.ln2_gamma, L.ln2_beta, tr.ln2);
    tr.ffn_pre = nn::linear(tr.y2, L.w1, L.b1);
    tr.ffn_act = nn::gelu(tr.ffn_pre);
    return mid + nn::linear(tr.ffn_act, L.w2, L.b2);
  }

  Matrix layer_backward(LayerParams& L, const LayerTrace& tr, const Matrix& d_out) {
    const int heads = shape_.heads;
    const int dh = shape_.hidden / heads;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

    Matrix d_act = nn::linear_backward(tr.ffn_act, d_out, L.w2, L.b2);
    Matrix d_pre = nn::gelu_backward(tr.ffn_pre, d_act);
    Matrix d_y2 = nn::linear_backward(tr.y2, d_pre, L.w1, L.b1);
    Matrix d_mid = d_out + nn::layer_norm_backward(d_y2, tr.ln2, L.ln2_gamma, L.ln2_beta);

    Matrix d_concat = nn::linear_backward(tr.concat, d_mid, L.wo, L.bo);
    Matrix dq(tr.q.rows(), tr.q.cols()), dk(tr.k.rows(), tr.k.cols()), dv(tr.v.rows(), tr.v.cols());
    for (int h = 0; h < heads; ++h) {
      const Matrix& a = tr.attention[static_cast<std::size_t>(h)];
      Matrix d_head = d_concat.middleCols(h * dh, dh);
      Matrix da = d_head * tr.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh) = a.transpose() * d_head;
      Matrix ds = nn::softmax_rows_backward(a, da) * scale;
      dq.middleCols(h * dh, dh) = ds * tr.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = ds.transpose() * tr.q.middleCols(h * dh, dh);
    }
    Matrix d_y1 = nn::linear_backward(tr.y1, dq, L.wq, L.bq);
    d_y1 += nn::linear_backward(tr.y1, dk, L.wk, L.bk);
    d_y1 += nn::linear_backward(tr.y1, dv, L.wv, L.bv);
    return d_mid + nn::layer_norm_backward(d_y1, tr.ln1, L.ln1_gamma, L.ln1_beta);
  }

  ModelShape shape_;
  Param token_embedding_, position_embedding_;
  std::vector<LayerParams> layers_;
  Param final_gamma_, final_beta_;
  Param head_w1_, head_b1_, head_w2_, head_b2_;
};

}  // namespace stylo
