#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lm_data.hpp"
#include "mat.hpp"

namespace atsclab {

struct EncoderConfig {
  int num_layers = 2;
  int hidden_dim = 64;
  int num_heads = 2;
  int ff_dim = 128;
  int vocab_size = 8192;
  int max_len = 128;
  int num_segments = 2;

  void validate() const;
  int head_dim() const { return hidden_dim / num_heads; }
};

struct LayerParams {
  Mat wq, bq, wk, bk, wv, bv;  // (H,H), (1,H)
  Mat wo, bo;
  Mat ln1_g, ln1_b;  // (1,H)
  Mat w1, b1;        // (F,H), (1,F)
  Mat w2, b2;        // (H,F), (1,H)
  Mat ln2_g, ln2_b;
};

// All trainable tensors. The same struct doubles as the gradient container
// and the Adam moment containers, so iteration order is shared everywhere.
struct EncoderParams {
  Mat tok_emb;              // (V,H); also the tied MLM output projection
  Mat pos_emb;              // (max_len,H)
  Mat seg_emb;              // (num_segments,H)
  Mat emb_ln_g, emb_ln_b;   // (1,H)
  std::vector<LayerParams> layers;
  Mat mlm_bias;             // (1,V)
  Mat nsp_w, nsp_b;         // (2,H), (1,2)
  Mat cls_w, cls_b;         // (3,H), (1,3)
};

struct EncoderModel {
  EncoderConfig cfg;
  EncoderParams p;
};

using Grads = EncoderParams;

EncoderModel init_model(const EncoderConfig& cfg, uint64_t seed);
EncoderParams zeros_like(const EncoderConfig& cfg);

// Stable iteration over (name, tensor) pairs; grads/moments reuse it.
std::vector<std::pair<std::string, Mat*>> param_list(const EncoderConfig& cfg, EncoderParams& p);
std::vector<std::pair<std::string, const Mat*>> param_list(const EncoderConfig& cfg,
                                                           const EncoderParams& p);

struct EncoderOutput {
  Mat hidden;                  // (T,H) final representations
  std::vector<double> h_cls;   // row 0 of hidden
};

struct LayerCache {
  Mat x_in, q, k, v;
  std::vector<Mat> attn;  // per head, (T,T) softmax rows
  Mat ctx, attn_out, res1, ln1_xhat, x_mid;
  std::vector<double> ln1_rstd;
  Mat ff_pre, ff_act, ff_out, res2, ln2_xhat, x_out;
  std::vector<double> ln2_rstd;
};

struct ForwardCache {
  std::vector<int> ids, segs;
  std::vector<uint8_t> mask;  // 1 = real token, 0 = padding
  Mat emb_sum, emb_xhat, x0;
  std::vector<double> emb_rstd;
  std::vector<LayerCache> layers;
};

// Deterministic full forward pass; padding keys are masked out of attention
// so they never influence non-padding outputs.
EncoderOutput forward(const EncoderModel& model, const std::vector<int>& input_ids,
                      const std::vector<int>& segment_ids, const std::vector<uint8_t>& attention_mask,
                      ForwardCache* cache = nullptr);

// p = softmax(W h_cls + b), classes ordered (positive, negative, neutral).
std::array<double, 3> classify_atsc(const EncoderModel& model, const EncoderOutput& out);

// -ln p[label], probabilities floored at 1e-12.
double loss_atsc(const std::array<double, 3>& p, Polarity label);

// Gradients of the encoder given d(loss)/d(hidden); accumulates into grads,
// including the scatter back into the embedding tables.
void encoder_backward(const EncoderModel& model, const ForwardCache& cache, const Mat& d_hidden,
                      Grads& grads);

// Mean MLM cross-entropy over masked positions plus mean NSP cross-entropy,
// built over a batch. backward() may be called once per forward.
class LmBatchGraph {
 public:
  LmBatchGraph(const EncoderModel& model, const std::vector<MaskedPairExample>& batch);

  double loss() const { return mlm_loss_ + nsp_loss_; }
  double mlm_loss() const { return mlm_loss_; }
  double nsp_loss() const { return nsp_loss_; }

  Grads backward(double scale = 1.0);

 private:
  const EncoderModel& model_;
  const std::vector<MaskedPairExample>& batch_;
  std::vector<ForwardCache> caches_;
  std::vector<Mat> mlm_probs_;             // per example, (n_masked, V)
  std::vector<std::array<double, 2>> nsp_probs_;
  double mlm_loss_ = 0.0, nsp_loss_ = 0.0;
  long long total_masked_ = 0;
  bool consumed_ = false;
};

// Supervised ATSC batch: mean cross-entropy of softmax(W h_cls + b).
class AtscBatchGraph {
 public:
  struct Encoded {
    std::vector<int> input_ids, segment_ids;
    Polarity label = Polarity::Neutral;
  };

  AtscBatchGraph(const EncoderModel& model, const std::vector<Encoded>& batch);

  double loss() const { return loss_; }
  Grads backward(double scale = 1.0);

 private:
  const EncoderModel& model_;
  const std::vector<Encoded>& batch_;
  std::vector<ForwardCache> caches_;
  std::vector<std::array<double, 3>> probs_;
  double loss_ = 0.0;
  bool consumed_ = false;
};

// numerically stable helpers shared by heads and tests
void softmax_inplace(double* x, int n);
double cross_entropy_from_logits(const double* logits, int n, int label);

struct AdamState {
  int64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  EncoderParams m, v;

  static AdamState create(const EncoderConfig& cfg, double lr);
};

// Standard bias-corrected Adam update; increments state.t.
void adam_step(EncoderModel& model, const Grads& grads, AdamState& state);

}  // namespace atsclab
