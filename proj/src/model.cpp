#include "model.hpp"

#include <cmath>
#include <limits>

#include "rng.hpp"

namespace atsclab {

namespace {

constexpr double kLnEps = 1e-12;
constexpr double kProbFloor = 1e-12;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
         x * 0.3989422804014326779399460599344 * std::exp(-0.5 * x * x);
}

void layer_norm_forward(const Mat& x, const Mat& g, const Mat& b, Mat& y, Mat& xhat,
                        std::vector<double>& rstd) {
  const int T = x.rows, H = x.cols;
  y = Mat(T, H);
  xhat = Mat(T, H);
  rstd.assign(T, 0.0);
  for (int i = 0; i < T; ++i) {
    const double* xr = x.row(i);
    double mean = 0.0;
    for (int j = 0; j < H; ++j) mean += xr[j];
    mean /= H;
    double var = 0.0;
    for (int j = 0; j < H; ++j) {
      const double d = xr[j] - mean;
      var += d * d;
    }
    var /= H;
    const double r = 1.0 / std::sqrt(var + kLnEps);
    rstd[i] = r;
    double* xh = xhat.row(i);
    double* yr = y.row(i);
    for (int j = 0; j < H; ++j) {
      xh[j] = (xr[j] - mean) * r;
      yr[j] = xh[j] * g(0, j) + b(0, j);
    }
  }
}

// dx is accumulated; dg/db are accumulated too.
void layer_norm_backward(const Mat& dy, const Mat& xhat, const std::vector<double>& rstd,
                         const Mat& g, Mat& dx, Mat& dg, Mat& db) {
  const int T = dy.rows, H = dy.cols;
  for (int i = 0; i < T; ++i) {
    const double* dyr = dy.row(i);
    const double* xh = xhat.row(i);
    double* dgr = dg.row(0);
    double* dbr = db.row(0);
    double sum_dyg = 0.0, sum_dyg_xhat = 0.0;
    for (int j = 0; j < H; ++j) {
      const double dyg = dyr[j] * g(0, j);
      sum_dyg += dyg;
      sum_dyg_xhat += dyg * xh[j];
      dgr[j] += dyr[j] * xh[j];
      dbr[j] += dyr[j];
    }
    const double mean_dyg = sum_dyg / H;
    const double mean_dyg_xhat = sum_dyg_xhat / H;
    double* dxr = dx.row(i);
    for (int j = 0; j < H; ++j) {
      const double dyg = dyr[j] * g(0, j);
      dxr[j] += rstd[i] * (dyg - mean_dyg - xh[j] * mean_dyg_xhat);
    }
  }
}

Mat init_normal(Rng& rng, int rows, int cols, double scale = 0.02) {
  Mat m(rows, cols);
  for (double& v : m.a) v = rng.gaussian() * scale;
  return m;
}

Mat ones(int rows, int cols) {
  Mat m(rows, cols);
  std::fill(m.a.begin(), m.a.end(), 1.0);
  return m;
}

}  // namespace

void EncoderConfig::validate() const {
  if (num_layers < 1 || hidden_dim < 1 || num_heads < 1 || ff_dim < 1 || vocab_size < 1 ||
      max_len < 1 || num_segments < 1)
    throw Error("encoder config dims must be >= 1");
  if (hidden_dim % num_heads != 0)
    throw Error("hidden_dim must be divisible by num_heads");
}

EncoderParams zeros_like(const EncoderConfig& cfg) {
  EncoderParams p;
  const int H = cfg.hidden_dim, F = cfg.ff_dim, V = cfg.vocab_size;
  p.tok_emb = Mat(V, H);
  p.pos_emb = Mat(cfg.max_len, H);
  p.seg_emb = Mat(cfg.num_segments, H);
  p.emb_ln_g = Mat(1, H);
  p.emb_ln_b = Mat(1, H);
  p.layers.resize(cfg.num_layers);
  for (auto& l : p.layers) {
    l.wq = Mat(H, H); l.bq = Mat(1, H);
    l.wk = Mat(H, H); l.bk = Mat(1, H);
    l.wv = Mat(H, H); l.bv = Mat(1, H);
    l.wo = Mat(H, H); l.bo = Mat(1, H);
    l.ln1_g = Mat(1, H); l.ln1_b = Mat(1, H);
    l.w1 = Mat(F, H); l.b1 = Mat(1, F);
    l.w2 = Mat(H, F); l.b2 = Mat(1, H);
    l.ln2_g = Mat(1, H); l.ln2_b = Mat(1, H);
  }
  p.mlm_bias = Mat(1, V);
  p.nsp_w = Mat(2, H); p.nsp_b = Mat(1, 2);
  p.cls_w = Mat(3, H); p.cls_b = Mat(1, 3);
  return p;
}

EncoderModel init_model(const EncoderConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, "model-init"));
  EncoderModel m;
  m.cfg = cfg;
  const int H = cfg.hidden_dim, F = cfg.ff_dim;
  EncoderParams& p = m.p;
  p = zeros_like(cfg);
  p.tok_emb = init_normal(rng, cfg.vocab_size, H);
  p.pos_emb = init_normal(rng, cfg.max_len, H);
  p.seg_emb = init_normal(rng, cfg.num_segments, H);
  p.emb_ln_g = ones(1, H);
  for (auto& l : p.layers) {
    l.wq = init_normal(rng, H, H);
    l.wk = init_normal(rng, H, H);
    l.wv = init_normal(rng, H, H);
    l.wo = init_normal(rng, H, H);
    l.ln1_g = ones(1, H);
    l.w1 = init_normal(rng, F, H);
    l.w2 = init_normal(rng, H, F);
    l.ln2_g = ones(1, H);
  }
  p.nsp_w = init_normal(rng, 2, H);
  p.cls_w = init_normal(rng, 3, H);
  return m;
}

std::vector<std::pair<std::string, Mat*>> param_list(const EncoderConfig& cfg, EncoderParams& p) {
  std::vector<std::pair<std::string, Mat*>> out;
  out.emplace_back("tok_emb", &p.tok_emb);
  out.emplace_back("pos_emb", &p.pos_emb);
  out.emplace_back("seg_emb", &p.seg_emb);
  out.emplace_back("emb_ln_g", &p.emb_ln_g);
  out.emplace_back("emb_ln_b", &p.emb_ln_b);
  for (int i = 0; i < cfg.num_layers; ++i) {
    auto& l = p.layers[i];
    const std::string pre = "layer" + std::to_string(i) + ".";
    out.emplace_back(pre + "wq", &l.wq);
    out.emplace_back(pre + "bq", &l.bq);
    out.emplace_back(pre + "wk", &l.wk);
    out.emplace_back(pre + "bk", &l.bk);
    out.emplace_back(pre + "wv", &l.wv);
    out.emplace_back(pre + "bv", &l.bv);
    out.emplace_back(pre + "wo", &l.wo);
    out.emplace_back(pre + "bo", &l.bo);
    out.emplace_back(pre + "ln1_g", &l.ln1_g);
    out.emplace_back(pre + "ln1_b", &l.ln1_b);
    out.emplace_back(pre + "w1", &l.w1);
    out.emplace_back(pre + "b1", &l.b1);
    out.emplace_back(pre + "w2", &l.w2);
    out.emplace_back(pre + "b2", &l.b2);
    out.emplace_back(pre + "ln2_g", &l.ln2_g);
    out.emplace_back(pre + "ln2_b", &l.ln2_b);
  }
  out.emplace_back("mlm_bias", &p.mlm_bias);
  out.emplace_back("nsp_w", &p.nsp_w);
  out.emplace_back("nsp_b", &p.nsp_b);
  out.emplace_back("cls_w", &p.cls_w);
  out.emplace_back("cls_b", &p.cls_b);
  return out;
}

std::vector<std::pair<std::string, const Mat*>> param_list(const EncoderConfig& cfg,
                                                           const EncoderParams& p) {
  auto mut = param_list(cfg, const_cast<EncoderParams&>(p));
  std::vector<std::pair<std::string, const Mat*>> out;
  out.reserve(mut.size());
  for (auto& [name, m] : mut) out.emplace_back(name, m);
  return out;
}

void softmax_inplace(double* x, int n) {
  double mx = x[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - mx);
    sum += x[i];
  }
  for (int i = 0; i < n; ++i) x[i] /= sum;
}

double cross_entropy_from_logits(const double* logits, int n, int label) {
  double mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(logits[i] - mx);
  return mx + std::log(sum) - logits[label];
}

EncoderOutput forward(const EncoderModel& model, const std::vector<int>& input_ids,
                      const std::vector<int>& segment_ids,
                      const std::vector<uint8_t>& attention_mask, ForwardCache* cache) {
  const EncoderConfig& cfg = model.cfg;
  const int T = static_cast<int>(input_ids.size());
  if (T < 1 || T > cfg.max_len)
    throw ShapeMismatch("sequence length " + std::to_string(T) + " not in [1, max_len]");
  if (segment_ids.size() != input_ids.size())
    throw ShapeMismatch("segment_ids length != input_ids length");
  if (!attention_mask.empty() && attention_mask.size() != input_ids.size())
    throw ShapeMismatch("attention_mask length != input_ids length");
  for (const int id : input_ids)
    if (id < 0 || id >= cfg.vocab_size) throw ShapeMismatch("token id out of vocab range");
  for (const int s : segment_ids)
    if (s < 0 || s >= cfg.num_segments) throw ShapeMismatch("segment id out of range");

  const int H = cfg.hidden_dim;
  const int nh = cfg.num_heads;
  const int dh = cfg.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const EncoderParams& p = model.p;

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c = ForwardCache{};
  c.ids = input_ids;
  c.segs = segment_ids;
  c.mask = attention_mask.empty() ? std::vector<uint8_t>(T, 1) : attention_mask;

  c.emb_sum = Mat(T, H);
  for (int t = 0; t < T; ++t) {
    const double* tok = p.tok_emb.row(input_ids[t]);
    const double* pos = p.pos_emb.row(t);
    const double* seg = p.seg_emb.row(segment_ids[t]);
    double* dst = c.emb_sum.row(t);
    for (int j = 0; j < H; ++j) dst[j] = tok[j] + pos[j] + seg[j];
  }
  layer_norm_forward(c.emb_sum, p.emb_ln_g, p.emb_ln_b, c.x0, c.emb_xhat, c.emb_rstd);

  c.layers.resize(cfg.num_layers);
  const Mat* x = &c.x0;
  for (int li = 0; li < cfg.num_layers; ++li) {
    const LayerParams& lp = p.layers[li];
    LayerCache& lc = c.layers[li];
    lc.x_in = *x;
    linear(lc.x_in, lp.wq, lp.bq, lc.q);
    linear(lc.x_in, lp.wk, lp.bk, lc.k);
    linear(lc.x_in, lp.wv, lp.bv, lc.v);
    lc.attn.assign(nh, Mat(T, T));
    lc.ctx = Mat(T, H);
    for (int h = 0; h < nh; ++h) {
      const int o = h * dh;
      Mat& A = lc.attn[h];
      for (int i = 0; i < T; ++i) {
        const double* qi = lc.q.row(i) + o;
        double* arow = A.row(i);
        for (int j = 0; j < T; ++j) {
          if (!c.mask[j]) {
            arow[j] = -std::numeric_limits<double>::infinity();
            continue;
          }
          const double* kj = lc.k.row(j) + o;
          double s = 0.0;
          for (int d = 0; d < dh; ++d) s += qi[d] * kj[d];
          arow[j] = s * inv_sqrt_dh;
        }
        softmax_inplace(arow, T);
        double* ci = lc.ctx.row(i) + o;
        for (int j = 0; j < T; ++j) {
          const double w = arow[j];
          if (w == 0.0) continue;
          const double* vj = lc.v.row(j) + o;
          for (int d = 0; d < dh; ++d) ci[d] += w * vj[d];
        }
      }
    }
    linear(lc.ctx, lp.wo, lp.bo, lc.attn_out);
    lc.res1 = Mat(T, H);
    for (size_t idx = 0; idx < lc.res1.a.size(); ++idx)
      lc.res1.a[idx] = lc.x_in.a[idx] + lc.attn_out.a[idx];
    layer_norm_forward(lc.res1, lp.ln1_g, lp.ln1_b, lc.x_mid, lc.ln1_xhat, lc.ln1_rstd);

    linear(lc.x_mid, lp.w1, lp.b1, lc.ff_pre);
    lc.ff_act = Mat(T, cfg.ff_dim);
    for (size_t idx = 0; idx < lc.ff_pre.a.size(); ++idx) lc.ff_act.a[idx] = gelu(lc.ff_pre.a[idx]);
    linear(lc.ff_act, lp.w2, lp.b2, lc.ff_out);
    lc.res2 = Mat(T, H);
    for (size_t idx = 0; idx < lc.res2.a.size(); ++idx)
      lc.res2.a[idx] = lc.x_mid.a[idx] + lc.ff_out.a[idx];
    layer_norm_forward(lc.res2, lp.ln2_g, lp.ln2_b, lc.x_out, lc.ln2_xhat, lc.ln2_rstd);
    x = &lc.x_out;
  }

  EncoderOutput out;
  out.hidden = *x;
  out.h_cls.assign(out.hidden.row(0), out.hidden.row(0) + H);
  return out;
}

void encoder_backward(const EncoderModel& model, const ForwardCache& cache, const Mat& d_hidden,
                      Grads& grads) {
  const EncoderConfig& cfg = model.cfg;
  const int T = static_cast<int>(cache.ids.size());
  const int H = cfg.hidden_dim;
  const int nh = cfg.num_heads;
  const int dh = cfg.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  require_shape(d_hidden, T, H, "encoder_backward d_hidden");

  Mat dx = d_hidden;
  for (int li = cfg.num_layers - 1; li >= 0; --li) {
    const LayerParams& lp = model.p.layers[li];
    const LayerCache& lc = cache.layers[li];
    LayerParams& gl = grads.layers[li];

    // ln2
    Mat dres2(T, H);
    layer_norm_backward(dx, lc.ln2_xhat, lc.ln2_rstd, lp.ln2_g, dres2, gl.ln2_g, gl.ln2_b);
    Mat dx_mid = dres2;  // residual branch
    // ffn
    Mat dff_act(T, cfg.ff_dim);
    linear_backward(lc.ff_act, lp.w2, dres2, dff_act, gl.w2, gl.b2);
    Mat dff_pre(T, cfg.ff_dim);
    for (size_t idx = 0; idx < dff_pre.a.size(); ++idx)
      dff_pre.a[idx] = dff_act.a[idx] * gelu_grad(lc.ff_pre.a[idx]);
    linear_backward(lc.x_mid, lp.w1, dff_pre, dx_mid, gl.w1, gl.b1);

    // ln1
    Mat dres1(T, H);
    layer_norm_backward(dx_mid, lc.ln1_xhat, lc.ln1_rstd, lp.ln1_g, dres1, gl.ln1_g, gl.ln1_b);
    Mat dx_in = dres1;  // residual branch
    // attention output projection
    Mat dctx(T, H);
    linear_backward(lc.ctx, lp.wo, dres1, dctx, gl.wo, gl.bo);

    Mat dq(T, H), dk(T, H), dv(T, H);
    for (int h = 0; h < nh; ++h) {
      const int o = h * dh;
      const Mat& A = lc.attn[h];
      for (int i = 0; i < T; ++i) {
        const double* arow = A.row(i);
        const double* dci = dctx.row(i) + o;
        // dA_ij = dctx_i . v_j ; dV_j += A_ij * dctx_i
        std::vector<double> dA(T, 0.0);
        for (int j = 0; j < T; ++j) {
          const double w = arow[j];
          const double* vj = lc.v.row(j) + o;
          double s = 0.0;
          for (int d = 0; d < dh; ++d) s += dci[d] * vj[d];
          dA[j] = s;
          if (w != 0.0) {
            double* dvj = dv.row(j) + o;
            for (int d = 0; d < dh; ++d) dvj[d] += w * dci[d];
          }
        }
        double dot = 0.0;
        for (int j = 0; j < T; ++j) dot += arow[j] * dA[j];
        // dS = A .* (dA - dot); masked columns have A=0 -> dS=0
        for (int j = 0; j < T; ++j) {
          const double ds = arow[j] * (dA[j] - dot);
          if (ds == 0.0) continue;
          const double scaled = ds * inv_sqrt_dh;
          const double* kj = lc.k.row(j) + o;
          const double* qi = lc.q.row(i) + o;
          double* dqi = dq.row(i) + o;
          double* dkj = dk.row(j) + o;
          for (int d = 0; d < dh; ++d) {
            dqi[d] += scaled * kj[d];
            dkj[d] += scaled * qi[d];
          }
        }
      }
    }
    linear_backward(lc.x_in, lp.wq, dq, dx_in, gl.wq, gl.bq);
    linear_backward(lc.x_in, lp.wk, dk, dx_in, gl.wk, gl.bk);
    linear_backward(lc.x_in, lp.wv, dv, dx_in, gl.wv, gl.bv);
    dx = std::move(dx_in);
  }

  // embedding layer norm, then scatter into the tables
  Mat demb(T, H);
  layer_norm_backward(dx, cache.emb_xhat, cache.emb_rstd, model.p.emb_ln_g, demb, grads.emb_ln_g,
                      grads.emb_ln_b);
  for (int t = 0; t < T; ++t) {
    const double* src = demb.row(t);
    double* dtok = grads.tok_emb.row(cache.ids[t]);
    double* dpos = grads.pos_emb.row(t);
    double* dseg = grads.seg_emb.row(cache.segs[t]);
    for (int j = 0; j < H; ++j) {
      dtok[j] += src[j];
      dpos[j] += src[j];
      dseg[j] += src[j];
    }
  }
}

namespace {

int effective_len(const std::vector<int>& ids) {
  int t = static_cast<int>(ids.size());
  while (t > 1 && ids[t - 1] == Vocab::kPad) --t;
  return t;
}

}  // namespace

LmBatchGraph::LmBatchGraph(const EncoderModel& model, const std::vector<MaskedPairExample>& batch)
    : model_(model), batch_(batch) {
  if (batch.empty()) throw EmptyInput("LM batch is empty");
  const EncoderConfig& cfg = model.cfg;
  const int H = cfg.hidden_dim;
  caches_.resize(batch.size());
  mlm_probs_.resize(batch.size());
  nsp_probs_.resize(batch.size());
  double mlm_sum = 0.0, nsp_sum = 0.0;
  for (size_t b = 0; b < batch.size(); ++b) {
    const auto& ex = batch[b];
    const int t_eff = effective_len(ex.input_ids);
    std::vector<int> ids(ex.input_ids.begin(), ex.input_ids.begin() + t_eff);
    std::vector<int> segs(ex.segment_ids.begin(), ex.segment_ids.begin() + t_eff);
    std::vector<uint8_t> mask(t_eff, 1);
    for (int t = 0; t < t_eff; ++t) mask[t] = ids[t] != Vocab::kPad;
    const EncoderOutput out = forward(model, ids, segs, mask, &caches_[b]);

    const int n_masked = static_cast<int>(ex.mlm_positions.size());
    Mat probs(n_masked, cfg.vocab_size);
    for (int m = 0; m < n_masked; ++m) {
      const int pos = ex.mlm_positions[m];
      if (pos < 0 || pos >= t_eff) throw ShapeMismatch("mlm position out of range");
      const double* h = out.hidden.row(pos);
      double* logits = probs.row(m);
      for (int v = 0; v < cfg.vocab_size; ++v) {
        const double* e = model.p.tok_emb.row(v);
        double s = model.p.mlm_bias(0, v);
        for (int j = 0; j < H; ++j) s += h[j] * e[j];
        logits[v] = s;
      }
      mlm_sum += cross_entropy_from_logits(logits, cfg.vocab_size, ex.mlm_labels[m]);
      softmax_inplace(logits, cfg.vocab_size);
      ++total_masked_;
    }
    mlm_probs_[b] = std::move(probs);

    double nsp_logits[2];
    for (int k = 0; k < 2; ++k) {
      double s = model.p.nsp_b(0, k);
      const double* w = model.p.nsp_w.row(k);
      for (int j = 0; j < H; ++j) s += w[j] * out.h_cls[j];
      nsp_logits[k] = s;
    }
    nsp_sum += cross_entropy_from_logits(nsp_logits, 2, ex.is_next ? 1 : 0);
    softmax_inplace(nsp_logits, 2);
    nsp_probs_[b] = {nsp_logits[0], nsp_logits[1]};
  }
  if (total_masked_ == 0) throw NoMaskedPositions("LM batch has no masked positions");
  mlm_loss_ = mlm_sum / static_cast<double>(total_masked_);
  nsp_loss_ = nsp_sum / static_cast<double>(batch.size());
}

Grads LmBatchGraph::backward(double scale) {
  if (consumed_) throw GraphConsumed("LmBatchGraph::backward called twice");
  consumed_ = true;
  const EncoderConfig& cfg = model_.cfg;
  const int H = cfg.hidden_dim;
  Grads grads = zeros_like(cfg);
  const double mlm_w = scale / static_cast<double>(total_masked_);
  const double nsp_w = scale / static_cast<double>(batch_.size());
  for (size_t b = 0; b < batch_.size(); ++b) {
    const auto& ex = batch_[b];
    const ForwardCache& cache = caches_[b];
    const int T = static_cast<int>(cache.ids.size());
    const Mat& hidden = cache.layers.back().x_out;
    Mat d_hidden(T, H);

    const int n_masked = static_cast<int>(ex.mlm_positions.size());
    for (int m = 0; m < n_masked; ++m) {
      const int pos = ex.mlm_positions[m];
      const double* probs = mlm_probs_[b].row(m);
      const double* h = hidden.row(pos);
      double* dh = d_hidden.row(pos);
      double* dbias = grads.mlm_bias.row(0);
      for (int v = 0; v < cfg.vocab_size; ++v) {
        double dl = probs[v] * mlm_w;
        if (v == ex.mlm_labels[m]) dl -= mlm_w;
        if (dl == 0.0) continue;
        dbias[v] += dl;
        const double* e = model_.p.tok_emb.row(v);
        double* de = grads.tok_emb.row(v);
        for (int j = 0; j < H; ++j) {
          dh[j] += dl * e[j];
          de[j] += dl * h[j];
        }
      }
    }

    double dlog[2];
    const int y = ex.is_next ? 1 : 0;
    dlog[0] = (nsp_probs_[b][0] - (y == 0 ? 1.0 : 0.0)) * nsp_w;
    dlog[1] = (nsp_probs_[b][1] - (y == 1 ? 1.0 : 0.0)) * nsp_w;
    double* dh0 = d_hidden.row(0);
    const double* h0 = hidden.row(0);
    for (int k = 0; k < 2; ++k) {
      const double* w = model_.p.nsp_w.row(k);
      double* dw = grads.nsp_w.row(k);
      for (int j = 0; j < H; ++j) {
        dh0[j] += dlog[k] * w[j];
        dw[j] += dlog[k] * h0[j];
      }
      grads.nsp_b(0, k) += dlog[k];
    }

    encoder_backward(model_, cache, d_hidden, grads);
  }
  return grads;
}

AtscBatchGraph::AtscBatchGraph(const EncoderModel& model, const std::vector<Encoded>& batch)
    : model_(model), batch_(batch) {
  if (batch.empty()) throw EmptyInput("ATSC batch is empty");
  const int H = model.cfg.hidden_dim;
  caches_.resize(batch.size());
  probs_.resize(batch.size());
  double sum = 0.0;
  for (size_t b = 0; b < batch.size(); ++b) {
    const auto& ex = batch[b];
    std::vector<uint8_t> mask(ex.input_ids.size(), 1);
    for (size_t t = 0; t < ex.input_ids.size(); ++t) mask[t] = ex.input_ids[t] != Vocab::kPad;
    const EncoderOutput out = forward(model, ex.input_ids, ex.segment_ids, mask, &caches_[b]);
    double logits[3];
    for (int k = 0; k < 3; ++k) {
      double s = model.p.cls_b(0, k);
      const double* w = model.p.cls_w.row(k);
      for (int j = 0; j < H; ++j) s += w[j] * out.h_cls[j];
      logits[k] = s;
    }
    sum += cross_entropy_from_logits(logits, 3, static_cast<int>(ex.label));
    softmax_inplace(logits, 3);
    probs_[b] = {logits[0], logits[1], logits[2]};
  }
  loss_ = sum / static_cast<double>(batch.size());
}

Grads AtscBatchGraph::backward(double scale) {
  if (consumed_) throw GraphConsumed("AtscBatchGraph::backward called twice");
  consumed_ = true;
  const EncoderConfig& cfg = model_.cfg;
  const int H = cfg.hidden_dim;
  Grads grads = zeros_like(cfg);
  const double w_batch = scale / static_cast<double>(batch_.size());
  for (size_t b = 0; b < batch_.size(); ++b) {
    const auto& ex = batch_[b];
    const ForwardCache& cache = caches_[b];
    const int T = static_cast<int>(cache.ids.size());
    const Mat& hidden = cache.layers.back().x_out;
    Mat d_hidden(T, H);
    double dlog[3];
    for (int k = 0; k < 3; ++k)
      dlog[k] = (probs_[b][k] - (k == static_cast<int>(ex.label) ? 1.0 : 0.0)) * w_batch;
    double* dh0 = d_hidden.row(0);
    const double* h0 = hidden.row(0);
    for (int k = 0; k < 3; ++k) {
      const double* w = model_.p.cls_w.row(k);
      double* dw = grads.cls_w.row(k);
      for (int j = 0; j < H; ++j) {
        dh0[j] += dlog[k] * w[j];
        dw[j] += dlog[k] * h0[j];
      }
      grads.cls_b(0, k) += dlog[k];
    }
    encoder_backward(model_, cache, d_hidden, grads);
  }
  return grads;
}

std::array<double, 3> classify_atsc(const EncoderModel& model, const EncoderOutput& out) {
  const int H = model.cfg.hidden_dim;
  if (static_cast<int>(out.h_cls.size()) != H) throw ShapeMismatch("h_cls dimension");
  std::array<double, 3> p{};
  for (int k = 0; k < 3; ++k) {
    double s = model.p.cls_b(0, k);
    const double* w = model.p.cls_w.row(k);
    for (int j = 0; j < H; ++j) s += w[j] * out.h_cls[j];
    p[k] = s;
  }
  softmax_inplace(p.data(), 3);
  return p;
}

double loss_atsc(const std::array<double, 3>& p, Polarity label) {
  return -std::log(std::max(p[static_cast<int>(label)], kProbFloor));
}

AdamState AdamState::create(const EncoderConfig& cfg, double lr) {
  AdamState s;
  s.lr = lr;
  s.m = zeros_like(cfg);
  s.v = zeros_like(cfg);
  return s;
}

void adam_step(EncoderModel& model, const Grads& grads, AdamState& state) {
  auto params = param_list(model.cfg, model.p);
  auto gs = param_list(model.cfg, const_cast<Grads&>(grads));
  auto ms = param_list(model.cfg, state.m);
  auto vs = param_list(model.cfg, state.v);
  if (params.size() != gs.size()) throw ShapeMismatch("adam_step grad registry size");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    Mat& p = *params[i].second;
    const Mat& g = *gs[i].second;
    Mat& m = *ms[i].second;
    Mat& v = *vs[i].second;
    if (!p.same_shape(g) || !p.same_shape(m) || !p.same_shape(v))
      throw ShapeMismatch("adam_step tensor " + params[i].first);
    for (size_t k = 0; k < p.a.size(); ++k) {
      m.a[k] = state.beta1 * m.a[k] + (1.0 - state.beta1) * g.a[k];
      v.a[k] = state.beta2 * v.a[k] + (1.0 - state.beta2) * g.a[k] * g.a[k];
      const double mhat = m.a[k] / bc1;
      const double vhat = v.a[k] / bc2;
      p.a[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace atsclab
