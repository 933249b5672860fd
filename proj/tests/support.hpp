#pragma once

// Shared builders and oracles for the unit and acceptance suites. Everything
// here stays independent of the library internals it checks.

#include <array>
#include <string>
#include <vector>

#include "model.hpp"
#include "rng.hpp"
#include "text.hpp"

namespace testsupport {

using namespace atsclab;

inline EncoderConfig toy_config(int vocab_size = 69, int max_len = 24) {
  EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden_dim = 64;
  cfg.num_heads = 2;
  cfg.ff_dim = 128;
  cfg.vocab_size = vocab_size;
  cfg.max_len = max_len;
  return cfg;
}

// Random well-formed [CLS] a [SEP] b [SEP] example with a few masked slots.
inline MaskedPairExample random_lm_example(Rng& rng, int vocab_size, int len_a, int len_b,
                                           int n_masked) {
  MaskedPairExample ex;
  auto word = [&] { return Vocab::kNumSpecials + static_cast<int>(rng.below(vocab_size - Vocab::kNumSpecials)); };
  ex.input_ids.push_back(Vocab::kCls);
  ex.segment_ids.push_back(0);
  for (int i = 0; i < len_a; ++i) {
    ex.input_ids.push_back(word());
    ex.segment_ids.push_back(0);
  }
  ex.input_ids.push_back(Vocab::kSep);
  ex.segment_ids.push_back(0);
  for (int i = 0; i < len_b; ++i) {
    ex.input_ids.push_back(word());
    ex.segment_ids.push_back(1);
  }
  ex.input_ids.push_back(Vocab::kSep);
  ex.segment_ids.push_back(1);
  ex.is_next = rng.coin();
  std::vector<int> maskable;
  for (size_t p = 0; p < ex.input_ids.size(); ++p) {
    const int id = ex.input_ids[p];
    if (id != Vocab::kCls && id != Vocab::kSep) maskable.push_back(static_cast<int>(p));
  }
  rng.shuffle(maskable);
  maskable.resize(std::min<size_t>(maskable.size(), n_masked));
  std::sort(maskable.begin(), maskable.end());
  for (const int p : maskable) {
    ex.mlm_positions.push_back(p);
    ex.mlm_labels.push_back(ex.input_ids[p]);
    ex.input_ids[p] = Vocab::kMask;
  }
  return ex;
}

inline std::vector<AtscBatchGraph::Encoded> random_atsc_batch(Rng& rng, int vocab_size, int n,
                                                              int len_a, int len_b) {
  std::vector<AtscBatchGraph::Encoded> out;
  auto word = [&] { return Vocab::kNumSpecials + static_cast<int>(rng.below(vocab_size - Vocab::kNumSpecials)); };
  for (int e = 0; e < n; ++e) {
    AtscBatchGraph::Encoded enc;
    enc.input_ids.push_back(Vocab::kCls);
    enc.segment_ids.push_back(0);
    for (int i = 0; i < len_a; ++i) {
      enc.input_ids.push_back(word());
      enc.segment_ids.push_back(0);
    }
    enc.input_ids.push_back(Vocab::kSep);
    enc.segment_ids.push_back(0);
    for (int i = 0; i < len_b; ++i) {
      enc.input_ids.push_back(word());
      enc.segment_ids.push_back(1);
    }
    enc.input_ids.push_back(Vocab::kSep);
    enc.segment_ids.push_back(1);
    enc.label = static_cast<Polarity>(rng.below(3));
    out.push_back(std::move(enc));
  }
  return out;
}

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  int checked = 0;
};

// Central finite differences against the analytic gradients of
// loss_lm + loss_atsc, sampling entries of every parameter tensor.
inline std::vector<GradCheckEntry> gradient_check(EncoderModel& model,
                                                  const std::vector<MaskedPairExample>& lm_batch,
                                                  const std::vector<AtscBatchGraph::Encoded>& atsc_batch,
                                                  int samples_per_tensor, uint64_t seed,
                                                  double step = 1e-4) {
  auto loss_of = [&]() {
    const LmBatchGraph lm(model, lm_batch);
    const AtscBatchGraph at(model, atsc_batch);
    return lm.loss() + at.loss();
  };
  Grads analytic = zeros_like(model.cfg);
  {
    LmBatchGraph lm(model, lm_batch);
    AtscBatchGraph at(model, atsc_batch);
    const Grads g1 = lm.backward();
    const Grads g2 = at.backward();
    auto a = param_list(model.cfg, analytic);
    auto l1 = param_list(model.cfg, const_cast<Grads&>(g1));
    auto l2 = param_list(model.cfg, const_cast<Grads&>(g2));
    for (size_t i = 0; i < a.size(); ++i)
      for (size_t k = 0; k < a[i].second->a.size(); ++k)
        a[i].second->a[k] = l1[i].second->a[k] + l2[i].second->a[k];
  }

  Rng rng(seed);
  std::vector<GradCheckEntry> report;
  auto params = param_list(model.cfg, model.p);
  auto grads = param_list(model.cfg, analytic);
  for (size_t t = 0; t < params.size(); ++t) {
    Mat& pm = *params[t].second;
    const Mat& gm = *grads[t].second;
    GradCheckEntry entry;
    entry.name = params[t].first;
    std::vector<size_t> picks;
    if (pm.a.size() <= static_cast<size_t>(samples_per_tensor)) {
      for (size_t k = 0; k < pm.a.size(); ++k) picks.push_back(k);
    } else {
      for (int s = 0; s < samples_per_tensor; ++s) picks.push_back(rng.below(pm.a.size()));
    }
    for (const size_t k : picks) {
      const double saved = pm.a[k];
      pm.a[k] = saved + step;
      const double lp = loss_of();
      pm.a[k] = saved - step;
      const double lm_ = loss_of();
      pm.a[k] = saved;
      const double fd = (lp - lm_) / (2.0 * step);
      const double a = gm.a[k];
      const double rel = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-6});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      ++entry.checked;
    }
    report.push_back(std::move(entry));
  }
  return report;
}

}  // namespace testsupport
