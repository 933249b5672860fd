#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rng.hpp"

namespace atsclab {

AtscBatchGraph::Encoded encode_atsc_input(const AtscExample& example, const Vocab& vocab,
                                          int max_len) {
  if (example.target_len < 1 || example.target_start + example.target_len > example.tokens.size())
    throw IndexOutOfRange("target span outside sentence");
  NspPair pair;
  pair.a.tokens = example.tokens;
  pair.b.tokens.assign(example.tokens.begin() + example.target_start,
                       example.tokens.begin() + example.target_start + example.target_len);
  MaskedPairExample enc = encode_pair(pair, vocab, max_len);
  AtscBatchGraph::Encoded out;
  out.input_ids = std::move(enc.input_ids);
  out.segment_ids = std::move(enc.segment_ids);
  out.label = example.label;
  // strip padding; ATSC batches are ragged
  size_t t = out.input_ids.size();
  while (t > 1 && out.input_ids[t - 1] == Vocab::kPad) --t;
  out.input_ids.resize(t);
  out.segment_ids.resize(t);
  return out;
}

void MetricsLog::add(long long step, long long sentences_seen, double loss, double lr) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%lld\t%lld\t%.6f\t%.8f", step, sentences_seen, loss, lr);
  lines.emplace_back(buf);
}

void MetricsLog::save(const std::string& path, uint64_t seed) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write metrics log: " + path);
  out << "# atsclab metrics v1 seed=" << seed << "\n";
  out << "step\tsentences_seen\tloss\tlr\n";
  for (const auto& line : lines) out << line << "\n";
}

void FinetuneRunSpec::validate() const {
  if (epochs < 1) throw Error("finetune epochs must be >= 1");
  if (batch_size < 1) throw Error("finetune batch_size must be >= 1");
  for (size_t i = 1; i < snapshot_schedule.size(); ++i)
    if (snapshot_schedule[i] <= snapshot_schedule[i - 1])
      throw Error("snapshot schedule must be strictly increasing");
}

FinetuneResult lm_finetune(
    EncoderModel& model, const FinetuneRunSpec& spec, const Shard& shard, const Vocab& vocab,
    const std::function<void(long long, const EncoderModel&)>& snapshot) {
  spec.validate();
  if (shard.header.vocab_hash != vocab.content_hash())
    throw VocabMismatch("shard was generated with a different vocabulary");
  if (vocab.size() != model.cfg.vocab_size)
    throw VocabMismatch("model vocab_size differs from vocabulary");
  if (shard.header.max_len > model.cfg.max_len)
    throw VocabMismatch("shard max_len exceeds model max_len");
  if (shard.examples.empty()) throw EmptyDataset("shard has no examples");

  FinetuneResult result;
  AdamState adam = AdamState::create(model.cfg, spec.lr);
  size_t next_snapshot = 0;
  long long step = 0;
  auto maybe_snapshot = [&]() {
    while (next_snapshot < spec.snapshot_schedule.size() &&
           result.sentences_seen >= spec.snapshot_schedule[next_snapshot]) {
      if (snapshot) snapshot(result.sentences_seen, model);
      ++next_snapshot;
    }
  };
  maybe_snapshot();  // schedule entry 0 means "before any training"

  std::vector<size_t> order(shard.examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  bool budget_exhausted = false;
  for (int epoch = 0; epoch < spec.epochs && !budget_exhausted; ++epoch) {
    // fresh masks for this epoch, regenerated from the stored labels
    std::vector<MaskedPairExample> examples = shard.examples;
    const uint64_t epoch_seed = derive_seed(spec.seed, "epoch-mask", static_cast<uint64_t>(epoch));
    for (size_t i = 0; i < examples.size(); ++i) {
      examples[i].input_ids = reconstruct_original_ids(examples[i]);
      apply_mlm_mask(examples[i], shard.header.policy, vocab, derive_seed(epoch_seed, "ex", i));
    }
    Rng shuffle_rng(derive_seed(spec.seed, "epoch-shuffle", static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss_sum = 0.0;
    long long epoch_batches = 0;
    for (size_t start = 0; start < order.size(); start += spec.batch_size) {
      const size_t end = std::min(order.size(), start + spec.batch_size);
      std::vector<MaskedPairExample> batch;
      batch.reserve(end - start);
      long long batch_sentences = 0;
      for (size_t i = start; i < end; ++i) {
        batch.push_back(examples[order[i]]);
        batch_sentences += batch.back().n_sentences;
      }
      bool stepped = false;
      double loss = 0.0;
      try {
        LmBatchGraph graph(model, batch);
        loss = graph.loss();
        const Grads grads = graph.backward();
        adam_step(model, grads, adam);
        stepped = true;
      } catch (const NoMaskedPositions&) {
        // a batch can come up empty-handed at tiny scale; skip the step
      }
      result.sentences_seen += batch_sentences;
      if (stepped) {
        ++step;
        result.log.add(step, result.sentences_seen, loss, spec.lr);
        epoch_loss_sum += loss;
        ++epoch_batches;
      }
      maybe_snapshot();
      if (spec.max_sentences > 0 && result.sentences_seen >= spec.max_sentences) {
        budget_exhausted = true;
        break;
      }
    }
    const double mean_loss = epoch_batches ? epoch_loss_sum / epoch_batches : 0.0;
    if (epoch == 0) result.first_epoch_mean_loss = mean_loss;
    result.last_epoch_mean_loss = mean_loss;
  }
  if (snapshot) snapshot(result.sentences_seen, model);
  return result;
}

void AtscRunSpec::validate() const {
  if (epochs < 1) throw Error("atsc epochs must be >= 1");
  if (batch_size < 1) throw Error("atsc batch_size must be >= 1");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw Error("val_fraction must be in [0,1)");
}

namespace {

double accuracy_on(const EncoderModel& model, const std::vector<AtscBatchGraph::Encoded>& encoded) {
  if (encoded.empty()) return std::nan("");
  size_t correct = 0;
  for (const auto& ex : encoded) {
    std::vector<uint8_t> mask(ex.input_ids.size(), 1);
    const EncoderOutput out = forward(model, ex.input_ids, ex.segment_ids, mask);
    const auto p = classify_atsc(model, out);
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (p[k] > p[best]) best = k;  // ties keep the lowest class index
    if (best == static_cast<int>(ex.label)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(encoded.size());
}

}  // namespace

AtscTrainResult train_atsc(EncoderModel& model, const AtscRunSpec& spec,
                           const AtscDataset& dataset, const Vocab& vocab) {
  spec.validate();
  if (dataset.split == Split::Test)
    throw Error("refusing to train on a test-split dataset");
  if (dataset.examples.empty()) throw EmptyDataset("ATSC training set is empty");

  std::vector<AtscBatchGraph::Encoded> encoded;
  encoded.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples)
    encoded.push_back(encode_atsc_input(ex, vocab, model.cfg.max_len));

  // seeded validation holdout
  std::vector<size_t> order(encoded.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(derive_seed(spec.seed, "val-split"));
  split_rng.shuffle(order);
  const size_t n_val = static_cast<size_t>(spec.val_fraction * static_cast<double>(encoded.size()));
  std::vector<AtscBatchGraph::Encoded> val, train;
  for (size_t i = 0; i < order.size(); ++i)
    (i < n_val ? val : train).push_back(encoded[order[i]]);
  if (train.empty()) throw EmptyDataset("validation split consumed all examples");

  AtscTrainResult result;
  AdamState adam = AdamState::create(model.cfg, spec.lr);
  long long step = 0, seen = 0;
  std::vector<size_t> train_order(train.size());
  for (size_t i = 0; i < train_order.size(); ++i) train_order[i] = i;
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(spec.seed, "atsc-shuffle", static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(train_order);
    for (size_t start = 0; start < train_order.size(); start += spec.batch_size) {
      const size_t end = std::min(train_order.size(), start + spec.batch_size);
      std::vector<AtscBatchGraph::Encoded> batch;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i) batch.push_back(train[train_order[i]]);
      AtscBatchGraph graph(model, batch);
      const Grads grads = graph.backward();
      adam_step(model, grads, adam);
      ++step;
      seen += static_cast<long long>(batch.size());
      result.log.add(step, seen, graph.loss(), spec.lr);
    }
    result.val_accuracy.push_back(accuracy_on(model, val));
  }
  result.train_accuracy = accuracy_on(model, train);
  return result;
}

Polarity predict_atsc(const EncoderModel& model, const AtscExample& example, const Vocab& vocab) {
  const auto enc = encode_atsc_input(example, vocab, model.cfg.max_len);
  std::vector<uint8_t> mask(enc.input_ids.size(), 1);
  const EncoderOutput out = forward(model, enc.input_ids, enc.segment_ids, mask);
  const auto p = classify_atsc(model, out);
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (p[k] > p[best]) best = k;
  return static_cast<Polarity>(best);
}

std::vector<Polarity> predict_dataset(const EncoderModel& model, const AtscDataset& dataset,
                                      const Vocab& vocab) {
  std::vector<Polarity> out;
  out.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) out.push_back(predict_atsc(model, ex, vocab));
  return out;
}

}  // namespace atsclab
