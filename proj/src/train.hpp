#pragma once

#include <functional>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "model.hpp"
#include "text.hpp"

namespace atsclab {

struct AtscDataset {
  std::vector<AtscExample> examples;
  Split split = Split::Train;
  Domain domain = Domain::Laptops;
};

// [CLS] sentence [SEP] target-span-tokens [SEP]; lm-data truncation rules.
AtscBatchGraph::Encoded encode_atsc_input(const AtscExample& example, const Vocab& vocab,
                                          int max_len);

struct MetricsLog {
  std::vector<std::string> lines;  // "step\tsentences_seen\tloss\tlr"

  void add(long long step, long long sentences_seen, double loss, double lr);
  void save(const std::string& path, uint64_t seed) const;
};

struct FinetuneRunSpec {
  Domain d_lm = Domain::Laptops;
  int epochs = 1;
  int batch_size = 32;
  double lr = 1e-3;
  long long max_sentences = 0;  // stop after this many presentations; 0 = no cap
  std::vector<long long> snapshot_schedule;  // cumulative sentence counts, strictly increasing
  uint64_t seed = 0;

  void validate() const;
};

struct FinetuneResult {
  MetricsLog log;
  long long sentences_seen = 0;
  double first_epoch_mean_loss = 0.0;
  double last_epoch_mean_loss = 0.0;
};

// Self-supervised finetuning over shard examples. Re-masks at every epoch
// boundary with a derived seed. `snapshot` fires once per scheduled sentence
// count (at its first crossing) plus once at the end.
FinetuneResult lm_finetune(
    EncoderModel& model, const FinetuneRunSpec& spec, const Shard& shard, const Vocab& vocab,
    const std::function<void(long long sentences_seen, const EncoderModel&)>& snapshot = {});

struct AtscRunSpec {
  Domain d_train = Domain::Laptops;
  int epochs = 7;
  int batch_size = 32;
  double lr = 3e-5;
  double val_fraction = 0.1;  // 0 disables the held-out split
  uint64_t seed = 0;

  void validate() const;
};

struct AtscTrainResult {
  MetricsLog log;
  std::vector<double> val_accuracy;  // one entry per epoch; NaN when no val split
  double train_accuracy = 0.0;       // final, on the training portion
};

AtscTrainResult train_atsc(EncoderModel& model, const AtscRunSpec& spec,
                           const AtscDataset& dataset, const Vocab& vocab);

Polarity predict_atsc(const EncoderModel& model, const AtscExample& example, const Vocab& vocab);
std::vector<Polarity> predict_dataset(const EncoderModel& model, const AtscDataset& dataset,
                                      const Vocab& vocab);

}  // namespace atsclab
