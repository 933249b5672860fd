#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "matrix.hpp"
#include "metrics.hpp"
#include "synth.hpp"
#include "train.hpp"

using namespace atsclab;

// Learning-curve trend on the synthetic domain pair: language-model snapshots
// at increasing sentence counts, each followed by the same source-domain
// training, must not degrade target-domain accuracy as sentences grow
// (Spearman >= 0 between sentences seen and mean delta accuracy).
TEST_CASE("adaptation learning curve trends upward" * doctest::timeout(1200)) {
  SynthConfig scfg;
  scfg.lm_docs_per_domain = 360;
  scfg.seed = 20250808;
  const SynthPair pair = make_synth_pair(scfg);

  std::set<std::string> eval_sentences;
  for (const auto& ex : pair.test_b.examples) eval_sentences.insert(join_tokens(ex.tokens));
  const auto corpus_b = dedup_against_eval(pair.lm_corpus_b, eval_sentences);

  const int max_len = 24;
  Shard shard_b;
  shard_b.header.vocab_hash = pair.vocab.content_hash();
  shard_b.header.max_len = max_len;
  shard_b.header.seed = 42;
  shard_b.examples = build_lm_examples(corpus_b, pair.vocab, MaskingPolicy{}, max_len, 42);
  shard_b.header.count = shard_b.examples.size();
  long long per_epoch = 0;
  for (const auto& ex : shard_b.examples) per_epoch += ex.n_sentences;

  EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden_dim = 64;
  cfg.num_heads = 2;
  cfg.ff_dim = 128;
  cfg.vocab_size = pair.vocab.size();
  cfg.max_len = max_len;

  const int lm_epochs = 12;
  const std::vector<long long> schedule = {0, per_epoch * lm_epochs / 2};
  const std::vector<uint64_t> seeds = {1, 2};

  // snapshots kept in memory, keyed by schedule slot
  std::map<uint64_t, std::vector<EncoderModel>> snapshots;
  std::map<uint64_t, std::vector<long long>> fired_counts;
  for (const uint64_t seed : seeds) {
    EncoderModel model = init_model(cfg, seed);
    FinetuneRunSpec fspec;
    fspec.epochs = lm_epochs;
    fspec.batch_size = 16;
    fspec.lr = 1e-3;
    fspec.seed = seed;
    fspec.snapshot_schedule = schedule;
    lm_finetune(model, fspec, shard_b, pair.vocab,
                [&](long long sentences, const EncoderModel& m) {
                  snapshots[seed].push_back(m);
                  fired_counts[seed].push_back(sentences);
                });
    REQUIRE(snapshots[seed].size() == schedule.size() + 1);  // schedule + final
  }
  const long long final_count = fired_counts[seeds[0]].back();
  CHECK(final_count == per_epoch * lm_epochs);
  CHECK(fired_counts[seeds[1]].back() == final_count);

  std::vector<long long> curve_counts = schedule;
  curve_counts.push_back(final_count);

  std::vector<Polarity> golds;
  for (const auto& ex : pair.test_b.examples) golds.push_back(ex.label);
  const SnapshotEval eval = [&](long long sentences, uint64_t seed) {
    size_t slot = 0;
    for (size_t i = 0; i < curve_counts.size(); ++i)
      if (curve_counts[i] == sentences) slot = i;
    EncoderModel model = snapshots[seed][slot];
    AtscRunSpec aspec;
    aspec.epochs = 14;
    aspec.batch_size = 16;
    aspec.lr = 3e-4;
    aspec.val_fraction = 0.0;
    aspec.seed = seed;
    train_atsc(model, aspec, pair.train_a, pair.vocab);
    return accuracy(predict_dataset(model, pair.test_b, pair.vocab), golds);
  };

  const CurveSeries series = learning_curve("restaurants", curve_counts, seeds, eval);
  REQUIRE(series.points.size() == 3);
  CHECK(series.points[0].delta_accuracy.mean == 0.0);

  std::vector<double> xs, ys;
  for (const auto& p : series.points) {
    xs.push_back(static_cast<double>(p.sentences_seen));
    ys.push_back(p.delta_accuracy.mean);
    MESSAGE("sentences=", p.sentences_seen, " delta=", p.delta_accuracy.mean);
  }
  CHECK(spearman(xs, ys) >= 0.0);
  // the fully finetuned point should show a real improvement
  CHECK(series.points.back().delta_accuracy.mean > 0.0);
}
