#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "text.hpp"

namespace atsclab {

// A greedy run of consecutive sentences from one document, used as one NSP
// segment. A single sentence is the degenerate chunk.
struct SentenceChunk {
  std::vector<std::string> tokens;
  int n_sentences = 1;
};

struct ChunkedDoc {
  std::string doc_id;
  std::vector<SentenceChunk> chunks;
};

// Greedy fill: consecutive sentences join a chunk while total tokens stay
// within budget; a sentence longer than the budget forms its own chunk.
std::vector<ChunkedDoc> chunk_documents(const std::vector<ReviewDoc>& docs, int budget_tokens);

// One chunk per sentence; the finest pairing granularity.
std::vector<ChunkedDoc> to_single_sentence_chunks(const std::vector<ReviewDoc>& docs);

struct NspPair {
  SentenceChunk a;
  SentenceChunk b;
  bool is_next = false;
  size_t a_doc = 0;  // index into the chunked corpus
  size_t b_doc = 0;
};

// For each adjacent chunk position: coin 0.5 -> true successor, else a
// uniformly random chunk from a different document. Deterministic per seed.
std::vector<NspPair> make_nsp_pairs(const std::vector<ChunkedDoc>& docs, uint64_t seed);

struct MaskingPolicy {
  double select_rate = 0.15;
  double mask_frac = 0.8;
  double random_frac = 0.1;
  double keep_frac = 0.1;

  void validate() const;
  std::string to_string() const;
  static MaskingPolicy parse(const std::string& s);
};

struct MaskedPairExample {
  std::vector<int> input_ids;    // [CLS] a [SEP] b [SEP] [PAD]...
  std::vector<int> segment_ids;  // 0 through first [SEP], 1 after
  std::vector<int> mlm_positions;
  std::vector<int> mlm_labels;
  bool is_next = false;
  int n_sentences = 2;  // packed source sentences, for sentence accounting
};

// Encodes one pair without masking; truncates from the end of segment B
// first, then segment A, and pads to max_len.
MaskedPairExample encode_pair(const NspPair& pair, const Vocab& vocab, int max_len);
std::vector<MaskedPairExample> pack_and_encode(const std::vector<NspPair>& pairs,
                                               const Vocab& vocab, int max_len);

struct MaskStats {
  long long maskable = 0;
  long long selected = 0;
  long long masked = 0;
  long long randomized = 0;
  long long kept = 0;

  void add(const MaskStats& o) {
    maskable += o.maskable;
    selected += o.selected;
    masked += o.masked;
    randomized += o.randomized;
    kept += o.kept;
  }
};

// In-place masking of one encoded example. Maskable positions are everything
// except [CLS]/[SEP]/[PAD]. Deterministic per seed.
MaskStats apply_mlm_mask(MaskedPairExample& example, const MaskingPolicy& policy,
                         const Vocab& vocab, uint64_t seed);

// Writes mlm_labels back at mlm_positions, recovering the pre-masking ids.
std::vector<int> reconstruct_original_ids(const MaskedPairExample& example);

struct ShardHeader {
  uint64_t vocab_hash = 0;
  int max_len = 0;
  MaskingPolicy policy;
  uint64_t seed = 0;
  size_t count = 0;
};

struct Shard {
  ShardHeader header;
  std::vector<MaskedPairExample> examples;
};

void write_shard(const std::string& path, const Shard& shard);
Shard read_shard(const std::string& path);

struct ShardStats {
  size_t pairs = 0;
  size_t is_next_true = 0;
  long long sentences = 0;
  MaskStats mask;
};

void write_shard_stats(const std::string& path, const ShardStats& stats);

// Full generation pipeline for one corpus: chunk -> pair -> encode -> mask.
// Also fills `stats` when non-null.
std::vector<MaskedPairExample> build_lm_examples(const std::vector<ReviewDoc>& docs,
                                                 const Vocab& vocab,
                                                 const MaskingPolicy& policy, int max_len,
                                                 uint64_t seed, ShardStats* stats = nullptr);

}  // namespace atsclab
