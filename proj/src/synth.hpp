#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "train.hpp"

namespace atsclab {

// Two synthetic review "domains" sharing a base vocabulary of function words,
// pivot adverbs and generic opinion words, while each domain carries its own
// aspect nouns and its own disjoint sentiment vocabulary that never occurs in
// the shared base words. Unlabeled domain text is the only place a model can
// learn what the domain-specific sentiment words mean.
struct SynthConfig {
  int lm_docs_per_domain = 150;
  int min_sentences_per_doc = 3;
  int max_sentences_per_doc = 5;
  int train_examples_per_domain = 160;
  int test_examples_per_domain = 120;
  uint64_t seed = 1;
};

struct SynthPair {
  Vocab vocab;  // shared across every run of the experiment
  std::vector<ReviewDoc> lm_corpus_a;  // Domain::Laptops
  std::vector<ReviewDoc> lm_corpus_b;  // Domain::Restaurants
  AtscDataset train_a, train_b;
  AtscDataset test_a, test_b;
};

SynthPair make_synth_pair(const SynthConfig& cfg);

// Serialization into the documented external formats, for fixtures and the
// CLI walkthrough: one review per line with a `text` field, and SemEval-style
// XML with character offsets.
void write_reviews_jsonl(const std::string& path, const std::vector<ReviewDoc>& docs);
void write_semeval_xml(const std::string& path, const AtscDataset& dataset);

// Plain-text join of a token list; punctuation is space-separated so the
// tokenizer round-trips it.
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace atsclab
