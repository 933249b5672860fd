#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "errors.hpp"

namespace atsclab {

enum class Domain { Laptops = 0, Restaurants = 1, Joint = 2 };
enum class Polarity { Positive = 0, Negative = 1, Neutral = 2 };
enum class Split { Train = 0, Test = 1 };

std::string to_string(Domain d);
std::string to_string(Polarity p);
Domain domain_from_string(const std::string& s);
Polarity polarity_from_string(const std::string& s);

// Word-level vocabulary with fixed special ids. Ids are dense in [0, size).
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumSpecials = 5;

  static Vocab with_specials();

  int add(const std::string& token);  // no-op if present, returns id
  int id(const std::string& token) const;  // kUnk for unknown tokens
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }
  bool is_special(int id) const { return id < kNumSpecials; }
  uint64_t content_hash() const;

  void save(const std::string& path) const;   // one token per line, id = line index
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// Frequency-counting builder; top_k most frequent tokens (ties broken
// lexicographically) plus the specials.
class VocabBuilder {
 public:
  void add(const std::vector<std::string>& tokens);
  void add_token(const std::string& token);
  Vocab build(size_t top_k = 8192) const;

 private:
  std::map<std::string, long long> counts_;
};

struct TokenSequence {
  std::vector<int> ids;
  std::vector<std::string> tokens;
};

struct TokenSpan {
  size_t begin = 0;  // char offsets, [begin, end)
  size_t end = 0;
};

// Lowercased word tokens; punctuation characters become single-char tokens.
// Apostrophes and digits stay inside words ("aren't", "3.5" splits on '.').
std::vector<std::string> tokenize_strings(const std::string& text);
std::vector<std::string> tokenize_with_offsets(const std::string& text,
                                               std::vector<TokenSpan>* spans);
TokenSequence tokenize(const std::string& text, const Vocab& vocab);

// Terminal-punctuation sentence splitter with a fixed abbreviation stoplist.
std::vector<std::string> split_sentences(const std::string& text);

// Canonical form used for dedup matching: lowercase tokenization joined by
// single spaces. Applied to both review sentences and eval sentences.
std::string normalize_sentence(const std::string& text);

struct ReviewDoc {
  std::string doc_id;
  Domain domain = Domain::Laptops;
  std::vector<std::vector<std::string>> sentences;  // token lists, order preserved

  size_t sentence_count() const { return sentences.size(); }
};

std::vector<ReviewDoc> filter_short_reviews(const std::vector<ReviewDoc>& docs);

// Removes any doc containing at least one sentence whose canonical form is in
// eval_sentences (document-level removal on sentence-level evidence).
std::vector<ReviewDoc> dedup_against_eval(const std::vector<ReviewDoc>& docs,
                                          const std::set<std::string>& eval_sentences);

// Whole-document seeded sample: uniform shuffle of docs, take docs until the
// cumulative sentence count first reaches >= n.
std::vector<ReviewDoc> sample_sentences(const std::vector<ReviewDoc>& docs, size_t n,
                                        uint64_t seed);

struct LabelCounts {
  size_t positive = 0;
  size_t negative = 0;
  size_t neutral = 0;
  size_t conflict_dropped = 0;

  size_t total() const { return positive + negative + neutral; }
};

struct AtscExample {
  std::vector<std::string> tokens;
  size_t target_start = 0;
  size_t target_len = 1;
  Polarity label = Polarity::Neutral;
  Domain domain = Domain::Laptops;
};

}  // namespace atsclab
