#include "text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>

#include "rng.hpp"

namespace atsclab {

std::string to_string(Domain d) {
  switch (d) {
    case Domain::Laptops: return "laptops";
    case Domain::Restaurants: return "restaurants";
    case Domain::Joint: return "joint";
  }
  return "?";
}

std::string to_string(Polarity p) {
  switch (p) {
    case Polarity::Positive: return "positive";
    case Polarity::Negative: return "negative";
    case Polarity::Neutral: return "neutral";
  }
  return "?";
}

Domain domain_from_string(const std::string& s) {
  if (s == "laptops") return Domain::Laptops;
  if (s == "restaurants") return Domain::Restaurants;
  if (s == "joint") return Domain::Joint;
  throw Error("unknown domain: " + s);
}

Polarity polarity_from_string(const std::string& s) {
  if (s == "positive") return Polarity::Positive;
  if (s == "negative") return Polarity::Negative;
  if (s == "neutral") return Polarity::Neutral;
  throw Error("unknown polarity: " + s);
}

Vocab Vocab::with_specials() {
  Vocab v;
  for (const char* t : {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"}) v.add(t);
  return v;
}

int Vocab::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  const int id = static_cast<int>(id_to_token_.size());
  id_to_token_.push_back(token);
  token_to_id_.emplace(token, id);
  return id;
}

int Vocab::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& token) const {
  return token_to_id_.count(token) != 0;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw IndexOutOfRange("vocab id " + std::to_string(id));
  return id_to_token_[id];
}

uint64_t Vocab::content_hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& t : id_to_token_) {
    h = fnv1a(t, h);
    h = fnv1a("\n", h);
  }
  return h;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocab file: " + path);
  for (const auto& t : id_to_token_) out << t << '\n';
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("vocab file: " + path);
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) v.add(line);
  }
  if (v.size() < kNumSpecials || v.token(kPad) != "[PAD]" || v.token(kMask) != "[MASK]")
    throw Error("vocab file missing special tokens: " + path);
  return v;
}

void VocabBuilder::add(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) add_token(t);
}

void VocabBuilder::add_token(const std::string& token) {
  if (!token.empty()) ++counts_[token];
}

Vocab VocabBuilder::build(size_t top_k) const {
  std::vector<std::pair<long long, std::string>> ranked;
  ranked.reserve(counts_.size());
  for (const auto& [tok, n] : counts_) ranked.emplace_back(n, tok);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  Vocab v = Vocab::with_specials();
  for (size_t i = 0; i < ranked.size() && i < top_k; ++i) v.add(ranked[i].second);
  return v;
}

namespace {

bool is_word_char(unsigned char c) {
  // non-ASCII bytes are treated as word characters so UTF-8 words survive
  return std::isalnum(c) || c == '\'' || c >= 0x80;
}

char lower_ascii(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

const std::set<std::string>& abbreviations() {
  static const std::set<std::string> abbrevs = {
      "mr.",  "mrs.", "ms.",  "dr.",   "prof.", "st.",  "jr.",  "sr.",
      "e.g.", "i.e.", "etc.", "vs.",   "approx.", "inc.", "ltd.", "co.",
      "fig.", "no.",  "dept.", "est.", "min.",  "max.", "oz.",  "lb.",
      "jan.", "feb.", "mar.", "apr.",  "jun.",  "jul.", "aug.", "sep.",
      "sept.", "oct.", "nov.", "dec.", "mon.",  "tue.", "wed.", "thu.",
      "fri.", "sat.", "sun."};
  return abbrevs;
}

}  // namespace

std::vector<std::string> tokenize_with_offsets(const std::string& text,
                                               std::vector<TokenSpan>* spans) {
  std::vector<std::string> tokens;
  if (spans) spans->clear();
  const size_t n = text.size();
  size_t i = 0;
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    size_t start = i;
    std::string tok;
    if (is_word_char(c)) {
      while (i < n && is_word_char(static_cast<unsigned char>(text[i]))) {
        tok.push_back(lower_ascii(static_cast<unsigned char>(text[i])));
        ++i;
      }
    } else {
      tok.push_back(static_cast<char>(c));
      ++i;
    }
    tokens.push_back(std::move(tok));
    if (spans) spans->push_back({start, i});
  }
  return tokens;
}

std::vector<std::string> tokenize_strings(const std::string& text) {
  return tokenize_with_offsets(text, nullptr);
}

TokenSequence tokenize(const std::string& text, const Vocab& vocab) {
  TokenSequence seq;
  seq.tokens = tokenize_strings(text);
  seq.ids.reserve(seq.tokens.size());
  for (const auto& t : seq.tokens) seq.ids.push_back(vocab.id(t));
  return seq;
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  const size_t n = text.size();
  size_t start = 0;
  size_t i = 0;
  auto flush = [&](size_t end) {
    size_t s = start;
    while (s < end && std::isspace(static_cast<unsigned char>(text[s]))) ++s;
    size_t e = end;
    while (e > s && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    if (e > s) out.push_back(text.substr(s, e - s));
    start = end;
  };
  while (i < n) {
    const char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      size_t j = i;
      while (j + 1 < n && (text[j + 1] == '.' || text[j + 1] == '!' || text[j + 1] == '?'))
        ++j;
      const bool at_end = (j + 1 >= n);
      const bool before_space =
          !at_end && std::isspace(static_cast<unsigned char>(text[j + 1]));
      bool is_abbrev = false;
      if (c == '.' && j == i) {
        // word immediately ending at this period, e.g. "dr." or "e.g."
        size_t w = i;
        while (w > 0 && !std::isspace(static_cast<unsigned char>(text[w - 1]))) --w;
        std::string word;
        for (size_t k = w; k <= i; ++k)
          word.push_back(lower_ascii(static_cast<unsigned char>(text[k])));
        is_abbrev = abbreviations().count(word) != 0;
      }
      if ((at_end || before_space) && !is_abbrev) {
        flush(j + 1);
        i = j + 1;
        continue;
      }
      i = j + 1;
      continue;
    }
    ++i;
  }
  flush(n);
  return out;
}

std::string normalize_sentence(const std::string& text) {
  const auto tokens = tokenize_strings(text);
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::vector<ReviewDoc> filter_short_reviews(const std::vector<ReviewDoc>& docs) {
  std::vector<ReviewDoc> out;
  out.reserve(docs.size());
  for (const auto& d : docs)
    if (d.sentence_count() >= 2) out.push_back(d);
  return out;
}

std::vector<ReviewDoc> dedup_against_eval(const std::vector<ReviewDoc>& docs,
                                          const std::set<std::string>& eval_sentences) {
  std::vector<ReviewDoc> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    bool contaminated = false;
    for (const auto& sent : d.sentences) {
      std::string canon;
      for (size_t i = 0; i < sent.size(); ++i) {
        if (i) canon.push_back(' ');
        canon += sent[i];
      }
      if (eval_sentences.count(canon)) {
        contaminated = true;
        break;
      }
    }
    if (!contaminated) out.push_back(d);
  }
  return out;
}

std::vector<ReviewDoc> sample_sentences(const std::vector<ReviewDoc>& docs, size_t n,
                                        uint64_t seed) {
  size_t total = 0;
  for (const auto& d : docs) total += d.sentence_count();
  if (total < n)
    throw InsufficientData("requested " + std::to_string(n) + " sentences, corpus has " +
                           std::to_string(total));
  std::vector<size_t> order(docs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<ReviewDoc> out;
  size_t got = 0;
  for (const size_t idx : order) {
    if (got >= n) break;
    out.push_back(docs[idx]);
    got += docs[idx].sentence_count();
  }
  return out;
}

}  // namespace atsclab
