#include "synth.hpp"

#include <fstream>

#include "rng.hpp"

namespace atsclab {

namespace {

const std::vector<std::string> kAspectsA = {"dongle", "gizmo", "sprocket",
                                            "widget", "flange", "bezel"};
const std::vector<std::string> kPosA = {"zorvy", "plimmy", "quandic", "snorply", "trivan", "blemful"};
const std::vector<std::string> kNegA = {"drabbet", "marnic", "skulvy", "gromish", "plastel", "vornic"};

const std::vector<std::string> kAspectsB = {"pasta", "soup", "burger", "salad", "cake", "sushi"};
const std::vector<std::string> kPosB = {"frellic", "wombly", "klinty", "sorvan", "prevish", "dastel"};
const std::vector<std::string> kNegB = {"crumbent", "blarvish", "stynga", "morkel", "fraddle", "gunkish"};

const std::vector<std::string> kPosPivots = {"thankfully", "happily"};
const std::vector<std::string> kNegPivots = {"sadly", "unfortunately"};
const std::vector<std::string> kPosGeneric = {"good", "great"};
const std::vector<std::string> kNegGeneric = {"bad", "poor"};

const std::vector<std::string> kBaseWords = {
    "the", "a",  "my",   "this", "that",  "it",    "was",   "is",      "were", "and",
    "but", "i",  "we",   "they", "had",   "got",   "very",  "really",  "quite", "so",
    "too", "at", "on",   "with", "for",   "in",    "of",    "one",     "two",  "came",
    "went", "table", "box", "day", "time", "thing", "place", "ordered", "bought", "tried",
    "used", "saw", "today", "yesterday", "again", ".", "!", ","};

struct DomainWords {
  const std::vector<std::string>* aspects;
  const std::vector<std::string>* pos;
  const std::vector<std::string>* neg;
};

DomainWords words_for(Domain d) {
  if (d == Domain::Laptops) return {&kAspectsA, &kPosA, &kNegA};
  return {&kAspectsB, &kPosB, &kNegB};
}

const std::string& pick(Rng& rng, const std::vector<std::string>& v) {
  return v[rng.below(v.size())];
}

// Opinion sentence about `aspect` with sentiment word `sent`; returns the
// target index of the aspect token.
std::vector<std::string> opinion_sentence(Rng& rng, const std::string& aspect,
                                          const std::string& sent, const std::string& pivot,
                                          size_t* aspect_index) {
  std::vector<std::string> t;
  const int tpl = static_cast<int>(rng.below(pivot.empty() ? 4 : 2));
  if (pivot.empty()) {
    switch (tpl) {
      case 0: t = {"the", aspect, "was", sent, "."}; *aspect_index = 1; break;
      case 1: t = {"the", aspect, "is", "really", sent, "."}; *aspect_index = 1; break;
      case 2: t = {"i", "thought", "the", aspect, "was", sent, "."}; *aspect_index = 3; break;
      default: t = {"we", "tried", "the", aspect, "and", "it", "was", sent, "."}; *aspect_index = 3; break;
    }
  } else {
    if (tpl == 0) {
      t = {pivot, "the", aspect, "was", sent, "."};
      *aspect_index = 2;
    } else {
      t = {"the", aspect, "was", sent, ",", pivot, "."};
      *aspect_index = 1;
    }
  }
  return t;
}

std::vector<std::string> neutral_sentence(Rng& rng, const std::string& aspect,
                                          size_t* aspect_index) {
  std::vector<std::string> t;
  switch (rng.below(5)) {
    case 0: t = {"i", "had", "the", aspect, "yesterday", "."}; *aspect_index = 3; break;
    case 1: t = {"we", "ordered", "the", aspect, "today", "."}; *aspect_index = 3; break;
    case 2: t = {"the", aspect, "came", "in", "a", "box", "."}; *aspect_index = 1; break;
    case 3: t = {"the", aspect, "is", "on", "the", "table", "."}; *aspect_index = 1; break;
    default: t = {"i", "saw", "the", aspect, "at", "the", "place", "."}; *aspect_index = 3; break;
  }
  return t;
}

std::vector<std::string> lm_sentence(Rng& rng, const DomainWords& w) {
  const double kind = rng.uniform();
  size_t unused = 0;
  if (kind < 0.15) return neutral_sentence(rng, pick(rng, *w.aspects), &unused);
  const bool positive = rng.coin();
  const std::string& aspect = pick(rng, *w.aspects);
  if (kind < 0.55) {
    // coordination ties a domain word to a generic word of the same polarity
    const std::string& dom = pick(rng, positive ? *w.pos : *w.neg);
    const std::string& gen = pick(rng, positive ? kPosGeneric : kNegGeneric);
    const bool dom_first = rng.coin();
    return {"the", aspect, "was", dom_first ? dom : gen, "and", dom_first ? gen : dom, "."};
  }
  std::string sent, pivot;
  if (kind < 0.85) {
    sent = pick(rng, positive ? *w.pos : *w.neg);
    if (rng.uniform() < 0.6) pivot = pick(rng, positive ? kPosPivots : kNegPivots);
  } else {
    sent = pick(rng, positive ? kPosGeneric : kNegGeneric);
    if (rng.uniform() < 0.4) pivot = pick(rng, positive ? kPosPivots : kNegPivots);
  }
  return opinion_sentence(rng, aspect, sent, pivot, &unused);
}

std::vector<ReviewDoc> make_lm_corpus(Domain d, const SynthConfig& cfg, uint64_t seed) {
  const DomainWords w = words_for(d);
  Rng rng(seed);
  std::vector<ReviewDoc> docs;
  docs.reserve(cfg.lm_docs_per_domain);
  for (int i = 0; i < cfg.lm_docs_per_domain; ++i) {
    ReviewDoc doc;
    doc.doc_id = to_string(d) + "-" + std::to_string(i);
    doc.domain = d;
    const int n = cfg.min_sentences_per_doc +
                  static_cast<int>(rng.below(cfg.max_sentences_per_doc - cfg.min_sentences_per_doc + 1));
    for (int s = 0; s < n; ++s) doc.sentences.push_back(lm_sentence(rng, w));
    docs.push_back(std::move(doc));
  }
  return docs;
}

AtscExample labeled_example(Rng& rng, Domain d, Polarity label, bool test_purity) {
  const DomainWords w = words_for(d);
  AtscExample ex;
  ex.domain = d;
  ex.label = label;
  const std::string& aspect = pick(rng, *w.aspects);
  size_t aspect_index = 0;
  if (label == Polarity::Neutral) {
    ex.tokens = neutral_sentence(rng, aspect, &aspect_index);
  } else {
    const bool positive = label == Polarity::Positive;
    std::string sent, pivot;
    if (test_purity) {
      // test sentences carry only the domain's own sentiment words
      sent = pick(rng, positive ? *w.pos : *w.neg);
    } else {
      sent = rng.uniform() < 0.55 ? pick(rng, positive ? *w.pos : *w.neg)
                                  : pick(rng, positive ? kPosGeneric : kNegGeneric);
      if (rng.uniform() < 0.3) pivot = pick(rng, positive ? kPosPivots : kNegPivots);
    }
    ex.tokens = opinion_sentence(rng, aspect, sent, pivot, &aspect_index);
  }
  ex.target_start = aspect_index;
  ex.target_len = 1;
  return ex;
}

Polarity draw_label(Rng& rng, double p_pos, double p_neg) {
  const double u = rng.uniform();
  if (u < p_pos) return Polarity::Positive;
  if (u < p_pos + p_neg) return Polarity::Negative;
  return Polarity::Neutral;
}

AtscDataset make_dataset(Domain d, Split split, int n, uint64_t seed) {
  Rng rng(seed);
  AtscDataset ds;
  ds.domain = d;
  ds.split = split;
  const bool test_purity = split == Split::Test;
  const double p_pos = test_purity ? 0.40 : 0.40;
  const double p_neg = test_purity ? 0.40 : 0.35;
  for (int i = 0; i < n; ++i)
    ds.examples.push_back(labeled_example(rng, d, draw_label(rng, p_pos, p_neg), test_purity));
  return ds;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

SynthPair make_synth_pair(const SynthConfig& cfg) {
  SynthPair pair;
  pair.lm_corpus_a = make_lm_corpus(Domain::Laptops, cfg, derive_seed(cfg.seed, "lm-a"));
  pair.lm_corpus_b = make_lm_corpus(Domain::Restaurants, cfg, derive_seed(cfg.seed, "lm-b"));
  pair.train_a = make_dataset(Domain::Laptops, Split::Train, cfg.train_examples_per_domain,
                              derive_seed(cfg.seed, "train-a"));
  pair.train_b = make_dataset(Domain::Restaurants, Split::Train, cfg.train_examples_per_domain,
                              derive_seed(cfg.seed, "train-b"));
  pair.test_a = make_dataset(Domain::Laptops, Split::Test, cfg.test_examples_per_domain,
                             derive_seed(cfg.seed, "test-a"));
  pair.test_b = make_dataset(Domain::Restaurants, Split::Test, cfg.test_examples_per_domain,
                             derive_seed(cfg.seed, "test-b"));
  VocabBuilder vb;
  for (const auto* corpus : {&pair.lm_corpus_a, &pair.lm_corpus_b})
    for (const auto& doc : *corpus)
      for (const auto& sent : doc.sentences) vb.add(sent);
  for (const auto* ds : {&pair.train_a, &pair.train_b})
    for (const auto& ex : ds->examples) vb.add(ex.tokens);
  pair.vocab = vb.build(512);
  return pair;
}

void write_reviews_jsonl(const std::string& path, const std::vector<ReviewDoc>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write reviews file: " + path);
  for (const auto& doc : docs) {
    std::string text;
    for (size_t s = 0; s < doc.sentences.size(); ++s) {
      if (s) text.push_back(' ');
      text += join_tokens(doc.sentences[s]);
    }
    std::string esc;
    for (const char c : text) {
      if (c == '"' || c == '\\') esc.push_back('\\');
      esc.push_back(c);
    }
    out << "{\"id\": \"" << doc.doc_id << "\", \"text\": \"" << esc << "\"}\n";
  }
}

void write_semeval_xml(const std::string& path, const AtscDataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write xml file: " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n<sentences>\n";
  for (size_t i = 0; i < dataset.examples.size(); ++i) {
    const auto& ex = dataset.examples[i];
    const std::string text = join_tokens(ex.tokens);
    size_t from = 0;
    for (size_t t = 0; t < ex.target_start; ++t) from += ex.tokens[t].size() + 1;
    size_t to = from;
    for (size_t t = ex.target_start; t < ex.target_start + ex.target_len; ++t) {
      if (t > ex.target_start) ++to;  // joining space
      to += ex.tokens[t].size();
    }
    std::string term;
    for (size_t t = ex.target_start; t < ex.target_start + ex.target_len; ++t) {
      if (t > ex.target_start) term.push_back(' ');
      term += ex.tokens[t];
    }
    out << "    <sentence id=\"" << (i + 1) << "\">\n";
    out << "        <text>" << xml_escape(text) << "</text>\n";
    out << "        <aspectTerms>\n";
    out << "            <aspectTerm term=\"" << xml_escape(term) << "\" polarity=\""
        << to_string(ex.label) << "\" from=\"" << from << "\" to=\"" << to << "\"/>\n";
    out << "        </aspectTerms>\n";
    out << "    </sentence>\n";
  }
  out << "</sentences>\n";
}

}  // namespace atsclab
