#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rng.hpp"
#include "semeval.hpp"
#include "text.hpp"

using namespace atsclab;

namespace {

const std::string kDataDir = ATSCLAB_TEST_DATA;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ReviewDoc doc_with(const std::string& id, std::initializer_list<std::string> sentences) {
  ReviewDoc d;
  d.doc_id = id;
  for (const auto& s : sentences) d.sentences.push_back(tokenize_strings(s));
  return d;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits punctuation") {
  Vocab v = Vocab::with_specials();
  for (const char* w : {"i", "love", "their", "dumplings", "!"}) v.add(w);
  const TokenSequence seq = tokenize("I love their dumplings", v);
  CHECK(seq.tokens == std::vector<std::string>{"i", "love", "their", "dumplings"});
  CHECK(seq.ids == std::vector<int>{v.id("i"), v.id("love"), v.id("their"), v.id("dumplings")});
}

TEST_CASE("tokenize of empty input is empty") {
  const Vocab v = Vocab::with_specials();
  CHECK(tokenize("", v).ids.empty());
}

TEST_CASE("out-of-vocabulary tokens map to [UNK]") {
  Vocab v = Vocab::with_specials();
  v.add("!");
  const TokenSequence seq = tokenize("Zzxq!", v);
  REQUIRE(seq.ids.size() == 2);
  CHECK(seq.ids[0] == Vocab::kUnk);
  CHECK(seq.tokens[0] == "zzxq");
  CHECK(seq.ids[1] == v.id("!"));
}

TEST_CASE("tokenize never emits an id >= vocab size") {
  Vocab v = Vocab::with_specials();
  v.add("food");
  Rng rng(50);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    for (int w = 0; w < 10; ++w) {
      for (int c = 0; c < 4; ++c) text.push_back(static_cast<char>('a' + rng.below(26)));
      text.push_back(rng.coin() ? ' ' : '!');
    }
    for (const int id : tokenize(text, v).ids) {
      CHECK(id >= 0);
      CHECK(id < v.size());
    }
  }
}

TEST_CASE("vocab specials are distinct and ids are dense") {
  const Vocab v = Vocab::with_specials();
  CHECK(v.size() == Vocab::kNumSpecials);
  CHECK(v.token(Vocab::kPad) == "[PAD]");
  CHECK(v.token(Vocab::kUnk) == "[UNK]");
  CHECK(v.token(Vocab::kCls) == "[CLS]");
  CHECK(v.token(Vocab::kSep) == "[SEP]");
  CHECK(v.token(Vocab::kMask) == "[MASK]");
}

TEST_CASE("vocab builder keeps the top-k by frequency with lexicographic ties") {
  VocabBuilder vb;
  vb.add({"b", "b", "b", "a", "a", "c", "d"});
  const Vocab v = vb.build(2);
  CHECK(v.size() == Vocab::kNumSpecials + 2);
  CHECK(v.contains("b"));
  CHECK(v.contains("a"));
  CHECK_FALSE(v.contains("c"));
}

TEST_CASE("vocab save/load round-trip") {
  VocabBuilder vb;
  vb.add({"alpha", "beta", "beta"});
  const Vocab v = vb.build(10);
  const std::string path = std::string(ATSCLAB_TEST_TMP) + "/vocab_roundtrip.txt";
  v.save(path);
  const Vocab w = Vocab::load(path);
  CHECK(w.size() == v.size());
  CHECK(w.id("beta") == v.id("beta"));
  CHECK(w.content_hash() == v.content_hash());
}

TEST_CASE("split_sentences basic rules") {
  CHECK(split_sentences("Good food. Bad service.") ==
        std::vector<std::string>{"Good food.", "Bad service."});
  CHECK(split_sentences("Great!") == std::vector<std::string>{"Great!"});
  CHECK(split_sentences("Really? Yes! Fine.") ==
        std::vector<std::string>{"Really?", "Yes!", "Fine."});
  CHECK(split_sentences("I met Dr. Smith. He was nice.") ==
        std::vector<std::string>{"I met Dr. Smith.", "He was nice."});
  CHECK(split_sentences("I paid 5.99 for it. Worth it.") ==
        std::vector<std::string>{"I paid 5.99 for it.", "Worth it."});
  CHECK(split_sentences("no punctuation at all") ==
        std::vector<std::string>{"no punctuation at all"});
  CHECK(split_sentences("Wait, what?! Again.") ==
        std::vector<std::string>{"Wait, what?!", "Again."});
  CHECK(split_sentences("").empty());
}

TEST_CASE("split_sentences concatenation preserves content") {
  const std::string text = "The fan is loud... I hate it. Ask for dr. lee, e.g. on Mondays! Ok?";
  const auto sentences = split_sentences(text);
  std::string joined;
  for (const auto& s : sentences) joined += s + " ";
  CHECK(normalize_sentence(joined) == normalize_sentence(text));
}

TEST_CASE("split_sentences matches the hand-labeled golden file") {
  std::istringstream golden(slurp(kDataDir + "/reviews_100_golden.txt"));
  std::string line;
  std::vector<std::pair<std::string, std::vector<std::string>>> expected;
  while (std::getline(golden, line)) {
    if (line.rfind("# ", 0) == 0) {
      expected.emplace_back(line.substr(2), std::vector<std::string>{});
    } else if (!line.empty()) {
      REQUIRE_FALSE(expected.empty());
      expected.back().second.push_back(line);
    }
  }
  REQUIRE(expected.size() == 100);

  std::istringstream reviews(slurp(kDataDir + "/reviews_100.jsonl"));
  size_t idx = 0;
  while (std::getline(reviews, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    REQUIRE(idx < expected.size());
    CHECK(rec["id"].get<std::string>() == expected[idx].first);
    const auto got = split_sentences(rec["text"].get<std::string>());
    INFO("review ", expected[idx].first);
    CHECK(got == expected[idx].second);
    ++idx;
  }
  CHECK(idx == 100);
}

TEST_CASE("filter_short_reviews keeps docs with at least two sentences") {
  const std::vector<ReviewDoc> docs = {doc_with("a", {"One.", "Two."}), doc_with("b", {"Only."}),
                                       doc_with("c", {"X.", "Y.", "Z."})};
  const auto kept = filter_short_reviews(docs);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].doc_id == "a");
  CHECK(kept[1].doc_id == "c");
  CHECK(filter_short_reviews({}).empty());
}

TEST_CASE("filter_short_reviews matches an independent recount on a 1000-doc fixture") {
  Rng rng(123);
  std::vector<ReviewDoc> docs;
  size_t expected_kept = 0;
  for (int i = 0; i < 1000; ++i) {
    ReviewDoc d;
    d.doc_id = "doc" + std::to_string(i);
    const size_t n = rng.below(5);  // 0..4 sentences
    for (size_t s = 0; s < n; ++s) d.sentences.push_back({"w" + std::to_string(s), "."});
    if (n >= 2) ++expected_kept;  // independent recount
    docs.push_back(std::move(d));
  }
  const auto kept = filter_short_reviews(docs);
  CHECK(kept.size() == expected_kept);
  // idempotence
  const auto twice = filter_short_reviews(kept);
  CHECK(twice.size() == kept.size());
  for (size_t i = 0; i < kept.size(); ++i) CHECK(twice[i].doc_id == kept[i].doc_id);
}

TEST_CASE("dedup removes docs containing eval sentences") {
  std::set<std::string> eval = {normalize_sentence("The food was great.")};
  const std::vector<ReviewDoc> docs = {
      doc_with("hit", {"Something else.", "The food was great."}),
      doc_with("case", {"THE FOOD   WAS GREAT.", "More text."}),
      doc_with("clean", {"Nothing related.", "At all."})};
  const auto kept = dedup_against_eval(docs, eval);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].doc_id == "clean");
}

TEST_CASE("dedup on a planted-overlap fixture keeps exactly 450 of 500") {
  Rng rng(321);
  const std::string planted = "This exact sentence appears in the eval data.";
  std::vector<ReviewDoc> docs;
  std::vector<size_t> contaminated(500, 0);
  for (size_t i = 0; i < 50; ++i) contaminated[i] = 1;
  rng.shuffle(contaminated);
  for (size_t i = 0; i < 500; ++i) {
    ReviewDoc d;
    d.doc_id = "doc" + std::to_string(i);
    d.sentences.push_back(tokenize_strings("Filler number " + std::to_string(i) + "."));
    if (contaminated[i]) d.sentences.push_back(tokenize_strings(planted));
    d.sentences.push_back(tokenize_strings("Closing line."));
    docs.push_back(std::move(d));
  }
  const auto kept = dedup_against_eval(docs, {normalize_sentence(planted)});
  CHECK(kept.size() == 450);
}

TEST_CASE("dedup is monotone in the eval set") {
  Rng rng(11);
  std::vector<ReviewDoc> docs;
  for (int i = 0; i < 60; ++i) {
    ReviewDoc d;
    d.doc_id = std::to_string(i);
    for (int s = 0; s < 3; ++s)
      d.sentences.push_back({"tok" + std::to_string(rng.below(10))});
    docs.push_back(std::move(d));
  }
  std::set<std::string> small, large;
  for (int k = 0; k < 3; ++k) small.insert("tok" + std::to_string(k));
  large = small;
  for (int k = 3; k < 6; ++k) large.insert("tok" + std::to_string(k));
  CHECK(dedup_against_eval(docs, large).size() <= dedup_against_eval(docs, small).size());
}

TEST_CASE("sample_sentences takes whole docs until the budget is reached") {
  Rng rng(77);
  std::vector<ReviewDoc> docs;
  size_t total = 0, max_doc = 0;
  for (int i = 0; i < 40; ++i) {
    ReviewDoc d;
    d.doc_id = std::to_string(i);
    const size_t n = 1 + rng.below(6);
    for (size_t s = 0; s < n; ++s) d.sentences.push_back({"w"});
    total += n;
    max_doc = std::max(max_doc, n);
    docs.push_back(std::move(d));
  }

  SUBCASE("n = total returns every doc, shuffled") {
    const auto all = sample_sentences(docs, total, 5);
    CHECK(all.size() == docs.size());
    size_t recount = 0;
    for (const auto& d : all) recount += d.sentence_count();
    CHECK(recount == total);
  }
  SUBCASE("same seed twice gives identical output") {
    const auto a = sample_sentences(docs, 60, 9);
    const auto b = sample_sentences(docs, 60, 9);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].doc_id == b[i].doc_id);
  }
  SUBCASE("cumulative count lands in [n, n + max_doc - 1]") {
    const size_t n = 100;
    const auto sampled = sample_sentences(docs, n, 13);
    size_t count = 0;
    for (const auto& d : sampled) count += d.sentence_count();
    CHECK(count >= n);
    CHECK(count <= n + max_doc - 1);
  }
  SUBCASE("asking for more sentences than exist fails") {
    CHECK_THROWS_AS(sample_sentences(docs, total + 1, 1), InsufficientData);
  }
}

TEST_CASE("semeval fixture counts equal the fixture manifest") {
  const auto manifest = nlohmann::json::parse(slurp(kDataDir + "/semeval_fixture_manifest.json"));
  const SemevalData data = parse_semeval_xml(kDataDir + "/semeval_fixture.xml", Domain::Laptops);
  CHECK(data.sentence_count == manifest["sentences"].get<size_t>());
  CHECK(data.aspect_term_count == manifest["aspect_terms"].get<size_t>());
  CHECK(data.counts.positive == manifest["positive"].get<size_t>());
  CHECK(data.counts.negative == manifest["negative"].get<size_t>());
  CHECK(data.counts.neutral == manifest["neutral"].get<size_t>());
  CHECK(data.counts.conflict_dropped == manifest["conflict_dropped"].get<size_t>());
  CHECK(data.examples.size() == data.counts.total());
  // emitted labels + dropped conflicts account for every aspectTerm element
  CHECK(data.counts.total() + data.counts.conflict_dropped == data.aspect_term_count);
}

TEST_CASE("semeval target spans cover the right tokens") {
  const SemevalData data = parse_semeval_xml(kDataDir + "/semeval_fixture.xml", Domain::Laptops);
  // first example: "The keyboard is great." target "keyboard"
  const AtscExample& kb = data.examples[0];
  REQUIRE(kb.target_len == 1);
  CHECK(kb.tokens[kb.target_start] == "keyboard");
  // multi-token target "pizza-place" covers 3 word-level tokens
  bool found = false;
  for (const auto& ex : data.examples) {
    if (ex.tokens[ex.target_start] == "pizza") {
      CHECK(ex.target_len == 3);
      CHECK(ex.tokens[ex.target_start + 2] == "place");
      found = true;
    }
  }
  CHECK(found);
  for (const auto& ex : data.examples) {
    CHECK(ex.target_start + ex.target_len <= ex.tokens.size());
    CHECK(ex.target_len >= 1);
  }
}

TEST_CASE("semeval conflict terms are dropped and counted") {
  const std::string xml = R"(<sentences>
    <sentence id="1"><text>Nice screen here.</text>
      <aspectTerms><aspectTerm term="screen" polarity="positive" from="5" to="11"/></aspectTerms>
    </sentence>
    <sentence id="2"><text>The port works.</text>
      <aspectTerms><aspectTerm term="port" polarity="conflict" from="4" to="8"/></aspectTerms>
    </sentence>
    <sentence id="3"><text>Bad cable included.</text>
      <aspectTerms><aspectTerm term="cable" polarity="negative" from="4" to="9"/></aspectTerms>
    </sentence>
  </sentences>)";
  const SemevalData data = parse_semeval_xml_string(xml, Domain::Laptops);
  CHECK(data.examples.size() == 2);
  CHECK(data.counts.conflict_dropped == 1);
}

TEST_CASE("semeval boundary offsets include the whole word") {
  const std::string xml = R"(<sentences>
    <sentence id="1"><text>The touchscreen rocks.</text>
      <aspectTerms><aspectTerm term="screen" polarity="positive" from="9" to="15"/></aspectTerms>
    </sentence>
  </sentences>)";
  const SemevalData data = parse_semeval_xml_string(xml, Domain::Laptops);
  REQUIRE(data.examples.size() == 1);
  CHECK(data.examples[0].tokens[data.examples[0].target_start] == "touchscreen");
  CHECK(data.examples[0].target_len == 1);
}

TEST_CASE("semeval error paths") {
  CHECK_THROWS_AS(parse_semeval_xml_string("<sentences></sentences>", Domain::Laptops),
                  MalformedXml);
  CHECK_THROWS_AS(parse_semeval_xml_string(
                      R"(<sentences><sentence id="1"><text>Hi.</text>
                         <aspectTerms><aspectTerm term="x" polarity="positive" from="90" to="95"/></aspectTerms>
                         </sentence></sentences>)",
                      Domain::Laptops),
                  OffsetOutOfRange);
  CHECK_THROWS_AS(parse_semeval_xml_string(
                      R"(<sentences><sentence id="1"><text>Hi.</text>
                         <aspectTerms><aspectTerm term="x" polarity="positive" from="0"/></aspectTerms>
                         </sentence></sentences>)",
                      Domain::Laptops),
                  MalformedXml);
}

TEST_CASE("semeval normalized sentences support dedup matching") {
  const auto sentences = semeval_normalized_sentences(kDataDir + "/semeval_fixture.xml");
  CHECK(sentences.count(normalize_sentence("The keyboard is GREAT.")) == 1);
  CHECK(sentences.count(normalize_sentence("It's the best pizza-place in town!")) == 1);
}
