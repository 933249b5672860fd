#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "checkpoint.hpp"
#include "synth.hpp"
#include "text.hpp"
#include "train.hpp"

namespace fs = std::filesystem;
using namespace atsclab;

namespace {

const std::string kBin = ATSCLAB_BIN;
const std::string kData = ATSCLAB_TEST_DATA;
const fs::path kTmp = fs::path(ATSCLAB_TEST_TMP) / "cli";

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run(const std::string& args) {
  const fs::path out_file = kTmp / "cli_output.txt";
  const std::string cmd = kBin + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::ostringstream ss;
  ss << in.rdbuf();
  result.output = ss.str();
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  Workspace() {
    fs::remove_all(kTmp);
    fs::create_directories(kTmp);
    SynthConfig cfg;
    cfg.lm_docs_per_domain = 40;
    cfg.train_examples_per_domain = 48;
    cfg.test_examples_per_domain = 30;
    cfg.seed = 99;
    pair = make_synth_pair(cfg);
    write_reviews_jsonl((kTmp / "reviews.jsonl").string(), pair.lm_corpus_b);
    write_semeval_xml((kTmp / "train_b.xml").string(), pair.train_b);
    write_semeval_xml((kTmp / "test_a.xml").string(), pair.test_a);
    write_semeval_xml((kTmp / "test_b.xml").string(), pair.test_b);
  }
  SynthPair pair;
};

Workspace& workspace() {
  static Workspace ws;
  return ws;
}

}  // namespace

TEST_CASE("missing input path exits with code 2 and names the path") {
  workspace();
  const CliResult r = run("prepare-corpus --input /nonexistent/reviews.jsonl --out " +
                          (kTmp / "nope").string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("/nonexistent/reviews.jsonl") != std::string::npos);
}

TEST_CASE("unknown flags are usage errors") {
  const CliResult r = run("prepare-corpus --definitely-not-a-flag 1");
  CHECK(r.exit_code == 2);
}

TEST_CASE("prepare-corpus manifest counts match an independent recount") {
  workspace();
  const CliResult r = run("prepare-corpus --input " + kData +
                          "/reviews_100.jsonl --out " + (kTmp / "prep100").string() +
                          " --domain laptops --max-len 32 --vocab-size 512 --seed 5");
  REQUIRE(r.exit_code == 0);
  const auto manifest = nlohmann::json::parse(slurp(kTmp / "prep100" / "manifest.json"));
  CHECK(manifest["docs_in"].get<size_t>() == 100);

  // independent recount over the fixture
  std::ifstream in(kData + "/reviews_100.jsonl");
  std::string line;
  size_t docs = 0, sentences = 0, short_docs = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++docs;
    const auto rec = nlohmann::json::parse(line);
    const auto sents = split_sentences(rec["text"].get<std::string>());
    sentences += sents.size();
    if (sents.size() < 2) ++short_docs;
  }
  CHECK(manifest["docs_in"].get<size_t>() == docs);
  CHECK(manifest["sentences_in"].get<size_t>() == sentences);
  CHECK(manifest["dropped_short"].get<size_t>() == short_docs);
  CHECK(manifest["docs_kept"].get<size_t>() == docs - short_docs);
  CHECK(manifest["seed"].get<uint64_t>() == 5);
  CHECK(fs::exists(kTmp / "prep100" / "vocab.txt"));
  CHECK(fs::exists(kTmp / "prep100" / "shard_000.bin"));
}

TEST_CASE("prepare-corpus dedup removes eval overlap") {
  workspace();
  // the synthetic test_b sentences appear inside lm corpus docs occasionally;
  // plant a direct overlap to make the count deterministic
  const fs::path reviews = kTmp / "planted.jsonl";
  {
    std::ofstream out(reviews);
    out << R"({"id": "clean", "text": "the gizmo was zorvy . the widget was plimmy ."})" << "\n";
    out << R"({"id": "dirty", "text": ")" << join_tokens(workspace().pair.test_b.examples[0].tokens)
        << R"( the soup was frellic ."})" << "\n";
  }
  const CliResult r = run("prepare-corpus --input " + reviews.string() + " --out " +
                          (kTmp / "prep_dedup").string() + " --domain restaurants --dedup-xml " +
                          (kTmp / "test_b.xml").string() + " --max-len 24 --seed 5");
  REQUIRE(r.exit_code == 0);
  const auto manifest = nlohmann::json::parse(slurp(kTmp / "prep_dedup" / "manifest.json"));
  CHECK(manifest["dedup_removed"].get<size_t>() == 1);
  CHECK(manifest["docs_kept"].get<size_t>() == 1);
}

TEST_CASE("pipeline: prepare, finetune, train, matrix, explain, report" * doctest::timeout(900)) {
  workspace();
  // prepare
  CliResult r = run("prepare-corpus --input " + (kTmp / "reviews.jsonl").string() + " --out " +
                    (kTmp / "prep").string() +
                    " --domain restaurants --max-len 24 --vocab-size 256 --seed 7");
  REQUIRE(r.exit_code == 0);

  // finetune (tiny)
  r = run("lm-finetune --corpus " + (kTmp / "prep").string() + " --out " + (kTmp / "lm").string() +
          " --layers 1 --hidden 32 --heads 2 --ff 64 --epochs 2 --batch-size 8 --lr 1e-3 "
          "--snapshots 0 --seed 7");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(kTmp / "lm" / "final.ckpt"));
  CHECK(fs::exists(kTmp / "lm" / "metrics.log"));
  CHECK(slurp(kTmp / "lm" / "metrics.log").find("seed=7") != std::string::npos);
  bool has_zero_snapshot = false;
  for (const auto& entry : fs::directory_iterator(kTmp / "lm"))
    if (entry.path().filename().string().rfind("snapshot_000000000000", 0) == 0)
      has_zero_snapshot = true;
  CHECK(has_zero_snapshot);

  // supervised training on the target domain
  r = run("train-atsc --train-restaurants " + (kTmp / "train_b.xml").string() + " --init " +
          (kTmp / "lm" / "final.ckpt").string() + " --vocab " +
          (kTmp / "prep" / "vocab.txt").string() + " --out " + (kTmp / "atsc").string() +
          " --epochs 2 --batch-size 8 --lr 1e-3 --seed 7");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(kTmp / "atsc" / "final.ckpt"));
  CHECK(slurp(kTmp / "atsc" / "summary.txt").find("train-atsc ok") != std::string::npos);

  // idempotency: completed run dir refuses to overwrite without --force
  r = run("train-atsc --train-restaurants " + (kTmp / "train_b.xml").string() + " --init " +
          (kTmp / "lm" / "final.ckpt").string() + " --vocab " +
          (kTmp / "prep" / "vocab.txt").string() + " --out " + (kTmp / "atsc").string() +
          " --epochs 2 --batch-size 8 --lr 1e-3 --seed 7");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("--force") != std::string::npos);
  r = run("train-atsc --train-restaurants " + (kTmp / "train_b.xml").string() + " --init " +
          (kTmp / "lm" / "final.ckpt").string() + " --vocab " +
          (kTmp / "prep" / "vocab.txt").string() + " --out " + (kTmp / "atsc").string() +
          " --epochs 2 --batch-size 8 --lr 1e-3 --seed 7 --force");
  CHECK(r.exit_code == 0);

  // matrix over a manifest (one checkpoint reused for every grid cell)
  {
    std::ofstream manifest(kTmp / "matrix_manifest.tsv");
    manifest << "d_lm\td_train\tseed\tcheckpoint\n";
    for (const char* lm : {"laptops", "restaurants", "joint"})
      for (const char* train : {"laptops", "restaurants", "joint"})
        manifest << lm << '\t' << train << "\t1\t" << (kTmp / "atsc" / "final.ckpt").string()
                 << "\n";
  }
  r = run("eval-matrix --test-laptops " + (kTmp / "test_a.xml").string() +
          " --test-restaurants " + (kTmp / "test_b.xml").string() + " --vocab " +
          (kTmp / "prep" / "vocab.txt").string() + " --manifest " +
          (kTmp / "matrix_manifest.tsv").string() + " --workers 2 --out " +
          (kTmp / "matrix").string() + " --seed 7");
  REQUIRE(r.exit_code == 0);
  {
    const std::string tsv = slurp(kTmp / "matrix" / "matrix.tsv");
    size_t rows = 0;
    for (const char c : tsv)
      if (c == '\n') ++rows;
    CHECK(rows == 19);  // header + 18 cells
    CHECK(fs::exists(kTmp / "matrix" / "table.txt"));
  }

  // explain with the trained checkpoint
  r = run("explain --checkpoint " + (kTmp / "atsc" / "final.ckpt").string() + " --vocab " +
          (kTmp / "prep" / "vocab.txt").string() +
          " --sentence \"i love their dumplings\" --target dumplings --out " +
          (kTmp / "explain").string() + " --seed 7");
  REQUIRE(r.exit_code == 0);
  const std::string trace = slurp(kTmp / "explain" / "traces.txt");
  CHECK(trace.find("sentence: i love their [dumplings]") != std::string::npos);
  CHECK(trace.find("reduced set:") != std::string::npos);
  CHECK(trace.find("flips to:") != std::string::npos);

  // report from the matrix summary plus a small curve table
  {
    std::ofstream curve(kTmp / "curve.tsv");
    curve << "series\tsentences_seen\tdelta_acc_mean\tdelta_acc_std\tn_seeds\n";
    curve << "laptops\t0\t0.000000\t0.000000\t3\n";
    curve << "laptops\t1000\t0.040000\t0.010000\t3\n";
    curve << "restaurants\t0\t0.000000\t0.000000\t3\n";
    curve << "restaurants\t1000\t0.060000\t0.012000\t3\n";
  }
  r = run("report --matrix-summary " + (kTmp / "matrix" / "matrix_summary.tsv").string() +
          " --curve " + (kTmp / "curve.tsv").string() + " --out " + (kTmp / "report").string() +
          " --seed 7");
  REQUIRE(r.exit_code == 0);
  const std::string report = slurp(kTmp / "report" / "report.txt");
  CHECK(report.find("lm=laptops") != std::string::npos);
  CHECK(report.find("published full-scale reference") != std::string::npos);
  CHECK(report.find("87.14") != std::string::npos);
  const std::string svg = slurp(kTmp / "report" / "curve.svg");
  size_t n_series = 0;
  for (size_t p = svg.find("class=\"series\""); p != std::string::npos;
       p = svg.find("class=\"series\"", p + 1))
    ++n_series;
  CHECK(n_series == 2);
}

TEST_CASE("eval-matrix stub mode emits 18 rows per seed") {
  workspace();
  const CliResult r = run("eval-matrix --test-laptops " + (kTmp / "test_a.xml").string() +
                          " --test-restaurants " + (kTmp / "test_b.xml").string() +
                          " --stub --stub-seeds 1 --out " + (kTmp / "stub_matrix").string() +
                          " --seed 3");
  REQUIRE(r.exit_code == 0);
  const std::string tsv = slurp(kTmp / "stub_matrix" / "matrix.tsv");
  size_t rows = 0;
  for (const char c : tsv)
    if (c == '\n') ++rows;
  CHECK(rows == 19);
  CHECK(tsv.rfind("d_lm\td_train\td_test\tcategory\tseed\taccuracy\tmacro_f1\n", 0) == 0);
}

TEST_CASE("explain accepts a dataset example by index") {
  workspace();
  // tiny fresh checkpoint straight from the library
  VocabBuilder vb;
  for (const auto& ex : workspace().pair.test_b.examples) vb.add(ex.tokens);
  const Vocab vocab = vb.build(256);
  const fs::path vocab_path = kTmp / "explain_vocab.txt";
  vocab.save(vocab_path.string());
  EncoderConfig cfg;
  cfg.num_layers = 1;
  cfg.hidden_dim = 32;
  cfg.num_heads = 2;
  cfg.ff_dim = 64;
  cfg.vocab_size = vocab.size();
  cfg.max_len = 32;
  Checkpoint ckpt;
  ckpt.model = init_model(cfg, 123);
  ckpt.vocab_hash = vocab.content_hash();
  ckpt.seed = 123;
  const fs::path ckpt_path = kTmp / "stub.ckpt";
  save_checkpoint(ckpt_path.string(), ckpt);

  const CliResult r = run("explain --checkpoint " + ckpt_path.string() + " --vocab " +
                          vocab_path.string() + " --dataset " + (kTmp / "test_b.xml").string() +
                          " --index 0 --out " + (kTmp / "explain_ds").string() + " --seed 3");
  REQUIRE(r.exit_code == 0);
  const std::string trace = slurp(kTmp / "explain_ds" / "traces.txt");
  CHECK(trace.find("=== example 0 ===") != std::string::npos);
  CHECK(trace.find("predicted:") != std::string::npos);
}

TEST_CASE("sharded corpus generation is byte-identical across worker counts") {
  workspace();
  for (const char* variant : {"w1", "w2"}) {
    const CliResult r = run("prepare-corpus --input " + (kTmp / "reviews.jsonl").string() +
                            " --out " + (kTmp / ("shards_" + std::string(variant))).string() +
                            " --domain restaurants --max-len 24 --vocab-size 256 --shards 4 "
                            "--workers " +
                            std::string(variant == std::string("w1") ? "1" : "2") + " --seed 23");
    REQUIRE(r.exit_code == 0);
  }
  for (int s = 0; s < 4; ++s) {
    char name[32];
    std::snprintf(name, sizeof(name), "shard_%03d.bin", s);
    const std::string a = slurp(kTmp / "shards_w1" / name);
    const std::string b = slurp(kTmp / "shards_w2" / name);
    CHECK_FALSE(a.empty());
    CHECK(a == b);
  }
  CHECK(slurp(kTmp / "shards_w1" / "manifest.json") == slurp(kTmp / "shards_w2" / "manifest.json"));
}

TEST_CASE("every run directory carries the echoed config and the seed") {
  workspace();
  for (const char* dir : {"prep", "lm", "atsc", "matrix", "explain", "report"}) {
    if (!fs::exists(kTmp / dir)) continue;
    const std::string config = slurp(kTmp / dir / "config.txt");
    CHECK(config.find("seed=") != std::string::npos);
    CHECK(fs::exists(kTmp / dir / "summary.txt"));
  }
}
