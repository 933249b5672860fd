// atsclab - batch front end for corpus preparation, language-model
// finetuning, aspect-target sentiment training, matrix evaluation,
// input-reduction explanations and report rendering.

#include <CLI11.hpp>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "checkpoint.hpp"
#include "interpret.hpp"
#include "lm_data.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "semeval.hpp"
#include "synth.hpp"
#include "text.hpp"
#include "train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace atsclab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_input(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("input path does not exist: " + path);
}

// completed run dirs are never overwritten without --force
void claim_run_dir(const std::string& out, bool force) {
  const fs::path done = fs::path(out) / "summary.txt";
  if (fs::exists(done) && !force)
    throw UsageError("run directory already completed: " + out + " (use --force to overwrite)");
  fs::create_directories(out);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

void echo_config(const std::string& out, CLI::App* cmd, uint64_t seed) {
  std::ostringstream ss;
  ss << "# atsclab resolved config, seed=" << seed << "\n";
  ss << cmd->config_to_str(true, false);
  write_file(fs::path(out) / "config.txt", ss.str());
}

std::vector<ReviewDoc> read_reviews_jsonl(const std::string& path, Domain domain) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("input path does not exist: " + path);
  std::vector<ReviewDoc> docs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": bad json record: " + e.what());
    }
    if (!rec.contains("text") || !rec["text"].is_string())
      throw Error(path + ":" + std::to_string(line_no) + ": record has no string `text` field");
    ReviewDoc doc;
    doc.domain = domain;
    doc.doc_id = rec.contains("id") && rec["id"].is_string()
                     ? rec["id"].get<std::string>()
                     : "line-" + std::to_string(line_no);
    for (const auto& sentence : split_sentences(rec["text"].get<std::string>()))
      doc.sentences.push_back(tokenize_strings(sentence));
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<uint64_t> seeds;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) seeds.push_back(std::stoull(item));
  if (seeds.empty()) throw UsageError("empty seed list");
  return seeds;
}

std::vector<long long> parse_count_list(const std::string& csv) {
  std::vector<long long> counts;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) counts.push_back(std::stoll(item));
  return counts;
}

// ---------------------------------------------------------------- prepare

struct PrepareArgs {
  std::string input, out, domain = "laptops", vocab_path;
  std::vector<std::string> dedup_xml;
  long long sentences = 0;  // 0 = keep everything
  int vocab_size = 8192;
  int max_len = 256;
  int shards = 1;
  int workers = 1;
  std::string policy = "0.15,0.8,0.1,0.1";
  uint64_t seed = 1;
  bool force = false;
};

int cmd_prepare_corpus(const PrepareArgs& args, CLI::App* cmd) {
  require_input(args.input);
  for (const auto& x : args.dedup_xml) require_input(x);
  claim_run_dir(args.out, args.force);
  echo_config(args.out, cmd, args.seed);
  const Domain domain = domain_from_string(args.domain);
  const MaskingPolicy policy = MaskingPolicy::parse(args.policy);
  policy.validate();

  auto docs = read_reviews_jsonl(args.input, domain);
  const size_t docs_in = docs.size();
  size_t sentences_in = 0;
  for (const auto& d : docs) sentences_in += d.sentence_count();

  docs = filter_short_reviews(docs);
  const size_t dropped_short = docs_in - docs.size();

  size_t dedup_removed = 0;
  if (!args.dedup_xml.empty()) {
    std::set<std::string> eval_sentences;
    for (const auto& path : args.dedup_xml) {
      const auto s = semeval_normalized_sentences(path);
      eval_sentences.insert(s.begin(), s.end());
    }
    const size_t before = docs.size();
    docs = dedup_against_eval(docs, eval_sentences);
    dedup_removed = before - docs.size();
  }

  if (args.sentences > 0)
    docs = sample_sentences(docs, static_cast<size_t>(args.sentences),
                            derive_seed(args.seed, "sample"));
  size_t sentences_kept = 0;
  for (const auto& d : docs) sentences_kept += d.sentence_count();

  Vocab vocab;
  if (!args.vocab_path.empty()) {
    require_input(args.vocab_path);
    vocab = Vocab::load(args.vocab_path);
  } else {
    VocabBuilder vb;
    for (const auto& d : docs)
      for (const auto& s : d.sentences) vb.add(s);
    vocab = vb.build(args.vocab_size);
  }
  vocab.save((fs::path(args.out) / "vocab.txt").string());

  // shard assignment by doc_id hash; per-shard seed = seed XOR shard index
  std::vector<std::vector<ReviewDoc>> shard_docs(args.shards);
  for (auto& d : docs) shard_docs[fnv1a(d.doc_id) % args.shards].push_back(std::move(d));

  std::vector<ShardStats> stats(args.shards);
  std::vector<std::string> failures(args.shards);
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int s = next.fetch_add(1);
      if (s >= args.shards) return;
      try {
        Shard shard;
        shard.header.vocab_hash = vocab.content_hash();
        shard.header.max_len = args.max_len;
        shard.header.policy = policy;
        shard.header.seed = args.seed ^ static_cast<uint64_t>(s);
        shard.examples = build_lm_examples(shard_docs[s], vocab, policy, args.max_len,
                                           shard.header.seed, &stats[s]);
        shard.header.count = shard.examples.size();
        char name[64];
        std::snprintf(name, sizeof(name), "shard_%03d.bin", s);
        write_shard((fs::path(args.out) / name).string(), shard);
        write_shard_stats((fs::path(args.out) / (std::string(name) + ".stats")).string(), stats[s]);
      } catch (const std::exception& e) {
        failures[s] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::max(1, std::min(args.workers, args.shards));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& f : failures)
    if (!f.empty()) throw Error("shard generation failed: " + f);

  ShardStats total;
  for (const auto& s : stats) {
    total.pairs += s.pairs;
    total.is_next_true += s.is_next_true;
    total.sentences += s.sentences;
    total.mask.add(s.mask);
  }

  json manifest;
  manifest["seed"] = args.seed;
  manifest["domain"] = to_string(domain);
  manifest["docs_in"] = docs_in;
  manifest["sentences_in"] = sentences_in;
  manifest["dropped_short"] = dropped_short;
  manifest["dedup_removed"] = dedup_removed;
  manifest["docs_kept"] = docs.size();
  manifest["sentences_kept"] = sentences_kept;
  manifest["pairs"] = total.pairs;
  manifest["is_next_true"] = total.is_next_true;
  manifest["packed_sentences"] = total.sentences;
  manifest["mask_maskable"] = total.mask.maskable;
  manifest["mask_selected"] = total.mask.selected;
  manifest["vocab_size"] = vocab.size();
  manifest["vocab_hash"] = vocab.content_hash();
  manifest["max_len"] = args.max_len;
  manifest["policy"] = policy.to_string();
  manifest["shards"] = args.shards;
  write_file(fs::path(args.out) / "manifest.json", manifest.dump(2) + "\n");
  write_file(fs::path(args.out) / "summary.txt",
             "prepare-corpus ok, seed=" + std::to_string(args.seed) + ", pairs=" +
                 std::to_string(total.pairs) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- finetune

struct FinetuneArgs {
  std::string corpus, out, init_ckpt, snapshots;
  int layers = 2, hidden = 64, heads = 2, ff = 128;
  int epochs = 3, batch_size = 32;
  long long max_sentences = 0;
  double lr = 1e-3;
  uint64_t seed = 1;
  bool force = false;
};

Shard read_corpus_shards(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("shard_", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".bin")
      files.push_back(entry.path());
  }
  if (files.empty()) throw MissingArtifact("no shard_*.bin files in " + dir);
  std::sort(files.begin(), files.end());
  Shard merged = read_shard(files[0].string());
  for (size_t i = 1; i < files.size(); ++i) {
    Shard next = read_shard(files[i].string());
    if (next.header.vocab_hash != merged.header.vocab_hash ||
        next.header.max_len != merged.header.max_len)
      throw VocabMismatch("shards in " + dir + " disagree on vocab or max_len");
    merged.examples.insert(merged.examples.end(),
                           std::make_move_iterator(next.examples.begin()),
                           std::make_move_iterator(next.examples.end()));
  }
  merged.header.count = merged.examples.size();
  return merged;
}

int cmd_lm_finetune(const FinetuneArgs& args, CLI::App* cmd) {
  require_input(args.corpus);
  claim_run_dir(args.out, args.force);
  echo_config(args.out, cmd, args.seed);
  const Vocab vocab = Vocab::load((fs::path(args.corpus) / "vocab.txt").string());
  const Shard shard = read_corpus_shards(args.corpus);

  EncoderModel model;
  if (!args.init_ckpt.empty()) {
    require_input(args.init_ckpt);
    Checkpoint ckpt = load_checkpoint(args.init_ckpt);
    if (ckpt.vocab_hash && ckpt.vocab_hash != vocab.content_hash())
      throw VocabMismatch("initial checkpoint was trained with a different vocabulary");
    model = std::move(ckpt.model);
  } else {
    EncoderConfig cfg;
    cfg.num_layers = args.layers;
    cfg.hidden_dim = args.hidden;
    cfg.num_heads = args.heads;
    cfg.ff_dim = args.ff;
    cfg.vocab_size = vocab.size();
    cfg.max_len = shard.header.max_len;
    model = init_model(cfg, derive_seed(args.seed, "init"));
  }

  FinetuneRunSpec spec;
  spec.epochs = args.epochs;
  spec.batch_size = args.batch_size;
  spec.lr = args.lr;
  spec.max_sentences = args.max_sentences;
  spec.seed = derive_seed(args.seed, "lm");
  spec.snapshot_schedule = parse_count_list(args.snapshots);

  const FinetuneResult result = lm_finetune(
      model, spec, shard, vocab, [&](long long sentences, const EncoderModel& m) {
        Checkpoint ckpt;
        ckpt.model = m;
        ckpt.vocab_hash = vocab.content_hash();
        ckpt.seed = args.seed;
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_%012lld.ckpt", sentences);
        save_checkpoint((fs::path(args.out) / name).string(), ckpt);
      });

  Checkpoint final_ckpt;
  final_ckpt.model = model;
  final_ckpt.vocab_hash = vocab.content_hash();
  final_ckpt.seed = args.seed;
  save_checkpoint((fs::path(args.out) / "final.ckpt").string(), final_ckpt);
  result.log.save((fs::path(args.out) / "metrics.log").string(), args.seed);
  char summary[256];
  std::snprintf(summary, sizeof(summary),
                "lm-finetune ok, seed=%llu, sentences_seen=%lld, first_epoch_loss=%.6f, "
                "last_epoch_loss=%.6f\n",
                static_cast<unsigned long long>(args.seed), result.sentences_seen,
                result.first_epoch_mean_loss, result.last_epoch_mean_loss);
  write_file(fs::path(args.out) / "summary.txt", summary);
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string train_laptops, train_restaurants, out, init_ckpt, vocab_path;
  int epochs = 7, batch_size = 32;
  double lr = 3e-5, val_fraction = 0.1;
  uint64_t seed = 1;
  bool force = false;
};

AtscDataset load_train_dataset(const TrainArgs& args) {
  AtscDataset ds;
  ds.split = Split::Train;
  if (!args.train_laptops.empty()) {
    require_input(args.train_laptops);
    const auto data = parse_semeval_xml(args.train_laptops, Domain::Laptops);
    ds.examples.insert(ds.examples.end(), data.examples.begin(), data.examples.end());
    ds.domain = Domain::Laptops;
  }
  if (!args.train_restaurants.empty()) {
    require_input(args.train_restaurants);
    const auto data = parse_semeval_xml(args.train_restaurants, Domain::Restaurants);
    ds.examples.insert(ds.examples.end(), data.examples.begin(), data.examples.end());
    ds.domain = args.train_laptops.empty() ? Domain::Restaurants : Domain::Joint;
  }
  if (ds.examples.empty()) throw UsageError("no training data given");
  return ds;
}

int cmd_train_atsc(const TrainArgs& args, CLI::App* cmd) {
  claim_run_dir(args.out, args.force);
  echo_config(args.out, cmd, args.seed);
  require_input(args.init_ckpt);
  require_input(args.vocab_path);
  const Vocab vocab = Vocab::load(args.vocab_path);
  Checkpoint ckpt = load_checkpoint(args.init_ckpt);
  if (ckpt.vocab_hash && ckpt.vocab_hash != vocab.content_hash())
    throw VocabMismatch("checkpoint was trained with a different vocabulary");
  EncoderModel model = std::move(ckpt.model);

  const AtscDataset dataset = load_train_dataset(args);
  AtscRunSpec spec;
  spec.d_train = dataset.domain;
  spec.epochs = args.epochs;
  spec.batch_size = args.batch_size;
  spec.lr = args.lr;
  spec.val_fraction = args.val_fraction;
  spec.seed = derive_seed(args.seed, "atsc");

  const AtscTrainResult result = train_atsc(model, spec, dataset, vocab);

  Checkpoint out_ckpt;
  out_ckpt.model = model;
  out_ckpt.vocab_hash = vocab.content_hash();
  out_ckpt.seed = args.seed;
  save_checkpoint((fs::path(args.out) / "final.ckpt").string(), out_ckpt);
  result.log.save((fs::path(args.out) / "metrics.log").string(), args.seed);
  std::ostringstream summary;
  summary << "train-atsc ok, seed=" << args.seed << ", train_domain="
          << to_string(dataset.domain) << ", examples=" << dataset.examples.size() << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "final_train_accuracy=%.6f\n", result.train_accuracy);
  summary << buf;
  for (size_t e = 0; e < result.val_accuracy.size(); ++e) {
    if (std::isnan(result.val_accuracy[e]))
      std::snprintf(buf, sizeof(buf), "epoch_%zu_val_accuracy=-\n", e + 1);
    else
      std::snprintf(buf, sizeof(buf), "epoch_%zu_val_accuracy=%.6f\n", e + 1,
                    result.val_accuracy[e]);
    summary << buf;
  }
  write_file(fs::path(args.out) / "summary.txt", summary.str());
  return kExitOk;
}

// ---------------------------------------------------------------- matrix

struct MatrixArgs {
  std::string test_laptops, test_restaurants, vocab_path, manifest, out;
  std::string curve_manifest, curve_train_laptops, curve_train_restaurants;
  std::string stub_seeds = "1";
  bool stub = false;
  int workers = 1;
  int curve_epochs = 7;
  double curve_lr = 3e-5;
  int curve_batch = 32;
  uint64_t seed = 1;
  bool force = false;
};

struct ManifestRow {
  Domain d_lm, d_train;
  uint64_t seed;
  std::string checkpoint;
};

std::vector<ManifestRow> read_matrix_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("input path does not exist: " + path);
  std::vector<ManifestRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (first && line.rfind("d_lm", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    std::istringstream ls(line);
    std::string d_lm, d_train, seed, ckpt;
    if (!std::getline(ls, d_lm, '\t') || !std::getline(ls, d_train, '\t') ||
        !std::getline(ls, seed, '\t') || !std::getline(ls, ckpt, '\t'))
      throw Error("bad manifest row: " + line);
    rows.push_back({domain_from_string(d_lm), domain_from_string(d_train), std::stoull(seed),
                    ckpt});
  }
  if (rows.empty()) throw Error("empty matrix manifest: " + path);
  return rows;
}

int cmd_eval_matrix(const MatrixArgs& args, CLI::App* cmd) {
  claim_run_dir(args.out, args.force);
  echo_config(args.out, cmd, args.seed);
  require_input(args.test_laptops);
  require_input(args.test_restaurants);

  std::vector<AtscDataset> tests(2);
  {
    const auto lap = parse_semeval_xml(args.test_laptops, Domain::Laptops);
    tests[0].examples = lap.examples;
    tests[0].domain = Domain::Laptops;
    tests[0].split = Split::Test;
    const auto rest = parse_semeval_xml(args.test_restaurants, Domain::Restaurants);
    tests[1].examples = rest.examples;
    tests[1].domain = Domain::Restaurants;
    tests[1].split = Split::Test;
  }

  // learning-curve mode
  if (!args.curve_manifest.empty()) {
    require_input(args.vocab_path);
    const Vocab vocab = Vocab::load(args.vocab_path);
    std::ifstream in(args.curve_manifest, std::ios::binary);
    if (!in) throw UsageError("input path does not exist: " + args.curve_manifest);
    // rows: label \t sentences_seen \t seed \t checkpoint
    struct CurveRow {
      std::string label;
      long long sentences;
      uint64_t seed;
      std::string checkpoint;
    };
    std::vector<CurveRow> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("series", 0) == 0) continue;
      std::istringstream ls(line);
      CurveRow row;
      std::string sentences, seed;
      if (!std::getline(ls, row.label, '\t') || !std::getline(ls, sentences, '\t') ||
          !std::getline(ls, seed, '\t') || !std::getline(ls, row.checkpoint, '\t'))
        throw Error("bad curve manifest row: " + line);
      row.sentences = std::stoll(sentences);
      row.seed = std::stoull(seed);
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("empty curve manifest");

    TrainArgs train_args;
    train_args.train_laptops = args.curve_train_laptops;
    train_args.train_restaurants = args.curve_train_restaurants;
    const AtscDataset train_set = load_train_dataset(train_args);

    std::map<std::string, std::map<long long, std::map<uint64_t, std::string>>> by_series;
    for (const auto& row : rows) by_series[row.label][row.sentences][row.seed] = row.checkpoint;
    std::vector<CurveSeries> series;
    for (const auto& [label, snapshots] : by_series) {
      std::vector<long long> counts;
      std::vector<uint64_t> seeds;
      for (const auto& [count, seed_map] : snapshots) {
        counts.push_back(count);
        if (seeds.empty())
          for (const auto& [s, _] : seed_map) seeds.push_back(s);
      }
      const Domain test_domain = label == "laptops" ? Domain::Laptops : Domain::Restaurants;
      const AtscDataset& test = test_domain == Domain::Laptops ? tests[0] : tests[1];
      std::vector<Polarity> golds;
      for (const auto& ex : test.examples) golds.push_back(ex.label);
      const SnapshotEval eval = [&](long long sentences, uint64_t seed) {
        const auto it = snapshots.at(sentences).find(seed);
        if (it == snapshots.at(sentences).end())
          throw MissingArtifact("no checkpoint for snapshot " + std::to_string(sentences) +
                                " seed " + std::to_string(seed));
        require_input(it->second);
        Checkpoint ckpt = load_checkpoint(it->second);
        EncoderModel model = std::move(ckpt.model);
        AtscRunSpec spec;
        spec.epochs = args.curve_epochs;
        spec.batch_size = args.curve_batch;
        spec.lr = args.curve_lr;
        spec.val_fraction = 0.0;
        spec.seed = derive_seed(seed, "curve-atsc");
        train_atsc(model, spec, train_set, vocab);
        return accuracy(predict_dataset(model, test, vocab), golds);
      };
      series.push_back(learning_curve(label, counts, seeds, eval));
    }
    const std::string tsv = curve_tsv(series);
    write_file(fs::path(args.out) / "curve.tsv", tsv);
    write_file(fs::path(args.out) / "curve.svg", curve_svg(series, args.seed));
    write_file(fs::path(args.out) / "summary.txt",
               "eval-matrix curve ok, seed=" + std::to_string(args.seed) + "\n");
    return kExitOk;
  }

  std::vector<ScenarioResult> results;
  if (args.stub) {
    // deterministic fixed-prediction stub, for plumbing and smoke tests
    const std::vector<uint64_t> seeds = parse_seed_list(args.stub_seeds);
    const CellPredictor stub = [](const ScenarioSpec& spec, uint64_t seed,
                                  const AtscDataset& test) {
      std::vector<Polarity> preds;
      const uint64_t salt = fnv1a(to_string(spec.d_lm) + to_string(spec.d_train)) ^ seed;
      for (size_t i = 0; i < test.examples.size(); ++i)
        preds.push_back(static_cast<Polarity>((salt + i) % 3));
      return preds;
    };
    results = run_matrix(stub, tests, seeds);
  } else {
    if (args.manifest.empty()) throw UsageError("eval-matrix needs --manifest or --stub");
    require_input(args.vocab_path);
    const Vocab vocab = Vocab::load(args.vocab_path);
    const auto rows = read_matrix_manifest(args.manifest);
    std::map<std::pair<int, uint64_t>, std::string> cell_ckpt;  // (lm*3+train, seed)
    std::vector<uint64_t> seeds;
    for (const auto& row : rows) {
      const int key = static_cast<int>(row.d_lm) * 3 + static_cast<int>(row.d_train);
      cell_ckpt[{key, row.seed}] = row.checkpoint;
      if (std::find(seeds.begin(), seeds.end(), row.seed) == seeds.end())
        seeds.push_back(row.seed);
    }
    // prediction cache computed up front so rows can be evaluated in parallel
    std::map<std::pair<int, uint64_t>, std::array<std::vector<Polarity>, 2>> cache;
    std::vector<std::pair<int, uint64_t>> keys;
    for (const auto& [key, _] : cell_ckpt) keys.push_back(key);
    std::vector<std::string> failures(keys.size());
    std::atomic<size_t> next{0};
    std::mutex cache_mutex;
    auto worker = [&]() {
      while (true) {
        const size_t i = next.fetch_add(1);
        if (i >= keys.size()) return;
        try {
          require_input(cell_ckpt[keys[i]]);
          Checkpoint ckpt = load_checkpoint(cell_ckpt[keys[i]]);
          std::array<std::vector<Polarity>, 2> preds;
          for (int t = 0; t < 2; ++t)
            preds[t] = predict_dataset(ckpt.model, tests[t], vocab);
          const std::lock_guard<std::mutex> lock(cache_mutex);
          cache[keys[i]] = std::move(preds);
        } catch (const std::exception& e) {
          failures[i] = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::max(1, args.workers); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (const auto& f : failures)
      if (!f.empty()) throw MissingArtifact("matrix cell failed: " + f);

    const CellPredictor predict = [&](const ScenarioSpec& spec, uint64_t seed,
                                      const AtscDataset& test) {
      const int key = static_cast<int>(spec.d_lm) * 3 + static_cast<int>(spec.d_train);
      const auto it = cache.find({key, seed});
      if (it == cache.end())
        throw MissingArtifact("no checkpoint for lm=" + to_string(spec.d_lm) +
                              " train=" + to_string(spec.d_train) + " seed=" +
                              std::to_string(seed));
      return it->second[test.domain == Domain::Laptops ? 0 : 1];
    };
    results = run_matrix(predict, tests, seeds);
  }

  write_file(fs::path(args.out) / "matrix.tsv", matrix_tsv(results));
  write_file(fs::path(args.out) / "matrix_summary.tsv",
             "# seed=" + std::to_string(args.seed) + "\n" + matrix_summary_tsv(results));
  write_file(fs::path(args.out) / "table.txt", render_matrix_table(results));
  write_file(fs::path(args.out) / "summary.txt",
             "eval-matrix ok, seed=" + std::to_string(args.seed) + ", cells=" +
                 std::to_string(results.size()) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- explain

struct ExplainArgs {
  std::string checkpoint, vocab_path, sentence, target, dataset, out;
  int target_start = -1, target_len = 1;
  long long index = -1;
  uint64_t seed = 1;
  bool force = false;
};

int cmd_explain(const ExplainArgs& args, CLI::App* cmd) {
  claim_run_dir(args.out, args.force);
  echo_config(args.out, cmd, args.seed);
  require_input(args.checkpoint);
  require_input(args.vocab_path);
  const Vocab vocab = Vocab::load(args.vocab_path);
  Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const EncoderModel model = std::move(ckpt.model);
  const AtscPredictor predictor = model_predictor(model, vocab);

  std::vector<AtscExample> examples;
  if (!args.dataset.empty()) {
    require_input(args.dataset);
    const auto data = parse_semeval_xml(args.dataset, Domain::Laptops);
    if (args.index >= 0) {
      if (args.index >= static_cast<long long>(data.examples.size()))
        throw UsageError("--index out of range");
      examples.push_back(data.examples[args.index]);
    } else {
      examples = data.examples;
    }
  } else {
    if (args.sentence.empty()) throw UsageError("explain needs --sentence or --dataset");
    AtscExample ex;
    ex.tokens = tokenize_strings(args.sentence);
    if (ex.tokens.empty()) throw UsageError("empty sentence");
    if (args.target_start >= 0) {
      ex.target_start = args.target_start;
      ex.target_len = args.target_len;
    } else {
      if (args.target.empty()) throw UsageError("explain needs --target or --target-start");
      const auto target_tokens = tokenize_strings(args.target);
      bool found = false;
      for (size_t i = 0; i + target_tokens.size() <= ex.tokens.size() && !found; ++i) {
        bool match = true;
        for (size_t j = 0; j < target_tokens.size(); ++j)
          match &= ex.tokens[i + j] == target_tokens[j];
        if (match) {
          ex.target_start = i;
          ex.target_len = target_tokens.size();
          found = true;
        }
      }
      if (!found) throw UsageError("target phrase not found in sentence");
    }
    if (ex.target_start + ex.target_len > ex.tokens.size())
      throw UsageError("target span outside sentence");
    examples.push_back(std::move(ex));
  }

  std::ostringstream out;
  out << "# atsclab input-reduction traces, seed=" << args.seed << "\n\n";
  for (size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    const ReductionTrace trace =
        reduce_input(predictor, ex.tokens, ex.target_start, ex.target_len);
    out << "=== example " << i << " ===\n" << render_trace(trace) << "\n";
  }
  write_file(fs::path(args.out) / "traces.txt", out.str());
  write_file(fs::path(args.out) / "summary.txt",
             "explain ok, seed=" + std::to_string(args.seed) + ", traces=" +
                 std::to_string(examples.size()) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string matrix_summary, curve, out;
  bool no_reference = false;
  uint64_t seed = 1;
  bool force = false;
};

int cmd_report(const ReportArgs& args, CLI::App* cmd) {
  claim_run_dir(args.out, args.force);
  echo_config(args.out, cmd, args.seed);
  std::ostringstream report;
  if (!args.matrix_summary.empty()) {
    require_input(args.matrix_summary);
    std::ifstream in(args.matrix_summary, std::ios::binary);
    std::string line;
    std::vector<ScenarioResult> results;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (first && line.rfind("d_lm", 0) == 0) {
        first = false;
        continue;
      }
      first = false;
      std::istringstream ls(line);
      std::string d_lm, d_train, d_test, category, n_seeds, am, as, fm, fs_;
      if (!std::getline(ls, d_lm, '\t') || !std::getline(ls, d_train, '\t') ||
          !std::getline(ls, d_test, '\t') || !std::getline(ls, category, '\t') ||
          !std::getline(ls, n_seeds, '\t') || !std::getline(ls, am, '\t') ||
          !std::getline(ls, as, '\t') || !std::getline(ls, fm, '\t') ||
          !std::getline(ls, fs_, '\t'))
        throw Error("bad matrix summary row: " + line);
      ScenarioResult r;
      r.spec.d_lm = domain_from_string(d_lm);
      r.spec.d_train = domain_from_string(d_train);
      r.spec.d_test = domain_from_string(d_test);
      r.accuracy = {std::stod(am), std::stod(as)};
      r.macro_f1 = {std::stod(fm), std::stod(fs_)};
      r.runs.resize(std::stoul(n_seeds));
      results.push_back(std::move(r));
    }
    if (results.empty()) throw MissingArtifact("matrix summary has no rows");
    report << render_matrix_table(results, !args.no_reference);
  } else if (!args.no_reference) {
    report << render_reference_table();
  }
  if (!args.curve.empty()) {
    require_input(args.curve);
    std::ifstream in(args.curve, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto series = parse_curve_tsv(ss.str());
    write_file(fs::path(args.out) / "curve.svg", curve_svg(series, args.seed));
    report << "\nlearning curve: see curve.svg (" << series.size() << " series)\n";
  }
  if (report.str().empty()) throw UsageError("report needs --matrix-summary or --curve");
  write_file(fs::path(args.out) / "report.txt", report.str());
  write_file(fs::path(args.out) / "summary.txt",
             "report ok, seed=" + std::to_string(args.seed) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"atsclab: domain-adapted aspect-target sentiment classification lab"};
  app.require_subcommand(1);
  app.set_config("--config");

  PrepareArgs prep;
  CLI::App* prep_cmd = app.add_subcommand("prepare-corpus",
                                          "split, filter, dedup, sample and shard a review corpus");
  prep_cmd->add_option("--input", prep.input, "line-delimited reviews (json per line with `text`)")
      ->required();
  prep_cmd->add_option("--out", prep.out, "output run directory")->required();
  prep_cmd->add_option("--domain", prep.domain, "laptops|restaurants|joint");
  prep_cmd->add_option("--dedup-xml", prep.dedup_xml, "eval XML files to dedup against");
  prep_cmd->add_option("--sentences", prep.sentences, "sample this many sentences (0 = all)");
  prep_cmd->add_option("--vocab", prep.vocab_path, "use an existing vocab file");
  prep_cmd->add_option("--vocab-size", prep.vocab_size, "top-k vocabulary size");
  prep_cmd->add_option("--max-len", prep.max_len, "maximum sequence length");
  prep_cmd->add_option("--shards", prep.shards, "number of output shards");
  prep_cmd->add_option("--workers", prep.workers, "parallel shard workers");
  prep_cmd->add_option("--policy", prep.policy, "masking policy select,mask,random,keep");
  prep_cmd->add_option("--seed", prep.seed, "top-level run seed");
  prep_cmd->add_flag("--force", prep.force, "overwrite a completed run directory");

  FinetuneArgs ft;
  CLI::App* ft_cmd = app.add_subcommand("lm-finetune",
                                        "self-supervised finetuning on a prepared corpus");
  ft_cmd->add_option("--corpus", ft.corpus, "prepare-corpus output directory")->required();
  ft_cmd->add_option("--out", ft.out, "output run directory")->required();
  ft_cmd->add_option("--init", ft.init_ckpt, "initial checkpoint (default: fresh init)");
  ft_cmd->add_option("--layers", ft.layers, "encoder layers");
  ft_cmd->add_option("--hidden", ft.hidden, "hidden dimension");
  ft_cmd->add_option("--heads", ft.heads, "attention heads");
  ft_cmd->add_option("--ff", ft.ff, "feed-forward dimension");
  ft_cmd->add_option("--epochs", ft.epochs, "finetuning epochs");
  ft_cmd->add_option("--batch-size", ft.batch_size, "batch size");
  ft_cmd->add_option("--lr", ft.lr, "learning rate");
  ft_cmd->add_option("--max-sentences", ft.max_sentences,
                     "stop after this many sentence presentations (0 = no cap)");
  ft_cmd->add_option("--snapshots", ft.snapshots, "comma-separated cumulative sentence counts");
  ft_cmd->add_option("--seed", ft.seed, "top-level run seed");
  ft_cmd->add_flag("--force", ft.force, "overwrite a completed run directory");

  TrainArgs tr;
  CLI::App* tr_cmd = app.add_subcommand("train-atsc", "supervised aspect-target training");
  tr_cmd->add_option("--train-laptops", tr.train_laptops, "laptops train XML");
  tr_cmd->add_option("--train-restaurants", tr.train_restaurants, "restaurants train XML");
  tr_cmd->add_option("--init", tr.init_ckpt, "initial checkpoint")->required();
  tr_cmd->add_option("--vocab", tr.vocab_path, "vocab file")->required();
  tr_cmd->add_option("--out", tr.out, "output run directory")->required();
  tr_cmd->add_option("--epochs", tr.epochs, "training epochs");
  tr_cmd->add_option("--batch-size", tr.batch_size, "batch size");
  tr_cmd->add_option("--lr", tr.lr, "learning rate");
  tr_cmd->add_option("--val-fraction", tr.val_fraction, "held-out validation fraction");
  tr_cmd->add_option("--seed", tr.seed, "top-level run seed");
  tr_cmd->add_flag("--force", tr.force, "overwrite a completed run directory");

  MatrixArgs mx;
  CLI::App* mx_cmd = app.add_subcommand("eval-matrix",
                                        "evaluate the lm x train x test scenario grid");
  mx_cmd->add_option("--test-laptops", mx.test_laptops, "laptops test XML")->required();
  mx_cmd->add_option("--test-restaurants", mx.test_restaurants, "restaurants test XML")
      ->required();
  mx_cmd->add_option("--vocab", mx.vocab_path, "vocab file (manifest/curve modes)");
  mx_cmd->add_option("--manifest", mx.manifest,
                     "TSV: d_lm, d_train, seed, checkpoint (one row per trained cell)");
  mx_cmd->add_flag("--stub", mx.stub, "deterministic stub predictions (plumbing checks)");
  mx_cmd->add_option("--stub-seeds", mx.stub_seeds, "seeds for stub mode");
  mx_cmd->add_option("--workers", mx.workers, "parallel cell workers");
  mx_cmd->add_option("--curve-manifest", mx.curve_manifest,
                     "TSV: series, sentences_seen, seed, checkpoint");
  mx_cmd->add_option("--curve-train-laptops", mx.curve_train_laptops, "curve train XML");
  mx_cmd->add_option("--curve-train-restaurants", mx.curve_train_restaurants,
                     "curve train XML");
  mx_cmd->add_option("--curve-epochs", mx.curve_epochs, "curve downstream epochs");
  mx_cmd->add_option("--curve-lr", mx.curve_lr, "curve downstream learning rate");
  mx_cmd->add_option("--curve-batch", mx.curve_batch, "curve downstream batch size");
  mx_cmd->add_option("--out", mx.out, "output run directory")->required();
  mx_cmd->add_option("--seed", mx.seed, "top-level run seed");
  mx_cmd->add_flag("--force", mx.force, "overwrite a completed run directory");

  ExplainArgs ex;
  CLI::App* ex_cmd = app.add_subcommand("explain", "input-reduction traces for predictions");
  ex_cmd->add_option("--checkpoint", ex.checkpoint, "trained checkpoint")->required();
  ex_cmd->add_option("--vocab", ex.vocab_path, "vocab file")->required();
  ex_cmd->add_option("--sentence", ex.sentence, "sentence text");
  ex_cmd->add_option("--target", ex.target, "aspect-target phrase inside the sentence");
  ex_cmd->add_option("--target-start", ex.target_start, "target token start index");
  ex_cmd->add_option("--target-len", ex.target_len, "target token count");
  ex_cmd->add_option("--dataset", ex.dataset, "SemEval XML to explain");
  ex_cmd->add_option("--index", ex.index, "single example index within --dataset");
  ex_cmd->add_option("--out", ex.out, "output run directory")->required();
  ex_cmd->add_option("--seed", ex.seed, "top-level run seed");
  ex_cmd->add_flag("--force", ex.force, "overwrite a completed run directory");

  ReportArgs rp;
  CLI::App* rp_cmd = app.add_subcommand("report", "render tables and learning-curve charts");
  rp_cmd->add_option("--matrix-summary", rp.matrix_summary, "matrix_summary.tsv from eval-matrix");
  rp_cmd->add_option("--curve", rp.curve, "curve.tsv from eval-matrix");
  rp_cmd->add_flag("--no-reference", rp.no_reference, "omit published reference constants");
  rp_cmd->add_option("--out", rp.out, "output run directory")->required();
  rp_cmd->add_option("--seed", rp.seed, "top-level run seed");
  rp_cmd->add_flag("--force", rp.force, "overwrite a completed run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (prep_cmd->parsed()) return cmd_prepare_corpus(prep, prep_cmd);
    if (ft_cmd->parsed()) return cmd_lm_finetune(ft, ft_cmd);
    if (tr_cmd->parsed()) return cmd_train_atsc(tr, tr_cmd);
    if (mx_cmd->parsed()) return cmd_eval_matrix(mx, mx_cmd);
    if (ex_cmd->parsed()) return cmd_explain(ex, ex_cmd);
    if (rp_cmd->parsed()) return cmd_report(rp, rp_cmd);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
