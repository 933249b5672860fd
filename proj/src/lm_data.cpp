#include "lm_data.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "rng.hpp"

namespace atsclab {

std::vector<ChunkedDoc> chunk_documents(const std::vector<ReviewDoc>& docs, int budget_tokens) {
  std::vector<ChunkedDoc> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    ChunkedDoc cd;
    cd.doc_id = d.doc_id;
    SentenceChunk cur;
    cur.n_sentences = 0;
    for (const auto& sent : d.sentences) {
      if (cur.n_sentences > 0 &&
          static_cast<int>(cur.tokens.size() + sent.size()) > budget_tokens) {
        cd.chunks.push_back(std::move(cur));
        cur = SentenceChunk{};
        cur.n_sentences = 0;
      }
      cur.tokens.insert(cur.tokens.end(), sent.begin(), sent.end());
      cur.n_sentences += 1;
    }
    if (cur.n_sentences > 0) cd.chunks.push_back(std::move(cur));
    out.push_back(std::move(cd));
  }
  return out;
}

std::vector<ChunkedDoc> to_single_sentence_chunks(const std::vector<ReviewDoc>& docs) {
  std::vector<ChunkedDoc> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    ChunkedDoc cd;
    cd.doc_id = d.doc_id;
    for (const auto& sent : d.sentences) {
      SentenceChunk c;
      c.tokens = sent;
      c.n_sentences = 1;
      cd.chunks.push_back(std::move(c));
    }
    out.push_back(std::move(cd));
  }
  return out;
}

std::vector<NspPair> make_nsp_pairs(const std::vector<ChunkedDoc>& docs, uint64_t seed) {
  // flat index of all chunks for negative sampling
  std::vector<std::pair<size_t, size_t>> flat;  // (doc, chunk)
  for (size_t d = 0; d < docs.size(); ++d)
    for (size_t c = 0; c < docs[d].chunks.size(); ++c) flat.emplace_back(d, c);

  Rng rng(seed);
  std::vector<NspPair> out;
  for (size_t d = 0; d < docs.size(); ++d) {
    const auto& chunks = docs[d].chunks;
    for (size_t c = 0; c + 1 < chunks.size(); ++c) {
      NspPair pair;
      pair.a = chunks[c];
      pair.a_doc = d;
      if (rng.coin()) {
        pair.b = chunks[c + 1];
        pair.b_doc = d;
        pair.is_next = true;
      } else {
        if (docs.size() < 2)
          throw InsufficientData("negative NSP pair requested but corpus has a single document");
        std::pair<size_t, size_t> pick;
        do {
          pick = flat[rng.below(flat.size())];
        } while (pick.first == d);
        pair.b = docs[pick.first].chunks[pick.second];
        pair.b_doc = pick.first;
        pair.is_next = false;
      }
      out.push_back(std::move(pair));
    }
  }
  return out;
}

void MaskingPolicy::validate() const {
  if (!(select_rate > 0.0 && select_rate <= 1.0))
    throw Error("masking select_rate must be in (0,1]");
  if (mask_frac < 0.0 || random_frac < 0.0 || keep_frac < 0.0)
    throw Error("masking action fractions must be nonnegative");
  if (std::fabs(mask_frac + random_frac + keep_frac - 1.0) > 1e-9)
    throw Error("masking action fractions must sum to 1");
}

std::string MaskingPolicy::to_string() const {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.6g,%.6g", select_rate, mask_frac, random_frac,
                keep_frac);
  return buf;
}

MaskingPolicy MaskingPolicy::parse(const std::string& s) {
  MaskingPolicy p;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf,%lf", &p.select_rate, &p.mask_frac, &p.random_frac,
                  &p.keep_frac) != 4)
    throw Error("bad masking policy string: " + s);
  return p;
}

MaskedPairExample encode_pair(const NspPair& pair, const Vocab& vocab, int max_len) {
  if (max_len < 5) throw DegenerateSequence("max_len must allow [CLS] a [SEP] b [SEP]");
  size_t len_a = pair.a.tokens.size();
  size_t len_b = pair.b.tokens.size();
  if (len_a == 0 || len_b == 0) throw DegenerateSequence("empty NSP segment");
  const size_t budget = static_cast<size_t>(max_len) - 3;
  if (len_a + len_b > budget) {
    // truncate from the end of B first, then A
    const size_t keep_b = len_a >= budget ? 1 : std::min(len_b, budget - len_a);
    len_b = std::max<size_t>(1, keep_b);
    if (len_a + len_b > budget) len_a = budget - len_b;
    if (len_a == 0 || len_b == 0) throw DegenerateSequence("segment emptied by truncation");
  }
  MaskedPairExample ex;
  ex.is_next = pair.is_next;
  ex.n_sentences = pair.a.n_sentences + pair.b.n_sentences;
  ex.input_ids.reserve(max_len);
  ex.segment_ids.reserve(max_len);
  ex.input_ids.push_back(Vocab::kCls);
  ex.segment_ids.push_back(0);
  for (size_t i = 0; i < len_a; ++i) {
    ex.input_ids.push_back(vocab.id(pair.a.tokens[i]));
    ex.segment_ids.push_back(0);
  }
  ex.input_ids.push_back(Vocab::kSep);
  ex.segment_ids.push_back(0);
  for (size_t i = 0; i < len_b; ++i) {
    ex.input_ids.push_back(vocab.id(pair.b.tokens[i]));
    ex.segment_ids.push_back(1);
  }
  ex.input_ids.push_back(Vocab::kSep);
  ex.segment_ids.push_back(1);
  const int last_seg = ex.segment_ids.back();
  while (static_cast<int>(ex.input_ids.size()) < max_len) {
    ex.input_ids.push_back(Vocab::kPad);
    ex.segment_ids.push_back(last_seg);
  }
  return ex;
}

std::vector<MaskedPairExample> pack_and_encode(const std::vector<NspPair>& pairs,
                                               const Vocab& vocab, int max_len) {
  std::vector<MaskedPairExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(encode_pair(p, vocab, max_len));
  return out;
}

MaskStats apply_mlm_mask(MaskedPairExample& example, const MaskingPolicy& policy,
                         const Vocab& vocab, uint64_t seed) {
  Rng rng(seed);
  MaskStats stats;
  example.mlm_positions.clear();
  example.mlm_labels.clear();
  const int n_nonspecial = vocab.size() - Vocab::kNumSpecials;
  for (size_t pos = 0; pos < example.input_ids.size(); ++pos) {
    const int id = example.input_ids[pos];
    if (id == Vocab::kCls || id == Vocab::kSep || id == Vocab::kPad) continue;
    ++stats.maskable;
    if (rng.uniform() >= policy.select_rate) continue;
    ++stats.selected;
    example.mlm_positions.push_back(static_cast<int>(pos));
    example.mlm_labels.push_back(id);
    const double action = rng.uniform();
    if (action < policy.mask_frac) {
      example.input_ids[pos] = Vocab::kMask;
      ++stats.masked;
    } else if (action < policy.mask_frac + policy.random_frac && n_nonspecial > 0) {
      example.input_ids[pos] =
          Vocab::kNumSpecials + static_cast<int>(rng.below(static_cast<uint64_t>(n_nonspecial)));
      ++stats.randomized;
    } else {
      ++stats.kept;
    }
  }
  return stats;
}

std::vector<int> reconstruct_original_ids(const MaskedPairExample& example) {
  std::vector<int> ids = example.input_ids;
  for (size_t i = 0; i < example.mlm_positions.size(); ++i)
    ids[example.mlm_positions[i]] = example.mlm_labels[i];
  return ids;
}

namespace {

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t get_u32(const char* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

void write_shard(const std::string& path, const Shard& shard) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write shard: " + path);
  char head[256];
  std::snprintf(head, sizeof(head),
                "atsclab-shard v1\nvocab_hash=%016llx\nmax_len=%d\npolicy=%s\nseed=%llu\ncount=%zu\n\n",
                static_cast<unsigned long long>(shard.header.vocab_hash), shard.header.max_len,
                shard.header.policy.to_string().c_str(),
                static_cast<unsigned long long>(shard.header.seed), shard.examples.size());
  out << head;
  for (const auto& ex : shard.examples) {
    std::string rec;
    put_u32(rec, static_cast<uint32_t>(ex.input_ids.size()));
    for (const int v : ex.input_ids) put_u32(rec, static_cast<uint32_t>(v));
    for (const int v : ex.segment_ids) put_u32(rec, static_cast<uint32_t>(v));
    put_u32(rec, static_cast<uint32_t>(ex.mlm_positions.size()));
    for (const int v : ex.mlm_positions) put_u32(rec, static_cast<uint32_t>(v));
    for (const int v : ex.mlm_labels) put_u32(rec, static_cast<uint32_t>(v));
    rec.push_back(ex.is_next ? 1 : 0);
    put_u32(rec, static_cast<uint32_t>(ex.n_sentences));
    std::string framed;
    put_u32(framed, static_cast<uint32_t>(rec.size()));
    out << framed << rec;
  }
}

Shard read_shard(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("shard file: " + path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Shard shard;
  const size_t header_end = content.find("\n\n");
  if (header_end == std::string::npos || content.rfind("atsclab-shard v1\n", 0) != 0)
    throw CorruptShard("bad header in " + path);
  {
    const std::string header = content.substr(0, header_end + 1);
    unsigned long long vh = 0, sd = 0;
    size_t count = 0;
    char policy[64] = {0};
    if (std::sscanf(header.c_str(),
                    "atsclab-shard v1\nvocab_hash=%llx\nmax_len=%d\npolicy=%63[^\n]\nseed=%llu\ncount=%zu",
                    &vh, &shard.header.max_len, policy, &sd, &count) != 5)
      throw CorruptShard("unparsable header in " + path);
    shard.header.vocab_hash = vh;
    shard.header.seed = sd;
    shard.header.count = count;
    shard.header.policy = MaskingPolicy::parse(policy);
  }
  size_t p = header_end + 2;
  while (p < content.size()) {
    if (p + 4 > content.size()) throw CorruptShard("truncated record frame in " + path);
    const uint32_t rec_len = get_u32(content.data() + p);
    p += 4;
    if (p + rec_len > content.size()) throw CorruptShard("truncated record in " + path);
    const char* r = content.data() + p;
    size_t q = 0;
    auto need = [&](size_t n) {
      if (q + n > rec_len) throw CorruptShard("record underflow in " + path);
    };
    MaskedPairExample ex;
    need(4);
    const uint32_t n_ids = get_u32(r + q);
    q += 4;
    need(static_cast<size_t>(n_ids) * 8);
    ex.input_ids.resize(n_ids);
    ex.segment_ids.resize(n_ids);
    for (uint32_t i = 0; i < n_ids; ++i, q += 4) ex.input_ids[i] = static_cast<int>(get_u32(r + q));
    for (uint32_t i = 0; i < n_ids; ++i, q += 4) ex.segment_ids[i] = static_cast<int>(get_u32(r + q));
    need(4);
    const uint32_t n_mask = get_u32(r + q);
    q += 4;
    need(static_cast<size_t>(n_mask) * 8 + 5);
    ex.mlm_positions.resize(n_mask);
    ex.mlm_labels.resize(n_mask);
    for (uint32_t i = 0; i < n_mask; ++i, q += 4) ex.mlm_positions[i] = static_cast<int>(get_u32(r + q));
    for (uint32_t i = 0; i < n_mask; ++i, q += 4) ex.mlm_labels[i] = static_cast<int>(get_u32(r + q));
    ex.is_next = r[q++] != 0;
    ex.n_sentences = static_cast<int>(get_u32(r + q));
    q += 4;
    if (q != rec_len) throw CorruptShard("record overflow in " + path);
    shard.examples.push_back(std::move(ex));
    p += rec_len;
  }
  if (shard.examples.size() != shard.header.count)
    throw CorruptShard("record count mismatch in " + path);
  return shard;
}

void write_shard_stats(const std::string& path, const ShardStats& stats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write shard stats: " + path);
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "pairs=%zu\nis_next_true=%zu\nsentences=%lld\nmaskable=%lld\nselected=%lld\n"
                "masked=%lld\nrandomized=%lld\nkept=%lld\n",
                stats.pairs, stats.is_next_true, stats.sentences, stats.mask.maskable,
                stats.mask.selected, stats.mask.masked, stats.mask.randomized, stats.mask.kept);
  out << buf;
}

std::vector<MaskedPairExample> build_lm_examples(const std::vector<ReviewDoc>& docs,
                                                 const Vocab& vocab,
                                                 const MaskingPolicy& policy, int max_len,
                                                 uint64_t seed, ShardStats* stats) {
  policy.validate();
  const int budget = (max_len - 3) / 2;
  const auto chunked = chunk_documents(docs, budget);
  const auto pairs = make_nsp_pairs(chunked, derive_seed(seed, "nsp"));
  auto examples = pack_and_encode(pairs, vocab, max_len);
  const uint64_t mask_seed = derive_seed(seed, "mask");
  ShardStats local;
  for (size_t i = 0; i < examples.size(); ++i) {
    const MaskStats ms = apply_mlm_mask(examples[i], policy, vocab, derive_seed(mask_seed, "ex", i));
    local.mask.add(ms);
    local.sentences += examples[i].n_sentences;
    if (examples[i].is_next) ++local.is_next_true;
  }
  local.pairs = examples.size();
  if (stats) *stats = local;
  return examples;
}

}  // namespace atsclab
