#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace atsclab {

static_assert(sizeof(double) == 8, "IEEE754 binary64 expected");
static_assert(std::endian::native == std::endian::little, "little-endian platform expected");

namespace {

constexpr char kMagic[8] = {'A', 'T', 'S', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kDtypeF64 = 8;

void write_u32(std::ofstream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ofstream& out, uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw CorruptCheckpoint("truncated u32");
  return v;
}

uint64_t read_u64(std::ifstream& in) {
  uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 8)) throw CorruptCheckpoint("truncated u64");
  return v;
}

void write_tensor(std::ofstream& out, const std::string& name, const Mat& m) {
  write_u32(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(out, static_cast<uint32_t>(m.rows));
  write_u32(out, static_cast<uint32_t>(m.cols));
  out.write(reinterpret_cast<const char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(double)));
}

void read_tensor(std::ifstream& in, const std::string& expect_name, Mat& m) {
  const uint32_t name_len = read_u32(in);
  std::string name(name_len, '\0');
  if (!in.read(name.data(), name_len)) throw CorruptCheckpoint("truncated tensor name");
  if (name != expect_name)
    throw CorruptCheckpoint("tensor order mismatch: got '" + name + "', want '" + expect_name + "'");
  const uint32_t rows = read_u32(in);
  const uint32_t cols = read_u32(in);
  if (m.rows != static_cast<int>(rows) || m.cols != static_cast<int>(cols))
    throw CorruptCheckpoint("tensor shape mismatch for " + name);
  if (!in.read(reinterpret_cast<char*>(m.a.data()),
               static_cast<std::streamsize>(m.a.size() * sizeof(double))))
    throw CorruptCheckpoint("truncated tensor data for " + name);
}

void write_params(std::ofstream& out, const EncoderConfig& cfg, const EncoderParams& p) {
  const auto list = param_list(cfg, p);
  write_u32(out, static_cast<uint32_t>(list.size()));
  for (const auto& [name, mat] : list) write_tensor(out, name, *mat);
}

void read_params(std::ifstream& in, const EncoderConfig& cfg, EncoderParams& p) {
  const uint32_t n = read_u32(in);
  auto list = param_list(cfg, p);
  if (n != list.size()) throw CorruptCheckpoint("tensor count mismatch");
  for (auto& [name, mat] : list) read_tensor(in, name, *mat);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  write_u32(out, kVersion);
  write_u32(out, ckpt.adam.has_value() ? 1u : 0u);
  const EncoderConfig& c = ckpt.model.cfg;
  for (const int v : {c.num_layers, c.hidden_dim, c.num_heads, c.ff_dim, c.vocab_size, c.max_len,
                      c.num_segments})
    write_u32(out, static_cast<uint32_t>(v));
  write_u64(out, ckpt.vocab_hash);
  write_u64(out, ckpt.seed);
  out.put(static_cast<char>(kDtypeF64));
  write_params(out, c, ckpt.model.p);
  if (ckpt.adam) {
    write_u64(out, static_cast<uint64_t>(ckpt.adam->t));
    out.write(reinterpret_cast<const char*>(&ckpt.adam->lr), sizeof(double));
    write_params(out, c, ckpt.adam->m);
    write_params(out, c, ckpt.adam->v);
  }
  if (!out) throw Error("write failure on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("checkpoint file: " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw CorruptCheckpoint("bad magic in " + path);
  const uint32_t version = read_u32(in);
  if (version != kVersion)
    throw CorruptCheckpoint("unsupported version " + std::to_string(version) + " in " + path);
  const uint32_t has_adam = read_u32(in);
  Checkpoint ckpt;
  EncoderConfig& c = ckpt.model.cfg;
  c.num_layers = static_cast<int>(read_u32(in));
  c.hidden_dim = static_cast<int>(read_u32(in));
  c.num_heads = static_cast<int>(read_u32(in));
  c.ff_dim = static_cast<int>(read_u32(in));
  c.vocab_size = static_cast<int>(read_u32(in));
  c.max_len = static_cast<int>(read_u32(in));
  c.num_segments = static_cast<int>(read_u32(in));
  c.validate();
  ckpt.vocab_hash = read_u64(in);
  ckpt.seed = read_u64(in);
  const int dtype = in.get();
  if (dtype != kDtypeF64) throw CorruptCheckpoint("unsupported dtype tag in " + path);
  ckpt.model.p = zeros_like(c);
  read_params(in, c, ckpt.model.p);
  if (has_adam) {
    AdamState s;
    s.t = static_cast<int64_t>(read_u64(in));
    if (!in.read(reinterpret_cast<char*>(&s.lr), sizeof(double)))
      throw CorruptCheckpoint("truncated adam lr in " + path);
    s.m = zeros_like(c);
    s.v = zeros_like(c);
    read_params(in, c, s.m);
    read_params(in, c, s.v);
    ckpt.adam = std::move(s);
  }
  return ckpt;
}

}  // namespace atsclab
