#pragma once

#include <optional>
#include <string>

#include "model.hpp"

namespace atsclab {

// Self-describing binary container: magic + version, config header, vocab
// hash, dtype tag, named row-major tensors, optional Adam state.
struct Checkpoint {
  EncoderModel model;
  uint64_t vocab_hash = 0;
  uint64_t seed = 0;
  std::optional<AdamState> adam;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace atsclab
