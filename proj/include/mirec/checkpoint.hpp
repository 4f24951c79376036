#pragma once

#include "mirec/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mirec::checkpoint {

/// Versioned container for everything a run needs to resume or serve:
/// the verbatim config, the vocabulary hashes the model was trained
/// against, the parameters and the full optimizer state. Binary layout is
/// little-endian; save -> load -> save round-trips byte-identically.
struct Checkpoint {
  std::string config_text;
  std::uint64_t item_vocab_hash = 0;
  std::vector<std::uint64_t> side_vocab_hashes;
  std::vector<std::uint64_t> profile_vocab_hashes;
  model::ModelParams params;
  model::TrainState state;
};

void save(const std::string& path, const Checkpoint& ckpt);
Checkpoint load(const std::string& path);

}  // namespace mirec::checkpoint
