#pragma once

#include "mirec/common.hpp"
#include "mirec/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mirec::embedding {

/// Dense embedding table. Row 0 belongs to the padding/unknown token: it is
/// all-zero at init and excluded from every gradient update.
struct EmbeddingTable {
  Matrix weights;  // (vocab_size, dim)

  std::int32_t vocab_size() const {
    return static_cast<std::int32_t>(weights.rows());
  }
  int dim() const { return static_cast<int>(weights.cols()); }

  /// Uniform init in [-1/sqrt(dim), +1/sqrt(dim)], padding row zeroed.
  static EmbeddingTable init(std::int32_t vocab_size, int dim, Rng& rng);
};

/// Shape contract for the item-side feature group: every side table shares
/// the item embedding dimension so average pooling is well-defined.
struct ItemFeatureSpec {
  int dim = 0;
  std::vector<std::int32_t> side_vocab_sizes;
};

/// Per-item side-feature indices, indexed by item index. Slot value 0 marks
/// an absent feature (excluded from pooling).
using ItemMeta = std::vector<std::vector<std::int32_t>>;

/// Pooled item embedding: arithmetic mean of the item-id row and each
/// present (non-zero-index) side-feature row.
Vector embed_item(std::int32_t item_index,
                  std::span<const std::int32_t> side_indices,
                  const EmbeddingTable& items,
                  std::span<const EmbeddingTable> side_tables);

/// Concatenation of profile-feature rows in declared feature order.
/// An empty profile yields a length-0 vector.
Vector embed_profile(std::span<const std::int32_t> profile,
                     std::span<const EmbeddingTable> profile_tables);

struct BehaviorEmbeddings {
  Matrix rows;                     // (len, d); padded rows are zero
  std::vector<std::uint8_t> mask;  // 1 = real behavior, 0 = padding
};

/// Row i is the pooled embedding of behavior i (same pooling as the label
/// item). Index 0 entries are padding: zero row, mask 0.
BehaviorEmbeddings embed_behaviors(std::span<const std::int32_t> behaviors,
                                   const EmbeddingTable& items,
                                   std::span<const EmbeddingTable> side_tables,
                                   const ItemMeta& meta);

}  // namespace mirec::embedding
