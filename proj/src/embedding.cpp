#include "mirec/embedding.hpp"

namespace mirec::embedding {

EmbeddingTable EmbeddingTable::init(std::int32_t vocab_size, int dim,
                                    Rng& rng) {
  if (vocab_size < 1 || dim < 1)
    throw UsageError("embedding table needs vocab_size >= 1 and dim >= 1");
  EmbeddingTable table;
  table.weights.resize(vocab_size, dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::int32_t r = 0; r < vocab_size; ++r)
    for (int c = 0; c < dim; ++c)
      table.weights(r, c) = (2.0 * rng.uniform() - 1.0) * scale;
  table.weights.row(0).setZero();
  return table;
}

Vector embed_item(std::int32_t item_index,
                  std::span<const std::int32_t> side_indices,
                  const EmbeddingTable& items,
                  std::span<const EmbeddingTable> side_tables) {
  if (item_index < 1 || item_index >= items.vocab_size())
    throw DataError("item index out of range: " + std::to_string(item_index));
  if (side_indices.size() > side_tables.size())
    throw DataError("more side indices than side tables");
  Vector sum = items.weights.row(item_index);
  int present = 1;
  for (std::size_t f = 0; f < side_indices.size(); ++f) {
    const std::int32_t idx = side_indices[f];
    if (idx == 0) continue;  // absent feature
    const auto& table = side_tables[f];
    if (idx < 0 || idx >= table.vocab_size())
      throw DataError("side index out of range: " + std::to_string(idx));
    sum += table.weights.row(idx).transpose();
    ++present;
  }
  return sum / static_cast<double>(present);
}

Vector embed_profile(std::span<const std::int32_t> profile,
                     std::span<const EmbeddingTable> profile_tables) {
  if (profile.size() > profile_tables.size())
    throw DataError("more profile features than profile tables");
  int total = 0;
  for (std::size_t f = 0; f < profile.size(); ++f)
    total += profile_tables[f].dim();
  Vector out(total);
  int offset = 0;
  for (std::size_t f = 0; f < profile.size(); ++f) {
    const auto& table = profile_tables[f];
    const std::int32_t idx = profile[f];
    if (idx < 0 || idx >= table.vocab_size())
      throw DataError("profile index out of range: " + std::to_string(idx));
    out.segment(offset, table.dim()) = table.weights.row(idx).transpose();
    offset += table.dim();
  }
  return out;
}

BehaviorEmbeddings embed_behaviors(std::span<const std::int32_t> behaviors,
                                   const EmbeddingTable& items,
                                   std::span<const EmbeddingTable> side_tables,
                                   const ItemMeta& meta) {
  BehaviorEmbeddings out;
  const auto len = static_cast<Eigen::Index>(behaviors.size());
  out.rows.setZero(len, items.dim());
  out.mask.assign(behaviors.size(), 0);
  std::size_t real = 0;
  for (std::size_t i = 0; i < behaviors.size(); ++i) {
    const std::int32_t idx = behaviors[i];
    if (idx == 0) continue;  // padding position
    std::span<const std::int32_t> sides;
    if (static_cast<std::size_t>(idx) < meta.size()) sides = meta[idx];
    out.rows.row(static_cast<Eigen::Index>(i)) =
        embed_item(idx, sides, items, side_tables).transpose();
    out.mask[i] = 1;
    ++real;
  }
  if (real == 0) throw DataError("behavior list is empty after masking");
  return out;
}

}  // namespace mirec::embedding
