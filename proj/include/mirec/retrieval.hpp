#pragma once

#include "mirec/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mirec::retrieval {

/// Coarse inverted-file partition over the item embeddings: Lloyd centroids
/// plus per-partition member lists (row indices into the index).
struct Partitions {
  Matrix centroids;                            // (count, d)
  std::vector<std::vector<std::int32_t>> members;  // disjoint cover of rows
};

/// Immutable snapshot of item embeddings for serving. Row r holds the
/// pooled embedding of item ids[r]; the padding item is never included.
struct ItemIndex {
  Matrix embeddings;                 // (n, d)
  std::vector<std::int32_t> item_indices;  // vocab index per row
  std::vector<std::string> ids;      // item id per row
  std::optional<Partitions> partitions;

  std::int32_t size() const {
    return static_cast<std::int32_t>(embeddings.rows());
  }
};

struct RetrievedItem {
  std::int32_t item_index = 0;
  std::string id;
  double score = 0.0;
  int interest = 0;  // the interest vector that triggered the max score
};

/// Scores non-increasing; ties broken by ascending item id; no duplicates.
using RetrievalResult = std::vector<RetrievedItem>;

/// Builds the serving index. With partition_count == 0 only the flat/exact
/// path is available. Otherwise items are assigned to the nearest of
/// partition_count centroids found by 20 seeded Lloyd iterations; emptied
/// clusters are re-seeded with the point farthest from its centroid.
ItemIndex build_index(Matrix embeddings, std::vector<std::int32_t> item_indices,
                      std::vector<std::string> ids, int partition_count,
                      std::uint64_t seed);

/// Exact top-N under f_score = max_k dot(v_k, e_item). The triggering
/// interest is the argmax k (ties -> lowest k).
RetrievalResult exact_topn(const Matrix& interest_vectors,
                           const ItemIndex& index, int n);

/// Approximate top-N: each interest vector probes its `probes` best
/// partitions by centroid dot product; the candidate union is then ranked
/// by the exact f_score and cut to N.
RetrievalResult ann_topn(const Matrix& interest_vectors, const ItemIndex& index,
                         int n, int probes);

}  // namespace mirec::retrieval
