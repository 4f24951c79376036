#include "mirec/retrieval.hpp"

#include "mirec/rng.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace mirec::retrieval {

namespace {

constexpr int kLloydIterations = 20;

Partitions lloyd_partitions(const Matrix& points, int count,
                            std::uint64_t seed) {
  const auto n = points.rows();
  Rng rng(mix_seed(seed, /*tag=*/29));
  std::vector<std::int32_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  Matrix centroids(count, points.cols());
  for (int c = 0; c < count; ++c)
    centroids.row(c) = points.row(order[static_cast<std::size_t>(c)]);

  std::vector<std::int32_t> assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < kLloydIterations; ++iter) {
    // Nearest centroid by squared Euclidean distance, ties -> lowest id.
    const Matrix dots = points * centroids.transpose();  // (n, count)
    Vector centroid_sq = centroids.rowwise().squaredNorm();
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(count), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (int c = 0; c < count; ++c) {
        const double dist = centroid_sq(c) - 2.0 * dots(i, c);
        if (dist < best_dist) {
          best_dist = dist;
          best = c;
        }
      }
      assign[static_cast<std::size_t>(i)] = best;
      ++sizes[static_cast<std::size_t>(best)];
    }

    // Re-seed emptied clusters with the point farthest from its centroid,
    // drawn from clusters that keep at least one member.
    for (int c = 0; c < count; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index farthest = -1;
      double far_dist = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int a = assign[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(a)] <= 1) continue;
        const double dist =
            (points.row(i) - centroids.row(a)).squaredNorm();
        if (dist > far_dist) {
          far_dist = dist;
          farthest = i;
        }
      }
      --sizes[static_cast<std::size_t>(assign[static_cast<std::size_t>(farthest)])];
      assign[static_cast<std::size_t>(farthest)] = c;
      sizes[static_cast<std::size_t>(c)] = 1;
    }

    centroids.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      centroids.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
    for (int c = 0; c < count; ++c)
      centroids.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
  }

  Partitions result;
  result.centroids = std::move(centroids);
  result.members.resize(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < n; ++i)
    result.members[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])]
        .push_back(static_cast<std::int32_t>(i));
  return result;
}

struct ScoredRow {
  std::int32_t row;
  double score;
  int interest;
};

// Rank by score descending, ties by ascending item id.
RetrievalResult take_topn(std::vector<ScoredRow> scored, const ItemIndex& index,
                          int n) {
  auto better = [&](const ScoredRow& a, const ScoredRow& b) {
    if (a.score != b.score) return a.score > b.score;
    return index.ids[static_cast<std::size_t>(a.row)] <
           index.ids[static_cast<std::size_t>(b.row)];
  };
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(n),
                                          scored.size());
  std::partial_sort(scored.begin(),
                    scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), better);
  RetrievalResult result;
  result.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto& s = scored[i];
    result.push_back({index.item_indices[static_cast<std::size_t>(s.row)],
                      index.ids[static_cast<std::size_t>(s.row)], s.score,
                      s.interest});
  }
  return result;
}

ScoredRow score_row(const Matrix& interest_vectors, const ItemIndex& index,
                    std::int32_t row) {
  const Vector scores =
      interest_vectors * index.embeddings.row(row).transpose();
  int best = 0;
  for (Eigen::Index k = 1; k < scores.size(); ++k)
    if (scores(k) > scores(best)) best = static_cast<int>(k);
  return {row, scores(best), best};
}

}  // namespace

ItemIndex build_index(Matrix embeddings, std::vector<std::int32_t> item_indices,
                      std::vector<std::string> ids, int partition_count,
                      std::uint64_t seed) {
  if (embeddings.rows() < 1) throw DataError("index needs at least one item");
  if (static_cast<std::size_t>(embeddings.rows()) != item_indices.size() ||
      item_indices.size() != ids.size())
    throw DataError("index rows, indices and ids must align");
  ItemIndex index;
  index.embeddings = std::move(embeddings);
  index.item_indices = std::move(item_indices);
  index.ids = std::move(ids);
  if (partition_count > 0) {
    if (partition_count > index.size())
      throw DataError("more partitions than items");
    index.partitions =
        lloyd_partitions(index.embeddings, partition_count, seed);
  }
  return index;
}

RetrievalResult exact_topn(const Matrix& interest_vectors,
                           const ItemIndex& index, int n) {
  if (n < 1) throw UsageError("retrieval: N must be >= 1");
  if (interest_vectors.cols() != index.embeddings.cols())
    throw UsageError("retrieval: dimension mismatch");
  const Matrix all = index.embeddings * interest_vectors.transpose();  // (n, K)
  std::vector<ScoredRow> scored;
  scored.reserve(static_cast<std::size_t>(index.size()));
  for (Eigen::Index i = 0; i < all.rows(); ++i) {
    int best = 0;
    for (Eigen::Index k = 1; k < all.cols(); ++k)
      if (all(i, k) > all(i, best)) best = static_cast<int>(k);
    scored.push_back({static_cast<std::int32_t>(i), all(i, best), best});
  }
  return take_topn(std::move(scored), index, n);
}

RetrievalResult ann_topn(const Matrix& interest_vectors, const ItemIndex& index,
                         int n, int probes) {
  if (n < 1) throw UsageError("retrieval: N must be >= 1");
  if (!index.partitions)
    throw UsageError("ann retrieval requires a partitioned index");
  const auto& parts = *index.partitions;
  const int count = static_cast<int>(parts.centroids.rows());
  if (probes < 1 || probes > count)
    throw UsageError("retrieval: probes must be in [1, partitions]");

  // Candidate union over interests: per interest, take the `probes` best
  // partitions by centroid dot product (ties -> lowest partition id).
  std::vector<bool> probed(static_cast<std::size_t>(count), false);
  const Matrix centroid_scores =
      parts.centroids * interest_vectors.transpose();  // (count, K)
  for (Eigen::Index k = 0; k < interest_vectors.rows(); ++k) {
    std::vector<int> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + probes, order.end(),
                      [&](int a, int b) {
                        if (centroid_scores(a, k) != centroid_scores(b, k))
                          return centroid_scores(a, k) > centroid_scores(b, k);
                        return a < b;
                      });
    for (int p = 0; p < probes; ++p)
      probed[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = true;
  }

  std::vector<ScoredRow> scored;
  for (int c = 0; c < count; ++c) {
    if (!probed[static_cast<std::size_t>(c)]) continue;
    for (std::int32_t row : parts.members[static_cast<std::size_t>(c)])
      scored.push_back(score_row(interest_vectors, index, row));
  }
  return take_topn(std::move(scored), index, n);
}

}  // namespace mirec::retrieval
