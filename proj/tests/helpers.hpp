#pragma once

#include "mirec/common.hpp"
#include "mirec/config.hpp"
#include "mirec/io.hpp"
#include "mirec/model.hpp"
#include "mirec/rng.hpp"
#include "mirec/synthetic.hpp"

#include <cmath>
#include <vector>

namespace testutil {

// ---------------------------------------------------------------------------
// Independent oracle: a direct, line-by-line transcription of the routing
// procedure on plain nested vectors. Shares no code with mirec::routing; it
// consumes the same initial logits so the two paths are comparable.
// ---------------------------------------------------------------------------

using Rows = std::vector<std::vector<double>>;

struct OracleRouting {
  Rows capsules;   // K' x d
  Rows couplings;  // m x K' (weights used for the returned capsules)
};

inline OracleRouting oracle_b2i_routing(const Rows& behaviors, const Rows& s,
                                        const Rows& initial_logits,
                                        int iterations) {
  const std::size_t m = behaviors.size();
  const std::size_t d = s.size();
  const std::size_t k = initial_logits.empty() ? 0 : initial_logits[0].size();

  // Precompute S e_i for every behavior.
  Rows se(m, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t c = 0; c < d; ++c)
        se[i][a] += s[a][c] * behaviors[i][c];

  Rows b = initial_logits;
  Rows w(m, std::vector<double>(k, 0.0));
  Rows u(k, std::vector<double>(d, 0.0));
  for (int it = 0; it < iterations; ++it) {
    // line 4: per behavior, softmax over interest capsules
    for (std::size_t i = 0; i < m; ++i) {
      double mx = b[i][0];
      for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, b[i][j]);
      double denom = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        w[i][j] = std::exp(b[i][j] - mx);
        denom += w[i][j];
      }
      for (std::size_t j = 0; j < k; ++j) w[i][j] /= denom;
    }
    // line 5: weighted sums
    Rows z(k, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t a = 0; a < d; ++a) z[j][a] += w[i][j] * se[i][a];
    // line 6: squash
    for (std::size_t j = 0; j < k; ++j) {
      double norm_sq = 0.0;
      for (std::size_t a = 0; a < d; ++a) norm_sq += z[j][a] * z[j][a];
      if (norm_sq == 0.0) {
        for (std::size_t a = 0; a < d; ++a) u[j][a] = 0.0;
      } else {
        const double norm = std::sqrt(norm_sq);
        const double factor = norm_sq / (1.0 + norm_sq) / norm;
        for (std::size_t a = 0; a < d; ++a) u[j][a] = factor * z[j][a];
      }
    }
    // line 7: agreement update
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        double dot = 0.0;
        for (std::size_t a = 0; a < d; ++a) dot += u[j][a] * se[i][a];
        b[i][j] += dot;
      }
  }
  return {u, w};
}

inline int oracle_adaptive_k(int num_behaviors, int max_interests) {
  const double raw = std::log2(static_cast<double>(num_behaviors));
  double v = raw;
  if (v > max_interests) v = max_interests;
  if (v < 1.0) v = 1.0;
  return static_cast<int>(v);
}

// ---------------------------------------------------------------------------
// Conversions and small fixtures.
// ---------------------------------------------------------------------------

inline Rows to_rows(const mirec::Matrix& m) {
  Rows rows(static_cast<std::size_t>(m.rows()),
            std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return rows;
}

inline mirec::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                                   mirec::Rng& rng, double scale = 1.0) {
  mirec::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, scale);
  return m;
}

inline mirec::Vector random_vector(Eigen::Index n, mirec::Rng& rng,
                                   double scale = 1.0) {
  mirec::Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal(0.0, scale);
  return v;
}

/// Small synthetic dataset prepared end-to-end through the real pipeline.
inline mirec::io::Dataset small_dataset(std::uint64_t seed, int users = 60,
                                        int clusters = 4,
                                        int items_per_cluster = 12,
                                        int clusters_per_user = 2,
                                        int events = 24) {
  mirec::config::RunConfig cfg;
  cfg.seed = seed;
  cfg.seed_set = true;
  cfg.synthetic_users = users;
  cfg.synthetic_clusters = clusters;
  cfg.synthetic_items_per_cluster = items_per_cluster;
  cfg.synthetic_clusters_per_user = clusters_per_user;
  cfg.synthetic_events_per_user = events;
  cfg.min_item_interactions = 3;
  cfg.min_user_interactions = 3;
  auto log = mirec::synthetic::generate_log(cfg);
  return mirec::io::prepare_dataset(log, cfg);
}

/// ModelParams over a dataset with smaller-than-default dims for speed.
inline mirec::model::ModelParams tiny_params(const mirec::io::Dataset& ds,
                                             int dim, std::uint64_t seed) {
  mirec::Rng rng(seed);
  mirec::model::TowerConfig tower;
  tower.output_dim = dim;
  return mirec::model::ModelParams::init(ds.items.size(),
                                         ds.side_vocab_sizes(),
                                         ds.profile_vocab_sizes(), dim, tower,
                                         rng);
}

/// Gaussian point clouds with controlled separation: centroids are scaled
/// orthonormal directions, so the inter-centroid distance is
/// spacing * sqrt(2) while the per-coordinate std-dev is intra_std.
struct SeparatedClusters {
  mirec::Matrix points;
  std::vector<int> labels;
  mirec::Matrix centroids;
};

inline SeparatedClusters separated_clusters(int n_clusters, int per_cluster,
                                            int dim, double spacing,
                                            double intra_std,
                                            mirec::Rng& rng) {
  // Gram-Schmidt on random Gaussian directions.
  mirec::Matrix basis(n_clusters, dim);
  for (int c = 0; c < n_clusters; ++c) {
    mirec::Vector v = random_vector(dim, rng);
    for (int prev = 0; prev < c; ++prev)
      v -= basis.row(prev).dot(v) * basis.row(prev).transpose();
    basis.row(c) = v.transpose() / v.norm();
  }
  SeparatedClusters out;
  out.centroids = spacing * basis;
  out.points.resize(n_clusters * per_cluster, dim);
  for (int c = 0; c < n_clusters; ++c)
    for (int i = 0; i < per_cluster; ++i) {
      const int row = c * per_cluster + i;
      out.points.row(row) =
          out.centroids.row(c) +
          random_vector(dim, rng, intra_std).transpose();
      out.labels.push_back(c);
    }
  return out;
}

}  // namespace testutil
