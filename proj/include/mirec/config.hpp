#pragma once

#include "mirec/common.hpp"
#include "mirec/model.hpp"
#include "mirec/routing.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mirec::config {

/// Every hyperparameter of a run. Parsed from a key-value config file with
/// optional flag overrides (flags win); serialized verbatim into every
/// artifact so any output can be traced back to its exact configuration.
struct RunConfig {
  // Reproducibility: seeds are mandatory, there is no wall-clock fallback.
  std::uint64_t seed = 0;
  bool seed_set = false;

  // Model.
  int dim = 16;
  int max_interests = 5;
  int routing_iterations = 3;
  double sigma = 1.0;
  double attention_p = 1.0;
  bool attention_hard = true;  // default: hard attention
  std::vector<int> tower_hidden;  // empty -> {4 * dim}
  bool backprop_couplings = true;

  // Training.
  int negatives = 10;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 10;
  int checkpoint_every = 1;  // epochs between checkpoints

  // Data preparation.
  int max_behaviors = 50;
  std::int64_t min_item_interactions = 10;
  std::int64_t min_user_interactions = 10;

  // Synthetic log generator (prepare --synthetic).
  int synthetic_users = 1000;
  int synthetic_clusters = 10;
  int synthetic_items_per_cluster = 30;
  int synthetic_clusters_per_user = 3;
  int synthetic_events_per_user = 40;
  double synthetic_zipf = 1.0;

  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_text(const std::string& text);

  /// Applies key=value overrides on top of the parsed file.
  void apply(const std::string& key, const std::string& value);

  /// Checks every module precondition before any work starts.
  void validate() const;

  /// Canonical serialization: fixed key order, round-trip precision.
  /// Equal configs produce byte-identical text (and digests).
  std::string canonical_text() const;
  std::string digest() const;

  routing::RoutingConfig routing_config() const;
  model::AttentionConfig attention_config() const;
  model::LossConfig loss_config() const;
  model::TowerConfig tower_config() const;
};

/// Splits "k=v" command-line override strings.
std::pair<std::string, std::string> parse_override(const std::string& arg);

}  // namespace mirec::config
