#pragma once

#include "mirec/common.hpp"

#include <cstdint>
#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

namespace mirec::data {

/// One interaction line from a raw log: who, what, optional categorical side
/// ids (category, brand, shop, ...), when.
struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  std::vector<std::string> side_ids;
  std::int64_t timestamp = 0;
};

struct IngestError {
  std::size_t line_number = 0;  // 1-based
  std::string message;
};

struct IngestResult {
  std::vector<InteractionRecord> records;
  std::vector<IngestError> errors;  // malformed lines, never silently dropped
};

/// Bijection between id strings and dense indices. Index 0 is reserved for
/// the padding/unknown token; real ids start at 1 and are ordered by
/// descending frequency, ties broken by lexicographic id.
class Vocabulary {
 public:
  static constexpr std::int32_t kPadIndex = 0;
  static constexpr const char* kPadToken = "<pad>";

  Vocabulary();

  /// Appends an id with its frequency. Caller is responsible for ordering;
  /// use build_vocabulary for the canonical construction.
  void add(const std::string& id, std::int64_t frequency);

  std::int32_t size() const { return static_cast<std::int32_t>(ids_.size()); }

  /// Dense index for an id; unseen ids map to the padding index 0.
  std::int32_t index_of(const std::string& id) const;
  const std::string& id_of(std::int32_t index) const;
  std::int64_t frequency_of(std::int32_t index) const;

  /// Content hash over (id, frequency) pairs in index order. Embedded in
  /// checkpoints and compared before any model/data pairing.
  std::uint64_t hash() const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::int64_t> freqs_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// P_u: ordered categorical feature indices (gender, age bucket, ...).
/// May be empty; downstream treats an empty profile as absent.
using UserProfile = std::vector<std::int32_t>;

/// One next-item-prediction instance: the behavior prefix, the profile and
/// the target item. Side-feature indices of items are looked up through the
/// dataset's item metadata table, so instances store item indices only.
struct TrainingInstance {
  std::string user_id;
  std::vector<std::int32_t> behavior_indices;  // chronological
  UserProfile profile;
  std::int32_t target_index = 0;
};

struct DatasetSplit {
  std::vector<TrainingInstance> train;
  std::vector<TrainingInstance> test;
  std::uint64_t seed = 0;
  std::size_t skipped_users = 0;  // users with < 2 usable interactions
};

/// Parses a line-oriented interaction log. Each line is tab- or
/// comma-delimited: user_id, item_id, zero or more side ids, timestamp.
/// Malformed lines are collected in the error report in line order.
/// Throws DataError only if the stream itself is unreadable.
IngestResult ingest_interactions(std::istream& source);

/// Convenience: ingest from a file path.
IngestResult ingest_interactions_file(const std::string& path);

/// Iteratively removes interactions of items/users whose interaction count
/// is below the threshold, until a fixed point. The fixed point makes the
/// result independent of whether items or users are pruned first.
std::vector<InteractionRecord> filter_dataset(
    std::vector<InteractionRecord> records, std::int64_t min_item_interactions,
    std::int64_t min_user_interactions);

/// Canonical vocabulary: indices by descending frequency, ties broken by
/// lexicographic id, index 0 reserved for padding.
Vocabulary build_vocabulary(const std::vector<std::string>& observed_ids);

/// Per-user deduplicated interaction, the unit the 19:1 split is taken over.
struct UserItemPair {
  std::string user_id;
  std::int32_t item_index = 0;
  std::int64_t timestamp = 0;
};

/// Deduplicates (user, item) to the earliest interaction and orders each
/// user's pairs by (timestamp, item index).
std::vector<UserItemPair> dedup_pairs(
    const std::vector<InteractionRecord>& records, const Vocabulary& items);

/// Builds one instance for a target pair: behaviors are the user's pairs
/// with strictly earlier timestamps, chronological, truncated to the most
/// recent max_behaviors. Returns false if the behavior list would be empty.
bool build_instance(const std::vector<UserItemPair>& user_pairs,
                    std::size_t target_position, std::size_t max_behaviors,
                    const UserProfile& profile, TrainingInstance* out);

/// Splits user-item pairs 19:1 into train/test (exact-count seeded shuffle)
/// and materializes instances. A user may appear on both sides with
/// different targets; the pair sets are disjoint by construction.
DatasetSplit split_and_build(
    const std::vector<InteractionRecord>& records, const Vocabulary& items,
    std::size_t max_behaviors, std::uint64_t seed,
    const std::unordered_map<std::string, UserProfile>* profiles = nullptr);

}  // namespace mirec::data
