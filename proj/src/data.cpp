#include "mirec/data.hpp"

#include "mirec/rng.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace mirec::data {

Vocabulary::Vocabulary() {
  ids_.push_back(kPadToken);
  freqs_.push_back(0);
  index_[kPadToken] = kPadIndex;
}

void Vocabulary::add(const std::string& id, std::int64_t frequency) {
  if (index_.count(id)) throw DataError("duplicate vocabulary id: " + id);
  if (frequency <= 0) throw DataError("non-positive frequency for id: " + id);
  index_[id] = static_cast<std::int32_t>(ids_.size());
  ids_.push_back(id);
  freqs_.push_back(frequency);
}

std::int32_t Vocabulary::index_of(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? kPadIndex : it->second;
}

const std::string& Vocabulary::id_of(std::int32_t index) const {
  if (index < 0 || index >= size())
    throw DataError("vocabulary index out of range: " + std::to_string(index));
  return ids_[static_cast<std::size_t>(index)];
}

std::int64_t Vocabulary::frequency_of(std::int32_t index) const {
  if (index < 0 || index >= size())
    throw DataError("vocabulary index out of range: " + std::to_string(index));
  return freqs_[static_cast<std::size_t>(index)];
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::int32_t i = 0; i < size(); ++i) {
    h = fnv1a64(ids_[static_cast<std::size_t>(i)], h);
    std::int64_t f = freqs_[static_cast<std::size_t>(i)];
    h = fnv1a64(&f, sizeof(f), h);
  }
  return h;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

bool parse_timestamp(const std::string& s, std::int64_t* out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

IngestResult ingest_interactions(std::istream& source) {
  if (!source.good()) throw DataError("unreadable interaction source");
  IngestResult result;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(source, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() < 3) {
      result.errors.push_back({line_number, "expected at least 3 fields"});
      continue;
    }
    InteractionRecord rec;
    rec.user_id = fields.front();
    rec.item_id = fields[1];
    rec.side_ids.assign(fields.begin() + 2, fields.end() - 1);
    if (rec.user_id.empty() || rec.item_id.empty()) {
      result.errors.push_back({line_number, "empty user or item id"});
      continue;
    }
    if (!parse_timestamp(fields.back(), &rec.timestamp)) {
      result.errors.push_back({line_number, "unparseable timestamp"});
      continue;
    }
    if (rec.timestamp < 0) {
      result.errors.push_back({line_number, "negative timestamp"});
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  if (source.bad()) throw DataError("read failure while ingesting");
  return result;
}

IngestResult ingest_interactions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interaction log: " + path);
  return ingest_interactions(in);
}

std::vector<InteractionRecord> filter_dataset(
    std::vector<InteractionRecord> records, std::int64_t min_item_interactions,
    std::int64_t min_user_interactions) {
  if (min_item_interactions < 1 || min_user_interactions < 1)
    throw UsageError("filter thresholds must be >= 1");
  for (;;) {
    std::unordered_map<std::string, std::int64_t> item_counts, user_counts;
    for (const auto& r : records) {
      ++item_counts[r.item_id];
      ++user_counts[r.user_id];
    }
    std::vector<InteractionRecord> kept;
    kept.reserve(records.size());
    for (auto& r : records) {
      if (item_counts[r.item_id] >= min_item_interactions &&
          user_counts[r.user_id] >= min_user_interactions)
        kept.push_back(std::move(r));
    }
    const bool stable = kept.size() == records.size();
    records = std::move(kept);
    if (stable) return records;
  }
}

Vocabulary build_vocabulary(const std::vector<std::string>& observed_ids) {
  if (observed_ids.empty()) throw DataError("no ids to build vocabulary from");
  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& id : observed_ids) ++counts[id];
  std::vector<std::pair<std::string, std::int64_t>> entries(counts.begin(),
                                                            counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  for (const auto& [id, freq] : entries) vocab.add(id, freq);
  return vocab;
}

std::vector<UserItemPair> dedup_pairs(
    const std::vector<InteractionRecord>& records, const Vocabulary& items) {
  // (user, item) -> earliest timestamp
  std::map<std::pair<std::string, std::int32_t>, std::int64_t> earliest;
  for (const auto& r : records) {
    std::int32_t idx = items.index_of(r.item_id);
    if (idx == Vocabulary::kPadIndex) continue;  // item not in vocabulary
    auto key = std::make_pair(r.user_id, idx);
    auto it = earliest.find(key);
    if (it == earliest.end() || r.timestamp < it->second)
      earliest[key] = r.timestamp;
  }
  std::vector<UserItemPair> pairs;
  pairs.reserve(earliest.size());
  for (const auto& [key, ts] : earliest)
    pairs.push_back({key.first, key.second, ts});
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.item_index < b.item_index;
  });
  return pairs;
}

bool build_instance(const std::vector<UserItemPair>& user_pairs,
                    std::size_t target_position, std::size_t max_behaviors,
                    const UserProfile& profile, TrainingInstance* out) {
  const UserItemPair& target = user_pairs[target_position];
  std::vector<std::int32_t> behaviors;
  for (const auto& p : user_pairs) {
    if (p.timestamp < target.timestamp) behaviors.push_back(p.item_index);
  }
  if (behaviors.empty()) return false;
  if (behaviors.size() > max_behaviors) {
    behaviors.erase(behaviors.begin(),
                    behaviors.end() - static_cast<std::ptrdiff_t>(max_behaviors));
  }
  out->user_id = target.user_id;
  out->behavior_indices = std::move(behaviors);
  out->profile = profile;
  out->target_index = target.item_index;
  return true;
}

DatasetSplit split_and_build(
    const std::vector<InteractionRecord>& records, const Vocabulary& items,
    std::size_t max_behaviors, std::uint64_t seed,
    const std::unordered_map<std::string, UserProfile>* profiles) {
  if (max_behaviors == 0) throw UsageError("max_behaviors must be >= 1");
  auto pairs = dedup_pairs(records, items);

  // Group contiguous ranges per user (pairs are sorted by user already).
  std::vector<std::pair<std::size_t, std::size_t>> user_ranges;
  for (std::size_t i = 0; i < pairs.size();) {
    std::size_t j = i;
    while (j < pairs.size() && pairs[j].user_id == pairs[i].user_id) ++j;
    user_ranges.emplace_back(i, j);
    i = j;
  }

  DatasetSplit split;
  split.seed = seed;

  // Exact-count 19:1 assignment over all pairs of users with >= 2 pairs.
  std::vector<std::size_t> eligible;
  for (const auto& [begin, end] : user_ranges) {
    if (end - begin < 2) {
      ++split.skipped_users;
      continue;
    }
    for (std::size_t k = begin; k < end; ++k) eligible.push_back(k);
  }
  Rng rng(mix_seed(seed, /*tag=*/17));
  std::vector<std::size_t> order = eligible;
  rng.shuffle(order);
  const std::size_t n_test =
      static_cast<std::size_t>(static_cast<double>(order.size()) / 20.0 + 0.5);
  std::vector<bool> is_test(pairs.size(), false);
  for (std::size_t k = 0; k < n_test; ++k) is_test[order[k]] = true;

  static const UserProfile kEmptyProfile;
  for (const auto& [begin, end] : user_ranges) {
    if (end - begin < 2) continue;
    const UserProfile* profile = &kEmptyProfile;
    if (profiles) {
      auto it = profiles->find(pairs[begin].user_id);
      if (it != profiles->end()) profile = &it->second;
    }
    std::vector<UserItemPair> user_pairs(pairs.begin() + begin,
                                         pairs.begin() + end);
    for (std::size_t k = 0; k < user_pairs.size(); ++k) {
      TrainingInstance inst;
      if (!build_instance(user_pairs, k, max_behaviors, *profile, &inst))
        continue;  // earliest pair of the user: no prior behaviors
      if (is_test[begin + k])
        split.test.push_back(std::move(inst));
      else
        split.train.push_back(std::move(inst));
    }
  }
  return split;
}

}  // namespace mirec::data
