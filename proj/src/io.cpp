#include "mirec/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mirec::io {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestMagic = "mirec.split.v1";
constexpr const char* kVocabMagic = "mirec.vocab.v1";
constexpr const char* kMetaMagic = "mirec.meta.v1";
constexpr const char* kInstanceMagic = "MIRECIN1";

std::vector<std::string> split_delimited(const std::string& line) {
  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

std::vector<std::int32_t> Dataset::side_vocab_sizes() const {
  std::vector<std::int32_t> sizes;
  for (const auto& v : sides) sizes.push_back(v.size());
  return sizes;
}

std::vector<std::int32_t> Dataset::profile_vocab_sizes() const {
  std::vector<std::int32_t> sizes;
  for (const auto& v : profiles) sizes.push_back(v.size());
  return sizes;
}

Dataset prepare_dataset(
    const std::vector<data::InteractionRecord>& records,
    const config::RunConfig& cfg,
    const std::map<std::string, std::vector<std::string>>* raw_profiles) {
  auto filtered = data::filter_dataset(records, cfg.min_item_interactions,
                                       cfg.min_user_interactions);
  if (filtered.empty())
    throw DataError("no interactions survive the frequency filters");

  Dataset ds;
  std::vector<std::string> item_ids;
  item_ids.reserve(filtered.size());
  for (const auto& r : filtered) item_ids.push_back(r.item_id);
  ds.items = data::build_vocabulary(item_ids);

  std::size_t side_slots = 0;
  for (const auto& r : filtered)
    side_slots = std::max(side_slots, r.side_ids.size());
  for (std::size_t f = 0; f < side_slots; ++f) {
    std::vector<std::string> ids;
    for (const auto& r : filtered)
      if (f < r.side_ids.size() && !r.side_ids[f].empty())
        ids.push_back(r.side_ids[f]);
    if (ids.empty())
      throw DataError("side feature slot " + std::to_string(f) + " is empty");
    ds.sides.push_back(data::build_vocabulary(ids));
  }

  // Item metadata: side indices from the first occurrence of each item.
  ds.meta.assign(static_cast<std::size_t>(ds.items.size()),
                 std::vector<std::int32_t>(side_slots, 0));
  std::vector<bool> seen(static_cast<std::size_t>(ds.items.size()), false);
  for (const auto& r : filtered) {
    const auto idx = static_cast<std::size_t>(ds.items.index_of(r.item_id));
    if (seen[idx]) continue;
    seen[idx] = true;
    for (std::size_t f = 0; f < r.side_ids.size(); ++f)
      if (!r.side_ids[f].empty())
        ds.meta[idx][f] = ds.sides[f].index_of(r.side_ids[f]);
  }

  // Profiles, when provided: one vocabulary per profile slot.
  std::unordered_map<std::string, data::UserProfile> profile_map;
  if (raw_profiles && !raw_profiles->empty()) {
    std::size_t slots = 0;
    for (const auto& [user, values] : *raw_profiles)
      slots = std::max(slots, values.size());
    for (std::size_t f = 0; f < slots; ++f) {
      std::vector<std::string> ids;
      for (const auto& [user, values] : *raw_profiles)
        if (f < values.size() && !values[f].empty()) ids.push_back(values[f]);
      if (ids.empty())
        throw DataError("profile slot " + std::to_string(f) + " is empty");
      ds.profiles.push_back(data::build_vocabulary(ids));
    }
    for (const auto& [user, values] : *raw_profiles) {
      data::UserProfile p(slots, 0);
      for (std::size_t f = 0; f < values.size(); ++f)
        if (!values[f].empty()) p[f] = ds.profiles[f].index_of(values[f]);
      profile_map[user] = std::move(p);
    }
  }

  auto split = data::split_and_build(
      filtered, ds.items, static_cast<std::size_t>(cfg.max_behaviors),
      cfg.seed, profile_map.empty() ? nullptr : &profile_map);
  ds.train = std::move(split.train);
  ds.test = std::move(split.test);

  std::unordered_map<std::string, bool> users;
  for (const auto& r : filtered) users[r.user_id] = true;

  ds.manifest["config_digest"] = cfg.digest();
  ds.manifest["seed"] = std::to_string(cfg.seed);
  ds.manifest["min_item_interactions"] =
      std::to_string(cfg.min_item_interactions);
  ds.manifest["min_user_interactions"] =
      std::to_string(cfg.min_user_interactions);
  ds.manifest["max_behaviors"] = std::to_string(cfg.max_behaviors);
  ds.manifest["interactions_raw"] = std::to_string(records.size());
  ds.manifest["interactions_filtered"] = std::to_string(filtered.size());
  ds.manifest["users"] = std::to_string(users.size());
  ds.manifest["users_skipped"] = std::to_string(split.skipped_users);
  ds.manifest["items"] = std::to_string(ds.items.size() - 1);
  ds.manifest["side_features"] = std::to_string(ds.sides.size());
  ds.manifest["profile_features"] = std::to_string(ds.profiles.size());
  ds.manifest["train_instances"] = std::to_string(ds.train.size());
  ds.manifest["test_instances"] = std::to_string(ds.test.size());
  ds.manifest["item_vocab_hash"] = to_hex(ds.items.hash());
  for (std::size_t f = 0; f < ds.sides.size(); ++f)
    ds.manifest["side" + std::to_string(f) + "_vocab_hash"] =
        to_hex(ds.sides[f].hash());
  for (std::size_t f = 0; f < ds.profiles.size(); ++f)
    ds.manifest["profile" + std::to_string(f) + "_vocab_hash"] =
        to_hex(ds.profiles[f].hash());
  return ds;
}

void write_vocab(const std::string& path, const data::Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary: " + path);
  out << kVocabMagic << '\n';
  for (std::int32_t i = 1; i < vocab.size(); ++i)
    out << vocab.id_of(i) << '\t' << vocab.frequency_of(i) << '\n';
}

data::Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kVocabMagic)
    throw DataError("bad vocabulary header in " + path);
  data::Vocabulary vocab;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("bad vocabulary line in " + path);
    vocab.add(line.substr(0, tab), std::stoll(line.substr(tab + 1)));
  }
  return vocab;
}

std::map<std::string, std::vector<std::string>> load_profile_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open profile file: " + path);
  std::map<std::string, std::vector<std::string>> profiles;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_delimited(line);
    if (fields.size() < 2 || fields[0].empty())
      throw DataError("bad profile line: " + line);
    profiles[fields[0]] =
        std::vector<std::string>(fields.begin() + 1, fields.end());
  }
  return profiles;
}

namespace {

void write_instances(const std::string& path,
                     const std::vector<data::TrainingInstance>& instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write instances: " + path);
  out.write(kInstanceMagic, 8);
  write_u64(out, instances.size());
  for (const auto& inst : instances) {
    write_string(out, inst.user_id);
    write_i32(out, inst.target_index);
    write_u64(out, inst.profile.size());
    for (std::int32_t p : inst.profile) write_i32(out, p);
    write_u64(out, inst.behavior_indices.size());
    for (std::int32_t b : inst.behavior_indices) write_i32(out, b);
  }
}

std::vector<data::TrainingInstance> load_instances(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open instances: " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::string(magic, 8) != kInstanceMagic)
    throw DataError("bad instance file header: " + path);
  const std::uint64_t count = read_u64(in);
  std::vector<data::TrainingInstance> instances;
  instances.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    data::TrainingInstance inst;
    inst.user_id = read_string(in);
    inst.target_index = read_i32(in);
    const std::uint64_t np = read_u64(in);
    inst.profile.resize(np);
    for (auto& p : inst.profile) p = read_i32(in);
    const std::uint64_t nb = read_u64(in);
    inst.behavior_indices.resize(nb);
    for (auto& b : inst.behavior_indices) b = read_i32(in);
    instances.push_back(std::move(inst));
  }
  if (!in) throw DataError("truncated instance file: " + path);
  return instances;
}

}  // namespace

void write_dataset(const std::string& dir, const Dataset& dataset) {
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "manifest.txt", std::ios::binary);
    if (!out) throw DataError("cannot write manifest in " + dir);
    out << kManifestMagic << '\n';
    for (const auto& [k, v] : dataset.manifest) out << k << " = " << v << '\n';
  }
  write_vocab((fs::path(dir) / "vocab_items.txt").string(), dataset.items);
  for (std::size_t f = 0; f < dataset.sides.size(); ++f)
    write_vocab((fs::path(dir) / ("vocab_side" + std::to_string(f) + ".txt"))
                    .string(),
                dataset.sides[f]);
  for (std::size_t f = 0; f < dataset.profiles.size(); ++f)
    write_vocab(
        (fs::path(dir) / ("vocab_profile" + std::to_string(f) + ".txt"))
            .string(),
        dataset.profiles[f]);
  {
    std::ofstream out(fs::path(dir) / "item_meta.tsv", std::ios::binary);
    if (!out) throw DataError("cannot write item metadata in " + dir);
    out << kMetaMagic << '\n';
    for (std::size_t i = 1; i < dataset.meta.size(); ++i) {
      out << i;
      for (std::int32_t s : dataset.meta[i]) out << '\t' << s;
      out << '\n';
    }
  }
  write_instances((fs::path(dir) / "train.bin").string(), dataset.train);
  write_instances((fs::path(dir) / "test.bin").string(), dataset.test);
}

Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  {
    std::ifstream in(fs::path(dir) / "manifest.txt", std::ios::binary);
    if (!in) throw DataError("cannot open manifest in " + dir);
    std::string line;
    if (!std::getline(in, line) || line != kManifestMagic)
      throw DataError("bad manifest header in " + dir);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto eq = line.find(" = ");
      if (eq == std::string::npos)
        throw DataError("bad manifest line: " + line);
      ds.manifest[line.substr(0, eq)] = line.substr(eq + 3);
    }
  }
  ds.items = load_vocab((fs::path(dir) / "vocab_items.txt").string());
  const int side_features = std::stoi(ds.manifest.at("side_features"));
  for (int f = 0; f < side_features; ++f)
    ds.sides.push_back(load_vocab(
        (fs::path(dir) / ("vocab_side" + std::to_string(f) + ".txt")).string()));
  const int profile_features = std::stoi(ds.manifest.at("profile_features"));
  for (int f = 0; f < profile_features; ++f)
    ds.profiles.push_back(load_vocab(
        (fs::path(dir) / ("vocab_profile" + std::to_string(f) + ".txt"))
            .string()));
  {
    std::ifstream in(fs::path(dir) / "item_meta.tsv", std::ios::binary);
    if (!in) throw DataError("cannot open item metadata in " + dir);
    std::string line;
    if (!std::getline(in, line) || line != kMetaMagic)
      throw DataError("bad item metadata header in " + dir);
    ds.meta.assign(static_cast<std::size_t>(ds.items.size()),
                   std::vector<std::int32_t>(ds.sides.size(), 0));
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string field;
      std::getline(ss, field, '\t');
      const auto idx = static_cast<std::size_t>(std::stoi(field));
      if (idx == 0 || idx >= ds.meta.size())
        throw DataError("item metadata index out of range: " + field);
      std::size_t f = 0;
      while (std::getline(ss, field, '\t')) {
        if (f >= ds.sides.size())
          throw DataError("too many side columns in item metadata");
        ds.meta[idx][f++] = std::stoi(field);
      }
    }
  }
  ds.train = load_instances((fs::path(dir) / "train.bin").string());
  ds.test = load_instances((fs::path(dir) / "test.bin").string());
  return ds;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("unexpected end of binary stream");
  return v;
}

void write_i32(std::ostream& out, std::int32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::int32_t read_i32(std::istream& in) {
  std::int32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("unexpected end of binary stream");
  return v;
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("unexpected end of binary stream");
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw DataError("unexpected end of binary stream");
  return s;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u64(out, static_cast<std::uint64_t>(m.rows()));
  write_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix read_matrix(std::istream& in) {
  const auto rows = static_cast<Eigen::Index>(read_u64(in));
  const auto cols = static_cast<Eigen::Index>(read_u64(in));
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw DataError("unexpected end of binary stream");
  return m;
}

void write_vector(std::ostream& out, const Vector& v) {
  write_u64(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
}

Vector read_vector(std::istream& in) {
  const auto n = static_cast<Eigen::Index>(read_u64(in));
  Vector v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * v.size()));
  if (!in) throw DataError("unexpected end of binary stream");
  return v;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace mirec::io
