#pragma once

#include "mirec/config.hpp"
#include "mirec/data.hpp"
#include "mirec/embedding.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mirec::io {

/// A prepared dataset on disk: vocabularies, item metadata, split manifest
/// and the train/test instance files. See README for the file formats.
struct Dataset {
  data::Vocabulary items;
  std::vector<data::Vocabulary> sides;     // one per side-feature slot
  std::vector<data::Vocabulary> profiles;  // one per profile feature
  embedding::ItemMeta meta;                // item index -> side indices
  std::vector<data::TrainingInstance> train;
  std::vector<data::TrainingInstance> test;
  std::map<std::string, std::string> manifest;  // key -> value

  std::vector<std::int32_t> side_vocab_sizes() const;
  std::vector<std::int32_t> profile_vocab_sizes() const;
};

/// Runs the full preparation pipeline: filter, vocabularies, item metadata,
/// 19:1 split, instances. Profile map is optional (user id -> profile ids).
Dataset prepare_dataset(
    const std::vector<data::InteractionRecord>& records,
    const config::RunConfig& cfg,
    const std::map<std::string, std::vector<std::string>>* raw_profiles =
        nullptr);

void write_dataset(const std::string& dir, const Dataset& dataset);
Dataset load_dataset(const std::string& dir);

/// Vocabulary file: header line, then one "id<TAB>frequency" per line in
/// index order (padding row omitted).
void write_vocab(const std::string& path, const data::Vocabulary& vocab);
data::Vocabulary load_vocab(const std::string& path);

/// Optional per-user profile file: user_id, then one categorical value per
/// profile feature, tab- or comma-delimited.
std::map<std::string, std::vector<std::string>> load_profile_file(
    const std::string& path);

// Low-level binary helpers shared with the checkpoint format. All integers
// and doubles are little-endian.
void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);
void write_i32(std::ostream& out, std::int32_t v);
std::int32_t read_i32(std::istream& in);
void write_f64(std::ostream& out, double v);
double read_f64(std::istream& in);
void write_string(std::ostream& out, const std::string& s);
std::string read_string(std::istream& in);
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);
void write_vector(std::ostream& out, const Vector& v);
Vector read_vector(std::istream& in);

/// Whole-file read, for digest checks and byte comparisons.
std::string slurp(const std::string& path);
void spit(const std::string& path, const std::string& content);

}  // namespace mirec::io
