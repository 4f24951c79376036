#include "mirec/checkpoint.hpp"

#include "mirec/io.hpp"

#include <fstream>

namespace mirec::checkpoint {

namespace {

constexpr const char* kMagic = "MIRECCP1";

void write_table_group(std::ostream& out,
                       const std::vector<model::EmbeddingTable>& tables) {
  io::write_u64(out, tables.size());
  for (const auto& t : tables) io::write_matrix(out, t.weights);
}

std::vector<model::EmbeddingTable> read_table_group(std::istream& in) {
  const std::uint64_t n = io::read_u64(in);
  std::vector<model::EmbeddingTable> tables(n);
  for (auto& t : tables) t.weights = io::read_matrix(in);
  return tables;
}

void write_grads(std::ostream& out, const model::Grads& g) {
  io::write_matrix(out, g.items);
  io::write_u64(out, g.sides.size());
  for (const auto& m : g.sides) io::write_matrix(out, m);
  io::write_u64(out, g.profiles.size());
  for (const auto& m : g.profiles) io::write_matrix(out, m);
  io::write_matrix(out, g.bilinear);
  io::write_u64(out, g.tower_w.size());
  for (const auto& m : g.tower_w) io::write_matrix(out, m);
  io::write_u64(out, g.tower_b.size());
  for (const auto& v : g.tower_b) io::write_vector(out, v);
}

model::Grads read_grads(std::istream& in) {
  model::Grads g;
  g.items = io::read_matrix(in);
  g.sides.resize(io::read_u64(in));
  for (auto& m : g.sides) m = io::read_matrix(in);
  g.profiles.resize(io::read_u64(in));
  for (auto& m : g.profiles) m = io::read_matrix(in);
  g.bilinear = io::read_matrix(in);
  g.tower_w.resize(io::read_u64(in));
  for (auto& m : g.tower_w) m = io::read_matrix(in);
  g.tower_b.resize(io::read_u64(in));
  for (auto& v : g.tower_b) v = io::read_vector(in);
  return g;
}

}  // namespace

void save(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  io::write_string(out, ckpt.config_text);
  io::write_u64(out, ckpt.item_vocab_hash);
  io::write_u64(out, ckpt.side_vocab_hashes.size());
  for (auto h : ckpt.side_vocab_hashes) io::write_u64(out, h);
  io::write_u64(out, ckpt.profile_vocab_hashes.size());
  for (auto h : ckpt.profile_vocab_hashes) io::write_u64(out, h);

  io::write_matrix(out, ckpt.params.items.weights);
  write_table_group(out, ckpt.params.sides);
  write_table_group(out, ckpt.params.profiles);
  io::write_matrix(out, ckpt.params.bilinear);
  io::write_u64(out, ckpt.params.tower_w.size());
  for (const auto& m : ckpt.params.tower_w) io::write_matrix(out, m);
  io::write_u64(out, ckpt.params.tower_b.size());
  for (const auto& v : ckpt.params.tower_b) io::write_vector(out, v);

  io::write_f64(out, ckpt.state.learning_rate);
  io::write_f64(out, ckpt.state.beta1);
  io::write_f64(out, ckpt.state.beta2);
  io::write_f64(out, ckpt.state.epsilon);
  io::write_u64(out, static_cast<std::uint64_t>(ckpt.state.step));
  io::write_u64(out, static_cast<std::uint64_t>(ckpt.state.epochs_done));
  io::write_u64(out, ckpt.state.instance_counter);
  write_grads(out, ckpt.state.first_moment);
  write_grads(out, ckpt.state.second_moment);
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::string(magic, 8) != kMagic)
    throw DataError("not a checkpoint file: " + path);
  Checkpoint ckpt;
  ckpt.config_text = io::read_string(in);
  ckpt.item_vocab_hash = io::read_u64(in);
  ckpt.side_vocab_hashes.resize(io::read_u64(in));
  for (auto& h : ckpt.side_vocab_hashes) h = io::read_u64(in);
  ckpt.profile_vocab_hashes.resize(io::read_u64(in));
  for (auto& h : ckpt.profile_vocab_hashes) h = io::read_u64(in);

  ckpt.params.items.weights = io::read_matrix(in);
  ckpt.params.sides = read_table_group(in);
  ckpt.params.profiles = read_table_group(in);
  ckpt.params.bilinear = io::read_matrix(in);
  ckpt.params.tower_w.resize(io::read_u64(in));
  for (auto& m : ckpt.params.tower_w) m = io::read_matrix(in);
  ckpt.params.tower_b.resize(io::read_u64(in));
  for (auto& v : ckpt.params.tower_b) v = io::read_vector(in);

  ckpt.state.learning_rate = io::read_f64(in);
  ckpt.state.beta1 = io::read_f64(in);
  ckpt.state.beta2 = io::read_f64(in);
  ckpt.state.epsilon = io::read_f64(in);
  ckpt.state.step = static_cast<std::int64_t>(io::read_u64(in));
  ckpt.state.epochs_done = static_cast<std::int64_t>(io::read_u64(in));
  ckpt.state.instance_counter = io::read_u64(in);
  ckpt.state.first_moment = read_grads(in);
  ckpt.state.second_moment = read_grads(in);
  return ckpt;
}

}  // namespace mirec::checkpoint
