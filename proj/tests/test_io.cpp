#include "mirec/io.hpp"

#include "mirec/synthetic.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace mirec;

TEST_SUITE_BEGIN("io");

namespace fs = std::filesystem;

TEST_CASE("config parses, validates and digests canonically") {
  auto cfg = config::RunConfig::parse_text(
      "# comment\n"
      "seed = 42\n"
      "dim = 24\n"
      "attention_p = 2.5\n"
      "tower_hidden = 64, 32\n");
  CHECK(cfg.seed == 42);
  CHECK(cfg.dim == 24);
  CHECK_FALSE(cfg.attention_hard);
  CHECK(cfg.attention_p == 2.5);
  CHECK(cfg.tower_hidden == std::vector<int>({64, 32}));
  cfg.validate();

  // Canonical text round-trips to the same digest.
  auto reparsed = config::RunConfig::parse_text(cfg.canonical_text());
  CHECK(reparsed.digest() == cfg.digest());

  // Flags win over file values.
  cfg.apply("dim", "8");
  CHECK(cfg.dim == 8);

  CHECK_THROWS_AS(config::RunConfig::parse_text("unknown_key = 1\n"),
                  UsageError);
  CHECK_THROWS_AS(config::RunConfig::parse_text("dim 12\n"), UsageError);

  config::RunConfig unseeded;
  CHECK_THROWS_AS(unseeded.validate(), UsageError);
}

TEST_CASE("prepared dataset round-trips through the directory format") {
  auto ds = testutil::small_dataset(900);
  const auto dir = fs::temp_directory_path() / "mirec_io_test" / "ds";
  fs::remove_all(dir.parent_path());
  io::write_dataset(dir.string(), ds);
  auto loaded = io::load_dataset(dir.string());

  CHECK(loaded.manifest == ds.manifest);
  CHECK(loaded.items.size() == ds.items.size());
  CHECK(loaded.items.hash() == ds.items.hash());
  REQUIRE(loaded.sides.size() == ds.sides.size());
  for (std::size_t f = 0; f < ds.sides.size(); ++f)
    CHECK(loaded.sides[f].hash() == ds.sides[f].hash());
  CHECK(loaded.meta == ds.meta);
  REQUIRE(loaded.train.size() == ds.train.size());
  REQUIRE(loaded.test.size() == ds.test.size());
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    CHECK(loaded.train[i].user_id == ds.train[i].user_id);
    CHECK(loaded.train[i].target_index == ds.train[i].target_index);
    CHECK(loaded.train[i].behavior_indices == ds.train[i].behavior_indices);
    CHECK(loaded.train[i].profile == ds.train[i].profile);
  }

  // Writing the loaded dataset again produces byte-identical files.
  const auto dir2 = fs::temp_directory_path() / "mirec_io_test" / "ds2";
  io::write_dataset(dir2.string(), loaded);
  for (const char* name : {"manifest.txt", "vocab_items.txt", "item_meta.tsv",
                           "train.bin", "test.bin"}) {
    CHECK(io::slurp((dir / name).string()) ==
          io::slurp((dir2 / name).string()));
  }
}

TEST_CASE("manifest records counts that match the instances") {
  auto ds = testutil::small_dataset(901);
  CHECK(ds.manifest.at("train_instances") == std::to_string(ds.train.size()));
  CHECK(ds.manifest.at("test_instances") == std::to_string(ds.test.size()));
  CHECK(ds.manifest.at("items") == std::to_string(ds.items.size() - 1));
  CHECK(ds.manifest.at("side_features") == std::to_string(ds.sides.size()));
}

TEST_CASE("profile files flow into instances") {
  config::RunConfig cfg;
  cfg.seed = 11;
  cfg.seed_set = true;
  cfg.min_item_interactions = 1;
  cfg.min_user_interactions = 1;

  std::vector<data::InteractionRecord> records;
  for (int u = 0; u < 4; ++u)
    for (int t = 1; t <= 5; ++t)
      records.push_back({"u" + std::to_string(u),
                         "i" + std::to_string((u + t) % 6),
                         {},
                         static_cast<std::int64_t>(t)});
  std::map<std::string, std::vector<std::string>> profiles = {
      {"u0", {"female", "18-24"}},
      {"u1", {"male", "25-34"}},
      {"u2", {"female", "35-44"}},
  };
  auto ds = io::prepare_dataset(records, cfg, &profiles);
  REQUIRE(ds.profiles.size() == 2);
  bool found_profiled = false, found_empty = false;
  for (const auto& inst : ds.train) {
    if (inst.user_id == "u3") {
      CHECK(inst.profile.empty());
      found_empty = true;
    } else if (!inst.profile.empty()) {
      REQUIRE(inst.profile.size() == 2);
      CHECK(inst.profile[0] ==
            ds.profiles[0].index_of(profiles.at(inst.user_id)[0]));
      found_profiled = true;
    }
  }
  CHECK(found_profiled);
  CHECK(found_empty);
}

TEST_CASE("synthetic log structure matches the generator parameters") {
  config::RunConfig cfg;
  cfg.seed = 77;
  cfg.seed_set = true;
  cfg.synthetic_users = 25;
  cfg.synthetic_clusters = 6;
  cfg.synthetic_items_per_cluster = 8;
  cfg.synthetic_clusters_per_user = 3;
  cfg.synthetic_events_per_user = 20;
  auto log = synthetic::generate_log(cfg);
  CHECK(log.size() == 25u * 20u);

  std::map<std::string, std::set<std::string>> user_clusters;
  for (const auto& r : log) {
    REQUIRE(r.side_ids.size() == 1);
    user_clusters[r.user_id].insert(r.side_ids[0]);
    // Item index encodes its cluster.
    const int item = std::stoi(r.item_id.substr(1));
    const int cluster = std::stoi(r.side_ids[0].substr(1));
    CHECK(item / cfg.synthetic_items_per_cluster == cluster);
  }
  CHECK(user_clusters.size() == 25);
  for (const auto& [user, clusters] : user_clusters)
    CHECK(clusters.size() <= 3);
}

TEST_SUITE_END();
