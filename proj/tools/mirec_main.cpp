// mirec: multi-interest matching-stage recommender.
// Subcommands: prepare, train, eval, sweep, inspect, retrieve.
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include "mirec/checkpoint.hpp"
#include "mirec/config.hpp"
#include "mirec/evaluation.hpp"
#include "mirec/io.hpp"
#include "mirec/synthetic.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace mirec;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

config::RunConfig load_config(const CommonArgs& args) {
  config::RunConfig cfg;
  if (!args.config_path.empty())
    cfg = config::RunConfig::parse_file(args.config_path);
  for (const auto& o : args.overrides) {
    auto [key, value] = config::parse_override(o);
    cfg.apply(key, value);
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs* args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args->config_path,
                              "key = value config file");
  if (config_required) opt->required();
  cmd->add_option("--set", args->overrides,
                  "override a config key (key=value, wins over the file)");
}

void check_vocab_hashes(const checkpoint::Checkpoint& ckpt,
                        const io::Dataset& ds) {
  bool ok = ckpt.item_vocab_hash == ds.items.hash() &&
            ckpt.side_vocab_hashes.size() == ds.sides.size() &&
            ckpt.profile_vocab_hashes.size() == ds.profiles.size();
  for (std::size_t f = 0; ok && f < ds.sides.size(); ++f)
    ok = ckpt.side_vocab_hashes[f] == ds.sides[f].hash();
  for (std::size_t f = 0; ok && f < ds.profiles.size(); ++f)
    ok = ckpt.profile_vocab_hashes[f] == ds.profiles[f].hash();
  if (!ok)
    throw DataError(
        "vocabulary hash mismatch between checkpoint and data; refusing to "
        "run");
}

checkpoint::Checkpoint make_checkpoint(const config::RunConfig& cfg,
                                       const io::Dataset& ds,
                                       const model::ModelParams& params,
                                       const model::TrainState& state) {
  checkpoint::Checkpoint ckpt;
  ckpt.config_text = cfg.canonical_text();
  ckpt.item_vocab_hash = ds.items.hash();
  for (const auto& v : ds.sides) ckpt.side_vocab_hashes.push_back(v.hash());
  for (const auto& v : ds.profiles)
    ckpt.profile_vocab_hashes.push_back(v.hash());
  ckpt.params = params;
  ckpt.state = state;
  return ckpt;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

// ---------------------------------------------------------------------------

int cmd_prepare(const CommonArgs& common, const std::string& input,
                bool synthetic, const std::string& profiles_path,
                const std::string& out_dir) {
  auto cfg = load_config(common);
  if (!synthetic && input.empty())
    throw UsageError("prepare needs --input <log> or --synthetic");
  if (synthetic && !input.empty())
    throw UsageError("--input and --synthetic are mutually exclusive");

  fs::create_directories(out_dir);
  std::vector<data::InteractionRecord> records;
  std::size_t malformed = 0;
  if (synthetic) {
    records = synthetic::generate_log(cfg);
    io::spit((fs::path(out_dir) / "synthetic.log").string(),
             synthetic::to_log_text(records));
  } else {
    auto ingest = data::ingest_interactions_file(input);
    records = std::move(ingest.records);
    malformed = ingest.errors.size();
    if (!ingest.errors.empty()) {
      std::ostringstream report;
      for (const auto& e : ingest.errors)
        report << "line " << e.line_number << ": " << e.message << '\n';
      io::spit((fs::path(out_dir) / "ingest_errors.txt").string(),
               report.str());
    }
  }

  std::map<std::string, std::vector<std::string>> profiles;
  const auto* profiles_ptr = &profiles;
  if (!profiles_path.empty())
    profiles = io::load_profile_file(profiles_path);
  else
    profiles_ptr = nullptr;

  auto ds = io::prepare_dataset(records, cfg, profiles_ptr);
  io::write_dataset(out_dir, ds);
  io::spit((fs::path(out_dir) / "config.txt").string(), cfg.canonical_text());

  std::printf("prepared %s\n", out_dir.c_str());
  std::printf("  config_digest    %s\n", cfg.digest().c_str());
  std::printf("  users            %s\n", ds.manifest.at("users").c_str());
  std::printf("  items            %s\n", ds.manifest.at("items").c_str());
  std::printf("  train_instances  %zu\n", ds.train.size());
  std::printf("  test_instances   %zu\n", ds.test.size());
  if (malformed) std::printf("  malformed_lines  %zu\n", malformed);
  return 0;
}

int cmd_train(const CommonArgs& common, const std::string& data_dir,
              const std::string& out_dir, const std::string& resume_path) {
  auto ds = io::load_dataset(data_dir);

  config::RunConfig cfg;
  model::ModelParams params;
  model::TrainState state;
  if (!resume_path.empty()) {
    auto ckpt = checkpoint::load(resume_path);
    check_vocab_hashes(ckpt, ds);
    cfg = config::RunConfig::parse_text(ckpt.config_text);
    if (!common.config_path.empty())
      cfg = config::RunConfig::parse_file(common.config_path);
    for (const auto& o : common.overrides) {
      auto [key, value] = config::parse_override(o);
      cfg.apply(key, value);
    }
    cfg.validate();
    params = std::move(ckpt.params);
    state = std::move(ckpt.state);
    state.learning_rate = cfg.learning_rate;
  } else {
    cfg = load_config(common);
    params = evaluation::init_params(ds, cfg, cfg.seed);
    state = model::TrainState::init(params, cfg.learning_rate);
  }

  fs::create_directories(out_dir);
  io::spit((fs::path(out_dir) / "config.txt").string(), cfg.canonical_text());
  std::ofstream log(fs::path(out_dir) / "train_log.csv",
                    resume_path.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw DataError("cannot write training log in " + out_dir);
  if (resume_path.empty()) log << "step,loss,learning_rate,wall_ms\n";
  const auto start = std::chrono::steady_clock::now();

  const std::string final_path =
      (fs::path(out_dir) / "checkpoint_final.ckpt").string();
  auto save_epoch = [&](std::int64_t epoch, const model::ModelParams& p,
                        const model::TrainState& s) {
    if ((epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.epochs) {
      const auto path = fs::path(out_dir) /
                        ("checkpoint_epoch" + std::to_string(epoch + 1) +
                         ".ckpt");
      checkpoint::save(path.string(), make_checkpoint(cfg, ds, p, s));
    }
  };

  evaluation::TrainHooks hooks;
  hooks.on_step = [&](std::int64_t step, double loss, double lr) {
    const auto now = std::chrono::steady_clock::now();
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(now - start)
            .count();
    char line[128];
    std::snprintf(line, sizeof(line), "%lld,%.9g,%.9g,%lld\n",
                  static_cast<long long>(step), loss, lr,
                  static_cast<long long>(ms));
    log << line;
  };
  hooks.on_epoch = save_epoch;

  try {
    evaluation::run_training(ds, cfg, cfg.seed, &params, &state, &hooks);
  } catch (const NumericError& e) {
    // Keep the last per-epoch checkpoint; report which one survived.
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    std::fprintf(stderr, "last good checkpoint: epoch %lld in %s\n",
                 static_cast<long long>(state.epochs_done), out_dir.c_str());
    return 3;
  }
  checkpoint::save(final_path, make_checkpoint(cfg, ds, params, state));
  std::printf("trained %lld epochs (%lld steps); checkpoint at %s\n",
              static_cast<long long>(state.epochs_done),
              static_cast<long long>(state.step), final_path.c_str());
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& checkpoint_path,
             const std::string& data_dir, const std::string& out_path,
             bool compare, int runs, bool ann, int partitions, int probes) {
  auto ds = io::load_dataset(data_dir);
  std::string text;
  if (compare) {
    auto cfg = load_config(common);
    auto report = evaluation::run_comparison(ds, cfg, runs);
    text = report.to_text();
  } else {
    if (checkpoint_path.empty())
      throw UsageError("eval needs --checkpoint (or --compare)");
    auto ckpt = checkpoint::load(checkpoint_path);
    check_vocab_hashes(ckpt, ds);
    auto cfg = config::RunConfig::parse_text(ckpt.config_text);
    evaluation::RetrievalMode mode;
    mode.ann = ann;
    mode.probes = probes;
    auto cell = evaluation::evaluate_checkpoint(ds, cfg, ckpt.params, mode,
                                                ann ? partitions : 0);
    evaluation::EvalReport report;
    report.config_digest = cfg.digest();
    report.split_digest = evaluation::dataset_digest(ds);
    report.test_instances = ds.test.size();
    report.seeds = {cfg.seed};
    report.cells = {cell};
    text = report.to_text();
  }
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    io::spit(out_path, text);
    std::printf("report written to %s\n", out_path.c_str());
  }
  return 0;
}

int cmd_sweep(const CommonArgs& common, const std::string& data_dir,
              const std::string& axis, const std::string& grid_csv, int runs,
              const std::string& out_path) {
  auto cfg = load_config(common);
  auto ds = io::load_dataset(data_dir);
  auto grid = split_list(grid_csv);
  if (grid.empty()) throw UsageError("sweep needs a non-empty --grid");
  evaluation::SweepReport report;
  if (axis == "sigma") {
    std::vector<double> values;
    for (const auto& g : grid) values.push_back(std::stod(g));
    report = evaluation::sweep_sigma(ds, cfg, values, runs);
  } else if (axis == "p") {
    report = evaluation::sweep_p(ds, cfg, grid, runs);
  } else {
    throw UsageError("sweep axis must be 'sigma' or 'p'");
  }
  const auto text = report.to_text();
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    io::spit(out_path, text);
    std::printf("sweep written to %s\n", out_path.c_str());
  }
  return 0;
}

int cmd_inspect(const std::string& checkpoint_path, const std::string& data_dir,
                const std::string& side, std::size_t instance_idx,
                const std::string& user, int candidates,
                const std::string& out_dir) {
  auto ds = io::load_dataset(data_dir);
  auto ckpt = checkpoint::load(checkpoint_path);
  check_vocab_hashes(ckpt, ds);
  auto cfg = config::RunConfig::parse_text(ckpt.config_text);

  const auto& pool = side == "train" ? ds.train : ds.test;
  if (pool.empty()) throw DataError("selected split is empty");
  std::size_t idx = instance_idx;
  if (!user.empty()) {
    idx = pool.size();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool[i].user_id == user) {
        idx = i;
        break;
      }
    }
    if (idx == pool.size()) throw DataError("no instance for user " + user);
  }
  if (idx >= pool.size()) throw DataError("instance index out of range");
  const auto& inst = pool[idx];

  fs::create_directories(out_dir);
  const auto coupling = evaluation::coupling_report(
      inst, ckpt.params, ds, cfg.routing_config(), cfg.seed);
  io::spit((fs::path(out_dir) / "coupling.tsv").string(), coupling);
  const auto simdist = evaluation::similarity_distribution(
      inst, ckpt.params, ds, cfg.routing_config(), candidates, cfg.seed);
  io::spit((fs::path(out_dir) / "simdist.tsv").string(), simdist);
  std::printf("inspection of %s (%s[%zu]) written to %s\n",
              inst.user_id.c_str(), side.c_str(), idx, out_dir.c_str());
  return 0;
}

int cmd_retrieve(const std::string& checkpoint_path,
                 const std::string& data_dir, const std::string& items_csv,
                 const std::string& profile_csv, int topn, bool ann,
                 int partitions, int probes, const std::string& out_path) {
  auto ds = io::load_dataset(data_dir);
  auto ckpt = checkpoint::load(checkpoint_path);
  check_vocab_hashes(ckpt, ds);
  auto cfg = config::RunConfig::parse_text(ckpt.config_text);

  data::TrainingInstance inst;
  inst.user_id = "query";
  for (const auto& id : split_list(items_csv)) {
    const auto idx = ds.items.index_of(id);
    if (idx == data::Vocabulary::kPadIndex) {
      std::fprintf(stderr, "warning: unknown item id %s skipped\n", id.c_str());
      continue;
    }
    inst.behavior_indices.push_back(idx);
  }
  if (inst.behavior_indices.empty())
    throw DataError("no known item ids among the query behaviors");
  const auto profile_values = split_list(profile_csv);
  if (profile_values.size() > ds.profiles.size())
    throw DataError("more profile values than profile features");
  for (std::size_t f = 0; f < profile_values.size(); ++f)
    inst.profile.push_back(ds.profiles[f].index_of(profile_values[f]));

  const auto rc = cfg.routing_config();
  const Matrix vectors =
      evaluation::serve_user_vectors(inst, ckpt.params, ds, rc, cfg.seed);
  auto index = evaluation::build_item_index(ckpt.params, ds,
                                            ann ? partitions : 0, cfg.seed);
  const auto result = ann ? retrieval::ann_topn(vectors, index, topn, probes)
                          : retrieval::exact_topn(vectors, index, topn);

  std::ostringstream out;
  out << "rank\titem_id\tscore\tinterest\n";
  for (std::size_t r = 0; r < result.size(); ++r) {
    char line[128];
    std::snprintf(line, sizeof(line), "%zu\t%s\t%.9g\t%d\n", r + 1,
                  result[r].id.c_str(), result[r].score, result[r].interest);
    out << line;
  }
  if (out_path.empty()) {
    std::fputs(out.str().c_str(), stdout);
  } else {
    io::spit(out_path, out.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-interest matching-stage recommender"};
  app.require_subcommand(1);

  // prepare
  CommonArgs prep_common;
  std::string prep_input, prep_profiles, prep_out;
  bool prep_synthetic = false;
  auto* prep = app.add_subcommand(
      "prepare", "ingest, filter, split and materialize a dataset");
  add_common(prep, &prep_common);
  prep->add_option("--input", prep_input, "raw interaction log");
  prep->add_flag("--synthetic", prep_synthetic,
                 "generate the multi-interest synthetic log instead");
  prep->add_option("--profiles", prep_profiles, "optional user profile file");
  prep->add_option("--out", prep_out, "output dataset directory")->required();

  // train
  CommonArgs train_common;
  std::string train_data, train_out, train_resume;
  auto* train = app.add_subcommand("train", "train a model on prepared data");
  add_common(train, &train_common, /*config_required=*/false);
  train->add_option("--data", train_data, "prepared dataset directory")
      ->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--resume", train_resume, "checkpoint to resume from");

  // eval
  CommonArgs eval_common;
  std::string eval_ckpt, eval_data, eval_out;
  bool eval_compare = false, eval_ann = false;
  int eval_runs = 5, eval_partitions = 0, eval_probes = 0;
  auto* eval = app.add_subcommand("eval", "hit-rate evaluation / comparison");
  add_common(eval, &eval_common, /*config_required=*/false);
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint to evaluate");
  eval->add_option("--data", eval_data, "prepared dataset directory")
      ->required();
  eval->add_option("--out", eval_out, "report path (stdout when omitted)");
  eval->add_flag("--compare", eval_compare,
                 "train and compare multi/single interest and popularity");
  eval->add_option("--runs", eval_runs, "seeds per method in --compare");
  eval->add_flag("--ann", eval_ann, "evaluate with approximate retrieval");
  eval->add_option("--partitions", eval_partitions, "ann partition count");
  eval->add_option("--probes", eval_probes, "ann probes per interest");

  // sweep
  CommonArgs sweep_common;
  std::string sweep_data, sweep_axis, sweep_grid, sweep_out;
  int sweep_runs = 5;
  auto* sweep = app.add_subcommand("sweep", "hyperparameter sweep");
  add_common(sweep, &sweep_common);
  sweep->add_option("--data", sweep_data, "prepared dataset directory")
      ->required();
  sweep->add_option("--axis", sweep_axis, "sigma or p")->required();
  sweep->add_option("--grid", sweep_grid, "comma-separated grid values")
      ->required();
  sweep->add_option("--runs", sweep_runs, "seeds per grid value");
  sweep->add_option("--out", sweep_out, "report path (stdout when omitted)");

  // inspect
  std::string insp_ckpt, insp_data, insp_side = "test", insp_user, insp_out;
  std::size_t insp_idx = 0;
  int insp_candidates = 20;
  auto* inspect = app.add_subcommand(
      "inspect", "coupling and similarity reports for one instance");
  inspect->add_option("--checkpoint", insp_ckpt)->required();
  inspect->add_option("--data", insp_data)->required();
  inspect->add_option("--from", insp_side, "test or train (default test)");
  inspect->add_option("--instance", insp_idx, "instance index");
  inspect->add_option("--user", insp_user, "pick the first instance of a user");
  inspect->add_option("--candidates", insp_candidates,
                      "retrieved candidates per interest");
  inspect->add_option("--out", insp_out, "output directory")->required();

  // retrieve
  std::string ret_ckpt, ret_data, ret_items, ret_profile, ret_out;
  int ret_topn = 10, ret_partitions = 0, ret_probes = 0;
  bool ret_ann = false;
  auto* retrieve =
      app.add_subcommand("retrieve", "top-N items for a behavior list");
  retrieve->add_option("--checkpoint", ret_ckpt)->required();
  retrieve->add_option("--data", ret_data)->required();
  retrieve->add_option("--items", ret_items, "comma-separated item ids")
      ->required();
  retrieve->add_option("--profile", ret_profile,
                       "comma-separated profile values");
  retrieve->add_option("--topn", ret_topn, "number of items to retrieve");
  retrieve->add_flag("--ann", ret_ann, "approximate retrieval");
  retrieve->add_option("--partitions", ret_partitions, "ann partition count");
  retrieve->add_option("--probes", ret_probes, "ann probes per interest");
  retrieve->add_option("--out", ret_out, "output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
    if (prep->parsed())
      return cmd_prepare(prep_common, prep_input, prep_synthetic,
                         prep_profiles, prep_out);
    if (train->parsed())
      return cmd_train(train_common, train_data, train_out, train_resume);
    if (eval->parsed())
      return cmd_eval(eval_common, eval_ckpt, eval_data, eval_out,
                      eval_compare, eval_runs, eval_ann, eval_partitions,
                      eval_probes);
    if (sweep->parsed())
      return cmd_sweep(sweep_common, sweep_data, sweep_axis, sweep_grid,
                       sweep_runs, sweep_out);
    if (inspect->parsed())
      return cmd_inspect(insp_ckpt, insp_data, insp_side, insp_idx, insp_user,
                         insp_candidates, insp_out);
    if (retrieve->parsed())
      return cmd_retrieve(ret_ckpt, ret_data, ret_items, ret_profile, ret_topn,
                          ret_ann, ret_partitions, ret_probes, ret_out);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
