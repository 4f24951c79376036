#include "mirec/evaluation.hpp"

#include "mirec/embedding.hpp"
#include "mirec/rng.hpp"
#include "mirec/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

namespace mirec::evaluation {

namespace {

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Runs fn(i) for i in [0, n) on a small pool; each task writes only its own
// slot, so results are independent of scheduling.
void parallel_cells(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::string dataset_digest(const io::Dataset& dataset) {
  std::ostringstream text;
  for (const auto& [k, v] : dataset.manifest) text << k << '=' << v << '\n';
  return to_hex(fnv1a64(text.str()));
}

model::ModelParams init_params(const io::Dataset& dataset,
                               const config::RunConfig& cfg,
                               std::uint64_t seed) {
  Rng rng(mix_seed(seed, /*tag=*/7));
  return model::ModelParams::init(dataset.items.size(),
                                  dataset.side_vocab_sizes(),
                                  dataset.profile_vocab_sizes(), cfg.dim,
                                  cfg.tower_config(), rng);
}

retrieval::ItemIndex build_item_index(const model::ModelParams& params,
                                      const io::Dataset& dataset,
                                      int partitions, std::uint64_t seed) {
  const std::int32_t vocab = dataset.items.size();
  Matrix embeddings(vocab - 1, params.dim());
  std::vector<std::int32_t> indices;
  std::vector<std::string> ids;
  for (std::int32_t i = 1; i < vocab; ++i) {
    embeddings.row(i - 1) =
        embedding::embed_item(i, dataset.meta[static_cast<std::size_t>(i)],
                              params.items, params.sides)
            .transpose();
    indices.push_back(i);
    ids.push_back(dataset.items.id_of(i));
  }
  return retrieval::build_index(std::move(embeddings), std::move(indices),
                                std::move(ids), partitions, seed);
}

Matrix serve_user_vectors(const data::TrainingInstance& instance,
                          const model::ModelParams& params,
                          const io::Dataset& dataset,
                          const routing::RoutingConfig& routing_config,
                          std::uint64_t salt) {
  int active = 0;
  for (std::int32_t b : instance.behavior_indices)
    if (b != 0) ++active;
  const int k =
      routing::adaptive_interest_count(active, routing_config.max_interests);
  const Matrix logits = model::serving_logits(
      instance.behavior_indices, k, routing_config.sigma, salt);
  auto cache = model::user_representations(
      instance.behavior_indices, instance.profile, params, dataset.meta,
      routing_config, logits);
  return cache.representations;
}

void run_training(const io::Dataset& dataset, const config::RunConfig& cfg,
                  std::uint64_t run_seed, model::ModelParams* params,
                  model::TrainState* state, const TrainHooks* hooks) {
  if (dataset.train.empty()) throw DataError("training split is empty");
  model::ModelConfigs configs{cfg.routing_config(), cfg.attention_config(),
                              cfg.loss_config()};
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (std::int64_t epoch = state->epochs_done; epoch < cfg.epochs; ++epoch) {
    std::vector<data::TrainingInstance> order = dataset.train;
    Rng shuffle_rng(mix_seed(run_seed, 0xE0000 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      const double loss = model::train_step(
          std::span<const data::TrainingInstance>(order.data() + start, len),
          params, state, dataset.meta, configs, run_seed);
      if (hooks && hooks->on_step)
        hooks->on_step(state->step, loss, state->learning_rate);
    }
    ++state->epochs_done;
    if (hooks && hooks->on_epoch) hooks->on_epoch(epoch, *params, *state);
  }
}

std::vector<double> hit_rates(const std::vector<data::TrainingInstance>& instances,
                              const retrieval::ItemIndex& index,
                              const std::vector<int>& ns,
                              const UserVectorsFn& user_vectors,
                              const RetrievalMode& mode) {
  if (instances.empty()) throw DataError("hit rate needs a non-empty test set");
  for (std::size_t i = 1; i < ns.size(); ++i)
    if (ns[i] <= ns[i - 1]) throw UsageError("hit rate Ns must be ascending");
  const int max_n = ns.back();
  std::vector<std::int64_t> hits(ns.size(), 0);
  for (const auto& inst : instances) {
    const Matrix vectors = user_vectors(inst);
    const auto top = mode.ann
                         ? retrieval::ann_topn(vectors, index, max_n, mode.probes)
                         : retrieval::exact_topn(vectors, index, max_n);
    int rank = -1;
    for (std::size_t r = 0; r < top.size(); ++r) {
      if (top[r].item_index == inst.target_index) {
        rank = static_cast<int>(r);
        break;
      }
    }
    if (rank < 0) continue;
    for (std::size_t k = 0; k < ns.size(); ++k)
      if (rank < ns[k]) ++hits[k];
  }
  std::vector<double> rates;
  for (std::int64_t h : hits)
    rates.push_back(static_cast<double>(h) /
                    static_cast<double>(instances.size()));
  return rates;
}

double hit_rate(const std::vector<data::TrainingInstance>& instances,
                const retrieval::ItemIndex& index, int n,
                const UserVectorsFn& user_vectors, const RetrievalMode& mode) {
  return hit_rates(instances, index, {n}, user_vectors, mode)[0];
}

std::vector<std::int32_t> popularity_ranking(const io::Dataset& dataset) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(dataset.items.size()),
                                   0);
  for (const auto& inst : dataset.train)
    ++counts[static_cast<std::size_t>(inst.target_index)];
  std::vector<std::int32_t> ranking;
  for (std::int32_t i = 1; i < dataset.items.size(); ++i) ranking.push_back(i);
  std::sort(ranking.begin(), ranking.end(), [&](std::int32_t a, std::int32_t b) {
    const auto ca = counts[static_cast<std::size_t>(a)];
    const auto cb = counts[static_cast<std::size_t>(b)];
    if (ca != cb) return ca > cb;
    return dataset.items.id_of(a) < dataset.items.id_of(b);
  });
  return ranking;
}

double popularity_hit_rate(const io::Dataset& dataset,
                           const std::vector<std::int32_t>& ranking, int n) {
  if (dataset.test.empty()) throw DataError("empty test split");
  const auto cut = std::min<std::size_t>(static_cast<std::size_t>(n),
                                         ranking.size());
  std::vector<bool> in_top(static_cast<std::size_t>(dataset.items.size()), false);
  for (std::size_t i = 0; i < cut; ++i)
    in_top[static_cast<std::size_t>(ranking[i])] = true;
  std::int64_t hits = 0;
  for (const auto& inst : dataset.test)
    if (in_top[static_cast<std::size_t>(inst.target_index)]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(dataset.test.size());
}

namespace {

const std::vector<int> kReportNs = {10, 50, 100};

EvalCell evaluate_trained(const io::Dataset& dataset,
                          const config::RunConfig& cfg,
                          const model::ModelParams& params,
                          const RetrievalMode& mode, const std::string& method,
                          std::uint64_t seed, int partitions = 0) {
  auto index = build_item_index(params, dataset, partitions, cfg.seed);
  const auto routing_config = cfg.routing_config();
  auto vectors_fn = [&](const data::TrainingInstance& inst) {
    return serve_user_vectors(inst, params, dataset, routing_config, cfg.seed);
  };
  auto rates = hit_rates(dataset.test, index, kReportNs, vectors_fn, mode);
  EvalCell cell;
  cell.method = method;
  cell.seed = seed;
  cell.hr10 = rates[0];
  cell.hr50 = rates[1];
  cell.hr100 = rates[2];
  return cell;
}

}  // namespace

EvalCell evaluate_checkpoint(const io::Dataset& dataset,
                             const config::RunConfig& cfg,
                             const model::ModelParams& params,
                             const RetrievalMode& mode, int partitions) {
  return evaluate_trained(dataset, cfg, params, mode, "checkpoint", cfg.seed,
                          partitions);
}

double EvalReport::mean(const std::string& method, int n) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& c : cells) {
    if (c.method != method || c.failed) continue;
    sum += n == 10 ? c.hr10 : n == 50 ? c.hr50 : c.hr100;
    ++count;
  }
  return count ? sum / count : 0.0;
}

double EvalReport::stddev(const std::string& method, int n) const {
  const double m = mean(method, n);
  double sum = 0.0;
  int count = 0;
  for (const auto& c : cells) {
    if (c.method != method || c.failed) continue;
    const double v = (n == 10 ? c.hr10 : n == 50 ? c.hr50 : c.hr100) - m;
    sum += v * v;
    ++count;
  }
  return count > 1 ? std::sqrt(sum / (count - 1)) : 0.0;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << "mirec.report.v1\n";
  out << "config_digest = " << config_digest << '\n';
  out << "split_digest = " << split_digest << '\n';
  out << "test_instances = " << test_instances << '\n';
  out << "seeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out << ',';
    out << seeds[i];
  }
  out << '\n';
  out << "method\tseed\thr@10\thr@50\thr@100\tstatus\n";
  for (const auto& c : cells) {
    out << c.method << '\t' << c.seed << '\t' << format_rate(c.hr10) << '\t'
        << format_rate(c.hr50) << '\t' << format_rate(c.hr100) << '\t'
        << (c.failed ? "diverged" : "ok") << '\n';
  }
  out << "aggregate\tmethod\tmetric\tmean\tstddev\trel_vs_single\n";
  std::vector<std::string> methods;
  for (const auto& c : cells)
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
      methods.push_back(c.method);
  for (const auto& method : methods) {
    for (int n : kReportNs) {
      const double m = mean(method, n);
      const double base = mean("single_interest", n);
      std::string rel = "-";
      if (base > 0.0) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%+.2f%%", (m - base) / base * 100.0);
        rel = buf;
      }
      out << "aggregate\t" << method << "\thr@" << n << '\t' << format_rate(m)
          << '\t' << format_rate(stddev(method, n)) << '\t' << rel << '\n';
    }
  }
  return out.str();
}

EvalReport run_comparison(const io::Dataset& dataset,
                          const config::RunConfig& cfg, int runs) {
  if (runs < 1) throw UsageError("comparison needs at least one run");
  EvalReport report;
  report.config_digest = cfg.digest();
  report.split_digest = dataset_digest(dataset);
  report.test_instances = dataset.test.size();
  for (int i = 0; i < runs; ++i)
    report.seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));

  struct Job {
    std::string method;
    int interests;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto seed : report.seeds) {
    jobs.push_back({"multi_interest", cfg.max_interests, seed});
    jobs.push_back({"single_interest", 1, seed});
  }
  std::vector<EvalCell> trained(jobs.size());
  parallel_cells(jobs.size(), [&](std::size_t j) {
    const Job& job = jobs[j];
    config::RunConfig run_cfg = cfg;
    run_cfg.max_interests = job.interests;
    EvalCell cell;
    cell.method = job.method;
    cell.seed = job.seed;
    try {
      auto params = init_params(dataset, run_cfg, job.seed);
      auto state = model::TrainState::init(params, run_cfg.learning_rate);
      run_training(dataset, run_cfg, job.seed, &params, &state);
      cell = evaluate_trained(dataset, run_cfg, params, {}, job.method, job.seed);
    } catch (const NumericError&) {
      cell.failed = true;
    }
    trained[j] = cell;
  });
  report.cells = std::move(trained);

  // Popularity is deterministic: one cell per seed for table symmetry.
  auto ranking = popularity_ranking(dataset);
  for (auto seed : report.seeds) {
    EvalCell cell;
    cell.method = "popularity";
    cell.seed = seed;
    cell.hr10 = popularity_hit_rate(dataset, ranking, 10);
    cell.hr50 = popularity_hit_rate(dataset, ranking, 50);
    cell.hr100 = popularity_hit_rate(dataset, ranking, 100);
    report.cells.push_back(cell);
  }
  return report;
}

double SweepReport::final_mean(const std::string& value) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& c : cells) {
    if (c.value != value) continue;
    sum += c.final_hr10();
    ++count;
  }
  return count ? sum / count : 0.0;
}

std::string SweepReport::to_text() const {
  std::ostringstream out;
  out << "mirec.sweep.v1\n";
  out << "axis = " << axis << '\n';
  out << "config_digest = " << config_digest << '\n';
  out << "split_digest = " << split_digest << '\n';
  out << "grid = ";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i) out << ',';
    out << grid[i];
  }
  out << '\n';
  out << "seeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out << ',';
    out << seeds[i];
  }
  out << '\n';
  out << "value\tseed\tepoch\thr@10\n";
  for (const auto& c : cells) {
    for (std::size_t e = 0; e < c.hr10_by_epoch.size(); ++e)
      out << c.value << '\t' << c.seed << '\t' << e << '\t'
          << format_rate(c.hr10_by_epoch[e]) << '\n';
  }
  out << "final\tvalue\tmean_hr@10\n";
  for (const auto& v : grid)
    out << "final\t" << v << '\t' << format_rate(final_mean(v)) << '\n';
  return out.str();
}

namespace {

SweepReport run_sweep(const io::Dataset& dataset, const config::RunConfig& cfg,
                      const std::string& axis,
                      const std::vector<std::string>& grid, int runs,
                      const std::function<void(config::RunConfig*,
                                               const std::string&)>& apply) {
  if (runs < 1) throw UsageError("sweep needs at least one run");
  if (grid.empty()) throw UsageError("sweep grid is empty");
  SweepReport report;
  report.axis = axis;
  report.config_digest = cfg.digest();
  report.split_digest = dataset_digest(dataset);
  report.grid = grid;
  for (int i = 0; i < runs; ++i)
    report.seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));

  struct Job {
    std::string value;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& value : grid)
    for (auto seed : report.seeds) jobs.push_back({value, seed});

  std::vector<SweepCell> cells(jobs.size());
  parallel_cells(jobs.size(), [&](std::size_t j) {
    const Job& job = jobs[j];
    config::RunConfig run_cfg = cfg;
    apply(&run_cfg, job.value);
    SweepCell cell;
    cell.value = job.value;
    cell.seed = job.seed;
    auto params = init_params(dataset, run_cfg, job.seed);
    auto state = model::TrainState::init(params, run_cfg.learning_rate);
    const auto routing_config = run_cfg.routing_config();
    TrainHooks hooks;
    hooks.on_epoch = [&](std::int64_t, const model::ModelParams& p,
                         const model::TrainState&) {
      auto index = build_item_index(p, dataset, 0, run_cfg.seed);
      auto vectors_fn = [&](const data::TrainingInstance& inst) {
        return serve_user_vectors(inst, p, dataset, routing_config,
                                  run_cfg.seed);
      };
      cell.hr10_by_epoch.push_back(
          hit_rate(dataset.test, index, 10, vectors_fn));
    };
    run_training(dataset, run_cfg, job.seed, &params, &state, &hooks);
    cells[j] = std::move(cell);
  });
  report.cells = std::move(cells);
  return report;
}

}  // namespace

SweepReport sweep_sigma(const io::Dataset& dataset, const config::RunConfig& cfg,
                        const std::vector<double>& grid, int runs) {
  std::vector<std::string> labels;
  for (double v : grid) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    labels.emplace_back(buf);
  }
  return run_sweep(dataset, cfg, "sigma", labels, runs,
                   [](config::RunConfig* c, const std::string& v) {
                     c->sigma = std::stod(v);
                   });
}

SweepReport sweep_p(const io::Dataset& dataset, const config::RunConfig& cfg,
                    const std::vector<std::string>& grid, int runs) {
  return run_sweep(dataset, cfg, "p", grid, runs,
                   [](config::RunConfig* c, const std::string& v) {
                     if (v == "hard") {
                       c->attention_hard = true;
                     } else {
                       c->attention_hard = false;
                       c->attention_p = std::stod(v);
                     }
                   });
}

std::string coupling_report(const data::TrainingInstance& instance,
                            const model::ModelParams& params,
                            const io::Dataset& dataset,
                            const routing::RoutingConfig& routing_config,
                            std::uint64_t salt) {
  auto behaviors = embedding::embed_behaviors(
      instance.behavior_indices, params.items, params.sides, dataset.meta);
  int active = 0;
  for (auto m : behaviors.mask)
    if (m) ++active;
  const int k =
      routing::adaptive_interest_count(active, routing_config.max_interests);
  const Matrix logits = model::serving_logits(
      instance.behavior_indices, k, routing_config.sigma, salt);
  auto fwd = routing::b2i_forward(behaviors.rows, behaviors.mask,
                                  params.bilinear, routing_config, logits);
  const Matrix& w = fwd.coupling_matrix();

  std::ostringstream out;
  out << "mirec.coupling.v1\n";
  out << "user = " << instance.user_id << '\n';
  out << "interests = " << fwd.interest_count << '\n';
  out << "position\titem_id\tcategory\t";
  for (int j = 0; j < fwd.interest_count; ++j) {
    if (j) out << '\t';
    out << 'w' << j;
  }
  out << '\n';
  for (std::size_t i = 0; i < instance.behavior_indices.size(); ++i) {
    const std::int32_t item = instance.behavior_indices[i];
    if (item == 0) continue;
    std::string category = "-";
    if (!dataset.sides.empty() &&
        dataset.meta[static_cast<std::size_t>(item)][0] != 0)
      category = dataset.sides[0].id_of(
          dataset.meta[static_cast<std::size_t>(item)][0]);
    out << i << '\t' << dataset.items.id_of(item) << '\t' << category;
    for (int j = 0; j < fwd.interest_count; ++j) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.9f",
                    w(static_cast<Eigen::Index>(i), j));
      out << '\t' << buf;
    }
    out << '\n';
  }
  return out.str();
}

CouplingDump parse_coupling_report(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "mirec.coupling.v1")
    throw DataError("bad coupling report header");
  CouplingDump dump;
  if (!std::getline(in, line) || line.rfind("user = ", 0) != 0)
    throw DataError("bad coupling report user line");
  dump.user_id = line.substr(7);
  if (!std::getline(in, line) || line.rfind("interests = ", 0) != 0)
    throw DataError("bad coupling report interests line");
  dump.interests = std::stoi(line.substr(12));
  if (!std::getline(in, line))  // column header
    throw DataError("bad coupling report columns");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    CouplingRow row;
    std::getline(ss, field, '\t');
    row.position = std::stoi(field);
    std::getline(ss, row.item_id, '\t');
    std::getline(ss, row.category, '\t');
    while (std::getline(ss, field, '\t')) row.weights.push_back(std::stod(field));
    if (static_cast<int>(row.weights.size()) != dump.interests)
      throw DataError("coupling row width mismatch");
    dump.rows.push_back(std::move(row));
  }
  return dump;
}

std::string similarity_distribution(const data::TrainingInstance& instance,
                                    const model::ModelParams& params,
                                    const io::Dataset& dataset,
                                    const routing::RoutingConfig& routing_config,
                                    int candidates_per_interest,
                                    std::uint64_t salt) {
  if (candidates_per_interest < 1)
    throw UsageError("similarity distribution needs >= 1 candidate");
  const Matrix vectors =
      serve_user_vectors(instance, params, dataset, routing_config, salt);
  auto index = build_item_index(params, dataset, 0, salt);

  std::ostringstream out;
  out << "mirec.simdist.v1\n";
  out << "user = " << instance.user_id << '\n';
  out << "candidates_per_interest = " << candidates_per_interest << '\n';
  out << "interest\tbucket\tcount\n";
  for (Eigen::Index k = 0; k < vectors.rows(); ++k) {
    auto top = retrieval::exact_topn(vectors.row(k), index,
                                     candidates_per_interest);
    double lo = top.front().score, hi = top.front().score;
    for (const auto& t : top) {
      lo = std::min(lo, t.score);
      hi = std::max(hi, t.score);
    }
    std::map<double, std::int64_t> buckets;
    for (const auto& t : top) {
      double normalized = 1.0;  // all-equal similarities: single 1.0 bucket
      if (hi > lo) normalized = (t.score - lo) / (hi - lo);
      const double bucket = std::round(normalized * 2.0) / 2.0;
      ++buckets[bucket];
    }
    for (const auto& [bucket, count] : buckets) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.1f", bucket);
      out << k << '\t' << buf << '\t' << count << '\n';
    }
  }
  return out.str();
}

}  // namespace mirec::evaluation
