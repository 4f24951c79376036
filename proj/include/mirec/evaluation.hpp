#pragma once

#include "mirec/checkpoint.hpp"
#include "mirec/config.hpp"
#include "mirec/io.hpp"
#include "mirec/model.hpp"
#include "mirec/retrieval.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mirec::evaluation {

/// Digest identifying a prepared split (manifest content hash); embedded in
/// every report so comparisons are verifiably over identical data.
std::string dataset_digest(const io::Dataset& dataset);

model::ModelParams init_params(const io::Dataset& dataset,
                               const config::RunConfig& cfg,
                               std::uint64_t seed);

/// Pooled embeddings of every real item, ready for retrieval.
retrieval::ItemIndex build_item_index(const model::ModelParams& params,
                                      const io::Dataset& dataset,
                                      int partitions, std::uint64_t seed);

/// Serving-side user vectors: deterministic routing logits derived from the
/// behavior list, then capsules -> tower.
Matrix serve_user_vectors(const data::TrainingInstance& instance,
                          const model::ModelParams& params,
                          const io::Dataset& dataset,
                          const routing::RoutingConfig& routing_config,
                          std::uint64_t salt);

struct TrainHooks {
  std::function<void(std::int64_t step, double loss, double lr)> on_step;
  std::function<void(std::int64_t epoch, const model::ModelParams& params,
                     const model::TrainState& state)>
      on_epoch;
};

/// Runs (cfg.epochs - state->epochs_done) training epochs. Shuffling and all
/// per-instance randomness derive from run_seed and the state counters, so
/// a resumed run continues the exact sequence of the uninterrupted one.
void run_training(const io::Dataset& dataset, const config::RunConfig& cfg,
                  std::uint64_t run_seed, model::ModelParams* params,
                  model::TrainState* state, const TrainHooks* hooks = nullptr);

using UserVectorsFn = std::function<Matrix(const data::TrainingInstance&)>;

struct RetrievalMode {
  bool ann = false;
  int probes = 0;
};

/// Fraction of instances whose target appears in the retrieved top N.
double hit_rate(const std::vector<data::TrainingInstance>& instances,
                const retrieval::ItemIndex& index, int n,
                const UserVectorsFn& user_vectors,
                const RetrievalMode& mode = {});

/// One retrieval pass per instance, shared across the (sorted ascending) N
/// grid; returns one hit rate per N.
std::vector<double> hit_rates(const std::vector<data::TrainingInstance>& instances,
                              const retrieval::ItemIndex& index,
                              const std::vector<int>& ns,
                              const UserVectorsFn& user_vectors,
                              const RetrievalMode& mode = {});

/// Items ranked by train-target frequency (descending), ties by ascending
/// item id: the popularity baseline's fixed recommendation list.
std::vector<std::int32_t> popularity_ranking(const io::Dataset& dataset);

double popularity_hit_rate(const io::Dataset& dataset,
                           const std::vector<std::int32_t>& ranking, int n);

struct EvalCell {
  std::string method;
  std::uint64_t seed = 0;
  double hr10 = 0.0, hr50 = 0.0, hr100 = 0.0;
  bool failed = false;  // training divergence; other cells unaffected
};

struct EvalReport {
  std::string config_digest;
  std::string split_digest;
  std::size_t test_instances = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<EvalCell> cells;

  double mean(const std::string& method, int n) const;
  double stddev(const std::string& method, int n) const;
  std::string to_text() const;
};

/// Trains multi_interest (K from config), single_interest (K=1) and scores
/// the popularity baseline on the shared split, one run per seed.
/// seeds are cfg.seed + i for i in [0, runs).
EvalReport run_comparison(const io::Dataset& dataset,
                          const config::RunConfig& cfg, int runs);

/// Hit rates of one trained model on the shared split (no retraining).
/// partitions > 0 builds a partitioned index (required for ann mode).
EvalCell evaluate_checkpoint(const io::Dataset& dataset,
                             const config::RunConfig& cfg,
                             const model::ModelParams& params,
                             const RetrievalMode& mode = {},
                             int partitions = 0);

struct SweepCell {
  std::string value;
  std::uint64_t seed = 0;
  std::vector<double> hr10_by_epoch;  // evaluated at each epoch end

  double final_hr10() const {
    return hr10_by_epoch.empty() ? 0.0 : hr10_by_epoch.back();
  }
};

struct SweepReport {
  std::string axis;  // "sigma" or "p"
  std::string config_digest;
  std::string split_digest;
  std::vector<std::string> grid;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepCell> cells;

  double final_mean(const std::string& value) const;
  std::string to_text() const;
};

/// Varies only sigma; every other hyperparameter and the split stay fixed.
SweepReport sweep_sigma(const io::Dataset& dataset, const config::RunConfig& cfg,
                        const std::vector<double>& grid, int runs);

/// Varies only the attention exponent; grid entries are numbers or "hard".
SweepReport sweep_p(const io::Dataset& dataset, const config::RunConfig& cfg,
                    const std::vector<std::string>& grid, int runs);

/// Coupling-coefficient dump for one user instance (heatmap input): one row
/// per behavior with its item id, category label and the K' weights.
std::string coupling_report(const data::TrainingInstance& instance,
                            const model::ModelParams& params,
                            const io::Dataset& dataset,
                            const routing::RoutingConfig& routing_config,
                            std::uint64_t salt);

struct CouplingRow {
  int position = 0;
  std::string item_id;
  std::string category;
  std::vector<double> weights;
};

struct CouplingDump {
  std::string user_id;
  int interests = 0;
  std::vector<CouplingRow> rows;
};

CouplingDump parse_coupling_report(const std::string& text);

/// Per-interest similarity histogram of retrieved candidates: similarities
/// are min-max normalized to [0, 1] and rounded to the nearest 0.5; emits
/// (interest, bucket, count) rows. All-equal similarities collapse to the
/// 1.0 bucket.
std::string similarity_distribution(const data::TrainingInstance& instance,
                                    const model::ModelParams& params,
                                    const io::Dataset& dataset,
                                    const routing::RoutingConfig& routing_config,
                                    int candidates_per_interest,
                                    std::uint64_t salt);

}  // namespace mirec::evaluation
