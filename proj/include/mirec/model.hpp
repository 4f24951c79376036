#pragma once

#include "mirec/common.hpp"
#include "mirec/data.hpp"
#include "mirec/embedding.hpp"
#include "mirec/routing.hpp"
#include "mirec/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mirec::model {

using data::TrainingInstance;
using embedding::EmbeddingTable;
using embedding::ItemMeta;

/// Shared ReLU tower applied to each [capsule ; profile] concatenation.
/// Hidden layers are rectified; the output layer is affine so the tower can
/// represent pass-through. Output width equals the embedding dim.
struct TowerConfig {
  std::vector<int> hidden_widths;  // default set to {4 * dim}
  int output_dim = 0;
};

/// Label-aware attention sharpness. p = 0 gives uniform attention over the
/// capsules; larger p concentrates weight on the best-scoring capsule; hard
/// mode picks the argmax capsule outright (the p -> infinity limit).
struct AttentionConfig {
  double p = 1.0;
  bool hard = true;

  void validate() const;
};

struct LossConfig {
  int negatives = 10;  // sampled per instance, log-uniform over freq rank

  void validate() const;
};

/// Everything the optimizer updates.
struct ModelParams {
  EmbeddingTable items;                   // shared behavior/label table
  std::vector<EmbeddingTable> sides;      // all dim d
  std::vector<EmbeddingTable> profiles;   // dims may vary per feature
  Matrix bilinear;                        // S, (d, d)
  std::vector<Matrix> tower_w;            // per layer, (out, in)
  std::vector<Vector> tower_b;

  int dim() const { return items.dim(); }
  int profile_dim() const;
  int tower_input_dim() const { return dim() + profile_dim(); }

  static ModelParams init(std::int32_t item_vocab,
                          const std::vector<std::int32_t>& side_vocabs,
                          const std::vector<std::int32_t>& profile_vocabs,
                          int dim, const TowerConfig& tower, Rng& rng);

  bool all_finite() const;
};

/// Gradient (or Adam-moment) container shaped like ModelParams.
struct Grads {
  Matrix items;
  std::vector<Matrix> sides;
  std::vector<Matrix> profiles;
  Matrix bilinear;
  std::vector<Matrix> tower_w;
  std::vector<Vector> tower_b;

  static Grads zeros_like(const ModelParams& params);
  void set_zero();
  void scale(double s);
};

/// Frozen per-instance stochasticity: the sampled routing logits and the
/// negative candidates with their log expected sampling counts. Replaying a
/// record makes the loss a deterministic function of the parameters, which
/// is what both the backward pass and finite differencing require.
struct ForwardRecord {
  Matrix initial_logits;                  // (m, K')
  std::vector<std::int32_t> candidates;   // target first, then negatives
  std::vector<double> log_expected_count; // aligned with candidates
};

/// Log-uniform (Zipf-like) sampler over frequency ranks; vocab indices are
/// already frequency-ordered, so rank == index. Draws `count` unique
/// negatives excluding the target and padding. When count equals the number
/// of available items the sampler enumerates them all and every expected
/// count is exactly 1, which reduces the loss to the full softmax.
struct NegativeSample {
  std::vector<std::int32_t> items;
  std::vector<double> log_expected_count;  // of the sampled items
  double target_log_expected_count = 0.0;
};
NegativeSample sample_negatives(std::int32_t vocab_size, std::int32_t target,
                                int count, Rng& rng);

ForwardRecord draw_forward_record(const TrainingInstance& instance,
                                  const ModelParams& params,
                                  const routing::RoutingConfig& routing_config,
                                  const LossConfig& loss_config, Rng& rng);

/// Recorded forward state of one instance evaluation.
struct InstanceCache {
  embedding::BehaviorEmbeddings behaviors;
  routing::RoutingForward routing;
  Vector profile_vec;
  std::vector<Matrix> tower_pre;   // per layer, (K', width): pre-activation
  Matrix representations;          // V_u, (K', d)
  Vector target_embedding;         // pooled e_i
  Vector attention_scores;         // s_k = V_k . e_i
  Vector attention_weights;
  int selected = -1;               // hard-mode argmax (ties -> lowest k)
  Vector blended;                  // v_u
  Matrix candidate_embeddings;     // (|candidates|, d), pooled
  Vector candidate_probs;          // softmax over corrected logits
};

/// V_u = f_user(I_u, P_u): routing capsules -> concat profile -> shared
/// tower. Returns the full cache; use .representations for V_u.
InstanceCache user_representations(std::span<const std::int32_t> behaviors,
                                   std::span<const std::int32_t> profile,
                                   const ModelParams& params,
                                   const ItemMeta& meta,
                                   const routing::RoutingConfig& routing_config,
                                   const Matrix& initial_logits);

/// Serving-side convenience: deterministic logits derived from the behavior
/// list, so repeated requests reproduce the same interest vectors.
Matrix serving_logits(std::span<const std::int32_t> behaviors,
                      int interest_count, double sigma, std::uint64_t salt);

struct AttentionResult {
  Vector scores;
  Vector weights;
  Vector output;
  int selected = -1;
};

/// The label is the query; the interest capsules are keys and values.
/// Soft mode: weights = softmax(pow(max(score, 0), p)). Hard mode returns
/// the argmax-score row (ties -> lowest index).
AttentionResult label_aware_attention(const Matrix& representations,
                                      const Vector& item_embedding,
                                      const AttentionConfig& config);

/// Retrieval score: max over interests of the item/interest dot product.
double score(const Matrix& representations, const Vector& item_embedding);

struct ModelConfigs {
  routing::RoutingConfig routing;
  AttentionConfig attention;
  LossConfig loss;
};

/// Cross-entropy of candidate 0 (the target) under softmax of the corrected
/// logits dot(v_u, e_c) - log_expected_count[c]. With exhaustive candidates
/// the corrections vanish and this is the exact full-softmax loss.
double sampled_softmax_loss(const Vector& blended,
                            const Matrix& candidate_embeddings,
                            std::span<const double> log_expected_count,
                            Vector* probs = nullptr);

/// Negative log-likelihood of the target under the sampled softmax with the
/// standard log-expected-count logit correction. Deterministic given the
/// record. Pass cache to keep the forward state for the backward pass.
double instance_loss(const TrainingInstance& instance,
                     const ModelParams& params, const ItemMeta& meta,
                     const ModelConfigs& configs, const ForwardRecord& record,
                     InstanceCache* cache);

/// Accumulates dLoss/dParams into grads (does not zero it first).
void instance_backward(const TrainingInstance& instance,
                       const ModelParams& params, const ItemMeta& meta,
                       const ModelConfigs& configs, const ForwardRecord& record,
                       const InstanceCache& cache, Grads* grads);

/// Adam optimizer state. Padding rows of all embedding tables are excluded
/// from updates and therefore stay exactly zero.
struct TrainState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::int64_t epochs_done = 0;
  std::uint64_t instance_counter = 0;  // per-instance rng stream position
  Grads first_moment;
  Grads second_moment;

  static TrainState init(const ModelParams& params, double learning_rate);
};

void adam_update(ModelParams* params, TrainState* state, const Grads& grads);

/// One Adam step over the mean per-instance loss of the batch. Per-instance
/// randomness comes from streams derived of (run_seed, instance_counter), so
/// training is reproducible and resumable. Throws NumericError naming the
/// offending instances if the batch loss is not finite.
double train_step(std::span<const TrainingInstance> batch,
                  ModelParams* params, TrainState* state, const ItemMeta& meta,
                  const ModelConfigs& configs, std::uint64_t run_seed);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
};

/// Central finite differences vs the analytic gradient of the full loss,
/// with the record's stochastic choices frozen. Samples up to
/// coords_per_group coordinates from every parameter group.
GradCheckResult gradient_check(const TrainingInstance& instance,
                               const ModelParams& params, const ItemMeta& meta,
                               const ModelConfigs& configs,
                               const ForwardRecord& record, double fd_step,
                               std::size_t coords_per_group, Rng& rng);

}  // namespace mirec::model
