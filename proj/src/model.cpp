#include "mirec/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace mirec::model {

void AttentionConfig::validate() const {
  if (!hard && (!std::isfinite(p) || p < 0.0))
    throw UsageError("attention: p must be finite and >= 0, or hard mode");
}

void LossConfig::validate() const {
  if (negatives < 1) throw UsageError("loss: negatives must be >= 1");
}

int ModelParams::profile_dim() const {
  int total = 0;
  for (const auto& t : profiles) total += t.dim();
  return total;
}

ModelParams ModelParams::init(std::int32_t item_vocab,
                              const std::vector<std::int32_t>& side_vocabs,
                              const std::vector<std::int32_t>& profile_vocabs,
                              int dim, const TowerConfig& tower, Rng& rng) {
  ModelParams params;
  params.items = EmbeddingTable::init(item_vocab, dim, rng);
  for (std::int32_t v : side_vocabs)
    params.sides.push_back(EmbeddingTable::init(v, dim, rng));
  for (std::int32_t v : profile_vocabs)
    params.profiles.push_back(EmbeddingTable::init(v, dim, rng));

  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  params.bilinear.resize(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c)
      params.bilinear(r, c) = (2.0 * rng.uniform() - 1.0) * scale;

  std::vector<int> widths =
      tower.hidden_widths.empty() ? std::vector<int>{4 * dim}
                                  : tower.hidden_widths;
  const int output_dim = tower.output_dim == 0 ? dim : tower.output_dim;
  if (output_dim != dim)
    throw UsageError("tower output width must equal the embedding dim");
  widths.push_back(output_dim);

  int prev = params.tower_input_dim();
  for (int w : widths) {
    if (w < 1) throw UsageError("tower widths must be >= 1");
    const double s = 1.0 / std::sqrt(static_cast<double>(prev));
    Matrix weight(w, prev);
    for (int r = 0; r < w; ++r)
      for (int c = 0; c < prev; ++c)
        weight(r, c) = (2.0 * rng.uniform() - 1.0) * s;
    params.tower_w.push_back(std::move(weight));
    params.tower_b.push_back(Vector::Zero(w));
    prev = w;
  }
  return params;
}

bool ModelParams::all_finite() const {
  auto ok = [](const Matrix& m) { return m.allFinite(); };
  if (!ok(items.weights) || !ok(bilinear)) return false;
  for (const auto& t : sides)
    if (!ok(t.weights)) return false;
  for (const auto& t : profiles)
    if (!ok(t.weights)) return false;
  for (const auto& w : tower_w)
    if (!ok(w)) return false;
  for (const auto& b : tower_b)
    if (!b.allFinite()) return false;
  return true;
}

Grads Grads::zeros_like(const ModelParams& params) {
  Grads g;
  g.items = Matrix::Zero(params.items.weights.rows(), params.items.weights.cols());
  for (const auto& t : params.sides)
    g.sides.push_back(Matrix::Zero(t.weights.rows(), t.weights.cols()));
  for (const auto& t : params.profiles)
    g.profiles.push_back(Matrix::Zero(t.weights.rows(), t.weights.cols()));
  g.bilinear = Matrix::Zero(params.bilinear.rows(), params.bilinear.cols());
  for (const auto& w : params.tower_w)
    g.tower_w.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : params.tower_b)
    g.tower_b.push_back(Vector::Zero(b.size()));
  return g;
}

void Grads::set_zero() {
  items.setZero();
  for (auto& m : sides) m.setZero();
  for (auto& m : profiles) m.setZero();
  bilinear.setZero();
  for (auto& m : tower_w) m.setZero();
  for (auto& v : tower_b) v.setZero();
}

void Grads::scale(double s) {
  items *= s;
  for (auto& m : sides) m *= s;
  for (auto& m : profiles) m *= s;
  bilinear *= s;
  for (auto& m : tower_w) m *= s;
  for (auto& v : tower_b) v *= s;
}

NegativeSample sample_negatives(std::int32_t vocab_size, std::int32_t target,
                                int count, Rng& rng) {
  if (target < 1 || target >= vocab_size)
    throw DataError("negative sampling: target out of range");
  const std::int32_t available = vocab_size - 2;  // minus padding and target
  if (count > available)
    throw DataError("vocabulary smaller than negative sample count");

  NegativeSample out;
  const double log_range = std::log(static_cast<double>(vocab_size));
  auto rank_prob = [&](std::int32_t idx) {
    return std::log((idx + 1.0) / idx) / log_range;
  };

  if (count == available) {
    // Exhaustive candidates: every inclusion probability is exactly 1, so
    // the corrected loss coincides with the full softmax.
    for (std::int32_t i = 1; i < vocab_size; ++i) {
      if (i == target) continue;
      out.items.push_back(i);
      out.log_expected_count.push_back(0.0);
    }
    out.target_log_expected_count = 0.0;
    return out;
  }

  std::set<std::int32_t> chosen;
  std::int64_t tries = 0;
  while (static_cast<int>(chosen.size()) < count) {
    ++tries;
    const double x = std::exp(rng.uniform() * log_range);  // in [1, vocab)
    auto idx = static_cast<std::int32_t>(x);
    idx = std::min(idx, vocab_size - 1);
    if (idx == target || idx == 0) continue;
    chosen.insert(idx);
  }
  // Expected count of a unique sampler after `tries` draws:
  // 1 - (1 - p)^tries, computed in log space.
  auto log_expected = [&](std::int32_t idx) {
    const double p = rank_prob(idx);
    const double t = static_cast<double>(tries);
    return std::log(-std::expm1(t * std::log1p(-p)));
  };
  for (std::int32_t idx : chosen) {
    out.items.push_back(idx);
    out.log_expected_count.push_back(log_expected(idx));
  }
  out.target_log_expected_count = log_expected(target);
  return out;
}

ForwardRecord draw_forward_record(const TrainingInstance& instance,
                                  const ModelParams& params,
                                  const routing::RoutingConfig& routing_config,
                                  const LossConfig& loss_config, Rng& rng) {
  ForwardRecord record;
  std::vector<std::uint8_t> mask(instance.behavior_indices.size(), 0);
  int active = 0;
  for (std::size_t i = 0; i < instance.behavior_indices.size(); ++i) {
    if (instance.behavior_indices[i] != 0) {
      mask[i] = 1;
      ++active;
    }
  }
  if (active == 0) throw DataError("instance has no real behaviors");
  const int k = routing::adaptive_interest_count(active,
                                                 routing_config.max_interests);
  record.initial_logits =
      routing::sample_initial_logits(mask, k, routing_config.sigma, rng);

  auto negatives = sample_negatives(params.items.vocab_size(),
                                    instance.target_index,
                                    loss_config.negatives, rng);
  record.candidates.push_back(instance.target_index);
  record.log_expected_count.push_back(negatives.target_log_expected_count);
  for (std::size_t i = 0; i < negatives.items.size(); ++i) {
    record.candidates.push_back(negatives.items[i]);
    record.log_expected_count.push_back(negatives.log_expected_count[i]);
  }
  return record;
}

namespace {

std::span<const std::int32_t> sides_of(const ItemMeta& meta,
                                       std::int32_t item) {
  if (static_cast<std::size_t>(item) < meta.size()) return meta[item];
  return {};
}

Vector pooled_item_embedding(const ModelParams& params, const ItemMeta& meta,
                             std::int32_t item) {
  return embedding::embed_item(item, sides_of(meta, item), params.items,
                               params.sides);
}

// Scatters the gradient of a pooled item embedding back onto the item row
// and each present side row.
void scatter_item_grad(const ItemMeta& meta, std::int32_t item,
                       const Vector& g, Grads* grads) {
  auto sides = sides_of(meta, item);
  int present = 1;
  for (std::int32_t s : sides)
    if (s != 0) ++present;
  const double coeff = 1.0 / static_cast<double>(present);
  grads->items.row(item) += coeff * g.transpose();
  for (std::size_t f = 0; f < sides.size(); ++f) {
    if (sides[f] == 0) continue;
    grads->sides[f].row(sides[f]) += coeff * g.transpose();
  }
}

struct TowerForward {
  std::vector<Matrix> pre;  // per layer, (K', width)
  Matrix output;            // (K', output_dim)
};

TowerForward tower_forward(const ModelParams& params, const Matrix& inputs) {
  TowerForward fwd;
  const std::size_t layers = params.tower_w.size();
  Matrix h = inputs;  // (K', in)
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix pre = h * params.tower_w[l].transpose();
    pre.rowwise() += params.tower_b[l].transpose();
    fwd.pre.push_back(pre);
    if (l + 1 < layers)
      h = pre.cwiseMax(0.0);  // hidden layers are rectified
    else
      h = std::move(pre);  // affine output layer
  }
  fwd.output = std::move(h);
  return fwd;
}

// Backward through the shared tower. Returns gradient w.r.t. the inputs and
// accumulates weight/bias gradients.
Matrix tower_backward(const ModelParams& params, const Matrix& inputs,
                      const std::vector<Matrix>& pre, const Matrix& g_output,
                      Grads* grads) {
  const std::size_t layers = params.tower_w.size();
  // Recompute per-layer activations from the cached pre-activations.
  std::vector<Matrix> acts(layers + 1);
  acts[0] = inputs;
  for (std::size_t l = 0; l + 1 < layers; ++l) acts[l + 1] = pre[l].cwiseMax(0.0);

  Matrix g_h = g_output;
  for (std::size_t l = layers; l-- > 0;) {
    Matrix g_pre = g_h;
    if (l + 1 < layers)  // hidden layer: rectifier mask
      g_pre = (pre[l].array() > 0.0).cast<double>() * g_pre.array();
    grads->tower_w[l].noalias() += g_pre.transpose() * acts[l];
    grads->tower_b[l] += g_pre.colwise().sum().transpose();
    g_h.noalias() = g_pre * params.tower_w[l];
  }
  return g_h;  // gradient w.r.t. inputs, (K', in)
}

}  // namespace

Matrix serving_logits(std::span<const std::int32_t> behaviors,
                      int interest_count, double sigma, std::uint64_t salt) {
  std::vector<std::uint8_t> mask(behaviors.size(), 0);
  for (std::size_t i = 0; i < behaviors.size(); ++i)
    if (behaviors[i] != 0) mask[i] = 1;
  Rng rng(behavior_hash(behaviors, salt));
  return routing::sample_initial_logits(mask, interest_count, sigma, rng);
}

InstanceCache user_representations(std::span<const std::int32_t> behaviors,
                                   std::span<const std::int32_t> profile,
                                   const ModelParams& params,
                                   const ItemMeta& meta,
                                   const routing::RoutingConfig& routing_config,
                                   const Matrix& initial_logits) {
  InstanceCache cache;
  cache.behaviors =
      embedding::embed_behaviors(behaviors, params.items, params.sides, meta);
  cache.routing =
      routing::b2i_forward(cache.behaviors.rows, cache.behaviors.mask,
                           params.bilinear, routing_config, initial_logits);
  cache.profile_vec = embedding::embed_profile(profile, params.profiles);

  const Matrix& capsules = cache.routing.interest_capsules();
  const int k = cache.routing.interest_count;
  Matrix inputs(k, params.tower_input_dim());
  inputs.leftCols(params.dim()) = capsules;
  if (cache.profile_vec.size() > 0)
    inputs.rightCols(cache.profile_vec.size()).rowwise() =
        cache.profile_vec.transpose();

  auto tower = tower_forward(params, inputs);
  cache.tower_pre = std::move(tower.pre);
  cache.representations = std::move(tower.output);
  return cache;
}

AttentionResult label_aware_attention(const Matrix& representations,
                                      const Vector& item_embedding,
                                      const AttentionConfig& config) {
  config.validate();
  if (representations.rows() < 1)
    throw UsageError("attention needs at least one interest vector");
  AttentionResult result;
  result.scores = representations * item_embedding;
  const auto k = result.scores.size();

  if (config.hard) {
    int best = 0;
    for (Eigen::Index i = 1; i < k; ++i)
      if (result.scores(i) > result.scores(best)) best = static_cast<int>(i);
    result.selected = best;
    result.weights = Vector::Zero(k);
    result.weights(best) = 1.0;
    result.output = representations.row(best).transpose();
    return result;
  }

  // softmax(pow(max(score, 0), p)); negative scores contribute exp(0).
  Vector powered(k);
  for (Eigen::Index i = 0; i < k; ++i)
    powered(i) = std::pow(std::max(result.scores(i), 0.0), config.p);
  const double m = powered.maxCoeff();
  Vector expd = (powered.array() - m).exp();
  result.weights = expd / expd.sum();
  result.output = representations.transpose() * result.weights;
  return result;
}

double score(const Matrix& representations, const Vector& item_embedding) {
  return (representations * item_embedding).maxCoeff();
}

double sampled_softmax_loss(const Vector& blended,
                            const Matrix& candidate_embeddings,
                            std::span<const double> log_expected_count,
                            Vector* probs) {
  const auto n = candidate_embeddings.rows();
  if (n < 1 || static_cast<std::size_t>(n) != log_expected_count.size())
    throw UsageError("sampled softmax: candidate shapes disagree");
  Vector logits = candidate_embeddings * blended;
  for (Eigen::Index i = 0; i < n; ++i)
    logits(i) -= log_expected_count[static_cast<std::size_t>(i)];
  const double lmax = logits.maxCoeff();
  Vector expd = (logits.array() - lmax).exp();
  const double denom = expd.sum();
  if (probs) *probs = expd / denom;
  return -(logits(0) - lmax - std::log(denom));
}

double instance_loss(const TrainingInstance& instance,
                     const ModelParams& params, const ItemMeta& meta,
                     const ModelConfigs& configs, const ForwardRecord& record,
                     InstanceCache* cache) {
  InstanceCache local;
  InstanceCache& c = cache ? *cache : local;
  c = user_representations(instance.behavior_indices, instance.profile, params,
                           meta, configs.routing, record.initial_logits);

  c.target_embedding =
      pooled_item_embedding(params, meta, instance.target_index);
  auto attention = label_aware_attention(c.representations, c.target_embedding,
                                         configs.attention);
  c.attention_scores = std::move(attention.scores);
  c.attention_weights = std::move(attention.weights);
  c.selected = attention.selected;
  c.blended = std::move(attention.output);

  const auto n = static_cast<Eigen::Index>(record.candidates.size());
  c.candidate_embeddings.resize(n, params.dim());
  for (Eigen::Index i = 0; i < n; ++i)
    c.candidate_embeddings.row(i) =
        pooled_item_embedding(params, meta, record.candidates[i]).transpose();
  return sampled_softmax_loss(c.blended, c.candidate_embeddings,
                              record.log_expected_count, &c.candidate_probs);
}

void instance_backward(const TrainingInstance& instance,
                       const ModelParams& params, const ItemMeta& meta,
                       const ModelConfigs& configs, const ForwardRecord& record,
                       const InstanceCache& cache, Grads* grads) {
  const auto n = static_cast<Eigen::Index>(record.candidates.size());
  // d loss / d logits = probs - onehot(target)
  Vector g_logits = cache.candidate_probs;
  g_logits(0) -= 1.0;

  Vector g_blended = cache.candidate_embeddings.transpose() * g_logits;
  // Candidate embeddings: target gets an extra term from the attention query
  // below; negatives only appear here.
  std::vector<Vector> g_candidates(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    g_candidates[static_cast<std::size_t>(i)] = g_logits(i) * cache.blended;

  // Attention backward.
  const Matrix& reps = cache.representations;
  Matrix g_reps = Matrix::Zero(reps.rows(), reps.cols());
  Vector g_query = Vector::Zero(params.dim());
  if (configs.attention.hard) {
    g_reps.row(cache.selected) += g_blended.transpose();
    // Selection is treated as a constant: no gradient to the query.
  } else {
    const Vector& w = cache.attention_weights;
    g_reps += w * g_blended.transpose();
    Vector g_w = reps * g_blended;
    const double inner = w.dot(g_w);
    Vector g_powered = (w.array() * (g_w.array() - inner)).matrix();
    Vector g_scores = Vector::Zero(w.size());
    if (configs.attention.p > 0.0) {
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double s = cache.attention_scores(i);
        if (s > 0.0)
          g_scores(i) =
              g_powered(i) * configs.attention.p * std::pow(s, configs.attention.p - 1.0);
      }
    }
    g_reps += g_scores * cache.target_embedding.transpose();
    g_query += reps.transpose() * g_scores;
  }
  g_candidates[0] += g_query;

  for (Eigen::Index i = 0; i < n; ++i)
    scatter_item_grad(meta, record.candidates[i],
                      g_candidates[static_cast<std::size_t>(i)], grads);

  // Tower backward (shared weights across capsules).
  const Matrix& capsules = cache.routing.interest_capsules();
  const int k = cache.routing.interest_count;
  Matrix inputs(k, params.tower_input_dim());
  inputs.leftCols(params.dim()) = capsules;
  if (cache.profile_vec.size() > 0)
    inputs.rightCols(cache.profile_vec.size()).rowwise() =
        cache.profile_vec.transpose();
  Matrix g_inputs =
      tower_backward(params, inputs, cache.tower_pre, g_reps, grads);

  // Profile gradient: summed over capsules (the same concatenation feeds
  // every tower row).
  if (cache.profile_vec.size() > 0) {
    Vector g_profile =
        g_inputs.rightCols(cache.profile_vec.size()).colwise().sum().transpose();
    int offset = 0;
    for (std::size_t f = 0; f < instance.profile.size(); ++f) {
      const int fdim = params.profiles[f].dim();
      grads->profiles[f].row(instance.profile[f]) +=
          g_profile.segment(offset, fdim).transpose();
      offset += fdim;
    }
  }

  // Routing backward, then scatter behavior-embedding gradients.
  Matrix g_capsules = g_inputs.leftCols(params.dim());
  auto routing_grads =
      routing::b2i_backward(cache.routing, params.bilinear, g_capsules);
  grads->bilinear += routing_grads.d_bilinear;
  for (std::size_t i = 0; i < instance.behavior_indices.size(); ++i) {
    const std::int32_t item = instance.behavior_indices[i];
    if (item == 0) continue;
    scatter_item_grad(meta, item,
                      routing_grads.d_behaviors.row(static_cast<Eigen::Index>(i))
                          .transpose(),
                      grads);
  }
}

TrainState TrainState::init(const ModelParams& params, double learning_rate) {
  TrainState state;
  state.learning_rate = learning_rate;
  state.first_moment = Grads::zeros_like(params);
  state.second_moment = Grads::zeros_like(params);
  return state;
}

namespace {

template <typename T>
void adam_tensor(T& param, T& m, T& v, const T& g, const TrainState& s) {
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  m = s.beta1 * m + (1.0 - s.beta1) * g;
  v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
  param.array() -= s.learning_rate * (m.array() / c1) /
                   ((v.array() / c2).sqrt() + s.epsilon);
}

}  // namespace

void adam_update(ModelParams* params, TrainState* state, const Grads& grads) {
  ++state->step;
  Grads g = grads;
  // Padding rows are never updated; with their gradients pinned to zero the
  // moments stay zero and the rows remain exactly zero.
  g.items.row(0).setZero();
  for (auto& m : g.sides) m.row(0).setZero();
  for (auto& m : g.profiles) m.row(0).setZero();

  adam_tensor(params->items.weights, state->first_moment.items,
              state->second_moment.items, g.items, *state);
  for (std::size_t i = 0; i < params->sides.size(); ++i)
    adam_tensor(params->sides[i].weights, state->first_moment.sides[i],
                state->second_moment.sides[i], g.sides[i], *state);
  for (std::size_t i = 0; i < params->profiles.size(); ++i)
    adam_tensor(params->profiles[i].weights, state->first_moment.profiles[i],
                state->second_moment.profiles[i], g.profiles[i], *state);
  adam_tensor(params->bilinear, state->first_moment.bilinear,
              state->second_moment.bilinear, g.bilinear, *state);
  for (std::size_t i = 0; i < params->tower_w.size(); ++i) {
    adam_tensor(params->tower_w[i], state->first_moment.tower_w[i],
                state->second_moment.tower_w[i], g.tower_w[i], *state);
    adam_tensor(params->tower_b[i], state->first_moment.tower_b[i],
                state->second_moment.tower_b[i], g.tower_b[i], *state);
  }
}

double train_step(std::span<const TrainingInstance> batch,
                  ModelParams* params, TrainState* state, const ItemMeta& meta,
                  const ModelConfigs& configs, std::uint64_t run_seed) {
  if (batch.empty()) throw UsageError("train_step: empty batch");
  Grads grads = Grads::zeros_like(*params);
  double total = 0.0;
  std::vector<std::string> bad_instances;
  for (const auto& instance : batch) {
    Rng rng(mix_seed(run_seed, state->instance_counter++));
    auto record = draw_forward_record(instance, *params, configs.routing,
                                      configs.loss, rng);
    InstanceCache cache;
    const double loss =
        instance_loss(instance, *params, meta, configs, record, &cache);
    if (!std::isfinite(loss)) {
      bad_instances.push_back(instance.user_id);
      continue;
    }
    total += loss;
    instance_backward(instance, *params, meta, configs, record, cache, &grads);
  }
  if (!bad_instances.empty()) {
    std::ostringstream msg;
    msg << "non-finite loss for instances:";
    for (const auto& id : bad_instances) msg << ' ' << id;
    throw NumericError(msg.str());
  }
  grads.scale(1.0 / static_cast<double>(batch.size()));
  adam_update(params, state, grads);
  return total / static_cast<double>(batch.size());
}

GradCheckResult gradient_check(const TrainingInstance& instance,
                               const ModelParams& params, const ItemMeta& meta,
                               const ModelConfigs& configs,
                               const ForwardRecord& record, double fd_step,
                               std::size_t coords_per_group, Rng& rng) {
  InstanceCache cache;
  instance_loss(instance, params, meta, configs, record, &cache);
  Grads analytic = Grads::zeros_like(params);
  instance_backward(instance, params, meta, configs, record, cache, &analytic);

  ModelParams work = params;
  GradCheckResult result;

  auto check_group = [&](double* data, const double* grad, std::size_t total) {
    std::vector<std::size_t> coords;
    if (total <= coords_per_group) {
      coords.resize(total);
      for (std::size_t i = 0; i < total; ++i) coords[i] = i;
    } else {
      std::set<std::size_t> picked;
      while (picked.size() < coords_per_group)
        picked.insert(static_cast<std::size_t>(rng.uniform_int(total)));
      coords.assign(picked.begin(), picked.end());
    }
    for (std::size_t flat : coords) {
      double* ptr = data + flat;
      const double saved = *ptr;
      *ptr = saved + fd_step;
      const double up =
          instance_loss(instance, work, meta, configs, record, nullptr);
      *ptr = saved - fd_step;
      const double down =
          instance_loss(instance, work, meta, configs, record, nullptr);
      *ptr = saved;
      const double numeric = (up - down) / (2.0 * fd_step);
      const double a = grad[flat];
      const double err =
          std::abs(a - numeric) / std::max(1e-5, std::abs(a) + std::abs(numeric));
      result.max_relative_error = std::max(result.max_relative_error, err);
      ++result.coordinates_checked;
    }
  };

  check_group(work.items.weights.data(), analytic.items.data(),
              static_cast<std::size_t>(work.items.weights.size()));
  for (std::size_t i = 0; i < work.sides.size(); ++i)
    check_group(work.sides[i].weights.data(), analytic.sides[i].data(),
                static_cast<std::size_t>(work.sides[i].weights.size()));
  for (std::size_t i = 0; i < work.profiles.size(); ++i)
    check_group(work.profiles[i].weights.data(), analytic.profiles[i].data(),
                static_cast<std::size_t>(work.profiles[i].weights.size()));
  check_group(work.bilinear.data(), analytic.bilinear.data(),
              static_cast<std::size_t>(work.bilinear.size()));
  for (std::size_t i = 0; i < work.tower_w.size(); ++i)
    check_group(work.tower_w[i].data(), analytic.tower_w[i].data(),
                static_cast<std::size_t>(work.tower_w[i].size()));
  for (std::size_t i = 0; i < work.tower_b.size(); ++i)
    check_group(work.tower_b[i].data(), analytic.tower_b[i].data(),
                static_cast<std::size_t>(work.tower_b[i].size()));
  return result;
}

}  // namespace mirec::model
