#pragma once

#include "mirec/common.hpp"
#include "mirec/rng.hpp"

#include <cstdint>
#include <vector>

namespace mirec::routing {

struct RoutingConfig {
  int max_interests = 5;  // K: upper bound on interest capsules
  int iterations = 3;     // r: routing repetitions
  double sigma = 1.0;     // std-dev of the Gaussian logit init
  // When false, coupling weights are treated as constants in the backward
  // pass (ablation); the default differentiates the fully unrolled loop.
  bool backprop_through_couplings = true;

  void validate() const;
};

/// K' = max(1, min(K, log2(num_behaviors))), truncated toward zero after the
/// clamp. Users with few behaviors get fewer interest capsules.
int adaptive_interest_count(int num_behaviors, int max_interests);

/// Norm-compressing nonlinearity: keeps direction, maps |z| to
/// |z|^2 / (1 + |z|^2) in [0, 1). squash(0) = 0 (continuous limit).
Vector squash(const Vector& z);

/// Recorded forward pass of behavior-to-interest routing. Holds every
/// per-iteration intermediate needed to differentiate the unrolled loop.
struct RoutingForward {
  RoutingConfig config;
  std::vector<std::uint8_t> mask;  // 1 = real behavior
  int active = 0;                  // number of unmasked behaviors
  int interest_count = 0;          // K'

  Matrix behaviors;     // E, (m, d); padded rows zeroed
  Matrix transformed;   // X = E * S^T, rows are S e_i
  Matrix initial_logits;  // the sampled (frozen) b at iteration 0

  // Per-iteration state, one entry per routing iteration.
  std::vector<Matrix> logits;      // b at iteration start, (m, K')
  std::vector<Matrix> couplings;   // w = per-behavior softmax, padded rows 0
  std::vector<Matrix> pre_squash;  // z, (K', d)
  std::vector<Matrix> capsules;    // u = squash(z), (K', d)

  Matrix final_logits;  // b after the last agreement update

  /// Interest capsules V of shape (K', d); rows have norm < 1.
  const Matrix& interest_capsules() const { return capsules.back(); }
  /// Coupling coefficients that produced the returned capsules. Each real
  /// behavior row is a distribution over the K' interests.
  const Matrix& coupling_matrix() const { return couplings.back(); }
};

/// Samples initial logits ~ N(0, sigma^2) for real behaviors in row-major
/// order; padded rows stay zero. Split out so tests and serving can pin the
/// exact draw sequence.
Matrix sample_initial_logits(const std::vector<std::uint8_t>& mask,
                             int interest_count, double sigma, Rng& rng);

/// B2I dynamic routing with explicitly provided initial logits.
/// behaviors is (m, d) with padded rows arbitrary (they are zeroed); mask
/// flags real rows. Throws if no behavior is unmasked.
RoutingForward b2i_forward(const Matrix& behaviors,
                           const std::vector<std::uint8_t>& mask,
                           const Matrix& bilinear, const RoutingConfig& config,
                           const Matrix& initial_logits);

/// B2I dynamic routing, sampling the initial logits from rng.
RoutingForward b2i_routing(const Matrix& behaviors,
                           const std::vector<std::uint8_t>& mask,
                           const Matrix& bilinear, const RoutingConfig& config,
                           Rng& rng);

struct RoutingGrads {
  Matrix d_behaviors;  // (m, d); padded rows zero
  Matrix d_bilinear;   // (d, d)
};

/// Reverse-mode gradients through the recorded forward pass. The sampled
/// initial logits are treated as constants. upstream is (K', d), the
/// gradient of the loss w.r.t. the returned capsules.
RoutingGrads b2i_backward(const RoutingForward& fwd, const Matrix& bilinear,
                          const Matrix& upstream);

}  // namespace mirec::routing
