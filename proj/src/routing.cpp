#include "mirec/routing.hpp"

#include <algorithm>
#include <cmath>

namespace mirec::routing {

void RoutingConfig::validate() const {
  if (max_interests < 1) throw UsageError("routing: max_interests must be >= 1");
  if (iterations < 1) throw UsageError("routing: iterations must be >= 1");
  if (sigma < 0.0 || !std::isfinite(sigma))
    throw UsageError("routing: sigma must be finite and >= 0");
}

int adaptive_interest_count(int num_behaviors, int max_interests) {
  if (num_behaviors < 1 || max_interests < 1)
    throw UsageError("adaptive_interest_count: arguments must be >= 1");
  const double raw = std::log2(static_cast<double>(num_behaviors));
  const double clamped =
      std::max(1.0, std::min(static_cast<double>(max_interests), raw));
  return static_cast<int>(clamped);  // truncation toward zero after the clamp
}

Vector squash(const Vector& z) {
  const double norm_sq = z.squaredNorm();
  if (norm_sq == 0.0) return Vector::Zero(z.size());
  const double norm = std::sqrt(norm_sq);
  return z * (norm / (1.0 + norm_sq));
}

Matrix sample_initial_logits(const std::vector<std::uint8_t>& mask,
                             int interest_count, double sigma, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(mask.size());
  Matrix logits = Matrix::Zero(m, interest_count);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    for (int j = 0; j < interest_count; ++j)
      logits(i, j) = rng.normal(0.0, sigma);
  }
  return logits;
}

namespace {

// Per-behavior softmax over the interest axis; padded rows come out zero so
// they contribute nothing to the weighted sums or agreement updates.
Matrix coupling_softmax(const Matrix& logits,
                        const std::vector<std::uint8_t>& mask) {
  Matrix w = Matrix::Zero(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const double row_max = logits.row(i).maxCoeff();
    double denom = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      const double e = std::exp(logits(i, j) - row_max);
      w(i, j) = e;
      denom += e;
    }
    w.row(i) /= denom;
  }
  return w;
}

// d squash / d z applied to an upstream row gradient.
Eigen::RowVectorXd squash_backward_row(const Eigen::RowVectorXd& z,
                                       const Eigen::RowVectorXd& g_u) {
  const double norm_sq = z.squaredNorm();
  if (norm_sq < 1e-200) return Eigen::RowVectorXd::Zero(z.size());
  const double norm = std::sqrt(norm_sq);
  const double alpha = norm / (1.0 + norm_sq);
  const double dalpha_dn = (1.0 - norm_sq) / ((1.0 + norm_sq) * (1.0 + norm_sq));
  const double zg = z.dot(g_u);
  return alpha * g_u + (dalpha_dn / norm) * zg * z;
}

}  // namespace

RoutingForward b2i_forward(const Matrix& behaviors,
                           const std::vector<std::uint8_t>& mask,
                           const Matrix& bilinear, const RoutingConfig& config,
                           const Matrix& initial_logits) {
  config.validate();
  const auto m = behaviors.rows();
  if (static_cast<std::size_t>(m) != mask.size())
    throw UsageError("routing: mask length must match behavior count");
  if (bilinear.rows() != behaviors.cols() || bilinear.cols() != behaviors.cols())
    throw UsageError("routing: bilinear map must be (d, d)");

  RoutingForward fwd;
  fwd.config = config;
  fwd.mask = mask;
  fwd.active = static_cast<int>(
      std::count(mask.begin(), mask.end(), static_cast<std::uint8_t>(1)));
  if (fwd.active == 0)
    throw DataError("routing requires at least one unmasked behavior");
  fwd.interest_count =
      adaptive_interest_count(fwd.active, config.max_interests);

  if (initial_logits.rows() != m || initial_logits.cols() != fwd.interest_count)
    throw UsageError("routing: initial logits must be (m, K')");

  fwd.behaviors = behaviors;
  for (Eigen::Index i = 0; i < m; ++i)
    if (!mask[static_cast<std::size_t>(i)]) fwd.behaviors.row(i).setZero();
  fwd.transformed = fwd.behaviors * bilinear.transpose();  // rows: S e_i
  fwd.initial_logits = initial_logits;

  Matrix b = initial_logits;
  for (int it = 0; it < config.iterations; ++it) {
    Matrix w = coupling_softmax(b, mask);
    Matrix z = w.transpose() * fwd.transformed;  // (K', d)
    Matrix u(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.rows(); ++j)
      u.row(j) = squash(z.row(j).transpose()).transpose();
    fwd.logits.push_back(std::move(b));
    b = fwd.logits.back() + fwd.transformed * u.transpose();  // agreement
    fwd.couplings.push_back(std::move(w));
    fwd.pre_squash.push_back(std::move(z));
    fwd.capsules.push_back(std::move(u));
  }
  fwd.final_logits = std::move(b);
  return fwd;
}

RoutingForward b2i_routing(const Matrix& behaviors,
                           const std::vector<std::uint8_t>& mask,
                           const Matrix& bilinear, const RoutingConfig& config,
                           Rng& rng) {
  config.validate();
  const int active = static_cast<int>(
      std::count(mask.begin(), mask.end(), static_cast<std::uint8_t>(1)));
  if (active == 0)
    throw DataError("routing requires at least one unmasked behavior");
  const int interest_count =
      adaptive_interest_count(active, config.max_interests);
  Matrix logits =
      sample_initial_logits(mask, interest_count, config.sigma, rng);
  return b2i_forward(behaviors, mask, bilinear, config, logits);
}

RoutingGrads b2i_backward(const RoutingForward& fwd, const Matrix& bilinear,
                          const Matrix& upstream) {
  const auto m = fwd.behaviors.rows();
  const auto d = fwd.behaviors.cols();
  const int r = fwd.config.iterations;
  if (upstream.rows() != fwd.interest_count || upstream.cols() != d)
    throw NumericError("routing backward: upstream shape mismatches the "
                       "recorded forward state");
  if (static_cast<int>(fwd.capsules.size()) != r)
    throw NumericError("routing backward: incomplete forward record");

  Matrix g_x = Matrix::Zero(m, d);

  if (!fwd.config.backprop_through_couplings) {
    // Couplings frozen: only the final weighted sum and squash are
    // differentiated.
    const Matrix& z = fwd.pre_squash.back();
    Matrix g_z(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.rows(); ++j)
      g_z.row(j) = squash_backward_row(z.row(j), upstream.row(j));
    g_x = fwd.couplings.back() * g_z;
  } else {
    Matrix g_u = upstream;                               // dL/dU_t
    Matrix g_b = Matrix::Zero(m, fwd.interest_count);    // dL/db_{t+1}
    for (int t = r - 1; t >= 0; --t) {
      // Agreement update b_{t+1} = b_t + X U_t^T. g_b currently holds
      // dL/db_{t+1}; it feeds both X U^T and the pass-through to b_t.
      g_x.noalias() += g_b * fwd.capsules[static_cast<std::size_t>(t)];
      g_u.noalias() += g_b.transpose() * fwd.transformed;

      // u = squash(z)
      const Matrix& z = fwd.pre_squash[static_cast<std::size_t>(t)];
      Matrix g_z(z.rows(), z.cols());
      for (Eigen::Index j = 0; j < z.rows(); ++j)
        g_z.row(j) = squash_backward_row(z.row(j), g_u.row(j));

      // z = w^T X
      const Matrix& w = fwd.couplings[static_cast<std::size_t>(t)];
      Matrix g_w = fwd.transformed * g_z.transpose();  // (m, K')
      g_x.noalias() += w * g_z;

      // w = per-behavior softmax(b_t): Jacobian diag(w) - w w^T per row.
      Matrix g_b_prev = g_b;  // pass-through term of the agreement update
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!fwd.mask[static_cast<std::size_t>(i)]) continue;
        const double inner = w.row(i).dot(g_w.row(i));
        g_b_prev.row(i) +=
            (w.row(i).array() * (g_w.row(i).array() - inner)).matrix();
      }
      g_b = std::move(g_b_prev);
      g_u.setZero();  // U_{t-1} only feeds the next agreement update
    }
  }

  RoutingGrads grads;
  grads.d_behaviors = g_x * bilinear;          // X = E S^T
  grads.d_bilinear = g_x.transpose() * fwd.behaviors;
  for (Eigen::Index i = 0; i < m; ++i)
    if (!fwd.mask[static_cast<std::size_t>(i)])
      grads.d_behaviors.row(i).setZero();
  return grads;
}

}  // namespace mirec::routing
