#include "mirec/routing.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace mirec;
using namespace mirec::routing;

TEST_SUITE_BEGIN("routing");

TEST_CASE("adaptive interest count follows the clamp-then-truncate rule") {
  CHECK(adaptive_interest_count(1, 5) == 1);    // log2(1) = 0, clamped up
  CHECK(adaptive_interest_count(100, 5) == 5);  // log2(100) > 5
  CHECK(adaptive_interest_count(8, 5) == 3);    // log2(8) = 3 exactly
  CHECK(adaptive_interest_count(2, 5) == 1);
  CHECK(adaptive_interest_count(3, 5) == 1);    // 1.58 truncates to 1
  CHECK(adaptive_interest_count(9, 5) == 3);    // 3.17 truncates to 3
  CHECK(adaptive_interest_count(7, 1) == 1);

  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + static_cast<int>(rng.uniform_int(4000));
    const int k = 1 + static_cast<int>(rng.uniform_int(12));
    CHECK(adaptive_interest_count(m, k) == testutil::oracle_adaptive_k(m, k));
  }
}

TEST_CASE("squash keeps direction and compresses the norm") {
  CHECK(squash(Vector::Zero(4)).norm() == 0.0);

  Vector unit(3);
  unit << 1.0, 0.0, 0.0;
  Vector s1 = squash(unit);
  CHECK(s1.norm() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s1(0) > 0.0);

  Vector v3 = 3.0 * unit;
  CHECK(squash(v3).norm() == doctest::Approx(0.9).epsilon(1e-12));

  // Monotone in the input norm, always below 1, direction preserved.
  Rng rng(5);
  Vector dir = testutil::random_vector(6, rng);
  dir /= dir.norm();
  double prev = -1.0;
  for (double scale : {0.01, 0.5, 1.0, 2.0, 10.0, 1e3}) {
    Vector out = squash(scale * dir);
    CHECK(out.norm() < 1.0);
    CHECK(out.norm() > prev);
    CHECK(out.dot(dir) == doctest::Approx(out.norm()).epsilon(1e-12));
    prev = out.norm();
  }
}

namespace {

RoutingConfig make_config(int k, int r = 3, double sigma = 1.0) {
  RoutingConfig cfg;
  cfg.max_interests = k;
  cfg.iterations = r;
  cfg.sigma = sigma;
  return cfg;
}

}  // namespace

TEST_CASE("single behavior routes to squash(S e)") {
  Rng rng(11);
  const int d = 6;
  Matrix e = testutil::random_matrix(1, d, rng);
  Matrix s = testutil::random_matrix(d, d, rng, 0.4);
  auto fwd = b2i_routing(e, {1}, s, make_config(5), rng);
  REQUIRE(fwd.interest_count == 1);
  Vector expected = squash((s * e.row(0).transpose()));
  CHECK((fwd.interest_capsules().row(0).transpose() - expected).norm() <
        1e-12);
  // Softmax over a single interest: coupling is exactly 1.
  CHECK(fwd.coupling_matrix()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("identical behaviors make every capsule colinear with squash(S e)") {
  Rng rng(12);
  const int d = 5;
  const int m = 16;
  Matrix e(m, d);
  Vector base = testutil::random_vector(d, rng);
  for (int i = 0; i < m; ++i) e.row(i) = base.transpose();
  Matrix s = testutil::random_matrix(d, d, rng, 0.5);
  auto fwd = b2i_routing(e, std::vector<std::uint8_t>(m, 1), s,
                         make_config(4), rng);
  REQUIRE(fwd.interest_count == 4);
  Vector dir = s * base;
  dir /= dir.norm();
  for (int j = 0; j < fwd.interest_count; ++j) {
    Vector cap = fwd.interest_capsules().row(j).transpose();
    if (cap.norm() == 0.0) continue;
    CHECK(std::abs(cap.dot(dir) / cap.norm()) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cap.dot(dir) > 0.0);  // non-negative multiple of S e
  }
}

TEST_CASE("equal initial logits collapse all capsules to the same vector") {
  // The degeneracy that motivates the random logit init: with all logits
  // equal the interest capsules stay identical through every iteration.
  Rng rng(13);
  const int d = 8;
  const int m = 12;
  Matrix e = testutil::random_matrix(m, d, rng);
  Matrix s = testutil::random_matrix(d, d, rng, 0.4);
  const int k = adaptive_interest_count(m, 4);
  Matrix zeros = Matrix::Zero(m, k);
  auto fwd = b2i_forward(e, std::vector<std::uint8_t>(m, 1), s,
                         make_config(4), zeros);
  for (int j = 1; j < fwd.interest_count; ++j)
    CHECK((fwd.interest_capsules().row(j) - fwd.interest_capsules().row(0))
              .norm() < 1e-12);

  // Sigma = 0 sampling gives the same collapse.
  auto cfg0 = make_config(4, 3, 0.0);
  auto fwd0 = b2i_routing(e, std::vector<std::uint8_t>(m, 1), s, cfg0, rng);
  for (int j = 1; j < fwd0.interest_count; ++j)
    CHECK((fwd0.interest_capsules().row(j) - fwd0.interest_capsules().row(0))
              .norm() < 1e-12);
}

TEST_CASE("seeded instance matches the independent transcription") {
  Rng rng(21);
  const int d = 4, m = 4, k_cap = 2;
  Matrix e = testutil::random_matrix(m, d, rng);
  Matrix s = testutil::random_matrix(d, d, rng, 0.5);
  const int k = adaptive_interest_count(m, k_cap);
  Matrix logits = testutil::random_matrix(m, k, rng);

  auto fwd = b2i_forward(e, std::vector<std::uint8_t>(m, 1), s,
                         make_config(k_cap), logits);
  auto oracle = testutil::oracle_b2i_routing(
      testutil::to_rows(e), testutil::to_rows(s), testutil::to_rows(logits), 3);

  REQUIRE(fwd.interest_count == static_cast<int>(oracle.capsules.size()));
  for (int j = 0; j < fwd.interest_count; ++j)
    for (int a = 0; a < d; ++a)
      CHECK(fwd.interest_capsules()(j, a) ==
            doctest::Approx(oracle.capsules[static_cast<std::size_t>(j)]
                                           [static_cast<std::size_t>(a)])
                .epsilon(1e-10));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < fwd.interest_count; ++j)
      CHECK(fwd.coupling_matrix()(i, j) ==
            doctest::Approx(oracle.couplings[static_cast<std::size_t>(i)]
                                            [static_cast<std::size_t>(j)])
                .epsilon(1e-10));
}

TEST_CASE("coupling rows are distributions at every iteration") {
  Rng rng(31);
  const int d = 8, m = 20;
  Matrix e = testutil::random_matrix(m, d, rng);
  Matrix s = testutil::random_matrix(d, d, rng, 0.4);
  std::vector<std::uint8_t> mask(m, 1);
  mask[3] = 0;
  mask[17] = 0;
  e.row(3).setConstant(123.0);  // garbage in padded rows must not matter
  auto fwd = b2i_routing(e, mask, s, make_config(4), rng);
  for (const auto& w : fwd.couplings) {
    for (int i = 0; i < m; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) {
        CHECK(w.row(i).cwiseAbs().sum() == 0.0);  // padded rows all zero
        continue;
      }
      CHECK(w.row(i).minCoeff() >= 0.0);
      CHECK(w.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  for (int j = 0; j < fwd.interest_count; ++j)
    CHECK(fwd.interest_capsules().row(j).norm() < 1.0);
}

TEST_CASE("padded routing equals routing on the compact behavior set") {
  Rng rng(37);
  const int d = 6, m = 9;
  Matrix compact = testutil::random_matrix(m, d, rng);
  Matrix s = testutil::random_matrix(d, d, rng, 0.5);
  const int k = adaptive_interest_count(m, 3);
  Matrix logits = testutil::random_matrix(m, k, rng);

  // Interleave padding rows among the real ones.
  const int padded_m = m + 4;
  Matrix padded = Matrix::Zero(padded_m, d);
  Matrix padded_logits = Matrix::Zero(padded_m, k);
  std::vector<std::uint8_t> mask(padded_m, 0);
  const int positions[] = {1, 2, 4, 5, 6, 8, 9, 11, 12};
  for (int i = 0; i < m; ++i) {
    padded.row(positions[i]) = compact.row(i);
    padded_logits.row(positions[i]) = logits.row(i);
    mask[static_cast<std::size_t>(positions[i])] = 1;
  }

  auto fwd_compact = b2i_forward(compact, std::vector<std::uint8_t>(m, 1), s,
                                 make_config(3), logits);
  auto fwd_padded = b2i_forward(padded, mask, s, make_config(3), padded_logits);
  CHECK(fwd_padded.interest_count == fwd_compact.interest_count);
  CHECK((fwd_padded.interest_capsules() - fwd_compact.interest_capsules())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("permutation equivariance: permuting behaviors with their logits") {
  Rng rng(41);
  const int d = 5, m = 7;
  Matrix e = testutil::random_matrix(m, d, rng);
  Matrix s = testutil::random_matrix(d, d, rng, 0.5);
  const int k = adaptive_interest_count(m, 4);
  Matrix logits = testutil::random_matrix(m, k, rng);

  std::vector<int> perm = {4, 0, 6, 2, 5, 1, 3};
  Matrix e_p(m, d), logits_p(m, k);
  for (int i = 0; i < m; ++i) {
    e_p.row(i) = e.row(perm[static_cast<std::size_t>(i)]);
    logits_p.row(i) = logits.row(perm[static_cast<std::size_t>(i)]);
  }
  auto a = b2i_forward(e, std::vector<std::uint8_t>(m, 1), s, make_config(4),
                       logits);
  auto b = b2i_forward(e_p, std::vector<std::uint8_t>(m, 1), s, make_config(4),
                       logits_p);
  CHECK((a.interest_capsules() - b.interest_capsules()).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("same seed gives bitwise-identical capsules") {
  Rng rng(51);
  const int d = 6, m = 10;
  Matrix e = testutil::random_matrix(m, d, rng);
  Matrix s = testutil::random_matrix(d, d, rng, 0.5);
  Rng r1(777), r2(777);
  auto a = b2i_routing(e, std::vector<std::uint8_t>(m, 1), s, make_config(3), r1);
  auto b = b2i_routing(e, std::vector<std::uint8_t>(m, 1), s, make_config(3), r2);
  CHECK((a.interest_capsules() - b.interest_capsules()).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("all-masked input is rejected") {
  Matrix e = Matrix::Zero(3, 4);
  Matrix s = Matrix::Identity(4, 4);
  Rng rng(1);
  CHECK_THROWS_AS(
      b2i_routing(e, std::vector<std::uint8_t>(3, 0), s, make_config(2), rng),
      DataError);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  Rng rng(61);
  const int d = 5, m = 6;
  Matrix e = testutil::random_matrix(m, d, rng);
  Matrix s = testutil::random_matrix(d, d, rng, 0.5);
  auto fwd = b2i_routing(e, std::vector<std::uint8_t>(m, 1), s, make_config(3),
                         rng);
  auto grads = b2i_backward(fwd, s, Matrix::Zero(fwd.interest_count, d));
  CHECK(grads.d_behaviors.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.d_bilinear.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("one-capsule one-iteration gradient matches the hand derivation") {
  // With K' = 1 every coupling is exactly 1, so the capsule is
  // squash(S * sum_i e_i); the gradient has a closed form.
  Rng rng(71);
  const int d = 4, m = 2;
  Matrix e = testutil::random_matrix(m, d, rng);
  Matrix s = testutil::random_matrix(d, d, rng, 0.6);
  RoutingConfig cfg = make_config(1, /*r=*/1);
  Matrix logits = testutil::random_matrix(m, 1, rng);
  auto fwd = b2i_forward(e, std::vector<std::uint8_t>(m, 1), s, cfg, logits);

  Vector sum = e.colwise().sum().transpose();
  Vector z = s * sum;
  CHECK((fwd.interest_capsules().row(0).transpose() - squash(z)).norm() <
        1e-12);

  Vector upstream = testutil::random_vector(d, rng);
  auto grads = b2i_backward(fwd, s, upstream.transpose());

  // d squash(z) / d z = alpha I + (alpha'(n)/n) z z^T with alpha = n/(1+n^2).
  const double n = z.norm();
  const double alpha = n / (1.0 + n * n);
  const double dalpha = (1.0 - n * n) / ((1.0 + n * n) * (1.0 + n * n));
  Vector g_z = alpha * upstream + (dalpha / n) * z.dot(upstream) * z;
  Matrix g_s_expected = g_z * sum.transpose();
  Matrix g_e_row = (s.transpose() * g_z).transpose();

  CHECK((grads.d_bilinear - g_s_expected).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i < m; ++i)
    CHECK((grads.d_behaviors.row(i) - g_e_row).cwiseAbs().maxCoeff() < 1e-12);
}

namespace {

double routing_objective(const Matrix& e, const Matrix& s,
                         const std::vector<std::uint8_t>& mask,
                         const RoutingConfig& cfg, const Matrix& logits,
                         const Matrix& upstream) {
  auto fwd = b2i_forward(e, mask, s, cfg, logits);
  return (fwd.interest_capsules().array() * upstream.array()).sum();
}

}  // namespace

TEST_CASE("routing gradients match central finite differences") {
  Rng rng(81);
  const int d = 5, m = 8;
  Matrix e = testutil::random_matrix(m, d, rng, 0.8);
  Matrix s = testutil::random_matrix(d, d, rng, 0.5);
  RoutingConfig cfg = make_config(3, 3);
  std::vector<std::uint8_t> mask(m, 1);
  const int k = adaptive_interest_count(m, cfg.max_interests);
  Matrix logits = testutil::random_matrix(m, k, rng);
  Matrix upstream = testutil::random_matrix(k, d, rng);

  auto fwd = b2i_forward(e, mask, s, cfg, logits);
  auto grads = b2i_backward(fwd, s, upstream);

  const double h = 1e-5;
  double max_err = 0.0;
  auto fd_check = [&](Matrix& target, const Matrix& analytic) {
    for (Eigen::Index idx = 0; idx < target.size(); ++idx) {
      double* p = target.data() + idx;
      const double saved = *p;
      *p = saved + h;
      const double up = routing_objective(e, s, mask, cfg, logits, upstream);
      *p = saved - h;
      const double down = routing_objective(e, s, mask, cfg, logits, upstream);
      *p = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.data()[idx];
      max_err = std::max(max_err, std::abs(a - numeric) /
                                      std::max(1e-5, std::abs(a) + std::abs(numeric)));
    }
  };
  fd_check(e, grads.d_behaviors);
  fd_check(s, grads.d_bilinear);
  CHECK(max_err <= 1e-4);
}

TEST_CASE("frozen-coupling ablation matches finite differences of the frozen objective") {
  Rng rng(91);
  const int d = 4, m = 6;
  Matrix e = testutil::random_matrix(m, d, rng, 0.8);
  Matrix s = testutil::random_matrix(d, d, rng, 0.5);
  RoutingConfig cfg = make_config(2, 3);
  cfg.backprop_through_couplings = false;
  std::vector<std::uint8_t> mask(m, 1);
  const int k = adaptive_interest_count(m, cfg.max_interests);
  Matrix logits = testutil::random_matrix(m, k, rng);
  Matrix upstream = testutil::random_matrix(k, d, rng);

  auto fwd = b2i_forward(e, mask, s, cfg, logits);
  auto grads = b2i_backward(fwd, s, upstream);
  const Matrix w = fwd.coupling_matrix();  // frozen weights

  // Objective with w treated as a constant: squash(w^T (E S^T)).
  auto frozen_objective = [&](const Matrix& ee, const Matrix& ss) {
    Matrix z = w.transpose() * (ee * ss.transpose());
    double total = 0.0;
    for (Eigen::Index j = 0; j < z.rows(); ++j)
      total += squash(z.row(j).transpose()).dot(upstream.row(j).transpose());
    return total;
  };

  const double h = 1e-5;
  double max_err = 0.0;
  auto fd_check = [&](Matrix& target, const Matrix& analytic) {
    for (Eigen::Index idx = 0; idx < target.size(); ++idx) {
      double* p = target.data() + idx;
      const double saved = *p;
      *p = saved + h;
      const double up = frozen_objective(e, s);
      *p = saved - h;
      const double down = frozen_objective(e, s);
      *p = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.data()[idx];
      max_err = std::max(max_err, std::abs(a - numeric) /
                                      std::max(1e-5, std::abs(a) + std::abs(numeric)));
    }
  };
  fd_check(e, grads.d_behaviors);
  fd_check(s, grads.d_bilinear);
  CHECK(max_err <= 1e-4);
}

TEST_CASE("mismatched upstream shape is rejected") {
  Rng rng(95);
  const int d = 4, m = 4;
  Matrix e = testutil::random_matrix(m, d, rng);
  Matrix s = testutil::random_matrix(d, d, rng, 0.5);
  auto fwd = b2i_routing(e, std::vector<std::uint8_t>(m, 1), s, make_config(2),
                         rng);
  CHECK_THROWS_AS(b2i_backward(fwd, s, Matrix::Zero(fwd.interest_count + 1, d)),
                  NumericError);
}

TEST_SUITE_END();
