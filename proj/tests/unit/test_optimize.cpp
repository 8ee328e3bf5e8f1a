// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "precorrect/error.hpp"
#include "precorrect/optimize.hpp"
#include "support.hpp"

using namespace precorrect;

namespace {

const ColorConversionMatrix& bundled_matrix() {
  static const auto a = build_conversion_matrix(testing::bundled_display(), testing::bundled_cones());
  return a;
}

// Random nonnegative slices rescaled so that slice [p][k] sums to A[k][p].
LmsPsfKernel random_lms_kernel(std::size_t size, std::mt19937_64& rng) {
  const auto& a = bundled_matrix();
  LmsPsfKernel k;
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t q = 0; q < 3; ++q) {
      k.slices[p][q] = testing::random_plane(size, size, rng);
      const double s = k.slices[p][q].sum();
      for (double& v : k.slices[p][q].values()) v *= a.entries[q][p] / s;
    }
  k.matrix = a;
  return k;
}

RgbPsfKernel random_rgb_kernel(std::size_t size, std::mt19937_64& rng) {
  RgbPsfKernel k;
  for (auto& p : k.kernels) {
    p = testing::random_plane(size, size, rng);
    const double s = p.sum();
    for (double& v : p.values()) v /= s;
  }
  return k;
}

OptimizationConfig quick(std::size_t iterations, LossSpace space = LossSpace::lms) {
  OptimizationConfig c;
  c.iterations = iterations;
  c.loss_space = space;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("loss_l2 examples and operand checks") {
  ImagePlane a(2, 2, 3, ColorSpace::lms, 0.5), b(2, 2, 3, ColorSpace::lms, 0.5);
  CHECK(loss_l2(a, b) == 0.0);
  b.at(0, 0, 0) = 1.5;
  CHECK(loss_l2(a, b) == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
  for (std::size_t c = 0; c < 3; ++c)
    for (double& v : b.channel(c).values()) v = 0.6;
  CHECK(loss_l2(a, b) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_THROWS_AS(loss_l2(a, ImagePlane(2, 3, 3, ColorSpace::lms)), ValidationError);
  CHECK_THROWS_AS(loss_l2(a, ImagePlane(2, 2, 3, ColorSpace::rgb)), ValidationError);
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(31);
  const auto& a = bundled_matrix();
  for (int trial = 0; trial < 4; ++trial) {
    const std::size_t h = 8 + rng() % 9, w = 8 + rng() % 9;
    const std::size_t ks = 2 * (rng() % 3) + 3;
    const auto x = testing::random_image(h, w, rng);
    const auto t = testing::random_image(h, w, rng);
    const auto lk = random_lms_kernel(ks, rng);
    const auto rk = random_rgb_kernel(ks, rng);

    const auto t_lms = rgb_to_lms(t, a);
    const double e_lms = testing::gradient_check(x, gradient_lms(x, lk, t_lms), [&](const ImagePlane& p) {
      return loss_l2(simulate_retina(p, lk), t_lms);
    });
    CHECK(e_lms < 1e-4);

    const auto t_opp = lms_to_opponency(t_lms);
    const double e_opp = testing::gradient_check(
        x, gradient_opponent(x, lk, t_opp),
        [&](const ImagePlane& p) { return loss_l2(lms_to_opponency(simulate_retina(p, lk)), t_opp); });
    CHECK(e_opp < 1e-4);

    const double e_rgb = testing::gradient_check(x, gradient_rgb(x, rk, t), [&](const ImagePlane& p) {
      return loss_l2(simulate_retina_rgb(p, rk), t);
    });
    CHECK(e_rgb < 1e-4);

    // rgb loss through the LMS kernel: compare against an explicit inverse-matrix mapping.
    const BlurOperator blur(h, w, lk, 1);
    const Objective obj(blur, invert(a.entries), t);
    ImagePlane g;
    obj.evaluate(x, g);
    const double e_inv = testing::gradient_check(x, g, [&](const ImagePlane& p) {
      return loss_l2(apply_matrix(invert(a.entries), simulate_retina(p, lk), ColorSpace::rgb), t);
    });
    CHECK(e_inv < 1e-4);
  }
}

TEST_CASE("zero residual gives zero gradient") {
  std::mt19937_64 rng(2);
  const auto lk = random_lms_kernel(5, rng);
  const auto x = testing::random_image(10, 12, rng);
  const auto g = gradient_lms(x, lk, simulate_retina(x, lk));
  for (std::size_t c = 0; c < 3; ++c)
    for (double v : g.channel(c).values()) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("delta kernel leaves the target unchanged") {
  std::mt19937_64 rng(12);
  const auto t = testing::random_image(16, 16, rng);
  for (LossSpace space : {LossSpace::lms, LossSpace::opponent, LossSpace::rgb}) {
    const auto r = correct_image(t, delta_lms_kernel(bundled_matrix()), quick(20, space));
    CHECK(r.corrected == t);
    CHECK(r.best_iteration == 0);
    CHECK(r.initial_loss < 1e-25);
  }
  const auto rb = correct_image_baseline(t, delta_rgb_kernel(), quick(20));
  CHECK(rb.corrected == t);
}

TEST_CASE("ADAM reduces the loss and stays feasible") {
  std::mt19937_64 rng(21);
  const auto t = testing::random_image(32, 32, rng, ColorSpace::rgb, 0.1, 0.9);
  const auto lk = random_lms_kernel(7, rng);
  std::size_t calls = 0;
  const auto r = correct_image(t, lk, quick(60), [&](std::size_t, double) { ++calls; });
  CHECK(calls == 1);
  REQUIRE(r.loss_trace.size() == 60);
  REQUIRE(r.best_trace.size() == 61);
  CHECK(r.best_trace.front() == r.initial_loss);
  CHECK(r.best_loss < r.initial_loss);
  CHECK(r.loss_trace.back() < r.initial_loss);
  for (std::size_t i = 1; i < r.best_trace.size(); ++i) CHECK(r.best_trace[i] <= r.best_trace[i - 1]);
  CHECK(r.best_loss == r.best_trace.back());
  for (std::size_t c = 0; c < 3; ++c)
    for (double v : r.corrected.channel(c).values()) CHECK((v >= 0.0 && v <= 1.0));
  CHECK(testing::max_abs_diff(r.simulated, simulate_retina(r.corrected, lk)) < 1e-12);

  const auto rb = correct_image_baseline(t, random_rgb_kernel(7, rng), quick(60, LossSpace::lms));
  CHECK(rb.config.loss_space == LossSpace::rgb);
  CHECK(rb.best_loss < rb.initial_loss);
}

TEST_CASE("correction is deterministic across runs and thread counts") {
  std::mt19937_64 rng(5);
  const auto t = testing::random_image(24, 20, rng);
  const auto lk = random_lms_kernel(5, rng);
  auto cfg = quick(15);
  const auto a = correct_image(t, lk, cfg);
  const auto b = correct_image(t, lk, cfg);
  cfg.threads = 3;
  const auto c = correct_image(t, lk, cfg);
  CHECK(a.corrected == b.corrected);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.corrected == c.corrected);
  CHECK(a.loss_trace == c.loss_trace);
}

TEST_CASE("optimizer configuration is validated") {
  OptimizationConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.iterations = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.clamp_min = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.beta2 = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK(loss_space_from_string("opponent") == LossSpace::opponent);
  CHECK_THROWS_AS(loss_space_from_string("xyz"), ValidationError);

  ImagePlane bad(4, 4, 3, ColorSpace::rgb, 0.5);
  bad.at(1, 1, 1) = 1.5;
  CHECK_THROWS_AS(correct_image(bad, delta_lms_kernel(bundled_matrix()), quick(2)), ValidationError);
}
