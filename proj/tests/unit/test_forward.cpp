// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "precorrect/error.hpp"
#include "precorrect/forward.hpp"
#include "support.hpp"

using namespace precorrect;

namespace {

double dot(const ImagePlane& a, const ImagePlane& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c)
    for (std::size_t i = 0; i < a.channel(c).size(); ++i)
      s += a.channel(c).values()[i] * b.channel(c).values()[i];
  return s;
}

double dot(const Plane& a, const Plane& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

LmsPsfKernel random_lms_kernel(std::size_t size, std::mt19937_64& rng) {
  LmsPsfKernel k;
  for (auto& row : k.slices)
    for (auto& s : row) s = testing::random_plane(size, size, rng);
  Matrix3 entries{};
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t q = 0; q < 3; ++q) entries[q][p] = k.slices[p][q].sum();
  k.matrix = make_conversion_matrix(entries);
  return k;
}

}  // namespace

TEST_CASE("FFT convolution matches brute force on random sizes up to 32") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(1, 32);
  int cases = 0;
  double worst = 0.0;
  while (cases < 600) {
    const std::size_t h = dim(rng), w = dim(rng);
    const std::size_t kh = 2 * std::uniform_int_distribution<std::size_t>(0, h)(rng) + 1;
    const std::size_t kw = 2 * std::uniform_int_distribution<std::size_t>(0, w)(rng) + 1;
    if (kh > 2 * h + 1 || kw > 2 * w + 1 || kh > 33 || kw > 33) continue;
    const auto f = testing::random_plane(h, w, rng, -1.0, 1.0);
    const auto k = testing::random_plane(kh, kw, rng, -1.0, 1.0);
    worst = std::max(worst, testing::max_abs_diff(convolve_same(f, k), testing::brute_convolve(f, k)));
    ++cases;
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("convolution adjoint passes the dot-product test") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 50; ++i) {
    const std::size_t h = 1 + rng() % 24, w = 1 + rng() % 24;
    const std::size_t kh = 2 * (rng() % (std::min<std::size_t>(h, 8) + 1)) + 1;
    const std::size_t kw = 2 * (rng() % (std::min<std::size_t>(w, 8) + 1)) + 1;
    const auto x = testing::random_plane(h, w, rng, -1, 1);
    const auto y = testing::random_plane(h, w, rng, -1, 1);
    const auto k = testing::random_plane(kh, kw, rng, -1, 1);
    const double lhs = dot(convolve_same(x, k), y);
    const double rhs = dot(x, convolve_same_adjoint(y, k));
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("identity kernel and constant fields") {
  std::mt19937_64 rng(9);
  const auto f = testing::random_plane(17, 23, rng);
  CHECK(testing::max_abs_diff(convolve_same(f, Plane(1, 1, 1.0)), f) < 1e-12);
  Plane delta(7, 7);
  delta(3, 3) = 1.0;
  CHECK(testing::max_abs_diff(convolve_same(f, delta), f) < 1e-12);

  auto k = testing::random_plane(9, 9, rng);
  const double s = k.sum();
  for (double& v : k.values()) v /= s;
  const auto out = convolve_same(Plane(12, 10, 0.37), k);
  for (double v : out.values()) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("kernel extent is validated") {
  CHECK_THROWS_AS(convolve_same(Plane(8, 8), Plane(4, 4, 0.1)), ValidationError);
  CHECK_THROWS_AS(convolve_same(Plane(8, 8), Plane(19, 19, 0.1)), ValidationError);
  CHECK_NOTHROW(convolve_same(Plane(8, 8), Plane(17, 17, 0.1)));
}

TEST_CASE("delta kernels reduce simulate_retina to rgb_to_lms") {
  const auto a = build_conversion_matrix(testing::bundled_display(), testing::bundled_cones());
  std::mt19937_64 rng(1);
  const auto img = testing::random_image(31, 29, rng);
  const auto expected = rgb_to_lms(img, a);
  for (std::size_t size : {1u, 5u}) {
    const auto sim = simulate_retina(img, delta_lms_kernel(a, size));
    CHECK(sim.space() == ColorSpace::lms);
    CHECK(testing::max_abs_diff(sim, expected) < 1e-10);
  }
  CHECK(testing::max_abs_diff(simulate_retina_rgb(img, delta_rgb_kernel(3)), img) < 1e-10);
}

TEST_CASE("uniform images stay uniform at the matrix response") {
  const auto a = build_conversion_matrix(testing::bundled_display(), testing::bundled_cones());
  std::mt19937_64 rng(4);
  auto k = random_lms_kernel(9, rng);
  // Scale slices so that their sums equal A.
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t q = 0; q < 3; ++q) {
      const double s = k.slices[p][q].sum();
      for (double& v : k.slices[p][q].values()) v *= a.entries[q][p] / s;
    }
  k.matrix = a;
  ImagePlane img(16, 16, 3, ColorSpace::rgb);
  const std::array<double, 3> rgb{0.2, 0.5, 0.9};
  for (std::size_t c = 0; c < 3; ++c)
    for (double& v : img.channel(c).values()) v = rgb[c];
  const auto sim = simulate_retina(img, k);
  for (std::size_t q = 0; q < 3; ++q) {
    const double expected = a.entries[q][0] * rgb[0] + a.entries[q][1] * rgb[1] + a.entries[q][2] * rgb[2];
    for (double v : sim.channel(q).values()) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("blur operator adjoint passes the dot-product test") {
  std::mt19937_64 rng(8);
  const auto k = random_lms_kernel(7, rng);
  const BlurOperator op(13, 19, k, 2);
  const auto x = testing::random_image(13, 19, rng);
  auto y = testing::random_image(13, 19, rng, ColorSpace::lms, -1, 1);
  const double lhs = dot(op.apply(x), y);
  const double rhs = dot(x, op.adjoint(y));
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));

  RgbPsfKernel r;
  for (auto& p : r.kernels) p = testing::random_plane(5, 5, rng);
  const BlurOperator rop(13, 19, r, 1);
  CHECK(rop.output_space() == ColorSpace::rgb);
  y.set_space(ColorSpace::rgb);
  CHECK(std::abs(dot(rop.apply(x), y) - dot(x, rop.adjoint(y))) < 1e-10 * std::abs(dot(rop.apply(x), y)));
}

TEST_CASE("interior energy is conserved on a 512 field with a 65 kernel") {
  std::mt19937_64 rng(6);
  auto k = testing::random_plane(65, 65, rng);
  const double s = k.sum();
  for (double& v : k.values()) v /= s;
  Plane f(512, 512);
  for (std::size_t y = 100; y < 400; ++y)
    for (std::size_t x = 100; x < 400; ++x) f(y, x) = std::uniform_real_distribution<double>(0, 1)(rng);
  const auto out = convolve_same(f, k);
  CHECK(std::abs(out.sum() - f.sum()) < 1e-3 * f.sum());
}
