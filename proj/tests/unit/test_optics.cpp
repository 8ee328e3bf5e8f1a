// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "precorrect/error.hpp"
#include "precorrect/optics.hpp"

using namespace precorrect;

namespace {

const double kSqrt3 = std::sqrt(3.0);
const double kSqrt6 = std::sqrt(6.0);

// Principal curvatures (1/m) of the wavefront at the pupil center, from a central-difference
// Hessian of zernike_eval in physical pupil coordinates.
std::pair<double, double> principal_curvatures(const ZernikeCoefficients& z, double radius_m) {
  const double h = 1e-3 * radius_m;
  auto w = [&](double x, double y) { return zernike_eval(z, std::hypot(x, y) / radius_m, std::atan2(y, x)); };
  const double base = 0.5 * radius_m;  // off-center so atan2 is well defined; quadratic terms are exact
  const double x0 = base, y0 = 0.25 * radius_m;
  const double wxx = (w(x0 + h, y0) - 2 * w(x0, y0) + w(x0 - h, y0)) / (h * h);
  const double wyy = (w(x0, y0 + h) - 2 * w(x0, y0) + w(x0, y0 - h)) / (h * h);
  const double wxy =
      (w(x0 + h, y0 + h) - w(x0 + h, y0 - h) - w(x0 - h, y0 + h) + w(x0 - h, y0 - h)) / (4 * h * h);
  const double mean = 0.5 * (wxx + wyy);
  const double dev = std::sqrt(0.25 * (wxx - wyy) * (wxx - wyy) + wxy * wxy);
  return {mean - dev, mean + dev};
}

double second_moment_radius(const MonochromaticPsf& psf) {
  const auto n = psf.values.rows();
  const double c = static_cast<double>(n / 2);
  double m = 0.0;
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double dy = static_cast<double>(y) - c, dx = static_cast<double>(x) - c;
      m += psf.values(y, x) * (dx * dx + dy * dy);
    }
  return std::sqrt(2.0 * m);
}

void check_psf_invariants(const MonochromaticPsf& psf) {
  double sum = 0.0;
  for (double v : psf.values.values()) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) < 1e-6);
}

}  // namespace

TEST_CASE("prescription conversion closed forms") {
  const double r = 0.002;
  const auto zero = prescription_to_zernike({0.0, 0.0, 0.0, 4.0});
  for (const auto& [nm, v] : zero.terms()) CHECK(v == 0.0);

  const auto myopia = prescription_to_zernike({-1.5, 0.0, 0.0, 4.0});
  CHECK(myopia.get(2, 0) == doctest::Approx(1.5 * r * r / (4 * kSqrt3)).epsilon(1e-12));
  CHECK(myopia.get(2, 0) == doctest::Approx(8.66e-7).epsilon(1e-3));
  CHECK(myopia.get(2, 2) == 0.0);
  CHECK(myopia.get(2, -2) == 0.0);

  const auto cyl = prescription_to_zernike({0.0, 1.5, 0.0, 4.0});
  CHECK(cyl.get(2, 0) == doctest::Approx(-0.75 * r * r / (4 * kSqrt3)).epsilon(1e-12));
  CHECK(cyl.get(2, 2) == doctest::Approx(-1.5 * r * r / (4 * kSqrt6)).epsilon(1e-12));
  CHECK(std::abs(cyl.get(2, -2)) < 1e-22);
}

TEST_CASE("wavefront curvature reproduces the prescription powers") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> power(-4.0, 4.0), axis(0.0, 180.0), pupil(2.0, 8.0);
  for (int i = 0; i < 25; ++i) {
    const Prescription rx{power(rng), power(rng), axis(rng), pupil(rng)};
    CAPTURE(rx.sphere_d);
    CAPTURE(rx.cylinder_d);
    CAPTURE(rx.axis_deg);
    const double r = 0.5e-3 * rx.pupil_diameter_mm;
    const auto [k1, k2] = principal_curvatures(prescription_to_zernike(rx), r);
    const double p1 = -rx.sphere_d, p2 = -(rx.sphere_d + rx.cylinder_d);
    CHECK(k1 == doctest::Approx(std::min(p1, p2)).epsilon(1e-5).scale(1.0));
    CHECK(k2 == doctest::Approx(std::max(p1, p2)).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("zernike_eval closed forms and domain") {
  ZernikeCoefficients defocus;
  defocus.set(2, 0, 1.0);
  CHECK(zernike_eval(defocus, 1.0, 0.3) == doctest::Approx(kSqrt3).epsilon(1e-15));
  ZernikeCoefficients piston;
  piston.set(0, 0, 1.0);
  CHECK(zernike_eval(piston, 0.37, 2.1) == 1.0);
  ZernikeCoefficients astig;
  astig.set(2, 2, 1.0);
  CHECK(zernike_eval(astig, 1.0, 0.0) == doctest::Approx(kSqrt6).epsilon(1e-15));
  CHECK_THROWS_AS(zernike_eval(defocus, 1.01, 0.0), ValidationError);
  CHECK_THROWS_AS(zernike_eval(defocus, -0.1, 0.0), ValidationError);

  ZernikeCoefficients z;
  CHECK_THROWS_AS(z.set(2, 1, 1.0), ValidationError);
  CHECK_THROWS_AS(z.set(2, 3, 1.0), ValidationError);
  CHECK_THROWS_AS(z.set(2, 0, std::nan("")), ValidationError);
}

TEST_CASE("zernike polynomials are orthogonal with norm pi on a 512 grid") {
  std::vector<std::pair<int, int>> idx;
  for (int n = 0; n <= 4; ++n)
    for (int m = -n; m <= n; m += 2) idx.emplace_back(n, m);
  const int grid = 512;
  const double d = 2.0 / grid;
  std::vector<std::vector<double>> values(idx.size());
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const double x = -1.0 + (j + 0.5) * d, y = -1.0 + (i + 0.5) * d;
      const double rho = std::hypot(x, y);
      if (rho > 1.0) continue;
      for (std::size_t k = 0; k < idx.size(); ++k)
        values[k].push_back(zernike_polynomial(idx[k].first, idx[k].second, rho, std::atan2(y, x)));
    }
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a; b < idx.size(); ++b) {
      double s = 0.0;
      for (std::size_t p = 0; p < values[a].size(); ++p) s += values[a][p] * values[b][p];
      s *= d * d;
      CAPTURE(a);
      CAPTURE(b);
      if (a == b)
        CHECK(std::abs(s - std::numbers::pi) < 0.01 * std::numbers::pi);
      else
        CHECK(std::abs(s) < 0.01 * std::numbers::pi);
    }
}

TEST_CASE("zernike json round trip") {
  ZernikeCoefficients z;
  z.set(2, 0, 8.66e-7);
  z.set(2, -2, -1.25e-7);
  z.set(4, 0, 3e-8);
  const auto [back, pupil] = zernike_from_json(zernike_to_json(z, 4.0));
  CHECK(pupil == 4.0);
  CHECK(back.terms() == z.terms());
}

TEST_CASE("prescription validation") {
  CHECK_NOTHROW(Prescription{-1.5, 0.5, 90.0, 4.0}.validate());
  CHECK_THROWS_AS((Prescription{0, 0, 180.0, 4.0}.validate()), ValidationError);
  CHECK_THROWS_AS((Prescription{0, 0, -1.0, 4.0}.validate()), ValidationError);
  CHECK_THROWS_AS((Prescription{0, 0, 0.0, 1.0}.validate()), ValidationError);
  CHECK_THROWS_AS((Prescription{0, 0, 0.0, 9.0}.validate()), ValidationError);
}

TEST_CASE("diffraction-limited PSF is symmetric and peaked") {
  const PsfGeometry g;
  const auto psf = psf_monochromatic(ZernikeCoefficients{}, 550.0, 4.0, g);
  check_psf_invariants(psf);
  const std::size_t n = psf.values.rows(), c = n / 2;
  double max = 0.0;
  for (double v : psf.values.values()) max = std::max(max, v);
  CHECK(psf.values(c, c) == max);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double v = psf.values(y, x);
      CHECK(std::abs(v - psf.values(n - 1 - y, x)) < 1e-12);
      CHECK(std::abs(v - psf.values(y, n - 1 - x)) < 1e-12);
      CHECK(std::abs(v - psf.values(x, y)) < 1e-12);
    }
}

TEST_CASE("PSFs are nonnegative with unit sum") {
  const PsfGeometry g;
  for (const Prescription& rx : {Prescription{-1.5, 0, 0, 4}, Prescription{0, 1.5, 30, 3},
                                 Prescription{-1.5, 1.5, 120, 6}, Prescription{2.5, -0.75, 5, 5}})
    for (double nm : {400.0, 555.0, 700.0}) {
      CAPTURE(nm);
      check_psf_invariants(psf_monochromatic(prescription_to_zernike(rx), nm, rx.pupil_diameter_mm, g));
    }
}

TEST_CASE("defocus blur radius matches geometric optics") {
  const PsfGeometry g;
  const Prescription rx{-1.5, 0.0, 0.0, 4.0};
  const auto psf = psf_monochromatic(prescription_to_zernike(rx), 550.0, 4.0, g);
  const double predicted_px = std::abs(rx.sphere_d) * 0.002 / g.pixel_angle_rad();
  CHECK(predicted_px == doctest::Approx(7.08).epsilon(1e-3));
  const double measured = second_moment_radius(psf);
  CHECK(std::abs(measured - predicted_px) < 0.1 * predicted_px);
}

TEST_CASE("defocus PSF is invariant under coefficient sign flip") {
  const PsfGeometry g;
  ZernikeCoefficients plus, minus;
  plus.set(2, 0, 6e-7);
  minus.set(2, 0, -6e-7);
  const auto a = psf_monochromatic(plus, 530.0, 4.0, g);
  const auto b = psf_monochromatic(minus, 530.0, 4.0, g);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(std::abs(a.values.values()[i] - b.values.values()[i]) < 1e-12);
}

TEST_CASE("diffraction-limited width grows with wavelength") {
  const PsfGeometry g;
  double previous = 0.0;
  for (double nm = 400.0; nm <= 700.0; nm += 25.0) {
    CAPTURE(nm);
    const double r = second_moment_radius(psf_monochromatic(ZernikeCoefficients{}, nm, 4.0, g));
    CHECK(r > previous);
    previous = r;
  }
}

TEST_CASE("undersized grid reports the required grid size") {
  PsfGeometry g;
  g.grid_size = 256;
  g.kernel_size_px = 65;
  try {
    psf_monochromatic(ZernikeCoefficients{}, 400.0, 4.0, g);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("requires grid_size >= 512") != std::string::npos);
  }
  CHECK(required_grid_size(400.0, 4.0, g) == 512);
  CHECK_THROWS_AS(psf_monochromatic(ZernikeCoefficients{}, 379.0, 4.0, PsfGeometry{}), ValidationError);
  PsfGeometry even;
  even.kernel_size_px = 64;
  CHECK_THROWS_AS(even.validate(), ValidationError);
}

TEST_CASE("concurrent PSF synthesis is bit-identical to serial") {
  const PsfGeometry g;
  const auto z = prescription_to_zernike({-1.5, 1.5, 45.0, 4.0});
  const std::vector<double> nms{410, 470, 530, 590, 650};
  std::vector<MonochromaticPsf> serial, threaded(nms.size());
  for (double nm : nms) serial.push_back(psf_monochromatic(z, nm, 4.0, g));
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < nms.size(); ++i)
      pool.emplace_back([&, i] { threaded[i] = psf_monochromatic(z, nms[i], 4.0, g); });
  }
  for (std::size_t i = 0; i < nms.size(); ++i) CHECK(serial[i].values == threaded[i].values);
}
