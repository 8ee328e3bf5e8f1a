// SPDX-License-Identifier: Apache-2.0
#include "precorrect/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "precorrect/error.hpp"
#include "precorrect/fft.hpp"

namespace precorrect {

void Prescription::validate() const {
  if (!std::isfinite(sphere_d) || !std::isfinite(cylinder_d) || !std::isfinite(axis_deg))
    throw ValidationError("prescription values must be finite");
  if (!(axis_deg >= 0.0 && axis_deg < 180.0))
    throw ValidationError("axis must be in [0, 180) degrees");
  if (!(pupil_diameter_mm > 1.0 && pupil_diameter_mm < 9.0))
    throw ValidationError("pupil diameter must be in (1, 9) mm");
}

bool ZernikeCoefficients::valid_index(int n, int m) noexcept {
  return n >= 0 && std::abs(m) <= n && (n - m) % 2 == 0;
}

void ZernikeCoefficients::set(int n, int m, double value_m) {
  if (!valid_index(n, m))
    throw ValidationError("invalid Zernike index (" + std::to_string(n) + ", " +
                          std::to_string(m) + ")");
  if (!std::isfinite(value_m)) throw ValidationError("Zernike coefficient must be finite");
  terms_[{n, m}] = value_m;
}

double ZernikeCoefficients::get(int n, int m) const noexcept {
  const auto it = terms_.find({n, m});
  return it == terms_.end() ? 0.0 : it->second;
}

ZernikeCoefficients prescription_to_zernike(const Prescription& rx) {
  rx.validate();
  const double r = 0.5e-3 * rx.pupil_diameter_mm;
  const double r2 = r * r;
  const double alpha = 2.0 * rx.axis_deg * std::numbers::pi / 180.0;
  const double sqrt3 = std::sqrt(3.0);
  const double sqrt6 = std::sqrt(6.0);
  ZernikeCoefficients z;
  z.set(2, 0, -(rx.sphere_d + 0.5 * rx.cylinder_d) * r2 / (4.0 * sqrt3));
  z.set(2, 2, -rx.cylinder_d * r2 * std::cos(alpha) / (4.0 * sqrt6));
  z.set(2, -2, -rx.cylinder_d * r2 * std::sin(alpha) / (4.0 * sqrt6));
  return z;
}

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double radial(int n, int m_abs, double rho) {
  double sum = 0.0;
  for (int s = 0; s <= (n - m_abs) / 2; ++s) {
    const double c = ((s % 2) ? -1.0 : 1.0) * factorial(n - s) /
                     (factorial(s) * factorial((n + m_abs) / 2 - s) * factorial((n - m_abs) / 2 - s));
    sum += c * std::pow(rho, n - 2 * s);
  }
  return sum;
}

}  // namespace

double zernike_polynomial(int n, int m, double rho, double theta) {
  if (!ZernikeCoefficients::valid_index(n, m))
    throw ValidationError("invalid Zernike index");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("rho must be in [0, 1]");
  const int ma = std::abs(m);
  const double norm = std::sqrt((2.0 * (n + 1)) / (m == 0 ? 2.0 : 1.0));
  const double angular = m > 0 ? std::cos(ma * theta) : (m < 0 ? std::sin(ma * theta) : 1.0);
  return norm * radial(n, ma, rho) * angular;
}

double zernike_eval(const ZernikeCoefficients& coeffs, double rho, double theta) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("rho must be in [0, 1]");
  double w = 0.0;
  for (const auto& [nm, c] : coeffs.terms()) w += c * zernike_polynomial(nm.first, nm.second, rho, theta);
  return w;
}

std::string zernike_to_json(const ZernikeCoefficients& coeffs, double pupil_diameter_mm) {
  nlohmann::ordered_json j;
  j["coefficients"] = nlohmann::ordered_json::array();
  for (const auto& [nm, c] : coeffs.terms())
    j["coefficients"].push_back({{"n", nm.first}, {"m", nm.second}, {"value_m", c}});
  j["pupil_diameter_mm"] = pupil_diameter_mm;
  return j.dump(2) + "\n";
}

std::pair<ZernikeCoefficients, double> zernike_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ZernikeCoefficients z;
    for (const auto& t : j.at("coefficients"))
      z.set(t.at("n").get<int>(), t.at("m").get<int>(), t.at("value_m").get<double>());
    return {z, j.at("pupil_diameter_mm").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("Zernike JSON: ") + e.what());
  }
}

void PsfGeometry::validate() const {
  if (kernel_size_px == 0 || kernel_size_px % 2 == 0)
    throw ValidationError("kernel_size_px must be odd, got " + std::to_string(kernel_size_px));
  if (grid_size == 0 || (grid_size & (grid_size - 1)) != 0)
    throw ValidationError("grid_size must be a power of two");
  if (grid_size < 2 * kernel_size_px)
    throw ValidationError("grid_size must be at least twice kernel_size_px");
  if (!(viewing_distance_m > 0.0) || !(pixel_pitch_m > 0.0))
    throw ValidationError("viewing distance and pixel pitch must be positive");
}

namespace {

// Angular span of the FFT grid, in radians.
double grid_field_of_view(const PsfGeometry& g) {
  return static_cast<double>(g.kernel_size_px + 2) * g.pixel_angle_rad();
}

double pupil_samples(double wavelength_nm, double pupil_diameter_mm, const PsfGeometry& g) {
  return 1e-3 * pupil_diameter_mm * grid_field_of_view(g) / (1e-9 * wavelength_nm);
}

}  // namespace

std::size_t required_grid_size(double wavelength_nm, double pupil_diameter_mm,
                               const PsfGeometry& geometry) {
  const double need = std::ceil(pupil_samples(wavelength_nm, pupil_diameter_mm, geometry)) + 2.0;
  std::size_t n = 1;
  while (static_cast<double>(n) < need || n < 2 * geometry.kernel_size_px) n *= 2;
  return n;
}

MonochromaticPsf psf_monochromatic(const ZernikeCoefficients& coeffs, double wavelength_nm,
                                   double pupil_diameter_mm, const PsfGeometry& geometry) {
  geometry.validate();
  if (!(wavelength_nm >= 380.0 && wavelength_nm <= 780.0))
    throw ValidationError("wavelength must be in [380, 780] nm");
  if (!(pupil_diameter_mm > 0.0)) throw ValidationError("pupil diameter must be positive");

  const std::size_t n = geometry.grid_size;
  const double samples_across = pupil_samples(wavelength_nm, pupil_diameter_mm, geometry);
  if (samples_across + 2.0 > static_cast<double>(n)) {
    throw ValidationError(
        "angular extent of a grid_size=" + std::to_string(n) + " grid is smaller than the " +
        std::to_string(geometry.kernel_size_px) + "-pixel kernel footprint at " +
        std::to_string(wavelength_nm) + " nm; requires grid_size >= " +
        std::to_string(required_grid_size(wavelength_nm, pupil_diameter_mm, geometry)));
  }

  const double lambda_m = 1e-9 * wavelength_nm;
  const double fov = grid_field_of_view(geometry);
  const double dx = lambda_m / fov;  // pupil sample spacing, meters
  const double radius = 0.5e-3 * pupil_diameter_mm;
  const double k = 2.0 * std::numbers::pi / lambda_m;
  const auto half = static_cast<std::ptrdiff_t>(n / 2);

  // Pupil centered on index n/2, stored ifftshifted so the transform is centered too.
  fft::AlignedBuffer<fft::Complex> field(n * n);
  for (std::size_t u = 0; u < n; ++u) {
    const double y = static_cast<double>(static_cast<std::ptrdiff_t>(u) - half) * dx;
    for (std::size_t v = 0; v < n; ++v) {
      const double x = static_cast<double>(static_cast<std::ptrdiff_t>(v) - half) * dx;
      const double rho = std::hypot(x, y) / radius;
      if (rho > 1.0) continue;
      const double opd = zernike_eval(coeffs, rho, std::atan2(y, x));
      const std::size_t su = (u + n / 2) % n;
      const std::size_t sv = (v + n / 2) % n;
      field[su * n + sv] = std::polar(1.0, k * opd);
    }
  }
  fft::cached_complex_plan(n, n)->forward(field);

  Plane raw(n, n);
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t p = 0; p < n; ++p) {
      raw((q + n / 2) % n, (p + n / 2) % n) = std::norm(field[q * n + p]);
    }
  }

  const double step = fov / static_cast<double>(n);  // angular grid spacing
  const double pixel = geometry.pixel_angle_rad();
  const std::size_t sub = std::max<std::size_t>(
      1, std::min<std::size_t>(16, static_cast<std::size_t>(std::ceil(pixel / step))));
  const auto ks = geometry.kernel_size_px;
  const auto kh = static_cast<double>(ks / 2);
  const double center = static_cast<double>(n / 2);

  auto bilinear = [&](double gy, double gx) {
    const double fy = std::floor(gy);
    const double fx = std::floor(gx);
    const auto iy = static_cast<std::ptrdiff_t>(fy);
    const auto ix = static_cast<std::ptrdiff_t>(fx);
    const double ty = gy - fy;
    const double tx = gx - fx;
    auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
      if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(n) ||
          c >= static_cast<std::ptrdiff_t>(n))
        return 0.0;
      return raw(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    };
    return (1 - ty) * ((1 - tx) * at(iy, ix) + tx * at(iy, ix + 1)) +
           ty * ((1 - tx) * at(iy + 1, ix) + tx * at(iy + 1, ix + 1));
  };

  MonochromaticPsf psf{Plane(ks, ks), wavelength_nm};
  double total = 0.0;
  for (std::size_t i = 0; i < ks; ++i) {
    for (std::size_t j = 0; j < ks; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < sub; ++a) {
        const double oy = (static_cast<double>(i) - kh + (a + 0.5) / sub - 0.5) * pixel;
        for (std::size_t b = 0; b < sub; ++b) {
          const double ox = (static_cast<double>(j) - kh + (b + 0.5) / sub - 0.5) * pixel;
          acc += bilinear(center + oy / step, center + ox / step);
        }
      }
      psf.values(i, j) = acc;
      total += acc;
    }
  }
  if (!(total > 0.0)) throw Error("PSF has no energy inside the kernel footprint");
  for (double& v : psf.values.values()) v /= total;
  return psf;
}

}  // namespace precorrect
