// SPDX-License-Identifier: Apache-2.0
#include "precorrect/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <Eigen/Dense>

#include "precorrect/error.hpp"

namespace precorrect {

Matrix3 identity_matrix() noexcept { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

Matrix3 transpose(const Matrix3& m) noexcept {
  Matrix3 t{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) t[i][j] = m[j][i];
  return t;
}

Matrix3 multiply(const Matrix3& a, const Matrix3& b) noexcept {
  Matrix3 r{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

Matrix3 invert(const Matrix3& m) {
  const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
  double scale = 0.0;
  for (const auto& row : m)
    for (double v : row) scale = std::max(scale, std::abs(v));
  if (!(std::abs(det) > 1e-14 * scale * scale * scale) || !std::isfinite(det))
    throw SingularMatrixError("matrix is singular");
  Matrix3 inv{};
  inv[0][0] = c00 / det;
  inv[1][0] = c01 / det;
  inv[2][0] = c02 / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

double condition_number(const Matrix3& m) {
  Eigen::Matrix3d e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) e(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(e);
  const auto s = svd.singularValues();
  if (s(2) <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(2);
}

ColorConversionMatrix make_conversion_matrix(const Matrix3& entries, double normalization) {
  for (const auto& row : entries)
    for (double v : row)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError("conversion matrix entries must be finite and nonnegative");
  for (std::size_t c = 0; c < 3; ++c) {
    if (entries[0][c] == 0.0 && entries[1][c] == 0.0 && entries[2][c] == 0.0)
      throw SingularMatrixError("conversion matrix is singular: primary " + std::to_string(c) +
                                " has zero response");
  }
  invert(entries);
  ColorConversionMatrix a;
  a.entries = entries;
  a.normalization = normalization;
  a.condition = condition_number(entries);
  return a;
}

ColorConversionMatrix build_conversion_matrix(const DisplayModel& display,
                                              const ConeFundamentals& cones, int stride_nm) {
  const auto grid = sampling_wavelengths(stride_nm);
  Matrix3 raw{};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto w = normalized_weights(display.primaries[c], stride_nm);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto lms = cone_response(cones, grid[i]);
      for (std::size_t k = 0; k < 3; ++k) raw[k][c] += lms[k] * w[i];
    }
  }
  double peak = 0.0;
  for (const auto& row : raw) peak = std::max(peak, row[0] + row[1] + row[2]);
  if (!(peak > 0.0)) throw SingularMatrixError("conversion matrix is singular: no cone response");
  const double scale = 1.0 / peak;
  for (auto& row : raw)
    for (double& v : row) v *= scale;
  return make_conversion_matrix(raw, scale);
}

ImagePlane apply_matrix(const Matrix3& m, const ImagePlane& image, ColorSpace result_space) {
  if (image.channels() != 3) throw ValidationError("expected a 3-channel image");
  ImagePlane out(image.height(), image.width(), 3, result_space);
  const auto n = image.height() * image.width();
  const auto a = image.channel(0).values();
  const auto b = image.channel(1).values();
  const auto c = image.channel(2).values();
  for (std::size_t k = 0; k < 3; ++k) {
    auto o = out.channel(k).values();
    for (std::size_t i = 0; i < n; ++i) o[i] = m[k][0] * a[i] + m[k][1] * b[i] + m[k][2] * c[i];
  }
  return out;
}

ImagePlane rgb_to_lms(const ImagePlane& rgb, const ColorConversionMatrix& a) {
  return apply_matrix(a.entries, rgb, ColorSpace::lms);
}

const Matrix3& opponency_matrix() noexcept {
  static const Matrix3 m{{{-1.0, 1.0, 1.0}, {1.0, -1.0, 1.0}, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}}};
  return m;
}

ImagePlane lms_to_opponency(const ImagePlane& lms) {
  ImagePlane out = apply_matrix(opponency_matrix(), lms, ColorSpace::opponent);
  // Mean channel computed directly so it equals the arithmetic mean exactly.
  auto mean = out.channel(2).values();
  const auto l = lms.channel(0).values();
  const auto m = lms.channel(1).values();
  const auto s = lms.channel(2).values();
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = (l[i] + m[i] + s[i]) / 3.0;
  return out;
}

DisplayRgb lms_to_display_rgb(const ImagePlane& lms, const ColorConversionMatrix& a) {
  DisplayRgb out{apply_matrix(invert(a.entries), lms, ColorSpace::rgb), 0};
  for (std::size_t c = 0; c < 3; ++c) {
    for (double& v : out.image.channel(c).values()) {
      // Round-off at the gamut boundary is clamped silently.
      if (v < -1e-12 || v > 1.0 + 1e-12) ++out.clamped_values;
      v = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

PsfSource zernike_psf_source(const ZernikeCoefficients& coeffs, double pupil_diameter_mm,
                             const PsfGeometry& geometry) {
  geometry.validate();
  return [coeffs, pupil_diameter_mm, geometry](double wavelength_nm) {
    return psf_monochromatic(coeffs, wavelength_nm, pupil_diameter_mm, geometry);
  };
}

namespace {

std::vector<Plane> compute_psfs(const std::vector<double>& grid, const PsfSource& source,
                                std::size_t threads) {
  std::vector<Plane> psfs(grid.size());
  std::size_t workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, grid.size());
  std::vector<std::exception_ptr> errors(workers);
  auto run = [&](std::size_t worker) {
    try {
      for (std::size_t i = worker; i < grid.size(); i += workers)
        psfs[i] = source(grid[i]).values;
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  if (workers <= 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  const auto size = psfs.front().rows();
  for (const auto& p : psfs) {
    if (p.rows() != size || p.cols() != size || size % 2 == 0)
      throw ValidationError("PSF source must return square odd-sized kernels of one size");
  }
  return psfs;
}

void accumulate(Plane& dst, const Plane& src, double weight) {
  auto d = dst.values();
  const auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += weight * s[i];
}

}  // namespace

KernelPair build_kernels(const DisplayModel& display, const ConeFundamentals& cones,
                         const PsfSource& psf_source, const KernelOptions& options) {
  const auto a = build_conversion_matrix(display, cones, options.stride_nm);
  const auto grid = sampling_wavelengths(options.stride_nm);
  const auto psfs = compute_psfs(grid, psf_source, options.threads);
  const auto size = psfs.front().rows();

  KernelPair out;
  out.lms.matrix = a;
  for (std::size_t c = 0; c < 3; ++c) {
    out.rgb.kernels[c] = Plane(size, size);
    for (std::size_t k = 0; k < 3; ++k) out.lms.slices[c][k] = Plane(size, size);
  }
  std::array<std::vector<double>, 3> weights;
  for (std::size_t c = 0; c < 3; ++c)
    weights[c] = normalized_weights(display.primaries[c], options.stride_nm);

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto cone = cone_response(cones, grid[i]);
    for (std::size_t c = 0; c < 3; ++c) {
      const double w = weights[c][i];
      if (w == 0.0) continue;
      accumulate(out.rgb.kernels[c], psfs[i], w);
      for (std::size_t k = 0; k < 3; ++k)
        accumulate(out.lms.slices[c][k], psfs[i], a.normalization * w * cone[k]);
    }
  }
  return out;
}

LmsPsfKernel build_lms_kernel(const DisplayModel& display, const ConeFundamentals& cones,
                              const PsfSource& psf_source, const KernelOptions& options) {
  return build_kernels(display, cones, psf_source, options).lms;
}

LmsPsfKernel build_lms_kernel(const DisplayModel& display, const ConeFundamentals& cones,
                              const ZernikeCoefficients& coeffs, double pupil_diameter_mm,
                              const PsfGeometry& geometry, const KernelOptions& options) {
  return build_lms_kernel(display, cones, zernike_psf_source(coeffs, pupil_diameter_mm, geometry),
                          options);
}

RgbPsfKernel build_rgb_kernel(const DisplayModel& display, const PsfSource& psf_source,
                              const KernelOptions& options) {
  const auto grid = sampling_wavelengths(options.stride_nm);
  const auto psfs = compute_psfs(grid, psf_source, options.threads);
  const auto size = psfs.front().rows();
  RgbPsfKernel out;
  for (std::size_t c = 0; c < 3; ++c) {
    out.kernels[c] = Plane(size, size);
    const auto w = normalized_weights(display.primaries[c], options.stride_nm);
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (w[i] != 0.0) accumulate(out.kernels[c], psfs[i], w[i]);
  }
  return out;
}

RgbPsfKernel build_rgb_kernel(const DisplayModel& display, const ZernikeCoefficients& coeffs,
                              double pupil_diameter_mm, const PsfGeometry& geometry,
                              const KernelOptions& options) {
  return build_rgb_kernel(display, zernike_psf_source(coeffs, pupil_diameter_mm, geometry),
                          options);
}

LmsPsfKernel delta_lms_kernel(const ColorConversionMatrix& a, std::size_t size) {
  if (size % 2 == 0) throw ValidationError("kernel size must be odd");
  LmsPsfKernel out;
  out.matrix = a;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t k = 0; k < 3; ++k) {
      out.slices[c][k] = Plane(size, size);
      out.slices[c][k](size / 2, size / 2) = a.entries[k][c];
    }
  }
  return out;
}

RgbPsfKernel delta_rgb_kernel(std::size_t size) {
  if (size % 2 == 0) throw ValidationError("kernel size must be odd");
  RgbPsfKernel out;
  for (auto& k : out.kernels) {
    k = Plane(size, size);
    k(size / 2, size / 2) = 1.0;
  }
  return out;
}

}  // namespace precorrect
