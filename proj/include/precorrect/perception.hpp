// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>

#include "precorrect/image.hpp"
#include "precorrect/optics.hpp"
#include "precorrect/spectra.hpp"

namespace precorrect {

using Matrix3 = std::array<std::array<double, 3>, 3>;

Matrix3 invert(const Matrix3& m);  // throws SingularMatrixError
Matrix3 transpose(const Matrix3& m) noexcept;
Matrix3 multiply(const Matrix3& a, const Matrix3& b) noexcept;
Matrix3 identity_matrix() noexcept;
// 2-norm condition number (ratio of extreme singular values); +inf when singular.
double condition_number(const Matrix3& m);

// RGB -> LMS matrix. entries[k][c] is the response of cone k (L, M, S) to primary c (R, G, B).
struct ColorConversionMatrix {
  Matrix3 entries{};
  // Global scale applied to the raw spectral sums so that max_k (A * [1,1,1])_k == 1.
  double normalization = 1.0;
  double condition = 0.0;
  std::string normalization_note = "global scale: white maps to unit peak cone response";
};

// A[k][c] = sum over the 400-700 nm grid of cone_k(lambda) * w_c(lambda), then globally scaled.
ColorConversionMatrix build_conversion_matrix(const DisplayModel& display,
                                              const ConeFundamentals& cones, int stride_nm = 1);

// Wraps an explicit matrix (checks nonnegativity and invertibility, computes condition).
ColorConversionMatrix make_conversion_matrix(const Matrix3& entries, double normalization = 1.0);

// Per-pixel 3x3 transform of a 3-channel image.
ImagePlane apply_matrix(const Matrix3& m, const ImagePlane& image, ColorSpace result_space);

ImagePlane rgb_to_lms(const ImagePlane& rgb, const ColorConversionMatrix& a);

// ((M+S)-L, (L+S)-M, mean(L,M,S)).
const Matrix3& opponency_matrix() noexcept;
ImagePlane lms_to_opponency(const ImagePlane& lms);

struct DisplayRgb {
  ImagePlane image;
  std::size_t clamped_values = 0;  // channel values that fell outside [0,1] before clamping
};

// Visualization only: A^-1 * lms clamped to [0,1].
DisplayRgb lms_to_display_rgb(const ImagePlane& lms, const ColorConversionMatrix& a);

// [primary][cone] spatial kernels; each slice sums to the matching A entry.
struct LmsPsfKernel {
  std::array<std::array<Plane, 3>, 3> slices;
  ColorConversionMatrix matrix;

  std::size_t size() const noexcept { return slices[0][0].rows(); }
  double at(std::size_t primary, std::size_t y, std::size_t x, std::size_t cone) const noexcept {
    return slices[primary][cone](y, x);
  }
};

// One unit-sum spatial kernel per primary (the conventional forward model).
struct RgbPsfKernel {
  std::array<Plane, 3> kernels;

  std::size_t size() const noexcept { return kernels[0].rows(); }
};

// Supplies the monochromatic PSF at a wavelength (nm); used to inject test PSFs.
using PsfSource = std::function<MonochromaticPsf(double)>;

struct KernelOptions {
  int stride_nm = 1;
  std::size_t threads = 0;  // 0: hardware concurrency
};

struct KernelPair {
  LmsPsfKernel lms;
  RgbPsfKernel rgb;
};

// Builds both kernels from one pass over the wavelength grid. PSFs are computed in parallel;
// the spectral sums are reduced in wavelength order so results match a serial build exactly.
KernelPair build_kernels(const DisplayModel& display, const ConeFundamentals& cones,
                         const PsfSource& psf_source, const KernelOptions& options = {});

LmsPsfKernel build_lms_kernel(const DisplayModel& display, const ConeFundamentals& cones,
                              const ZernikeCoefficients& coeffs, double pupil_diameter_mm,
                              const PsfGeometry& geometry, const KernelOptions& options = {});
LmsPsfKernel build_lms_kernel(const DisplayModel& display, const ConeFundamentals& cones,
                              const PsfSource& psf_source, const KernelOptions& options = {});

RgbPsfKernel build_rgb_kernel(const DisplayModel& display, const ZernikeCoefficients& coeffs,
                              double pupil_diameter_mm, const PsfGeometry& geometry,
                              const KernelOptions& options = {});
RgbPsfKernel build_rgb_kernel(const DisplayModel& display, const PsfSource& psf_source,
                              const KernelOptions& options = {});

PsfSource zernike_psf_source(const ZernikeCoefficients& coeffs, double pupil_diameter_mm,
                             const PsfGeometry& geometry);

// Spatial delta kernels: slice [c][k] is a 1x1 (or centered size x size) delta of mass A[k][c].
LmsPsfKernel delta_lms_kernel(const ColorConversionMatrix& a, std::size_t size = 1);
RgbPsfKernel delta_rgb_kernel(std::size_t size = 1);

}  // namespace precorrect
