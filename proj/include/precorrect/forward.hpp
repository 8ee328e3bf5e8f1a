// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>

#include "precorrect/fft.hpp"
#include "precorrect/image.hpp"
#include "precorrect/perception.hpp"

namespace precorrect {

// FFT realization of a "same"-size linear convolution with replicate (edge-clamp) padding,
// for one field size and one odd kernel size. The field is padded by the kernel half-width
// on every side, convolved on a zero-padded transform of length >= H + kh - 1, and cropped.
class PaddedConvolution {
 public:
  PaddedConvolution(std::size_t height, std::size_t width, std::size_t kernel_rows,
                    std::size_t kernel_cols);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t kernel_rows() const noexcept { return 2 * hy_ + 1; }
  std::size_t kernel_cols() const noexcept { return 2 * hx_ + 1; }

  using Spectrum = fft::AlignedBuffer<fft::Complex>;

  Spectrum kernel_spectrum(const Plane& kernel) const;
  Spectrum field_spectrum(const Plane& field) const;
  Spectrum residual_spectrum(const Plane& residual) const;
  Spectrum zero_spectrum() const { return Spectrum(plan_->spectrum_size()); }

  // acc += a * b (or a * conj(b)), elementwise.
  static void multiply_accumulate(Spectrum& acc, const Spectrum& a, const Spectrum& b);
  static void multiply_conj_accumulate(Spectrum& acc, const Spectrum& a, const Spectrum& b);

  // Inverse transform of a product of field and kernel spectra, cropped to the field.
  Plane crop_forward(Spectrum& product) const;
  // Inverse transform of residual * conj(kernel) spectra, folded back through the padding.
  Plane fold_adjoint(Spectrum& product) const;

 private:
  std::size_t height_, width_, hy_, hx_;
  std::shared_ptr<const fft::RealPlan2d> plan_;
};

Plane convolve_same(const Plane& field, const Plane& kernel);
// Adjoint of convolve_same with respect to the field: correlation with the kernel followed
// by the transpose of the replicate padding.
Plane convolve_same_adjoint(const Plane& residual, const Plane& kernel);

// 3-in, 3-out block convolution: out_k = sum_c convolve_same(in_c, block[c][k]).
class BlurOperator {
 public:
  BlurOperator(std::size_t height, std::size_t width, const LmsPsfKernel& kernel,
               std::size_t threads = 0);
  BlurOperator(std::size_t height, std::size_t width, const RgbPsfKernel& kernel,
               std::size_t threads = 0);

  std::size_t height() const noexcept { return conv_.height(); }
  std::size_t width() const noexcept { return conv_.width(); }
  ColorSpace output_space() const noexcept { return output_space_; }

  ImagePlane apply(const ImagePlane& input) const;
  // Adjoint map from output-space gradients back to input (rgb) space.
  ImagePlane adjoint(const ImagePlane& output_gradient) const;

 private:
  PaddedConvolution conv_;
  std::array<std::array<std::optional<PaddedConvolution::Spectrum>, 3>, 3> blocks_;
  ColorSpace output_space_;
  std::size_t threads_;
};

ImagePlane simulate_retina(const ImagePlane& image, const LmsPsfKernel& kernel);
ImagePlane simulate_retina_rgb(const ImagePlane& image, const RgbPsfKernel& kernel);

}  // namespace precorrect
