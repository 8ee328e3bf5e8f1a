// SPDX-License-Identifier: Apache-2.0
#include "precorrect/forward.hpp"

#include <algorithm>
#include <string>

#include "precorrect/error.hpp"
#include "precorrect/parallel.hpp"

namespace precorrect {

namespace {

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

void check_kernel_extent(std::size_t extent, std::size_t field, const char* axis) {
  if (extent == 0 || extent % 2 == 0)
    throw ValidationError(std::string("kernel ") + axis + " must be odd, got " +
                          std::to_string(extent));
  if (field == 0) throw ValidationError("field must be non-empty");
  if (extent / 2 > field)
    throw ValidationError(std::string("kernel ") + axis + " " + std::to_string(extent) +
                          " exceeds padding budget for field extent " + std::to_string(field));
}

void check_plane(const Plane& p, std::size_t rows, std::size_t cols, const char* what) {
  if (p.rows() != rows || p.cols() != cols)
    throw ValidationError(std::string(what) + " shape " + std::to_string(p.rows()) + "x" +
                          std::to_string(p.cols()) + " does not match " + std::to_string(rows) +
                          "x" + std::to_string(cols));
}

}  // namespace

PaddedConvolution::PaddedConvolution(std::size_t height, std::size_t width,
                                     std::size_t kernel_rows, std::size_t kernel_cols)
    : height_(height), width_(width), hy_(kernel_rows / 2), hx_(kernel_cols / 2) {
  check_kernel_extent(kernel_rows, height, "rows");
  check_kernel_extent(kernel_cols, width, "cols");
  plan_ = fft::cached_real_plan(fft::fast_size(height_ + 2 * hy_),
                                fft::fast_size(width_ + 2 * hx_));
}

PaddedConvolution::Spectrum PaddedConvolution::kernel_spectrum(const Plane& kernel) const {
  check_plane(kernel, kernel_rows(), kernel_cols(), "kernel");
  const std::size_t n1 = plan_->cols();
  fft::AlignedBuffer<double> buf(plan_->real_size());
  for (std::size_t u = 0; u < kernel.rows(); ++u)
    for (std::size_t v = 0; v < kernel.cols(); ++v) buf[u * n1 + v] = kernel(u, v);
  Spectrum out(plan_->spectrum_size());
  plan_->forward(buf, out);
  return out;
}

PaddedConvolution::Spectrum PaddedConvolution::field_spectrum(const Plane& field) const {
  check_plane(field, height_, width_, "field");
  const std::size_t n1 = plan_->cols();
  const std::size_t pr = height_ + 2 * hy_, pc = width_ + 2 * hx_;
  fft::AlignedBuffer<double> buf(plan_->real_size());
  for (std::size_t i = 0; i < pr; ++i) {
    const std::size_t sy = clamp_index(static_cast<std::ptrdiff_t>(i) -
                                           static_cast<std::ptrdiff_t>(hy_), height_);
    for (std::size_t j = 0; j < pc; ++j) {
      const std::size_t sx = clamp_index(static_cast<std::ptrdiff_t>(j) -
                                             static_cast<std::ptrdiff_t>(hx_), width_);
      buf[i * n1 + j] = field(sy, sx);
    }
  }
  Spectrum out(plan_->spectrum_size());
  plan_->forward(buf, out);
  return out;
}

PaddedConvolution::Spectrum PaddedConvolution::residual_spectrum(const Plane& residual) const {
  check_plane(residual, height_, width_, "residual");
  const std::size_t n1 = plan_->cols();
  fft::AlignedBuffer<double> buf(plan_->real_size());
  for (std::size_t y = 0; y < height_; ++y)
    for (std::size_t x = 0; x < width_; ++x) buf[y * n1 + x] = residual(y, x);
  Spectrum out(plan_->spectrum_size());
  plan_->forward(buf, out);
  return out;
}

void PaddedConvolution::multiply_accumulate(Spectrum& acc, const Spectrum& a, const Spectrum& b) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += a[i] * b[i];
}

void PaddedConvolution::multiply_conj_accumulate(Spectrum& acc, const Spectrum& a,
                                                 const Spectrum& b) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += a[i] * std::conj(b[i]);
}

Plane PaddedConvolution::crop_forward(Spectrum& product) const {
  const std::size_t n1 = plan_->cols();
  const double scale = 1.0 / static_cast<double>(plan_->real_size());
  fft::AlignedBuffer<double> buf(plan_->real_size());
  plan_->inverse(product, buf);
  Plane out(height_, width_);
  for (std::size_t y = 0; y < height_; ++y)
    for (std::size_t x = 0; x < width_; ++x)
      out(y, x) = buf[(y + 2 * hy_) * n1 + (x + 2 * hx_)] * scale;
  return out;
}

Plane PaddedConvolution::fold_adjoint(Spectrum& product) const {
  const std::size_t n0 = plan_->rows(), n1 = plan_->cols();
  const double scale = 1.0 / static_cast<double>(plan_->real_size());
  fft::AlignedBuffer<double> buf(plan_->real_size());
  plan_->inverse(product, buf);
  Plane out(height_, width_);
  const std::size_t pr = height_ + 2 * hy_, pc = width_ + 2 * hx_;
  for (std::size_t i = 0; i < pr; ++i) {
    const std::size_t ci = (i + n0 - 2 * hy_) % n0;
    const std::size_t sy = clamp_index(static_cast<std::ptrdiff_t>(i) -
                                           static_cast<std::ptrdiff_t>(hy_), height_);
    for (std::size_t j = 0; j < pc; ++j) {
      const std::size_t cj = (j + n1 - 2 * hx_) % n1;
      const std::size_t sx = clamp_index(static_cast<std::ptrdiff_t>(j) -
                                             static_cast<std::ptrdiff_t>(hx_), width_);
      out(sy, sx) += buf[ci * n1 + cj] * scale;
    }
  }
  return out;
}

Plane convolve_same(const Plane& field, const Plane& kernel) {
  PaddedConvolution conv(field.rows(), field.cols(), kernel.rows(), kernel.cols());
  auto f = conv.field_spectrum(field);
  auto k = conv.kernel_spectrum(kernel);
  auto acc = conv.zero_spectrum();
  PaddedConvolution::multiply_accumulate(acc, f, k);
  return conv.crop_forward(acc);
}

Plane convolve_same_adjoint(const Plane& residual, const Plane& kernel) {
  PaddedConvolution conv(residual.rows(), residual.cols(), kernel.rows(), kernel.cols());
  auto g = conv.residual_spectrum(residual);
  auto k = conv.kernel_spectrum(kernel);
  auto acc = conv.zero_spectrum();
  PaddedConvolution::multiply_conj_accumulate(acc, g, k);
  return conv.fold_adjoint(acc);
}

BlurOperator::BlurOperator(std::size_t height, std::size_t width, const LmsPsfKernel& kernel,
                           std::size_t threads)
    : conv_(height, width, kernel.slices[0][0].rows(), kernel.slices[0][0].cols()),
      output_space_(ColorSpace::lms),
      threads_(threads) {
  parallel_for(9, threads_, [&](std::size_t i) {
    blocks_[i / 3][i % 3] = conv_.kernel_spectrum(kernel.slices[i / 3][i % 3]);
  });
}

BlurOperator::BlurOperator(std::size_t height, std::size_t width, const RgbPsfKernel& kernel,
                           std::size_t threads)
    : conv_(height, width, kernel.kernels[0].rows(), kernel.kernels[0].cols()),
      output_space_(ColorSpace::rgb),
      threads_(threads) {
  parallel_for(3, threads_, [&](std::size_t c) {
    blocks_[c][c] = conv_.kernel_spectrum(kernel.kernels[c]);
  });
}

ImagePlane BlurOperator::apply(const ImagePlane& input) const {
  if (input.height() != height() || input.width() != width() || input.channels() != 3)
    throw ValidationError("blur input shape does not match operator");
  std::array<PaddedConvolution::Spectrum, 3> fields;
  parallel_for(3, threads_, [&](std::size_t c) { fields[c] = conv_.field_spectrum(input.channel(c)); });
  ImagePlane out(height(), width(), 3, output_space_);
  parallel_for(3, threads_, [&](std::size_t k) {
    auto acc = conv_.zero_spectrum();
    for (std::size_t c = 0; c < 3; ++c)
      if (blocks_[c][k]) PaddedConvolution::multiply_accumulate(acc, fields[c], *blocks_[c][k]);
    out.channel(k) = conv_.crop_forward(acc);
  });
  return out;
}

ImagePlane BlurOperator::adjoint(const ImagePlane& output_gradient) const {
  if (output_gradient.height() != height() || output_gradient.width() != width() ||
      output_gradient.channels() != 3)
    throw ValidationError("gradient shape does not match operator");
  std::array<PaddedConvolution::Spectrum, 3> residuals;
  parallel_for(3, threads_, [&](std::size_t k) {
    residuals[k] = conv_.residual_spectrum(output_gradient.channel(k));
  });
  ImagePlane out(height(), width(), 3, ColorSpace::rgb);
  parallel_for(3, threads_, [&](std::size_t c) {
    auto acc = conv_.zero_spectrum();
    for (std::size_t k = 0; k < 3; ++k)
      if (blocks_[c][k])
        PaddedConvolution::multiply_conj_accumulate(acc, residuals[k], *blocks_[c][k]);
    out.channel(c) = conv_.fold_adjoint(acc);
  });
  return out;
}

ImagePlane simulate_retina(const ImagePlane& image, const LmsPsfKernel& kernel) {
  return BlurOperator(image.height(), image.width(), kernel).apply(image);
}

ImagePlane simulate_retina_rgb(const ImagePlane& image, const RgbPsfKernel& kernel) {
  return BlurOperator(image.height(), image.width(), kernel).apply(image);
}

}  // namespace precorrect
