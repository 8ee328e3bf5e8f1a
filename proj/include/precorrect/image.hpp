// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace precorrect {

// Dense row-major 2-D array of doubles.
class Plane {
 public:
  Plane() = default;
  Plane(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double sum() const noexcept;

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class ColorSpace { rgb, lms, opponent };

std::string_view to_string(ColorSpace space) noexcept;

// H x W x C image stored as C planes, linear light, tagged with its color space.
class ImagePlane {
 public:
  ImagePlane() = default;
  ImagePlane(std::size_t height, std::size_t width, std::size_t channels, ColorSpace space,
             double fill = 0.0);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_.size(); }
  std::size_t element_count() const noexcept { return height_ * width_ * channels_.size(); }
  ColorSpace space() const noexcept { return space_; }
  void set_space(ColorSpace space) noexcept { space_ = space; }

  Plane& channel(std::size_t c) noexcept { return channels_[c]; }
  const Plane& channel(std::size_t c) const noexcept { return channels_[c]; }

  double& at(std::size_t y, std::size_t x, std::size_t c) noexcept { return channels_[c](y, x); }
  double at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return channels_[c](y, x);
  }

  bool same_shape(const ImagePlane& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_.size() == other.channels_.size();
  }

  // Throws ValidationError on non-finite values, or values outside [0,1] for rgb images.
  void validate() const;

  friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  ColorSpace space_ = ColorSpace::rgb;
  std::vector<Plane> channels_;
};

double srgb_to_linear(double encoded) noexcept;
double linear_to_srgb(double linear) noexcept;

ImagePlane srgb_decode(const ImagePlane& encoded);
ImagePlane srgb_encode(const ImagePlane& linear);

}  // namespace precorrect
