// SPDX-License-Identifier: Apache-2.0
#include "precorrect/image.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "precorrect/error.hpp"

namespace precorrect {

double Plane::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

std::string_view to_string(ColorSpace space) noexcept {
  switch (space) {
    case ColorSpace::rgb:
      return "rgb";
    case ColorSpace::lms:
      return "lms";
    case ColorSpace::opponent:
      return "opponent";
  }
  return "unknown";
}

ImagePlane::ImagePlane(std::size_t height, std::size_t width, std::size_t channels,
                       ColorSpace space, double fill)
    : height_(height), width_(width), space_(space), channels_(channels, Plane(height, width, fill)) {}

void ImagePlane::validate() const {
  for (std::size_t c = 0; c < channels(); ++c) {
    for (double v : channels_[c].values()) {
      if (!std::isfinite(v)) throw ValidationError("image contains non-finite values");
      if (space_ == ColorSpace::rgb && (v < 0.0 || v > 1.0))
        throw ValidationError("rgb image value outside [0,1]: " + std::to_string(v));
    }
  }
}

double srgb_to_linear(double encoded) noexcept {
  if (encoded <= 0.04045) return encoded / 12.92;
  return std::pow((encoded + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double linear) noexcept {
  if (linear <= 0.0031308) return linear * 12.92;
  return 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

namespace {

template <typename Fn>
ImagePlane map_values(const ImagePlane& in, Fn fn) {
  ImagePlane out = in;
  for (std::size_t c = 0; c < out.channels(); ++c)
    for (double& v : out.channel(c).values()) v = fn(v);
  return out;
}

}  // namespace

ImagePlane srgb_decode(const ImagePlane& encoded) { return map_values(encoded, srgb_to_linear); }
ImagePlane srgb_encode(const ImagePlane& linear) { return map_values(linear, linear_to_srgb); }

}  // namespace precorrect
