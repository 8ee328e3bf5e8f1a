// SPDX-License-Identifier: Apache-2.0
#include "precorrect/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "precorrect/error.hpp"

namespace precorrect {

ImagePlane read_png(const std::filesystem::path& path, bool linearize) {
  if (!std::filesystem::exists(path)) throw FileNotFoundError(path.string());
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw DataError("cannot read PNG " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw DataError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  ImagePlane out(img.height, img.width, 3, ColorSpace::rgb);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = buf[(y * img.width + x) * 3 + c] / 255.0;
        out.at(y, x, c) = linearize ? srgb_to_linear(v) : v;
      }
  return out;
}

void write_png(const ImagePlane& image, const std::filesystem::path& path, bool encode) {
  if (image.channels() != 3) throw ValidationError("PNG output needs 3 channels");
  if (image.height() == 0 || image.width() == 0) throw ValidationError("PNG output is empty");
  std::vector<std::uint8_t> buf(image.element_count());
  for (std::size_t y = 0; y < image.height(); ++y)
    for (std::size_t x = 0; x < image.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        double v = std::clamp(image.at(y, x, c), 0.0, 1.0);
        if (encode) v = linear_to_srgb(v);
        buf[(y * image.width() + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr))
    throw Error("cannot write PNG " + path.string() + ": " + img.message);
}

}  // namespace precorrect
