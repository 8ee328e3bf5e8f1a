// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "precorrect/image.hpp"

namespace precorrect {

// Reads an 8-bit PNG as a 3-channel rgb image in [0,1]. Gray is expanded, alpha dropped.
// With `linearize`, values are decoded from sRGB to linear light.
ImagePlane read_png(const std::filesystem::path& path, bool linearize = true);

// Writes a 3-channel image as 8-bit RGB PNG, clamping to [0,1] and rounding to nearest.
// With `encode`, linear values are sRGB-encoded first.
void write_png(const ImagePlane& image, const std::filesystem::path& path, bool encode = true);

}  // namespace precorrect
