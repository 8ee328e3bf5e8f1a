// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "precorrect/image.hpp"
#include "precorrect/optics.hpp"
#include "precorrect/perception.hpp"

namespace precorrect {

// Flat binary array file. Layout (little-endian):
//   char[4] "PCFC", u32 version (1), u32 dtype (1 = f64), u32 rank, f64 normalization,
//   u64 dims[rank], f64 data[prod(dims)] in row-major order.
struct FloatContainer {
  std::vector<std::uint64_t> dims;
  double normalization = 1.0;
  std::vector<double> data;

  std::size_t element_count() const noexcept;
};

void write_container(const FloatContainer& container, const std::filesystem::path& path);
FloatContainer read_container(const std::filesystem::path& path);

// Images persist as [H, W, C] containers, channel-interleaved. The color space is not stored.
FloatContainer image_to_container(const ImagePlane& image);
ImagePlane image_from_container(const FloatContainer& container, ColorSpace space);

// Provenance written to the `<kernel>.json` sidecar.
struct KernelMetadata {
  std::string display_source;
  std::optional<Prescription> prescription;
  std::optional<PsfGeometry> geometry;
  int wavelength_stride_nm = 1;
};

struct LoadedKernel {
  std::optional<LmsPsfKernel> lms;  // rank-4 file, dims [3, H, W, 3]
  std::optional<RgbPsfKernel> rgb;  // rank-3 file, dims [3, H, W]
  KernelMetadata metadata;
};

std::filesystem::path sidecar_path(const std::filesystem::path& kernel_path);

void save_lms_kernel(const LmsPsfKernel& kernel, const KernelMetadata& meta,
                     const std::filesystem::path& path);
void save_rgb_kernel(const RgbPsfKernel& kernel, const KernelMetadata& meta,
                     const std::filesystem::path& path);
// Dispatches on rank. The LMS conversion matrix is read from the sidecar when present and
// otherwise recovered from the slice sums.
LoadedKernel load_kernel(const std::filesystem::path& path);

}  // namespace precorrect
