// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>

#include "precorrect/image.hpp"
#include "precorrect/perception.hpp"

namespace precorrect {

inline constexpr double kPsnrCapDb = 99.0;

// 10·log10(peak²/MSE), capped at kPsnrCapDb when MSE < 1e-10.
double psnr(const ImagePlane& a, const ImagePlane& b, double peak = 1.0);

// Mean local SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, dynamic range 1; multichannel images average over channels.
double ssim(const ImagePlane& a, const ImagePlane& b);

struct FlipResult {
  double mean = 0.0;
  Plane map;  // per-pixel error in [0,1]
};

// LDR-FLIP on linear-light rgb images in [0,1].
FlipResult flip(const ImagePlane& reference, const ImagePlane& test, double pixels_per_degree);

struct MagmaImage {
  ImagePlane image;            // display-encoded rgb, no further transfer function applies
  std::size_t clamped_values = 0;
};

MagmaImage magma_map(const Plane& error);

struct MetricsReport {
  double flip_mean = 0.0;
  double ssim = 1.0;
  double psnr_db = kPsnrCapDb;
  double pixels_per_degree = 67.0;
  std::string evaluation_space = "simulated lms, visualized through inverse matrix";
  std::size_t clamped_reference = 0;
  std::size_t clamped_test = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);

MetricsReport compute_metrics(const ImagePlane& reference_rgb, const ImagePlane& test_rgb,
                              double pixels_per_degree, Plane* flip_map = nullptr);

struct Evaluation {
  MetricsReport report;
  Plane flip_map;
  ImagePlane reference_display;  // lms_to_display_rgb(A·target)
  ImagePlane test_display;       // lms_to_display_rgb(simulate_retina(displayed))
};

// Simulates `displayed_rgb` through the LMS kernel and compares it against the target's LMS
// image, both visualized as display rgb.
Evaluation evaluate_in_lms_space(const ImagePlane& target_rgb, const ImagePlane& displayed_rgb,
                                 const LmsPsfKernel& kernel, double pixels_per_degree);
// Same comparison for an already simulated LMS image.
Evaluation evaluate_simulated(const ImagePlane& target_rgb, const ImagePlane& simulated_lms,
                              const ColorConversionMatrix& a, double pixels_per_degree);

}  // namespace precorrect
