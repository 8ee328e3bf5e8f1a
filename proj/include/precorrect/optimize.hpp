// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "precorrect/forward.hpp"
#include "precorrect/image.hpp"
#include "precorrect/perception.hpp"

namespace precorrect {

enum class LossSpace { lms, opponent, rgb };

std::string_view to_string(LossSpace space) noexcept;
LossSpace loss_space_from_string(std::string_view name);  // throws ValidationError

struct OptimizationConfig {
  double learning_rate = 0.02;
  std::size_t iterations = 200;
  LossSpace loss_space = LossSpace::lms;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clamp_min = 0.0;
  double clamp_max = 1.0;
  std::size_t log_every = 0;  // 0: log only the last iteration
  std::size_t threads = 0;    // convolution workers; 0 = hardware concurrency

  void validate() const;
  friend bool operator==(const OptimizationConfig&, const OptimizationConfig&) = default;
};

struct AdamState {
  ImagePlane m;
  ImagePlane v;
  std::size_t t = 0;

  explicit AdamState(const ImagePlane& like);

  // One bias-corrected ADAM step on x followed by projection onto [clamp_min, clamp_max].
  void step(ImagePlane& x, const ImagePlane& gradient, const OptimizationConfig& config);
};

struct CorrectionResult {
  ImagePlane corrected;              // best iterate, rgb
  ImagePlane simulated;              // forward model output of `corrected`
  std::vector<double> loss_trace;    // loss after ADAM step i+1, i < iterations
  std::vector<double> best_trace;    // running minimum including the initial loss
  double initial_loss = 0.0;         // loss of the unmodified target
  double best_loss = 0.0;
  std::size_t best_iteration = 0;    // 0 = the initial iterate
  OptimizationConfig config;
};

// Mean of squared per-element differences.
double loss_l2(const ImagePlane& sim, const ImagePlane& target);

// Quadratic objective |M·B(x) − y|² / N for a blur operator B, an optional per-pixel color
// map M applied to the blur output, and a target y already expressed in M's range.
class Objective {
 public:
  Objective(const BlurOperator& blur, const Matrix3& post, ImagePlane target);

  const ImagePlane& target() const noexcept { return target_; }

  ImagePlane simulate(const ImagePlane& x) const;
  double loss(const ImagePlane& x) const;
  // Returns the loss; writes the gradient with respect to x and the blur output.
  double evaluate(const ImagePlane& x, ImagePlane& gradient, ImagePlane* simulated = nullptr) const;

 private:
  const BlurOperator& blur_;
  Matrix3 post_;
  Matrix3 post_t_;
  bool identity_;
  ImagePlane target_;
};

// Gradients of the per-space L2 loss with respect to the displayed image.
ImagePlane gradient_lms(const ImagePlane& image, const LmsPsfKernel& kernel,
                        const ImagePlane& target_lms);
ImagePlane gradient_opponent(const ImagePlane& image, const LmsPsfKernel& kernel,
                             const ImagePlane& target_opponent);
ImagePlane gradient_rgb(const ImagePlane& image, const RgbPsfKernel& kernel,
                        const ImagePlane& target_rgb);

// Target image in the given loss space: A·t, T·A·t or t.
ImagePlane loss_space_target(const ImagePlane& target_rgb, const ColorConversionMatrix& a,
                             LossSpace space);

using ProgressFn = std::function<void(std::size_t iteration, double loss)>;

CorrectionResult correct_image(const ImagePlane& target_rgb, const LmsPsfKernel& kernel,
                               const OptimizationConfig& config,
                               const ProgressFn& progress = {});
// Conventional method: per-channel RGB kernels with an RGB-space loss; the config's
// loss_space is forced to rgb.
CorrectionResult correct_image_baseline(const ImagePlane& target_rgb, const RgbPsfKernel& kernel,
                                        const OptimizationConfig& config,
                                        const ProgressFn& progress = {});

}  // namespace precorrect
