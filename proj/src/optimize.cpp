// SPDX-License-Identifier: Apache-2.0
#include "precorrect/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "precorrect/error.hpp"

namespace precorrect {

std::string_view to_string(LossSpace space) noexcept {
  switch (space) {
    case LossSpace::lms: return "lms";
    case LossSpace::opponent: return "opponent";
    case LossSpace::rgb: return "rgb";
  }
  return "unknown";
}

LossSpace loss_space_from_string(std::string_view name) {
  if (name == "lms") return LossSpace::lms;
  if (name == "opponent") return LossSpace::opponent;
  if (name == "rgb") return LossSpace::rgb;
  throw ValidationError("unknown loss space: " + std::string(name));
}

void OptimizationConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning_rate must be positive");
  if (iterations < 1) throw ValidationError("iterations must be at least 1");
  if (!(clamp_min < clamp_max)) throw ValidationError("clamp_min must be below clamp_max");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ValidationError("beta1 and beta2 must lie in [0,1)");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
}

AdamState::AdamState(const ImagePlane& like)
    : m(like.height(), like.width(), like.channels(), like.space()),
      v(like.height(), like.width(), like.channels(), like.space()) {}

void AdamState::step(ImagePlane& x, const ImagePlane& gradient, const OptimizationConfig& config) {
  if (!x.same_shape(gradient) || !x.same_shape(m))
    throw ValidationError("ADAM state shape does not match the image");
  ++t;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t c = 0; c < x.channels(); ++c) {
    auto xs = x.channel(c).values();
    const auto gs = gradient.channel(c).values();
    auto ms = m.channel(c).values();
    auto vs = v.channel(c).values();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double g = gs[i];
      ms[i] = config.beta1 * ms[i] + (1.0 - config.beta1) * g;
      vs[i] = config.beta2 * vs[i] + (1.0 - config.beta2) * g * g;
      const double mhat = ms[i] / c1;
      const double vhat = vs[i] / c2;
      const double next = xs[i] - config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
      xs[i] = std::clamp(next, config.clamp_min, config.clamp_max);
    }
  }
}

double loss_l2(const ImagePlane& sim, const ImagePlane& target) {
  if (!sim.same_shape(target)) throw ValidationError("loss operands differ in shape");
  if (sim.space() != target.space())
    throw ValidationError("loss operands differ in color space: " +
                          std::string(to_string(sim.space())) + " vs " +
                          std::string(to_string(target.space())));
  if (sim.element_count() == 0) throw ValidationError("loss of an empty image");
  double acc = 0.0;
  for (std::size_t c = 0; c < sim.channels(); ++c) {
    const auto a = sim.channel(c).values();
    const auto b = target.channel(c).values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
  }
  return acc / static_cast<double>(sim.element_count());
}

Objective::Objective(const BlurOperator& blur, const Matrix3& post, ImagePlane target)
    : blur_(blur),
      post_(post),
      post_t_(transpose(post)),
      identity_(post == identity_matrix()),
      target_(std::move(target)) {
  if (target_.height() != blur.height() || target_.width() != blur.width() ||
      target_.channels() != 3)
    throw ValidationError("target shape does not match the forward model");
}

ImagePlane Objective::simulate(const ImagePlane& x) const { return blur_.apply(x); }

double Objective::loss(const ImagePlane& x) const {
  ImagePlane sim = blur_.apply(x);
  if (!identity_) sim = apply_matrix(post_, sim, target_.space());
  sim.set_space(target_.space());
  return loss_l2(sim, target_);
}

double Objective::evaluate(const ImagePlane& x, ImagePlane& gradient,
                           ImagePlane* simulated) const {
  ImagePlane sim = blur_.apply(x);
  ImagePlane mapped = identity_ ? sim : apply_matrix(post_, sim, target_.space());
  mapped.set_space(target_.space());
  const double value = loss_l2(mapped, target_);

  const double scale = 2.0 / static_cast<double>(mapped.element_count());
  for (std::size_t c = 0; c < 3; ++c) {
    auto r = mapped.channel(c).values();
    const auto t = target_.channel(c).values();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = scale * (r[i] - t[i]);
  }
  ImagePlane residual = identity_ ? std::move(mapped) : apply_matrix(post_t_, mapped, sim.space());
  residual.set_space(blur_.output_space());
  gradient = blur_.adjoint(residual);
  if (simulated) *simulated = std::move(sim);
  return value;
}

namespace {

Matrix3 post_matrix(LossSpace space, const ColorConversionMatrix& a) {
  switch (space) {
    case LossSpace::lms: return identity_matrix();
    case LossSpace::opponent: return opponency_matrix();
    case LossSpace::rgb: return invert(a.entries);
  }
  return identity_matrix();
}

ColorSpace tag_of(LossSpace space) {
  switch (space) {
    case LossSpace::lms: return ColorSpace::lms;
    case LossSpace::opponent: return ColorSpace::opponent;
    case LossSpace::rgb: return ColorSpace::rgb;
  }
  return ColorSpace::lms;
}

ImagePlane tagged(ImagePlane image, ColorSpace space) {
  image.set_space(space);
  return image;
}

ImagePlane gradient_with(const BlurOperator& blur, const Matrix3& post, const ImagePlane& image,
                         const ImagePlane& target) {
  Objective objective(blur, post, target);
  ImagePlane gradient;
  objective.evaluate(image, gradient);
  return gradient;
}

CorrectionResult run(const Objective& objective, const ImagePlane& target_rgb,
                     const OptimizationConfig& config, const ProgressFn& progress) {
  CorrectionResult result;
  result.config = config;
  result.loss_trace.reserve(config.iterations);
  result.best_trace.reserve(config.iterations + 1);

  ImagePlane x = target_rgb;
  for (std::size_t c = 0; c < 3; ++c)
    for (double& v : x.channel(c).values()) v = std::clamp(v, config.clamp_min, config.clamp_max);
  AdamState adam(x);
  ImagePlane gradient;
  ImagePlane simulated;

  double value = objective.evaluate(x, gradient, &simulated);
  if (!std::isfinite(value)) throw DivergenceError("non-finite initial loss", 0);
  result.initial_loss = value;
  result.best_loss = value;
  result.best_iteration = 0;
  result.corrected = x;
  result.simulated = simulated;
  result.best_trace.push_back(value);

  const std::size_t every = config.log_every ? config.log_every : config.iterations;
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    adam.step(x, gradient, config);
    value = objective.evaluate(x, gradient, &simulated);
    if (!std::isfinite(value))
      throw DivergenceError("loss diverged at iteration " + std::to_string(it), it);
    result.loss_trace.push_back(value);
    if (value < result.best_loss) {
      result.best_loss = value;
      result.best_iteration = it;
      result.corrected = x;
      result.simulated = simulated;
    }
    result.best_trace.push_back(result.best_loss);
    if (progress && (it % every == 0 || it == config.iterations)) progress(it, value);
  }
  return result;
}

}  // namespace

ImagePlane gradient_lms(const ImagePlane& image, const LmsPsfKernel& kernel,
                        const ImagePlane& target_lms) {
  BlurOperator blur(image.height(), image.width(), kernel);
  return gradient_with(blur, identity_matrix(), image, tagged(target_lms, ColorSpace::lms));
}

ImagePlane gradient_opponent(const ImagePlane& image, const LmsPsfKernel& kernel,
                             const ImagePlane& target_opponent) {
  BlurOperator blur(image.height(), image.width(), kernel);
  return gradient_with(blur, opponency_matrix(), image,
                       tagged(target_opponent, ColorSpace::opponent));
}

ImagePlane gradient_rgb(const ImagePlane& image, const RgbPsfKernel& kernel,
                        const ImagePlane& target_rgb) {
  BlurOperator blur(image.height(), image.width(), kernel);
  return gradient_with(blur, identity_matrix(), image, tagged(target_rgb, ColorSpace::rgb));
}

ImagePlane loss_space_target(const ImagePlane& target_rgb, const ColorConversionMatrix& a,
                             LossSpace space) {
  switch (space) {
    case LossSpace::lms: return rgb_to_lms(target_rgb, a);
    case LossSpace::opponent: return lms_to_opponency(rgb_to_lms(target_rgb, a));
    case LossSpace::rgb: return tagged(target_rgb, ColorSpace::rgb);
  }
  return target_rgb;
}

CorrectionResult correct_image(const ImagePlane& target_rgb, const LmsPsfKernel& kernel,
                               const OptimizationConfig& config, const ProgressFn& progress) {
  config.validate();
  if (target_rgb.channels() != 3) throw ValidationError("target must have 3 channels");
  target_rgb.validate();
  BlurOperator blur(target_rgb.height(), target_rgb.width(), kernel, config.threads);
  ImagePlane target = loss_space_target(target_rgb, kernel.matrix, config.loss_space);
  // The rgb loss space maps the LMS blur output back through the inverse matrix, so its
  // target is the plain rgb image.
  target.set_space(tag_of(config.loss_space));
  Objective objective(blur, post_matrix(config.loss_space, kernel.matrix), std::move(target));
  return run(objective, target_rgb, config, progress);
}

CorrectionResult correct_image_baseline(const ImagePlane& target_rgb, const RgbPsfKernel& kernel,
                                        const OptimizationConfig& config,
                                        const ProgressFn& progress) {
  OptimizationConfig cfg = config;
  cfg.loss_space = LossSpace::rgb;
  cfg.validate();
  if (target_rgb.channels() != 3) throw ValidationError("target must have 3 channels");
  target_rgb.validate();
  BlurOperator blur(target_rgb.height(), target_rgb.width(), kernel, cfg.threads);
  Objective objective(blur, identity_matrix(), tagged(target_rgb, ColorSpace::rgb));
  return run(objective, target_rgb, cfg, progress);
}

}  // namespace precorrect
