// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "precorrect/batch.hpp"
#include "precorrect/container.hpp"
#include "precorrect/error.hpp"
#include "precorrect/forward.hpp"
#include "precorrect/metrics.hpp"
#include "precorrect/optimize.hpp"
#include "precorrect/png_io.hpp"
#include "precorrect/spectra.hpp"

namespace precorrect::cli {

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::filesystem::path with_suffix(const std::filesystem::path& p, const std::string& suffix,
                                  const std::string& ext) {
  auto out = p;
  out.replace_filename(p.stem().string() + suffix + ext);
  return out;
}

void note(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << msg << "\n";
}

LoadedKernel require_kernel(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FileNotFoundError(path.string());
  return load_kernel(path);
}

}  // namespace

RunConfig load_config(const Globals& globals) {
  if (!globals.config_path) return RunConfig{};
  return load_run_config(*globals.config_path);
}

int cmd_fit_display(const Globals& g, const FitDisplayArgs& args) {
  if (args.components < 1) throw UsageError("--components must be at least 1");
  const SpectralSamples samples = load_spectrometer_csv(args.csv);
  const DisplayModel model =
      fit_display(samples, args.components, args.csv.filename().string());
  save_display_model(model, args.out);
  const char* names = "rgb";
  for (std::size_t c = 0; c < 3; ++c)
    note(g, std::string("primary ") + names[c] + ": rmse " + std::to_string(model.rmse[c]));
  return kExitOk;
}

int cmd_kernel(const Globals& g, const KernelArgs& args) {
  RunConfig config = load_config(g);
  auto& rx = config.prescription;
  if (args.sphere) rx.sphere_d = *args.sphere;
  if (args.cylinder) rx.cylinder_d = *args.cylinder;
  if (args.axis) rx.axis_deg = *args.axis;
  if (args.pupil) rx.pupil_diameter_mm = *args.pupil;
  if (args.kernel_size) config.geometry.kernel_size_px = *args.kernel_size;
  if (args.grid_size) config.geometry.grid_size = *args.grid_size;
  if (args.stride) config.wavelength_stride_nm = *args.stride;
  config.validate();
  config.check_files();

  const DisplayModel display = load_display_model(config.display_model);
  const ConeFundamentals cones = load_cone_csv(config.cone_table);
  const KernelPair kernels = make_kernels(config, display, cones, rx, g.jobs);

  KernelMetadata meta;
  meta.display_source = display.source.empty() ? config.display_model.filename().string()
                                               : display.source;
  meta.prescription = rx;
  meta.geometry = config.geometry;
  meta.wavelength_stride_nm = config.wavelength_stride_nm;
  const auto rgb_out = args.rgb_out.empty() ? with_suffix(args.out, "_rgb", args.out.extension().string())
                                            : args.rgb_out;
  save_lms_kernel(kernels.lms, meta, args.out);
  save_rgb_kernel(kernels.rgb, meta, rgb_out);
  note(g, "wrote " + args.out.string() + " and " + rgb_out.string());
  return kExitOk;
}

int cmd_simulate(const Globals& g, const SimulateArgs& args) {
  const RunConfig config = load_config(g);
  const ImagePlane image = read_png(args.image, config.srgb_linearize);
  const LoadedKernel k = require_kernel(args.kernel);
  const auto container = args.container.empty() ? with_suffix(args.out, "", ".pcfc") : args.container;
  if (k.lms) {
    const ImagePlane lms = simulate_retina(image, *k.lms);
    const DisplayRgb vis = lms_to_display_rgb(lms, k.lms->matrix);
    write_png(vis.image, args.out, config.srgb_linearize);
    write_container(image_to_container(lms), container);
    if (vis.clamped_values) note(g, std::to_string(vis.clamped_values) + " values clamped for display");
  } else {
    const ImagePlane rgb = simulate_retina_rgb(image, *k.rgb);
    write_png(rgb, args.out, config.srgb_linearize);
    write_container(image_to_container(rgb), container);
  }
  return kExitOk;
}

int cmd_correct(const Globals& g, const CorrectArgs& args) {
  RunConfig config = load_config(g);
  if (args.iterations) config.optimizer.iterations = *args.iterations;
  if (args.learning_rate) config.optimizer.learning_rate = *args.learning_rate;
  if (args.loss_space) config.optimizer.loss_space = loss_space_from_string(*args.loss_space);
  config.optimizer.threads = g.jobs;
  config.optimizer.validate();

  const ImagePlane target = read_png(args.image, config.srgb_linearize);
  const LoadedKernel k = require_kernel(args.kernel);
  ProgressFn progress;
  if (g.verbose)
    progress = [](std::size_t it, double loss) {
      std::fprintf(stderr, "iteration %zu loss %.9g\n", it, loss);
    };
  const CorrectionResult result = k.lms ? correct_image(target, *k.lms, config.optimizer, progress)
                                        : correct_image_baseline(target, *k.rgb, config.optimizer, progress);
  write_png(result.corrected, args.out, config.srgb_linearize);
  const auto loss_csv = args.loss_csv.empty() ? with_suffix(args.out, "_loss", ".csv") : args.loss_csv;
  write_file(loss_csv, loss_trace_csv(result.loss_trace));
  if (!args.container.empty()) write_container(image_to_container(result.corrected), args.container);
  note(g, "initial loss " + std::to_string(result.initial_loss) + ", best " +
              std::to_string(result.best_loss) + " at iteration " +
              std::to_string(result.best_iteration));
  return kExitOk;
}

int cmd_evaluate(const Globals& g, const EvaluateArgs& args) {
  const RunConfig config = load_config(g);
  const double ppd = args.ppd.value_or(config.pixels_per_degree);
  const ImagePlane target = read_png(args.target, config.srgb_linearize);
  const ImagePlane corrected = read_png(args.corrected, config.srgb_linearize);
  const LoadedKernel k = require_kernel(args.kernel);
  if (!k.lms) throw ValidationError("evaluate needs an LMS kernel (rank 4)");
  const Evaluation e = evaluate_in_lms_space(target, corrected, *k.lms, ppd);
  write_file(args.out, report_to_json(e.report));
  const auto magma = args.magma.empty() ? with_suffix(args.out, "_magma", ".png") : args.magma;
  write_png(magma_map(e.flip_map).image, magma, false);
  note(g, "flip " + std::to_string(e.report.flip_mean) + " ssim " + std::to_string(e.report.ssim) +
              " psnr " + std::to_string(e.report.psnr_db));
  return kExitOk;
}

int cmd_batch(const Globals& g, const BatchArgs& args) {
  const RunConfig config = load_config(g);
  BatchOptions options;
  options.image_dir = args.images;
  options.output_dir = args.out;
  options.jobs = g.jobs;
  if (g.verbose) options.log = [](const std::string& msg) { std::cerr << msg << "\n"; };
  const BatchResult result = run_batch(config, options);
  if (result.failures) {
    std::cerr << result.failures << " batch rows failed; see " << (args.out / "results.csv").string()
              << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace precorrect::cli
