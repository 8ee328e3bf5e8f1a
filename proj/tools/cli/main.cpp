// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "precorrect/error.hpp"
#include "precorrect/spectra.hpp"

using namespace precorrect;
using namespace precorrect::cli;

int main(int argc, char** argv) {
  CLI::App app{"Vision-correcting image precorrection"};
  app.require_subcommand(1);
  Globals g;
  std::string config_path;
  app.add_option("--config", config_path, "RunConfig JSON file");
  app.add_option("--jobs", g.jobs, "worker threads (0 = all cores)");
  app.add_flag("--verbose,-v", g.verbose, "progress on stderr");

  FitDisplayArgs fit;
  fit.csv = default_display_csv_path();
  auto* fit_cmd = app.add_subcommand("fit-display", "fit Gaussian mixtures to spectrometer data");
  fit_cmd->add_option("--csv", fit.csv, "spectrometer CSV (wavelength_nm,r,g,b)");
  fit_cmd->add_option("--components", fit.components, "Gaussians per primary");
  fit_cmd->add_option("--out", fit.out, "display model JSON")->required();

  KernelArgs kern;
  auto* kernel_cmd = app.add_subcommand("kernel", "build LMS and RGB PSF kernels");
  kernel_cmd->add_option("--out", kern.out, "LMS kernel container")->required();
  kernel_cmd->add_option("--rgb-out", kern.rgb_out, "RGB kernel container");
  kernel_cmd->add_option("--sphere", kern.sphere, "sphere (D)");
  kernel_cmd->add_option("--cylinder", kern.cylinder, "cylinder (D)");
  kernel_cmd->add_option("--axis", kern.axis, "cylinder axis (deg)");
  kernel_cmd->add_option("--pupil", kern.pupil, "pupil diameter (mm)");
  kernel_cmd->add_option("--kernel-size", kern.kernel_size, "kernel size (px, odd)");
  kernel_cmd->add_option("--grid-size", kern.grid_size, "pupil FFT grid size");
  kernel_cmd->add_option("--stride", kern.stride, "wavelength stride (nm)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "simulate the retinal image");
  sim_cmd->add_option("--image", sim.image, "input PNG")->required();
  sim_cmd->add_option("--kernel", sim.kernel, "kernel container")->required();
  sim_cmd->add_option("--out", sim.out, "visualization PNG")->required();
  sim_cmd->add_option("--container", sim.container, "float output container");

  CorrectArgs corr;
  auto* corr_cmd = app.add_subcommand("correct", "optimize a precorrected image");
  corr_cmd->add_option("--image", corr.image, "target PNG")->required();
  corr_cmd->add_option("--kernel", corr.kernel, "kernel container (LMS: ours, RGB: conventional)")
      ->required();
  corr_cmd->add_option("--out", corr.out, "corrected PNG")->required();
  corr_cmd->add_option("--loss-csv", corr.loss_csv, "loss trace CSV");
  corr_cmd->add_option("--container", corr.container, "float output container");
  corr_cmd->add_option("--iterations", corr.iterations, "ADAM steps");
  corr_cmd->add_option("--learning-rate", corr.learning_rate, "ADAM step size");
  corr_cmd->add_option("--loss-space", corr.loss_space, "lms | opponent | rgb");

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "FLIP / SSIM / PSNR in simulated LMS space");
  eval_cmd->add_option("--target", eval.target, "target PNG")->required();
  eval_cmd->add_option("--corrected", eval.corrected, "displayed PNG")->required();
  eval_cmd->add_option("--kernel", eval.kernel, "LMS kernel container")->required();
  eval_cmd->add_option("--out", eval.out, "metrics JSON")->required();
  eval_cmd->add_option("--magma", eval.magma, "FLIP map PNG");
  eval_cmd->add_option("--ppd", eval.ppd, "pixels per degree");

  BatchArgs batch;
  auto* batch_cmd = app.add_subcommand("batch", "prescription presets x images x methods");
  batch_cmd->add_option("--images", batch.images, "directory of PNG images")->required();
  batch_cmd->add_option("--out", batch.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (!config_path.empty()) g.config_path = config_path;

  try {
    if (*fit_cmd) return cmd_fit_display(g, fit);
    if (*kernel_cmd) return cmd_kernel(g, kern);
    if (*sim_cmd) return cmd_simulate(g, sim);
    if (*corr_cmd) return cmd_correct(g, corr);
    if (*eval_cmd) return cmd_evaluate(g, eval);
    if (*batch_cmd) return cmd_batch(g, batch);
  } catch (const FileNotFoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingInput;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
