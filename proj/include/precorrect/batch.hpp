// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "precorrect/config.hpp"
#include "precorrect/metrics.hpp"
#include "precorrect/perception.hpp"
#include "precorrect/spectra.hpp"

namespace precorrect {

// Display model, cone table and both kernels for one prescription under `config`.
KernelPair make_kernels(const RunConfig& config, const DisplayModel& display,
                        const ConeFundamentals& cones, const Prescription& rx,
                        std::size_t threads = 0);

// PNG files directly inside `dir`, sorted by name. Throws ValidationError when there are none.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

struct BatchOptions {
  std::filesystem::path image_dir;
  std::filesystem::path output_dir;  // empty: no artifacts are written
  std::size_t jobs = 1;
  std::vector<PrescriptionPreset> presets = prescription_presets();
  std::function<void(const std::string&)> log;
};

struct BatchRow {
  std::string image;
  std::string prescription;
  std::string method;  // "ours" or "conventional"
  MetricsReport metrics;
  double sphere_d = 0.0;
  double cylinder_d = 0.0;
  std::string loss_space;
  std::string error;  // empty on success
};

struct BatchResult {
  std::vector<BatchRow> rows;  // image-major, then preset, then ours before conventional
  std::size_t failures = 0;
};

// Runs both methods for every (image, preset) cell on a pool of `jobs` workers. A failing
// cell is recorded and the remaining cells still run.
BatchResult run_batch(const RunConfig& config, const BatchOptions& options);

// Header: image,prescription,method,flip_mean,ssim,psnr_db,sphere_d,cylinder_d,loss_space,status
std::string batch_csv(const BatchResult& result);

// `iteration,loss` rows, one per ADAM step.
std::string loss_trace_csv(const std::vector<double>& trace);

}  // namespace precorrect
