// SPDX-License-Identifier: Apache-2.0
#include "precorrect/batch.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>

#include "precorrect/error.hpp"
#include "precorrect/optimize.hpp"
#include "precorrect/parallel.hpp"
#include "precorrect/png_io.hpp"

namespace precorrect {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

struct Cell {
  std::size_t image;
  std::size_t preset;
};

}  // namespace

KernelPair make_kernels(const RunConfig& config, const DisplayModel& display,
                        const ConeFundamentals& cones, const Prescription& rx,
                        std::size_t threads) {
  rx.validate();
  const auto coeffs = prescription_to_zernike(rx);
  KernelOptions options;
  options.stride_nm = config.wavelength_stride_nm;
  options.threads = threads;
  return build_kernels(display, cones,
                       zernike_psf_source(coeffs, rx.pupil_diameter_mm, config.geometry), options);
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw FileNotFoundError(dir.string());
  std::vector<std::filesystem::path> images;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") images.push_back(entry.path());
  }
  if (images.empty()) throw ValidationError("no PNG images in " + dir.string());
  std::sort(images.begin(), images.end());
  return images;
}

BatchResult run_batch(const RunConfig& config, const BatchOptions& options) {
  config.validate();
  config.check_files();
  if (options.presets.empty()) throw ValidationError("batch needs at least one prescription");
  const auto image_paths = list_images(options.image_dir);
  const std::size_t jobs = resolve_threads(options.jobs);
  auto log = [&](const std::string& msg) {
    static std::mutex mutex;
    if (!options.log) return;
    std::lock_guard lock(mutex);
    options.log(msg);
  };

  const DisplayModel display = load_display_model(config.display_model);
  const ConeFundamentals cones = load_cone_csv(config.cone_table);

  std::vector<ImagePlane> images;
  for (const auto& p : image_paths) images.push_back(read_png(p, config.srgb_linearize));

  std::vector<KernelPair> kernels;
  for (const auto& preset : options.presets) {
    Prescription rx = config.prescription;
    rx.sphere_d = preset.prescription.sphere_d;
    rx.cylinder_d = preset.prescription.cylinder_d;
    kernels.push_back(make_kernels(config, display, cones, rx, jobs));
    log("kernel " + preset.name + " ready");
  }

  std::vector<Cell> cells;
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t p = 0; p < options.presets.size(); ++p) cells.push_back({i, p});

  OptimizationConfig opt = config.optimizer;
  opt.threads = jobs > 1 ? 1 : 0;
  const std::string loss_space(to_string(opt.loss_space));

  BatchResult result;
  result.rows.resize(cells.size() * 2);
  parallel_for(cells.size(), jobs, [&](std::size_t ci) {
    const Cell cell = cells[ci];
    const auto& preset = options.presets[cell.preset];
    const std::string image_name = image_paths[cell.image].stem().string();
    BatchRow& ours = result.rows[2 * ci];
    BatchRow& conv = result.rows[2 * ci + 1];
    for (BatchRow* row : {&ours, &conv}) {
      row->image = image_name;
      row->prescription = preset.name;
      row->sphere_d = preset.prescription.sphere_d;
      row->cylinder_d = preset.prescription.cylinder_d;
    }
    ours.method = "ours";
    ours.loss_space = loss_space;
    conv.method = "conventional";
    conv.loss_space = "rgb";
    try {
      const ImagePlane& target = images[cell.image];
      const KernelPair& k = kernels[cell.preset];
      const CorrectionResult r_ours = correct_image(target, k.lms, opt);
      const CorrectionResult r_conv = correct_image_baseline(target, k.rgb, opt);
      Evaluation e_ours = evaluate_simulated(target, r_ours.simulated, k.lms.matrix,
                                             config.pixels_per_degree);
      Evaluation e_conv = evaluate_in_lms_space(target, r_conv.corrected, k.lms,
                                                config.pixels_per_degree);
      ours.metrics = e_ours.report;
      conv.metrics = e_conv.report;
      if (!options.output_dir.empty()) {
        const auto dir = options.output_dir / image_name / preset.name;
        const std::pair<const CorrectionResult*, Evaluation*> runs[] = {{&r_ours, &e_ours},
                                                                        {&r_conv, &e_conv}};
        const char* names[] = {"ours", "conventional"};
        for (std::size_t m = 0; m < 2; ++m) {
          const std::string stem = names[m];
          write_png(runs[m].first->corrected, dir / (stem + "_corrected.png"),
                    config.srgb_linearize);
          write_png(runs[m].second->test_display, dir / (stem + "_simulated.png"),
                    config.srgb_linearize);
          write_png(magma_map(runs[m].second->flip_map).image, dir / (stem + "_flip_magma.png"),
                    false);
          write_file(dir / (stem + "_loss.csv"), loss_trace_csv(runs[m].first->loss_trace));
          write_file(dir / (stem + "_metrics.json"), report_to_json(runs[m].second->report));
        }
        write_png(e_ours.reference_display, dir / "target_lms_visualized.png",
                  config.srgb_linearize);
      }
      log(image_name + " / " + preset.name + ": ours flip " + num(ours.metrics.flip_mean) +
          ", conventional flip " + num(conv.metrics.flip_mean));
    } catch (const std::exception& e) {
      ours.error = conv.error = e.what();
      log(image_name + " / " + preset.name + " failed: " + e.what());
    }
  });

  for (const auto& row : result.rows)
    if (!row.error.empty()) ++result.failures;
  if (!options.output_dir.empty()) write_file(options.output_dir / "results.csv", batch_csv(result));
  return result;
}

std::string batch_csv(const BatchResult& result) {
  std::string out = "image,prescription,method,flip_mean,ssim,psnr_db,sphere_d,cylinder_d,loss_space,status\n";
  for (const auto& r : result.rows) {
    const bool ok = r.error.empty();
    out += csv_field(r.image) + "," + r.prescription + "," + r.method + ",";
    out += ok ? num(r.metrics.flip_mean) + "," + num(r.metrics.ssim) + "," + num(r.metrics.psnr_db)
              : std::string(",,");
    out += "," + num(r.sphere_d) + "," + num(r.cylinder_d) + "," + r.loss_space + ",";
    out += ok ? std::string("ok") : csv_field("error: " + r.error);
    out += "\n";
  }
  return out;
}

std::string loss_trace_csv(const std::vector<double>& trace) {
  std::string out = "iteration,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, trace[i]);
    out += buf;
  }
  return out;
}

}  // namespace precorrect
