// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "precorrect/optics.hpp"
#include "precorrect/optimize.hpp"

namespace precorrect {

struct RunConfig {
  std::filesystem::path display_model;
  std::filesystem::path cone_table;
  Prescription prescription;
  PsfGeometry geometry;
  int wavelength_stride_nm = 1;
  OptimizationConfig optimizer;
  double pixels_per_degree = 67.0;
  bool srgb_linearize = true;
  std::filesystem::path output_dir = "out";

  RunConfig();

  // Numeric constraints only.
  void validate() const;
  // Throws FileNotFoundError for a missing display model or cone table.
  void check_files() const;
};

// Every field is optional; relative paths resolve against `base_dir`. Unknown keys are
// rejected so that typos do not silently fall back to defaults.
RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
std::string run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

struct PrescriptionPreset {
  std::string name;
  Prescription prescription;
};

// myopia, hyperopia, myopic/hyperopic astigmatism, myopia with hyperopic astigmatism (±1.5 D).
const std::vector<PrescriptionPreset>& prescription_presets();

}  // namespace precorrect
