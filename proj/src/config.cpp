// SPDX-License-Identifier: Apache-2.0
#include "precorrect/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "precorrect/error.hpp"
#include "precorrect/spectra.hpp"

namespace precorrect {

RunConfig::RunConfig()
    : display_model(default_display_model_path()), cone_table(default_cone_table_path()) {}

void RunConfig::validate() const {
  prescription.validate();
  geometry.validate();
  optimizer.validate();
  if (wavelength_stride_nm < 1) throw ValidationError("wavelength_stride_nm must be >= 1");
  if (!(pixels_per_degree > 0.0)) throw ValidationError("pixels_per_degree must be positive");
}

void RunConfig::check_files() const {
  if (!std::filesystem::exists(display_model)) throw FileNotFoundError(display_model.string());
  if (!std::filesystem::exists(cone_table)) throw FileNotFoundError(cone_table.string());
}

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const char* block, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ValidationError(std::string("config block '") + block + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ValidationError(std::string("unknown config key '") + block + "." + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    reject_unknown(j, "root", {"display_model", "cone_table", "prescription", "geometry",
                               "optimizer", "metrics", "io"});
    if (j.contains("display_model"))
      c.display_model = resolve(j["display_model"].get<std::string>(), base_dir);
    if (j.contains("cone_table"))
      c.cone_table = resolve(j["cone_table"].get<std::string>(), base_dir);
    if (j.contains("prescription")) {
      const auto& p = j["prescription"];
      reject_unknown(p, "prescription", {"sphere_d", "cylinder_d", "axis_deg", "pupil_diameter_mm"});
      read(p, "sphere_d", c.prescription.sphere_d);
      read(p, "cylinder_d", c.prescription.cylinder_d);
      read(p, "axis_deg", c.prescription.axis_deg);
      read(p, "pupil_diameter_mm", c.prescription.pupil_diameter_mm);
    }
    if (j.contains("geometry")) {
      const auto& g = j["geometry"];
      reject_unknown(g, "geometry", {"viewing_distance_m", "pixel_pitch_m", "kernel_size_px",
                                     "grid_size", "wavelength_stride_nm"});
      read(g, "viewing_distance_m", c.geometry.viewing_distance_m);
      read(g, "pixel_pitch_m", c.geometry.pixel_pitch_m);
      read(g, "kernel_size_px", c.geometry.kernel_size_px);
      read(g, "grid_size", c.geometry.grid_size);
      read(g, "wavelength_stride_nm", c.wavelength_stride_nm);
    }
    if (j.contains("optimizer")) {
      const auto& o = j["optimizer"];
      reject_unknown(o, "optimizer", {"learning_rate", "iterations", "loss_space", "beta1", "beta2",
                                      "epsilon", "clamp_min", "clamp_max", "log_every"});
      auto& opt = c.optimizer;
      read(o, "learning_rate", opt.learning_rate);
      read(o, "iterations", opt.iterations);
      if (o.contains("loss_space")) opt.loss_space = loss_space_from_string(o["loss_space"].get<std::string>());
      read(o, "beta1", opt.beta1);
      read(o, "beta2", opt.beta2);
      read(o, "epsilon", opt.epsilon);
      read(o, "clamp_min", opt.clamp_min);
      read(o, "clamp_max", opt.clamp_max);
      read(o, "log_every", opt.log_every);
    }
    if (j.contains("metrics")) {
      const auto& m = j["metrics"];
      reject_unknown(m, "metrics", {"pixels_per_degree"});
      read(m, "pixels_per_degree", c.pixels_per_degree);
    }
    if (j.contains("io")) {
      const auto& io = j["io"];
      reject_unknown(io, "io", {"srgb_linearize", "output_dir"});
      read(io, "srgb_linearize", c.srgb_linearize);
      if (io.contains("output_dir"))
        c.output_dir = resolve(io["output_dir"].get<std::string>(), base_dir);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["display_model"] = c.display_model.string();
  j["cone_table"] = c.cone_table.string();
  j["prescription"] = {{"sphere_d", c.prescription.sphere_d},
                       {"cylinder_d", c.prescription.cylinder_d},
                       {"axis_deg", c.prescription.axis_deg},
                       {"pupil_diameter_mm", c.prescription.pupil_diameter_mm}};
  j["geometry"] = {{"viewing_distance_m", c.geometry.viewing_distance_m},
                   {"pixel_pitch_m", c.geometry.pixel_pitch_m},
                   {"kernel_size_px", c.geometry.kernel_size_px},
                   {"grid_size", c.geometry.grid_size},
                   {"wavelength_stride_nm", c.wavelength_stride_nm}};
  const auto& o = c.optimizer;
  j["optimizer"] = {{"learning_rate", o.learning_rate},
                    {"iterations", o.iterations},
                    {"loss_space", std::string(to_string(o.loss_space))},
                    {"beta1", o.beta1},
                    {"beta2", o.beta2},
                    {"epsilon", o.epsilon},
                    {"clamp_min", o.clamp_min},
                    {"clamp_max", o.clamp_max},
                    {"log_every", o.log_every}};
  j["metrics"] = {{"pixels_per_degree", c.pixels_per_degree}};
  j["io"] = {{"srgb_linearize", c.srgb_linearize}, {"output_dir", c.output_dir.string()}};
  return j.dump(2) + "\n";
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError(path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str(), path.parent_path());
}

const std::vector<PrescriptionPreset>& prescription_presets() {
  static const std::vector<PrescriptionPreset> presets{
      {"myopia", {-1.5, 0.0, 0.0, 4.0}},
      {"hyperopia", {1.5, 0.0, 0.0, 4.0}},
      {"myopic_astigmatism", {0.0, -1.5, 0.0, 4.0}},
      {"hyperopic_astigmatism", {0.0, 1.5, 0.0, 4.0}},
      {"myopia_hyperopic_astigmatism", {-1.5, 1.5, 0.0, 4.0}},
  };
  return presets;
}

}  // namespace precorrect
