// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <random>
#include <sstream>

#include <json.hpp>

#include "precorrect/container.hpp"
#include "precorrect/metrics.hpp"
#include "precorrect/png_io.hpp"
#include "support.hpp"

using namespace precorrect;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + PRECORRECT_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Small geometry and budget so every verb finishes in well under a second.
fs::path small_config(const fs::path& dir, std::size_t kernel = 9, std::size_t grid = 64) {
  std::ostringstream s;
  s << R"({"geometry": {"kernel_size_px": )" << kernel << R"(, "grid_size": )" << grid
    << R"(, "wavelength_stride_nm": 10}, "optimizer": {"iterations": 12}})";
  testing::write_text(dir / "config.json", s.str());
  return dir / "config.json";
}

fs::path test_png(const fs::path& path, std::size_t size = 24, unsigned seed = 1) {
  std::mt19937_64 rng(seed);
  ImagePlane img(size, size, 3, ColorSpace::rgb);
  for (std::size_t c = 0; c < 3; ++c)
    for (double& v : img.channel(c).values()) v = static_cast<double>(rng() % 256) / 255.0;
  write_png(img, path, false);
  return path;
}

}  // namespace

TEST_CASE("usage and missing-input exit codes") {
  const auto dir = testing::temp_dir("cli_exit");
  CHECK(run("") == 64);
  CHECK(run("frobnicate") == 64);
  CHECK(run("--help") == 0);
  CHECK(run("kernel") == 64);
  CHECK(run("kernel --out " + q(dir / "k.pcfc") + " --kernel-size 64") == 64);
  CHECK(run("fit-display --csv " + q(dir / "none.csv") + " --out " + q(dir / "m.json")) == 2);
  CHECK(run("fit-display --components 0 --out " + q(dir / "m.json")) == 64);
  CHECK(run("--config " + q(dir / "none.json") + " kernel --out " + q(dir / "k.pcfc")) == 2);
  testing::write_text(dir / "typo.json", R"({"optimiser": {}})");
  CHECK(run("--config " + q(dir / "typo.json") + " kernel --out " + q(dir / "k.pcfc")) == 64);
  CHECK(run("simulate --image " + q(dir / "none.png") + " --kernel " + q(dir / "k.pcfc") + " --out " +
            q(dir / "s.png")) == 2);
  fs::create_directories(dir / "empty");
  CHECK(run("batch --images " + q(dir / "empty") + " --out " + q(dir / "b")) == 64);
  CHECK(run("batch --images " + q(dir / "nowhere") + " --out " + q(dir / "b")) == 2);
}

TEST_CASE("fit-display reproduces the bundled display model") {
  const auto dir = testing::temp_dir("cli_fit");
  REQUIRE(run("fit-display --components 2 --out " + q(dir / "m.json")) == 0);
  CHECK(testing::read_bytes(dir / "m.json") == testing::read_bytes(default_display_model_path()));
}

TEST_CASE("kernel writes both containers with provenance sidecars") {
  const auto dir = testing::temp_dir("cli_kernel");
  const auto cfg = small_config(dir);
  REQUIRE(run("--config " + q(cfg) + " kernel --out " + q(dir / "k.pcfc") +
              " --sphere -1.5 --cylinder 0.5 --axis 30") == 0);
  REQUIRE(fs::exists(dir / "k_rgb.pcfc"));
  const auto side = nlohmann::json::parse(testing::read_bytes(dir / "k.pcfc.json"));
  CHECK(side["kind"] == "lms");
  CHECK(side["prescription"]["sphere_d"] == -1.5);
  CHECK(side["prescription"]["cylinder_d"] == 0.5);
  CHECK(side["prescription"]["axis_deg"] == 30.0);
  CHECK(side["geometry"]["kernel_size_px"] == 9);
  CHECK(side["wavelength_stride_nm"] == 10);
  const auto k = load_kernel(dir / "k.pcfc");
  REQUIRE(k.lms);
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(std::abs(k.lms->slices[p][c].sum() - k.lms->matrix.entries[c][p]) < 1e-5);
  const auto r = load_kernel(dir / "k_rgb.pcfc");
  REQUIRE(r.rgb);
  CHECK(nlohmann::json::parse(testing::read_bytes(dir / "k_rgb.pcfc.json"))["kind"] == "rgb");
}

TEST_CASE("a one-pixel kernel makes simulate, correct and evaluate exact") {
  const auto dir = testing::temp_dir("cli_identity");
  const auto cfg = small_config(dir, 1, 16);
  const auto img = test_png(dir / "in.png");
  const std::string c = "--config " + q(cfg) + " ";
  REQUIRE(run(c + "kernel --out " + q(dir / "k.pcfc")) == 0);

  REQUIRE(run(c + "simulate --image " + q(img) + " --kernel " + q(dir / "k.pcfc") + " --out " +
              q(dir / "sim.png")) == 0);
  CHECK(read_png(dir / "sim.png", false) == read_png(img, false));
  const auto lms = read_container(dir / "sim.pcfc");
  CHECK(lms.dims == std::vector<std::uint64_t>{24, 24, 3});

  REQUIRE(run(c + "correct --image " + q(img) + " --kernel " + q(dir / "k.pcfc") + " --out " +
              q(dir / "corr.png")) == 0);
  CHECK(read_png(dir / "corr.png", false) == read_png(img, false));
  const auto trace = testing::read_bytes(dir / "corr_loss.csv");
  CHECK(trace.rfind("iteration,loss\n", 0) == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 13);

  REQUIRE(run(c + "evaluate --target " + q(img) + " --corrected " + q(dir / "corr.png") + " --kernel " +
              q(dir / "k.pcfc") + " --out " + q(dir / "m.json")) == 0);
  const auto report = report_from_json(testing::read_bytes(dir / "m.json"));
  CHECK(report.flip_mean < 1e-9);
  CHECK(std::abs(report.ssim - 1.0) < 1e-9);
  CHECK(report.psnr_db == kPsnrCapDb);
  const auto magma = read_png(dir / "m_magma.png", false);
  CHECK(magma.height() == 24);
  CHECK(magma.width() == 24);
}

TEST_CASE("correct and evaluate with a blurring kernel") {
  const auto dir = testing::temp_dir("cli_blur");
  const auto cfg = small_config(dir);
  const auto img = test_png(dir / "in.png", 32, 3);
  const std::string c = "--config " + q(cfg) + " ";
  REQUIRE(run(c + "kernel --out " + q(dir / "k.pcfc") + " --sphere -1.5") == 0);
  REQUIRE(run(c + "correct --image " + q(img) + " --kernel " + q(dir / "k.pcfc") + " --out " +
              q(dir / "ours.png") + " --container " + q(dir / "ours.pcfc")) == 0);
  REQUIRE(run(c + "correct --image " + q(img) + " --kernel " + q(dir / "k_rgb.pcfc") + " --out " +
              q(dir / "conv.png") + " --loss-space rgb") == 0);
  CHECK(read_container(dir / "ours.pcfc").dims == std::vector<std::uint64_t>{32, 32, 3});
  REQUIRE(run(c + "evaluate --target " + q(img) + " --corrected " + q(dir / "ours.png") + " --kernel " +
              q(dir / "k.pcfc") + " --out " + q(dir / "ours.json") + " --ppd 41.2") == 0);
  const auto report = report_from_json(testing::read_bytes(dir / "ours.json"));
  CHECK(report.pixels_per_degree == 41.2);
  CHECK(report.flip_mean > 0.0);
  CHECK(run(c + "evaluate --target " + q(img) + " --corrected " + q(dir / "ours.png") + " --kernel " +
            q(dir / "k_rgb.pcfc") + " --out " + q(dir / "x.json")) == 64);
  CHECK(run(c + "correct --image " + q(img) + " --kernel " + q(dir / "k.pcfc") + " --out " +
            q(dir / "x.png") + " --loss-space hsv") == 64);
}

TEST_CASE("batch writes the full grid and is byte-reproducible") {
  const auto dir = testing::temp_dir("cli_batch");
  const auto cfg = small_config(dir);
  fs::create_directories(dir / "images");
  test_png(dir / "images" / "a.png", 20, 5);
  const std::string c = "--config " + q(cfg) + " ";
  REQUIRE(run(c + "--jobs 2 batch --images " + q(dir / "images") + " --out " + q(dir / "run1")) == 0);
  REQUIRE(run(c + "--jobs 1 batch --images " + q(dir / "images") + " --out " + q(dir / "run2")) == 0);
  const auto csv = testing::read_bytes(dir / "run1" / "results.csv");
  CHECK(csv.rfind("image,prescription,method,flip_mean,ssim,psnr_db,sphere_d,cylinder_d,loss_space,status\n", 0) ==
        0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
  CHECK(csv.find("error") == std::string::npos);
  CHECK(csv == testing::read_bytes(dir / "run2" / "results.csv"));
  for (const auto& entry : fs::recursive_directory_iterator(dir / "run1")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir / "run1");
    CAPTURE(rel.string());
    CHECK(testing::read_bytes(entry.path()) == testing::read_bytes(dir / "run2" / rel));
  }
  for (const char* name : {"ours_corrected.png", "conventional_simulated.png", "ours_flip_magma.png",
                           "conventional_loss.csv", "ours_metrics.json", "target_lms_visualized.png"})
    CHECK(fs::exists(dir / "run1" / "a" / "myopia" / name));
}

TEST_CASE("kernel command is byte-reproducible") {
  const auto dir = testing::temp_dir("cli_repro");
  const auto cfg = small_config(dir);
  const std::string c = "--config " + q(cfg) + " ";
  REQUIRE(run(c + "kernel --out " + q(dir / "a.pcfc") + " --cylinder 1.5 --axis 45") == 0);
  REQUIRE(run(c + "--jobs 3 kernel --out " + q(dir / "b.pcfc") + " --cylinder 1.5 --axis 45") == 0);
  CHECK(testing::read_bytes(dir / "a.pcfc") == testing::read_bytes(dir / "b.pcfc"));
  CHECK(testing::read_bytes(dir / "a_rgb.pcfc") == testing::read_bytes(dir / "b_rgb.pcfc"));
  CHECK(testing::read_bytes(dir / "a.pcfc.json") == testing::read_bytes(dir / "b.pcfc.json"));
}
