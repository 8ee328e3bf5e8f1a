// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "precorrect/image.hpp"
#include "precorrect/perception.hpp"
#include "precorrect/spectra.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("precorrect_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline precorrect::Plane random_plane(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                      double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  precorrect::Plane p(rows, cols);
  for (double& v : p.values()) v = u(rng);
  return p;
}

inline precorrect::ImagePlane random_image(std::size_t h, std::size_t w, std::mt19937_64& rng,
                                           precorrect::ColorSpace space = precorrect::ColorSpace::rgb,
                                           double lo = 0.0, double hi = 1.0) {
  precorrect::ImagePlane img(h, w, 3, space);
  for (std::size_t c = 0; c < 3; ++c) img.channel(c) = random_plane(h, w, rng, lo, hi);
  return img;
}

inline double max_abs_diff(const precorrect::Plane& a, const precorrect::Plane& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

inline double max_abs_diff(const precorrect::ImagePlane& a, const precorrect::ImagePlane& b) {
  double m = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c)
    m = std::max(m, max_abs_diff(a.channel(c), b.channel(c)));
  return m;
}

// Direct nested-loop "same" convolution with edge-clamp padding.
inline precorrect::Plane brute_convolve(const precorrect::Plane& f, const precorrect::Plane& k) {
  const auto h = static_cast<long>(f.rows()), w = static_cast<long>(f.cols());
  const auto hy = static_cast<long>(k.rows() / 2), hx = static_cast<long>(k.cols() / 2);
  precorrect::Plane out(f.rows(), f.cols());
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long u = 0; u < static_cast<long>(k.rows()); ++u)
        for (long v = 0; v < static_cast<long>(k.cols()); ++v) {
          const long sy = std::clamp(y + hy - u, 0L, h - 1);
          const long sx = std::clamp(x + hx - v, 0L, w - 1);
          acc += k(u, v) * f(sy, sx);
        }
      out(y, x) = acc;
    }
  return out;
}

// Largest elementwise relative error between an analytic gradient and central differences of
// `loss` with step h. Entries where both are exactly zero count as agreeing.
template <typename LossFn>
double gradient_check(const precorrect::ImagePlane& x, const precorrect::ImagePlane& analytic,
                      LossFn&& loss, double h = 1e-4) {
  double worst = 0.0;
  precorrect::ImagePlane probe = x;
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t i = 0; i < x.channel(c).size(); ++i) {
      double& v = probe.channel(c).values()[i];
      const double saved = v;
      v = saved + h;
      const double up = loss(probe);
      v = saved - h;
      const double down = loss(probe);
      v = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic.channel(c).values()[i];
      const double denom = std::max(std::abs(a), std::abs(numeric));
      if (denom > 0.0) worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  return worst;
}

inline precorrect::DisplayModel bundled_display() {
  return precorrect::load_display_model(precorrect::default_display_model_path());
}

inline const precorrect::ConeFundamentals& bundled_cones() {
  static const auto cones = precorrect::load_cone_csv(precorrect::default_cone_table_path());
  return cones;
}

}  // namespace testing
