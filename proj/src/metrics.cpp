// SPDX-License-Identifier: Apache-2.0
#include "precorrect/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <json.hpp>

#include "precorrect/error.hpp"
#include "precorrect/forward.hpp"

namespace precorrect {

namespace {

void require_same(const ImagePlane& a, const ImagePlane& b, const char* what) {
  if (!a.same_shape(b))
    throw ValidationError(std::string(what) + ": images differ in shape");
  if (a.element_count() == 0) throw ValidationError(std::string(what) + ": empty image");
}

}  // namespace

double psnr(const ImagePlane& a, const ImagePlane& b, double peak) {
  require_same(a, b, "psnr");
  if (!(peak > 0.0)) throw ValidationError("psnr: peak must be positive");
  double acc = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    const auto x = a.channel(c).values();
    const auto y = b.channel(c).values();
    for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  }
  const double mse = acc / static_cast<double>(a.element_count());
  if (mse < 1e-10) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(peak * peak / mse));
}

// ---------------------------------------------------------------------------------------
// SSIM

namespace {

constexpr std::size_t kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::array<double, kSsimWindow> ssim_weights() {
  std::array<double, kSsimWindow> w{};
  double sum = 0.0;
  const double r = static_cast<double>(kSsimWindow / 2);
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - r;
    w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable Gaussian filter over the valid region.
Plane filter_valid(const Plane& p) {
  static const auto w = ssim_weights();
  const std::size_t oh = p.rows() - kSsimWindow + 1, ow = p.cols() - kSsimWindow + 1;
  Plane rows(p.rows(), ow);
  for (std::size_t y = 0; y < p.rows(); ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) acc += w[k] * p(y, x + k);
      rows(y, x) = acc;
    }
  Plane out(oh, ow);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) acc += w[k] * rows(y + k, x);
      out(y, x) = acc;
    }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out(a.rows(), a.cols());
  auto o = out.values();
  const auto x = a.values();
  const auto y = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  return out;
}

double ssim_plane(const Plane& a, const Plane& b) {
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const Plane mu_a = filter_valid(a);
  const Plane mu_b = filter_valid(b);
  const Plane aa = filter_valid(product(a, a));
  const Plane bb = filter_valid(product(b, b));
  const Plane ab = filter_valid(product(a, b));
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a.values()[i], mb = mu_b.values()[i];
    const double va = aa.values()[i] - ma * ma;
    const double vb = bb.values()[i] - mb * mb;
    const double cov = ab.values()[i] - ma * mb;
    acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
           ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return acc / static_cast<double>(mu_a.size());
}

}  // namespace

double ssim(const ImagePlane& a, const ImagePlane& b) {
  require_same(a, b, "ssim");
  if (a.height() < kSsimWindow || a.width() < kSsimWindow)
    throw ValidationError("ssim: image smaller than the 11x11 window");
  double acc = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) acc += ssim_plane(a.channel(c), b.channel(c));
  return acc / static_cast<double>(a.channels());
}

// ---------------------------------------------------------------------------------------
// FLIP

namespace {

constexpr double kQc = 0.7;
constexpr double kPc = 0.4;
constexpr double kPt = 0.95;
constexpr double kW = 0.082;
constexpr double kQf = 0.5;

struct Color {
  double x, y, z;
};

constexpr Color kD65{0.950428545377181, 1.0, 1.088900370798128};

Color linear_rgb_to_xyz(Color c) {
  constexpr double a11 = 10135552.0 / 24577794.0, a12 = 8788810.0 / 24577794.0,
                   a13 = 4435075.0 / 24577794.0;
  constexpr double a21 = 2613072.0 / 12288897.0, a22 = 8788810.0 / 12288897.0,
                   a23 = 887015.0 / 12288897.0;
  constexpr double a31 = 1425312.0 / 73733382.0, a32 = 8788810.0 / 73733382.0,
                   a33 = 70074185.0 / 73733382.0;
  return {a11 * c.x + a12 * c.y + a13 * c.z, a21 * c.x + a22 * c.y + a23 * c.z,
          a31 * c.x + a32 * c.y + a33 * c.z};
}

Color xyz_to_linear_rgb(Color c) {
  return {3.241003232976358 * c.x - 1.537398969488785 * c.y - 0.498615881996363 * c.z,
          -0.969224252202516 * c.x + 1.875929983695176 * c.y + 0.041554226340085 * c.z,
          0.055639419851975 * c.x - 0.204011206123910 * c.y + 1.057148977187533 * c.z};
}

Color xyz_to_ycxcz(Color c) {
  const double x = c.x / kD65.x, y = c.y / kD65.y, z = c.z / kD65.z;
  return {116.0 * y - 16.0, 500.0 * (x - y), 200.0 * (y - z)};
}

Color ycxcz_to_xyz(Color c) {
  const double yy = (c.x + 16.0) / 116.0;
  return {(yy + c.y / 500.0) * kD65.x, yy * kD65.y, (yy - c.z / 200.0) * kD65.z};
}

double lab_f(double t) { return t > 0.008856 ? std::cbrt(t) : 7.787 * t + 16.0 / 116.0; }

Color xyz_to_lab(Color c) {
  const double x = lab_f(std::abs(c.x) / kD65.x);
  const double y = lab_f(std::abs(c.y) / kD65.y);
  const double z = lab_f(std::abs(c.z) / kD65.z);
  return {116.0 * y - 16.0, 500.0 * (x - y), 200.0 * (y - z)};
}

Color hunt(Color lab) { return {lab.x, 0.01 * lab.x * lab.y, 0.01 * lab.x * lab.z}; }

double hyab(Color a, Color b) {
  return std::abs(a.x - b.x) + std::sqrt((a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

double max_color_distance() {
  const Color green = hunt(xyz_to_lab(linear_rgb_to_xyz({0.0, 1.0, 0.0})));
  const Color blue = hunt(xyz_to_lab(linear_rgb_to_xyz({0.0, 0.0, 1.0})));
  return std::pow(hyab(green, blue), kQc);
}

// Replicate-padded filtering; FFT when the padding budget allows, direct otherwise.
Plane filter_replicate(const Plane& field, const Plane& kernel) {
  const std::size_t hy = kernel.rows() / 2, hx = kernel.cols() / 2;
  if (hy <= field.rows() && hx <= field.cols()) return convolve_same(field, kernel);
  Plane out(field.rows(), field.cols());
  const auto h = static_cast<std::ptrdiff_t>(field.rows());
  const auto w = static_cast<std::ptrdiff_t>(field.cols());
  for (std::ptrdiff_t y = 0; y < h; ++y)
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::size_t u = 0; u < kernel.rows(); ++u) {
        const auto sy = std::clamp<std::ptrdiff_t>(
            y + static_cast<std::ptrdiff_t>(hy) - static_cast<std::ptrdiff_t>(u), 0, h - 1);
        for (std::size_t v = 0; v < kernel.cols(); ++v) {
          const auto sx = std::clamp<std::ptrdiff_t>(
              x + static_cast<std::ptrdiff_t>(hx) - static_cast<std::ptrdiff_t>(v), 0, w - 1);
          acc += kernel(u, v) * field(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
        }
      }
      out(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = acc;
    }
  return out;
}

double gauss_sum(double x2, double a1, double b1, double a2, double b2) {
  constexpr double pi = std::numbers::pi;
  return a1 * std::sqrt(pi / b1) * std::exp(-pi * pi * x2 / b1) +
         a2 * std::sqrt(pi / b2) * std::exp(-pi * pi * x2 / b2);
}

// Contrast sensitivity filters for the Y, Cx, Cz channels, each of unit sum.
std::array<Plane, 3> spatial_filters(double ppd) {
  constexpr std::array<double, 3> a1{1.0, 1.0, 34.1};
  constexpr std::array<double, 3> b1{0.0047, 0.0053, 0.04};
  constexpr std::array<double, 3> a2{0.0, 0.0, 13.5};
  constexpr std::array<double, 3> b2{1e-5, 1e-5, 0.025};
  const double max_b = 0.04;
  const double pi_sq = std::numbers::pi * std::numbers::pi;
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * std::sqrt(max_b / (2.0 * pi_sq)) * ppd));
  const std::size_t width = 2 * radius + 1;
  const double dx = 1.0 / ppd;
  std::array<Plane, 3> filters;
  for (std::size_t c = 0; c < 3; ++c) {
    Plane f(width, width);
    double sum = 0.0;
    for (std::size_t y = 0; y < width; ++y) {
      const double iy = (static_cast<double>(y) - static_cast<double>(radius)) * dx;
      for (std::size_t x = 0; x < width; ++x) {
        const double ix = (static_cast<double>(x) - static_cast<double>(radius)) * dx;
        f(y, x) = gauss_sum(ix * ix + iy * iy, a1[c], b1[c], a2[c], b2[c]);
        sum += f(y, x);
      }
    }
    for (double& v : f.values()) v /= sum;
    filters[c] = std::move(f);
  }
  return filters;
}

// Horizontal and vertical edge (first derivative) or point (second derivative) detectors,
// positive weights normalized to 1 and negative weights to -1.
std::array<Plane, 2> detection_filters(double ppd, bool point) {
  const double sd = 0.5 * kW * ppd;
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * sd));
  const std::size_t width = 2 * radius + 1;
  std::array<Plane, 2> f{Plane(width, width), Plane(width, width)};
  std::array<double, 2> pos{0.0, 0.0}, neg{0.0, 0.0};
  for (std::size_t y = 0; y < width; ++y) {
    const double yy = static_cast<double>(y) - static_cast<double>(radius);
    for (std::size_t x = 0; x < width; ++x) {
      const double xx = static_cast<double>(x) - static_cast<double>(radius);
      const double g = std::exp(-(xx * xx + yy * yy) / (2.0 * sd * sd));
      const double wx = point ? (xx * xx / (sd * sd) - 1.0) * g : -xx * g;
      const double wy = point ? (yy * yy / (sd * sd) - 1.0) * g : -yy * g;
      f[0](y, x) = wx;
      f[1](y, x) = wy;
      (wx > 0.0 ? pos[0] : neg[0]) += std::abs(wx);
      (wy > 0.0 ? pos[1] : neg[1]) += std::abs(wy);
    }
  }
  for (std::size_t k = 0; k < 2; ++k)
    for (double& v : f[k].values()) v /= (v > 0.0 ? pos[k] : neg[k]);
  return f;
}

std::array<Plane, 3> to_ycxcz(const ImagePlane& rgb) {
  std::array<Plane, 3> out{Plane(rgb.height(), rgb.width()), Plane(rgb.height(), rgb.width()),
                           Plane(rgb.height(), rgb.width())};
  for (std::size_t y = 0; y < rgb.height(); ++y)
    for (std::size_t x = 0; x < rgb.width(); ++x) {
      const Color c =
          xyz_to_ycxcz(linear_rgb_to_xyz({rgb.at(y, x, 0), rgb.at(y, x, 1), rgb.at(y, x, 2)}));
      out[0](y, x) = c.x;
      out[1](y, x) = c.y;
      out[2](y, x) = c.z;
    }
  return out;
}

// CSF filtering in YCxCz, gamut clamp, then Hunt-adjusted L*a*b*.
std::vector<Color> preprocess(const std::array<Plane, 3>& ycxcz,
                              const std::array<Plane, 3>& filters) {
  std::array<Plane, 3> filtered;
  for (std::size_t c = 0; c < 3; ++c) filtered[c] = filter_replicate(ycxcz[c], filters[c]);
  std::vector<Color> lab(ycxcz[0].size());
  for (std::size_t i = 0; i < lab.size(); ++i) {
    Color rgb = xyz_to_linear_rgb(ycxcz_to_xyz(
        {filtered[0].values()[i], filtered[1].values()[i], filtered[2].values()[i]}));
    rgb = {std::clamp(rgb.x, 0.0, 1.0), std::clamp(rgb.y, 0.0, 1.0), std::clamp(rgb.z, 0.0, 1.0)};
    lab[i] = hunt(xyz_to_lab(linear_rgb_to_xyz(rgb)));
  }
  return lab;
}

struct Features {
  Plane edge, point;
};

Features features(const Plane& luminance_ycxcz, double ppd) {
  Plane gray(luminance_ycxcz.rows(), luminance_ycxcz.cols());
  for (std::size_t i = 0; i < gray.size(); ++i)
    gray.values()[i] = (luminance_ycxcz.values()[i] + 16.0) / 116.0;
  const auto edges = detection_filters(ppd, false);
  const auto points = detection_filters(ppd, true);
  const Plane ex = filter_replicate(gray, edges[0]);
  const Plane ey = filter_replicate(gray, edges[1]);
  const Plane px = filter_replicate(gray, points[0]);
  const Plane py = filter_replicate(gray, points[1]);
  Features f{Plane(gray.rows(), gray.cols()), Plane(gray.rows(), gray.cols())};
  for (std::size_t i = 0; i < gray.size(); ++i) {
    f.edge.values()[i] = std::hypot(ex.values()[i], ey.values()[i]);
    f.point.values()[i] = std::hypot(px.values()[i], py.values()[i]);
  }
  return f;
}

}  // namespace

FlipResult flip(const ImagePlane& reference, const ImagePlane& test, double pixels_per_degree) {
  require_same(reference, test, "flip");
  if (reference.channels() != 3) throw ValidationError("flip: images must have 3 channels");
  if (!(pixels_per_degree > 0.0) || !std::isfinite(pixels_per_degree))
    throw ValidationError("flip: pixels_per_degree must be positive");

  const auto ref_ycxcz = to_ycxcz(reference);
  const auto test_ycxcz = to_ycxcz(test);
  const auto filters = spatial_filters(pixels_per_degree);
  const auto ref_lab = preprocess(ref_ycxcz, filters);
  const auto test_lab = preprocess(test_ycxcz, filters);
  const Features ref_f = features(ref_ycxcz[0], pixels_per_degree);
  const Features test_f = features(test_ycxcz[0], pixels_per_degree);

  const double cmax = max_color_distance();
  const double pccmax = kPc * cmax;
  const double norm = 1.0 / std::numbers::sqrt2;

  FlipResult result{0.0, Plane(reference.height(), reference.width())};
  double sum = 0.0;
  for (std::size_t i = 0; i < ref_lab.size(); ++i) {
    double cdiff = std::pow(hyab(ref_lab[i], test_lab[i]), kQc);
    cdiff = cdiff < pccmax ? cdiff * kPt / pccmax
                           : kPt + (cdiff - pccmax) / (cmax - pccmax) * (1.0 - kPt);
    const double de = std::abs(ref_f.edge.values()[i] - test_f.edge.values()[i]);
    const double dp = std::abs(ref_f.point.values()[i] - test_f.point.values()[i]);
    const double fdiff = std::pow(norm * std::max(de, dp), kQf);
    const double e = std::clamp(std::pow(cdiff, 1.0 - fdiff), 0.0, 1.0);
    result.map.values()[i] = e;
    sum += e;
  }
  result.mean = sum / static_cast<double>(ref_lab.size());
  return result;
}

// ---------------------------------------------------------------------------------------
// Magma

namespace {

constexpr std::array<std::array<double, 3>, 256> kMagma{{
#include "magma_lut.inc"
}};

}  // namespace

MagmaImage magma_map(const Plane& error) {
  MagmaImage out{ImagePlane(error.rows(), error.cols(), 3, ColorSpace::rgb), 0};
  for (std::size_t y = 0; y < error.rows(); ++y)
    for (std::size_t x = 0; x < error.cols(); ++x) {
      double v = error(y, x);
      if (!(v >= 0.0 && v <= 1.0)) {
        ++out.clamped_values;
        v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
      }
      const double pos = v * 255.0;
      const auto lo = std::min<std::size_t>(static_cast<std::size_t>(pos), 254);
      const double t = pos - static_cast<double>(lo);
      for (std::size_t c = 0; c < 3; ++c)
        out.image.at(y, x, c) = (1.0 - t) * kMagma[lo][c] + t * kMagma[lo + 1][c];
    }
  return out;
}

// ---------------------------------------------------------------------------------------
// Reports

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["flip_mean"] = r.flip_mean;
  j["ssim"] = r.ssim;
  j["psnr_db"] = r.psnr_db;
  j["pixels_per_degree"] = r.pixels_per_degree;
  j["evaluation_space"] = r.evaluation_space;
  j["clamped_reference"] = r.clamped_reference;
  j["clamped_test"] = r.clamped_test;
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport r;
    r.flip_mean = j.at("flip_mean").get<double>();
    r.ssim = j.at("ssim").get<double>();
    r.psnr_db = j.at("psnr_db").get<double>();
    r.pixels_per_degree = j.at("pixels_per_degree").get<double>();
    r.evaluation_space = j.value("evaluation_space", r.evaluation_space);
    r.clamped_reference = j.value("clamped_reference", std::size_t{0});
    r.clamped_test = j.value("clamped_test", std::size_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics report: ") + e.what());
  }
}

MetricsReport compute_metrics(const ImagePlane& reference_rgb, const ImagePlane& test_rgb,
                              double pixels_per_degree, Plane* flip_map) {
  MetricsReport r;
  r.pixels_per_degree = pixels_per_degree;
  FlipResult f = flip(reference_rgb, test_rgb, pixels_per_degree);
  r.flip_mean = f.mean;
  r.ssim = ssim(reference_rgb, test_rgb);
  r.psnr_db = psnr(reference_rgb, test_rgb);
  if (flip_map) *flip_map = std::move(f.map);
  return r;
}

Evaluation evaluate_simulated(const ImagePlane& target_rgb, const ImagePlane& simulated_lms,
                              const ColorConversionMatrix& a, double pixels_per_degree) {
  DisplayRgb ref = lms_to_display_rgb(rgb_to_lms(target_rgb, a), a);
  DisplayRgb test = lms_to_display_rgb(simulated_lms, a);
  Evaluation e;
  e.report = compute_metrics(ref.image, test.image, pixels_per_degree, &e.flip_map);
  e.report.clamped_reference = ref.clamped_values;
  e.report.clamped_test = test.clamped_values;
  e.reference_display = std::move(ref.image);
  e.test_display = std::move(test.image);
  return e;
}

Evaluation evaluate_in_lms_space(const ImagePlane& target_rgb, const ImagePlane& displayed_rgb,
                                 const LmsPsfKernel& kernel, double pixels_per_degree) {
  require_same(target_rgb, displayed_rgb, "evaluate");
  return evaluate_simulated(target_rgb, simulate_retina(displayed_rgb, kernel), kernel.matrix,
                            pixels_per_degree);
}

}  // namespace precorrect
