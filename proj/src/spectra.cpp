// SPDX-License-Identifier: Apache-2.0
#include "precorrect/spectra.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

#include <Eigen/Dense>
#include <json.hpp>

#include "precorrect/error.hpp"

namespace precorrect {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view text, double& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto result = std::from_chars(text.data(), end, value);
  return result.ec == std::errc() && result.ptr == end && std::isfinite(value);
}

// Parses a four-column numeric CSV with the given header; '#' lines and blank lines skipped.
std::vector<std::array<double, 4>> read_table(const std::filesystem::path& path,
                                              std::string_view expected_header) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError(path.string());

  std::vector<std::array<double, 4>> rows;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      std::string header;
      for (const auto field : split_commas(line)) {
        if (!header.empty()) header += ',';
        header += field;
      }
      if (header != expected_header)
        throw DataError(path.string() + ": expected header '" + std::string(expected_header) +
                            "', got '" + header + "'",
                        line_no);
      header_seen = true;
      continue;
    }
    const auto fields = split_commas(line);
    std::array<double, 4> row{};
    if (fields.size() != 4)
      throw DataError(path.string() + ": malformed row " + std::to_string(line_no) +
                          " (expected 4 fields)",
                      line_no);
    for (std::size_t i = 0; i < 4; ++i) {
      if (!parse_double(fields[i], row[i]))
        throw DataError(path.string() + ": malformed row " + std::to_string(line_no) +
                            " (non-numeric field '" + std::string(fields[i]) + "')",
                        line_no);
    }
    rows.push_back(row);
  }
  if (!header_seen) throw DataError(path.string() + ": missing header row");
  if (rows.empty()) throw DataError(path.string() + ": no data rows");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a[0] < b[0]; });
  return rows;
}

}  // namespace

std::vector<double> sampling_wavelengths(int stride_nm) {
  if (stride_nm < 1) throw ValidationError("wavelength stride must be >= 1 nm");
  std::vector<double> out;
  for (int wl = kSpectrumStartNm; wl <= kSpectrumEndNm; wl += stride_nm) out.push_back(wl);
  return out;
}

void SpectralSamples::validate() const {
  for (const auto& ch : intensity) {
    if (ch.size() != wavelengths_nm.size())
      throw ValidationError("spectral samples: channel length mismatch");
  }
  if (wavelengths_nm.empty()) throw ValidationError("spectral samples: empty");
  for (std::size_t i = 1; i < wavelengths_nm.size(); ++i) {
    if (!(wavelengths_nm[i] > wavelengths_nm[i - 1]))
      throw ValidationError("non-monotone wavelengths at " + std::to_string(wavelengths_nm[i]) +
                            " nm");
  }
  for (const auto& ch : intensity) {
    for (double v : ch) {
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("intensity outside [0,1]: " + std::to_string(v));
    }
  }
  if (wavelengths_nm.front() > kSpectrumStartNm || wavelengths_nm.back() < kSpectrumEndNm)
    throw ValidationError("spectral samples do not cover 400-700 nm");
}

SpectralSamples load_spectrometer_csv(const std::filesystem::path& path) {
  const auto rows = read_table(path, "wavelength_nm,r,g,b");
  SpectralSamples out;
  for (const auto& row : rows) {
    out.wavelengths_nm.push_back(row[0]);
    for (std::size_t c = 0; c < 3; ++c) out.intensity[c].push_back(row[c + 1]);
  }
  try {
    out.validate();
  } catch (const ValidationError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return out;
}

void save_spectrometer_csv(const SpectralSamples& samples, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "wavelength_nm,r,g,b\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out << samples.wavelengths_nm[i] << ',' << samples.intensity[0][i] << ','
        << samples.intensity[1][i] << ',' << samples.intensity[2][i] << '\n';
  }
}

double evaluate_spectrum(const GaussianMixtureSpectrum& model, double wavelength_nm) noexcept {
  double sum = 0.0;
  for (const auto& g : model.components) {
    const double d = (wavelength_nm - g.mean_nm) / g.sigma_nm;
    sum += g.weight * std::exp(-0.5 * d * d);
  }
  return std::max(sum, 0.0);
}

std::vector<double> normalized_weights(const GaussianMixtureSpectrum& model, int stride_nm) {
  const auto grid = sampling_wavelengths(stride_nm);
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) w[i] = evaluate_spectrum(model, grid[i]);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (total > 0.0)
    for (double& v : w) v /= total;
  return w;
}

// ---------------------------------------------------------------------------------------------
// Gaussian mixture fitting

namespace {

struct FitData {
  std::vector<double> x;
  std::vector<double> y;
};

FitData resample_unit_grid(const SpectralSamples& samples, Channel channel) {
  const auto& wl = samples.wavelengths_nm;
  const auto& values = samples.channel(channel);
  FitData out;
  const int lo = static_cast<int>(std::ceil(wl.front()));
  const int hi = static_cast<int>(std::floor(wl.back()));
  std::size_t j = 0;
  for (int l = lo; l <= hi; ++l) {
    const double x = l;
    while (j + 1 < wl.size() && wl[j + 1] < x) ++j;
    double y = values[j];
    if (j + 1 < wl.size() && x > wl[j]) {
      const double t = (x - wl[j]) / (wl[j + 1] - wl[j]);
      y = values[j] + t * (values[j + 1] - values[j]);
    }
    out.x.push_back(x);
    out.y.push_back(y);
  }
  return out;
}

std::vector<double> model_values(const std::vector<GaussianComponent>& comps,
                                 const std::vector<double>& x) {
  std::vector<double> f(x.size(), 0.0);
  for (const auto& g : comps) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = (x[i] - g.mean_nm) / g.sigma_nm;
      f[i] += g.weight * std::exp(-0.5 * d * d);
    }
  }
  return f;
}

double sum_squares(const std::vector<GaussianComponent>& comps, const FitData& data) {
  const auto f = model_values(comps, data.x);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += (f[i] - data.y[i]) * (f[i] - data.y[i]);
  return s;
}

struct Bounds {
  double mean_lo, mean_hi;
  double sigma_lo = 0.3;
  double sigma_hi;
};

void project(std::vector<GaussianComponent>& comps, const Bounds& b) {
  for (auto& g : comps) {
    g.weight = std::max(g.weight, 0.0);
    g.mean_nm = std::clamp(g.mean_nm, b.mean_lo, b.mean_hi);
    g.sigma_nm = std::clamp(g.sigma_nm, b.sigma_lo, b.sigma_hi);
  }
}

struct LmResult {
  std::vector<GaussianComponent> comps;
  double cost = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

LmResult levenberg_marquardt(std::vector<GaussianComponent> comps, const FitData& data,
                             const Bounds& bounds, const FitOptions& options) {
  const auto n = static_cast<Eigen::Index>(data.x.size());
  const auto p = static_cast<Eigen::Index>(3 * comps.size());
  project(comps, bounds);
  double cost = sum_squares(comps, data);
  double damping = 1e-3;
  LmResult result;

  Eigen::MatrixXd jac(n, p);
  Eigen::VectorXd res(n);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    if (cost <= 1e-30) {
      result.converged = true;
      break;
    }
    const auto f = model_values(comps, data.x);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = data.x[static_cast<std::size_t>(i)];
      res(i) = f[static_cast<std::size_t>(i)] - data.y[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < comps.size(); ++k) {
        const auto& g = comps[k];
        const double d = x - g.mean_nm;
        const double s2 = g.sigma_nm * g.sigma_nm;
        const double e = std::exp(-0.5 * d * d / s2);
        const auto col = static_cast<Eigen::Index>(3 * k);
        jac(i, col) = e;
        jac(i, col + 1) = g.weight * e * d / s2;
        jac(i, col + 2) = g.weight * e * d * d / (s2 * g.sigma_nm);
      }
    }
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * res;

    bool accepted = false;
    double new_cost = cost;
    std::vector<GaussianComponent> trial;
    while (damping < 1e14) {
      Eigen::MatrixXd lhs = normal;
      for (Eigen::Index d = 0; d < p; ++d) lhs(d, d) += damping * (normal(d, d) + 1e-12);
      const Eigen::VectorXd step = lhs.ldlt().solve(-grad);
      trial = comps;
      for (std::size_t k = 0; k < comps.size(); ++k) {
        trial[k].weight += step(static_cast<Eigen::Index>(3 * k));
        trial[k].mean_nm += step(static_cast<Eigen::Index>(3 * k + 1));
        trial[k].sigma_nm += step(static_cast<Eigen::Index>(3 * k + 2));
      }
      project(trial, bounds);
      new_cost = sum_squares(trial, data);
      if (std::isfinite(new_cost) && new_cost < cost) {
        accepted = true;
        break;
      }
      damping *= 4.0;
    }
    if (!accepted) {
      // No descent direction left at any damping: a stationary point.
      result.converged = true;
      break;
    }
    const double decrease = (cost - new_cost) / std::max(cost, 1e-300);
    comps = std::move(trial);
    cost = new_cost;
    damping = std::max(damping / 3.0, 1e-12);
    if (decrease < options.relative_tolerance) {
      result.converged = true;
      break;
    }
  }
  result.comps = std::move(comps);
  result.cost = cost;
  return result;
}

double half_max_sigma(const std::vector<double>& y, std::size_t peak) {
  const double half = 0.5 * y[peak];
  std::size_t left = peak;
  while (left > 0 && y[left] > half) --left;
  std::size_t right = peak;
  while (right + 1 < y.size() && y[right] > half) ++right;
  const double fwhm = static_cast<double>(right - left);
  return std::max(fwhm / 2.3548, 1.0);
}

// Indices of local maxima, highest first, at least `separation` samples apart.
std::vector<std::size_t> local_maxima(const std::vector<double>& y, std::size_t separation) {
  std::vector<std::size_t> cands;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double left = i > 0 ? y[i - 1] : -1.0;
    const double right = i + 1 < y.size() ? y[i + 1] : -1.0;
    if (y[i] > 0.0 && y[i] >= left && y[i] > right) cands.push_back(i);
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
  std::vector<std::size_t> out;
  for (auto c : cands) {
    const bool far = std::all_of(out.begin(), out.end(), [&](std::size_t o) {
      return (c > o ? c - o : o - c) >= separation;
    });
    if (far) out.push_back(c);
  }
  return out;
}

GaussianComponent component_at(const FitData& data, const std::vector<double>& y,
                               std::size_t idx) {
  return {std::max(y[idx], 1e-6), data.x[idx], half_max_sigma(y, idx)};
}

std::vector<double> residual_of(const std::vector<GaussianComponent>& comps,
                                const FitData& data) {
  const auto f = model_values(comps, data.x);
  std::vector<double> r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = data.y[i] - f[i];
  return r;
}

// Pads a start with components centered on the largest remaining residuals.
void fill_from_residual(std::vector<GaussianComponent>& comps, const FitData& data,
                        std::size_t n_components) {
  while (comps.size() < n_components) {
    const auto r = residual_of(comps, data);
    const auto it = std::max_element(r.begin(), r.end());
    const auto idx = static_cast<std::size_t>(std::distance(r.begin(), it));
    if (*it > 0.0) {
      comps.push_back(component_at(data, r, idx));
    } else {
      comps.push_back({1e-6, data.x[idx], 5.0});
    }
  }
}

}  // namespace

SpectrumFit fit_primary_spectrum(const SpectralSamples& samples, Channel channel,
                                 std::size_t n_components, const FitOptions& options) {
  if (n_components < 1) throw ValidationError("n_components must be >= 1");
  samples.validate();
  const FitData data = resample_unit_grid(samples, channel);
  const auto peak = *std::max_element(data.y.begin(), data.y.end());

  SpectrumFit fit;
  if (peak <= 0.0) {
    const double span = data.x.back() - data.x.front();
    for (std::size_t k = 0; k < n_components; ++k) {
      fit.model.components.push_back(
          {0.0, data.x.front() + span * (static_cast<double>(k) + 0.5) / n_components, 10.0});
    }
    return fit;
  }

  const double span = data.x.back() - data.x.front();
  const Bounds bounds{data.x.front() - 50.0, data.x.back() + 50.0, 0.3, span};

  std::vector<std::vector<GaussianComponent>> starts;
  {
    std::vector<GaussianComponent> s;
    for (auto idx : local_maxima(data.y, 3)) {
      if (s.size() == n_components) break;
      s.push_back(component_at(data, data.y, idx));
    }
    fill_from_residual(s, data, n_components);
    starts.push_back(std::move(s));
  }
  {
    std::vector<GaussianComponent> s;
    for (std::size_t k = 1; k <= n_components; ++k) {
      fill_from_residual(s, data, k);
      s = levenberg_marquardt(s, data, bounds, options).comps;
    }
    starts.push_back(std::move(s));
  }
  {
    // Even spread over the part of the band above 5% of peak.
    std::size_t lo = 0;
    while (data.y[lo] < 0.05 * peak) ++lo;
    std::size_t hi = data.y.size() - 1;
    while (data.y[hi] < 0.05 * peak) --hi;
    const double a = data.x[lo];
    const double b = data.x[hi];
    std::vector<GaussianComponent> s;
    for (std::size_t k = 0; k < n_components; ++k) {
      const double mean = a + (b - a) * (static_cast<double>(k) + 0.5) / n_components;
      s.push_back({0.5 * peak, mean, std::max((b - a) / (2.0 * n_components), 1.0)});
    }
    starts.push_back(std::move(s));
  }

  LmResult best;
  bool have_best = false;
  bool any_converged = false;
  for (const auto& start : starts) {
    auto r = levenberg_marquardt(start, data, bounds, options);
    any_converged = any_converged || r.converged;
    if (!have_best || r.cost < best.cost) {
      best = std::move(r);
      have_best = true;
    }
  }
  const double rmse = std::sqrt(best.cost / static_cast<double>(data.x.size()));
  if (!any_converged)
    throw ConvergenceError("spectrum fit did not converge within " +
                               std::to_string(options.max_iterations) + " iterations",
                           rmse);

  std::sort(best.comps.begin(), best.comps.end(),
            [](const auto& a, const auto& b) { return a.mean_nm < b.mean_nm; });
  fit.model.components = std::move(best.comps);
  fit.rmse = rmse;
  fit.iterations = best.iterations;
  return fit;
}

DisplayModel fit_display(const SpectralSamples& samples, std::size_t n_components,
                         const std::string& source_label, const FitOptions& options) {
  samples.validate();
  SpectralSamples normalized = samples;
  for (auto& ch : normalized.intensity) {
    const double peak = *std::max_element(ch.begin(), ch.end());
    if (peak > 0.0)
      for (double& v : ch) v /= peak;
  }
  DisplayModel model;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto fit =
        fit_primary_spectrum(normalized, static_cast<Channel>(c), n_components, options);
    model.primaries[c] = fit.model;
    model.rmse[c] = fit.rmse;
  }
  model.source = source_label + "; intensities normalized per channel to unit peak; " +
                 std::to_string(n_components) + "-component Gaussian mixture";
  return model;
}

// ---------------------------------------------------------------------------------------------
// JSON persistence

namespace {
constexpr const char* kChannelKeys[3] = {"r", "g", "b"};
}

std::string display_model_to_json(const DisplayModel& model) {
  nlohmann::ordered_json j;
  for (std::size_t c = 0; c < 3; ++c) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& g : model.primaries[c].components) {
      arr.push_back({{"weight", g.weight}, {"mean_nm", g.mean_nm}, {"sigma_nm", g.sigma_nm}});
    }
    j["primaries"][kChannelKeys[c]] = arr;
  }
  j["source"] = model.source;
  for (std::size_t c = 0; c < 3; ++c) j["rmse"][kChannelKeys[c]] = model.rmse[c];
  return j.dump(2) + "\n";
}

DisplayModel display_model_from_json(const std::string& text) {
  DisplayModel model;
  try {
    const auto j = nlohmann::json::parse(text);
    for (std::size_t c = 0; c < 3; ++c) {
      for (const auto& g : j.at("primaries").at(kChannelKeys[c])) {
        GaussianComponent comp{g.at("weight").get<double>(), g.at("mean_nm").get<double>(),
                               g.at("sigma_nm").get<double>()};
        if (comp.weight < 0.0 || !(comp.sigma_nm > 0.0))
          throw DataError("display model: component needs weight >= 0 and sigma > 0");
        model.primaries[c].components.push_back(comp);
      }
      if (j.contains("rmse") && j["rmse"].contains(kChannelKeys[c]))
        model.rmse[c] = j["rmse"][kChannelKeys[c]].get<double>();
    }
    model.source = j.value("source", "");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("display model JSON: ") + e.what());
  }
  return model;
}

void save_display_model(const DisplayModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << display_model_to_json(model);
}

DisplayModel load_display_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError(path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return display_model_from_json(ss.str());
}

// ---------------------------------------------------------------------------------------------
// Cone fundamentals

ConeFundamentals::ConeFundamentals(std::vector<Row> rows) : rows_(std::move(rows)) {
  if (rows_.size() < 2) throw ValidationError("cone table needs at least two rows");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (r.l < 0.0 || r.m < 0.0 || r.s < 0.0)
      throw ValidationError("negative cone sensitivity at " + std::to_string(r.wavelength_nm) +
                            " nm");
    if (i > 0 && !(r.wavelength_nm > rows_[i - 1].wavelength_nm))
      throw ValidationError("non-monotone wavelengths in cone table");
  }
  if (first_nm() > kSpectrumStartNm || last_nm() < kSpectrumEndNm)
    throw ValidationError("cone table does not cover 400-700 nm");
}

ConeFundamentals load_cone_csv(const std::filesystem::path& path) {
  const auto table = read_table(path, "wavelength_nm,l,m,s");
  std::vector<ConeFundamentals::Row> rows;
  rows.reserve(table.size());
  for (const auto& t : table) rows.push_back({t[0], t[1], t[2], t[3]});
  try {
    return ConeFundamentals(std::move(rows));
  } catch (const ValidationError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::array<double, 3> cone_response(const ConeFundamentals& cones, double wavelength_nm) {
  const auto& rows = cones.rows();
  if (rows.empty() || !(wavelength_nm >= cones.first_nm() && wavelength_nm <= cones.last_nm()))
    throw ValidationError("wavelength " + std::to_string(wavelength_nm) +
                          " nm outside cone table range");
  const auto it = std::lower_bound(
      rows.begin(), rows.end(), wavelength_nm,
      [](const ConeFundamentals::Row& r, double w) { return r.wavelength_nm < w; });
  if (it->wavelength_nm == wavelength_nm) return {it->l, it->m, it->s};
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double t = (wavelength_nm - lo.wavelength_nm) / (hi.wavelength_nm - lo.wavelength_nm);
  return {lo.l + t * (hi.l - lo.l), lo.m + t * (hi.m - lo.m), lo.s + t * (hi.s - lo.s)};
}

std::filesystem::path default_cone_table_path() {
  return std::filesystem::path(PRECORRECT_DATA_DIR) / "cone_fundamentals_cie2006_2deg.csv";
}
std::filesystem::path default_display_csv_path() {
  return std::filesystem::path(PRECORRECT_DATA_DIR) / "display_oled_sample.csv";
}
std::filesystem::path default_display_model_path() {
  return std::filesystem::path(PRECORRECT_DATA_DIR) / "display_oled_sample.json";
}

}  // namespace precorrect
