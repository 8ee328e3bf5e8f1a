// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace precorrect {

// Sampling range used for spectral weights, matrices, and kernels (1 nm grid by default).
inline constexpr int kSpectrumStartNm = 400;
inline constexpr int kSpectrumEndNm = 700;

enum class Channel { r = 0, g = 1, b = 2 };

std::vector<double> sampling_wavelengths(int stride_nm = 1);

// Spectrometer measurements of the three display primaries.
struct SpectralSamples {
  std::vector<double> wavelengths_nm;
  std::array<std::vector<double>, 3> intensity;  // indexed by Channel

  std::size_t size() const noexcept { return wavelengths_nm.size(); }
  const std::vector<double>& channel(Channel c) const noexcept {
    return intensity[static_cast<std::size_t>(c)];
  }
  // Strictly increasing wavelengths, intensities in [0,1], coverage of [400, 700] nm.
  void validate() const;
};

// Reads `wavelength_nm,r,g,b` CSV. Rows are sorted by wavelength before validation;
// a repeated wavelength is reported as non-monotone.
SpectralSamples load_spectrometer_csv(const std::filesystem::path& path);
void save_spectrometer_csv(const SpectralSamples& samples, const std::filesystem::path& path);

struct GaussianComponent {
  double weight = 0.0;
  double mean_nm = 0.0;
  double sigma_nm = 1.0;
};

struct GaussianMixtureSpectrum {
  std::vector<GaussianComponent> components;
};

double evaluate_spectrum(const GaussianMixtureSpectrum& model, double wavelength_nm) noexcept;

// Spectrum values on the sampling grid divided by their sum over that grid. An all-zero
// spectrum yields all-zero weights.
std::vector<double> normalized_weights(const GaussianMixtureSpectrum& model, int stride_nm = 1);

struct FitOptions {
  std::size_t max_iterations = 400;
  double relative_tolerance = 1e-12;
};

struct SpectrumFit {
  GaussianMixtureSpectrum model;
  double rmse = 0.0;
  std::size_t iterations = 0;
};

// Least-squares Gaussian-mixture fit of one channel, resampled onto the integer-nm grid
// spanned by the samples. Levenberg-Marquardt from several starts (top-k local maxima,
// greedy residual peaks, even spread); the lowest-residual result is returned.
// An all-zero channel returns a zero-weight mixture with rmse 0.
SpectrumFit fit_primary_spectrum(const SpectralSamples& samples, Channel channel,
                                 std::size_t n_components, const FitOptions& options = {});

struct DisplayModel {
  std::array<GaussianMixtureSpectrum, 3> primaries;
  std::array<double, 3> rmse{};
  std::string source;

  const GaussianMixtureSpectrum& primary(Channel c) const noexcept {
    return primaries[static_cast<std::size_t>(c)];
  }
};

// Fits all three channels after normalizing each to unit peak.
DisplayModel fit_display(const SpectralSamples& samples, std::size_t n_components,
                         const std::string& source_label, const FitOptions& options = {});

std::string display_model_to_json(const DisplayModel& model);
DisplayModel display_model_from_json(const std::string& text);
void save_display_model(const DisplayModel& model, const std::filesystem::path& path);
DisplayModel load_display_model(const std::filesystem::path& path);

// Tabulated cone (or camera) spectral sensitivities.
class ConeFundamentals {
 public:
  struct Row {
    double wavelength_nm;
    double l, m, s;
  };

  ConeFundamentals() = default;
  // Requires strictly increasing wavelengths, nonnegative sensitivities, coverage of 400-700 nm.
  explicit ConeFundamentals(std::vector<Row> rows);

  const std::vector<Row>& rows() const noexcept { return rows_; }
  double first_nm() const noexcept { return rows_.front().wavelength_nm; }
  double last_nm() const noexcept { return rows_.back().wavelength_nm; }

 private:
  std::vector<Row> rows_;
};

ConeFundamentals load_cone_csv(const std::filesystem::path& path);

// Exact at table nodes, linear between them; ValidationError outside the table.
std::array<double, 3> cone_response(const ConeFundamentals& cones, double wavelength_nm);

std::filesystem::path default_cone_table_path();
std::filesystem::path default_display_csv_path();
std::filesystem::path default_display_model_path();

}  // namespace precorrect
