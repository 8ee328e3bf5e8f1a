// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>

#include "precorrect/image.hpp"

namespace precorrect {

// Sphero-cylindrical refractive error plus the pupil it is measured over.
struct Prescription {
  double sphere_d = 0.0;
  double cylinder_d = 0.0;
  double axis_deg = 0.0;  // [0, 180)
  double pupil_diameter_mm = 4.0;  // (1, 9)

  void validate() const;
};

// Zernike coefficients in meters of optical path difference, OSA/ANSI (n, m) indexing
// with unit-disk normalization (integral of Z^2 over the disk equals pi).
class ZernikeCoefficients {
 public:
  void set(int n, int m, double value_m);
  double get(int n, int m) const noexcept;
  const std::map<std::pair<int, int>, double>& terms() const noexcept { return terms_; }

  static bool valid_index(int n, int m) noexcept;

 private:
  std::map<std::pair<int, int>, double> terms_;
};

ZernikeCoefficients prescription_to_zernike(const Prescription& rx);

double zernike_polynomial(int n, int m, double rho, double theta);
// Wavefront OPD in meters at normalized pupil radius rho in [0,1].
double zernike_eval(const ZernikeCoefficients& coeffs, double rho, double theta);

std::string zernike_to_json(const ZernikeCoefficients& coeffs, double pupil_diameter_mm);
std::pair<ZernikeCoefficients, double> zernike_from_json(const std::string& text);

// Mapping from retinal angle to display pixels and the FFT grid used to get there.
struct PsfGeometry {
  std::size_t grid_size = 512;
  double viewing_distance_m = 0.55;
  double pixel_pitch_m = 0.233e-3;
  std::size_t kernel_size_px = 65;

  double pixel_angle_rad() const noexcept { return pixel_pitch_m / viewing_distance_m; }
  void validate() const;
};

struct MonochromaticPsf {
  Plane values;  // kernel_size x kernel_size, nonnegative, unit sum
  double wavelength_nm = 0.0;
};

// Fourier-optics PSF: |FT(circ * exp(i 2 pi W / lambda))|^2 on a grid_size^2 pupil grid,
// resampled from the diffraction angular grid onto display pixels, cropped and renormalized.
//
// The pupil sample spacing is chosen per wavelength so that the angular grid step is the same
// for every lambda: (kernel_size + 2) pixels span the full FFT grid. Each display pixel is the
// average of bilinear samples on an s x s sub-pixel lattice (s ~ pixel / grid step).
MonochromaticPsf psf_monochromatic(const ZernikeCoefficients& coeffs, double wavelength_nm,
                                   double pupil_diameter_mm, const PsfGeometry& geometry);

// Smallest power-of-two grid whose pupil sampling still resolves the kernel footprint.
std::size_t required_grid_size(double wavelength_nm, double pupil_diameter_mm,
                               const PsfGeometry& geometry);

}  // namespace precorrect
