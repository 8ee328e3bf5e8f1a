// SPDX-License-Identifier: Apache-2.0
#include "precorrect/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <new>

#include "precorrect/error.hpp"

namespace precorrect::fft {

namespace {

// FFTW's planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void check_size(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw ValidationError("FFT size must be positive");
}

}  // namespace

std::size_t fast_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u, 7u})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

namespace detail {
void* aligned_alloc_bytes(std::size_t bytes) {
  void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
  if (!p) throw std::bad_alloc();
  return p;
}
void aligned_free(void* p) noexcept { fftw_free(p); }
}  // namespace detail

RealPlan2d::RealPlan2d(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  check_size(rows, cols);
  AlignedBuffer<double> real(real_size());
  AlignedBuffer<Complex> spec(spectrum_size());
  std::lock_guard lock(planner_mutex());
  forward_ = fftw_plan_dft_r2c_2d(static_cast<int>(rows), static_cast<int>(cols), real.data(),
                                  reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
  inverse_ = fftw_plan_dft_c2r_2d(static_cast<int>(rows), static_cast<int>(cols),
                                  reinterpret_cast<fftw_complex*>(spec.data()), real.data(),
                                  FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
  if (!forward_ || !inverse_) throw Error("FFTW planning failed");
}

RealPlan2d::~RealPlan2d() {
  std::lock_guard lock(planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (inverse_) fftw_destroy_plan(inverse_);
}

void RealPlan2d::forward(AlignedBuffer<double>& in, AlignedBuffer<Complex>& out) const {
  fftw_execute_dft_r2c(forward_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

void RealPlan2d::inverse(AlignedBuffer<Complex>& in, AlignedBuffer<double>& out) const {
  fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(in.data()), out.data());
}

ComplexPlan2d::ComplexPlan2d(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  check_size(rows, cols);
  AlignedBuffer<Complex> buf(rows * cols);
  std::lock_guard lock(planner_mutex());
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  plan_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), p, p, FFTW_FORWARD,
                           FFTW_ESTIMATE);
  if (!plan_) throw Error("FFTW planning failed");
}

ComplexPlan2d::~ComplexPlan2d() {
  std::lock_guard lock(planner_mutex());
  if (plan_) fftw_destroy_plan(plan_);
}

void ComplexPlan2d::forward(AlignedBuffer<Complex>& data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_, p, p);
}

namespace {
template <typename Plan>
std::shared_ptr<const Plan> cached(std::size_t rows, std::size_t cols) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const Plan>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{rows, cols}];
  if (!slot) slot = std::make_shared<const Plan>(rows, cols);
  return slot;
}
}  // namespace

std::shared_ptr<const RealPlan2d> cached_real_plan(std::size_t rows, std::size_t cols) {
  return cached<RealPlan2d>(rows, cols);
}

std::shared_ptr<const ComplexPlan2d> cached_complex_plan(std::size_t rows, std::size_t cols) {
  return cached<ComplexPlan2d>(rows, cols);
}

}  // namespace precorrect::fft
