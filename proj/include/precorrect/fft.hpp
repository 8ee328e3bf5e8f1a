// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

struct fftw_plan_s;

namespace precorrect::fft {

// Smallest n' >= n whose only prime factors are 2, 3, 5, 7.
std::size_t fast_size(std::size_t n);

namespace detail {
void* aligned_alloc_bytes(std::size_t bytes);
void aligned_free(void* p) noexcept;
}  // namespace detail

// SIMD-aligned, zero-initialized storage. All transforms run on buffers of this type so
// that every plan sees identical alignment and produces bit-identical results.
template <typename T>
class AlignedBuffer {
 public:
  AlignedBuffer() = default;
  explicit AlignedBuffer(std::size_t n)
      : data_(static_cast<T*>(detail::aligned_alloc_bytes(n * sizeof(T)))), size_(n) {
    for (std::size_t i = 0; i < n; ++i) new (data_.get() + i) T();
  }
  AlignedBuffer(const AlignedBuffer& other) : AlignedBuffer(other.size_) {
    for (std::size_t i = 0; i < size_; ++i) data_.get()[i] = other.data_.get()[i];
  }
  AlignedBuffer& operator=(const AlignedBuffer& other) {
    if (this != &other) *this = AlignedBuffer(other);
    return *this;
  }
  AlignedBuffer(AlignedBuffer&&) noexcept = default;
  AlignedBuffer& operator=(AlignedBuffer&&) noexcept = default;

  T* data() noexcept { return data_.get(); }
  const T* data() const noexcept { return data_.get(); }
  std::size_t size() const noexcept { return size_; }
  T& operator[](std::size_t i) noexcept { return data_.get()[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_.get()[i]; }
  std::span<T> span() noexcept { return {data_.get(), size_}; }
  std::span<const T> span() const noexcept { return {data_.get(), size_}; }

 private:
  struct Free {
    void operator()(T* p) const noexcept { detail::aligned_free(p); }
  };
  std::unique_ptr<T, Free> data_;
  std::size_t size_ = 0;
};

using Complex = std::complex<double>;

// Real <-> half-complex 2-D transform pair of shape rows x cols. Plans are created under a
// global lock; execution is reentrant, so one plan may be shared across threads as long as
// each thread passes its own buffers. Both directions are unnormalized.
class RealPlan2d {
 public:
  RealPlan2d(std::size_t rows, std::size_t cols);
  ~RealPlan2d();
  RealPlan2d(const RealPlan2d&) = delete;
  RealPlan2d& operator=(const RealPlan2d&) = delete;

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t spectrum_cols() const noexcept { return cols_ / 2 + 1; }
  std::size_t real_size() const noexcept { return rows_ * cols_; }
  std::size_t spectrum_size() const noexcept { return rows_ * spectrum_cols(); }

  // `in` is preserved.
  void forward(AlignedBuffer<double>& in, AlignedBuffer<Complex>& out) const;
  // `in` is overwritten.
  void inverse(AlignedBuffer<Complex>& in, AlignedBuffer<double>& out) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  fftw_plan_s* forward_ = nullptr;
  fftw_plan_s* inverse_ = nullptr;
};

// In-place forward complex 2-D transform (unnormalized).
class ComplexPlan2d {
 public:
  ComplexPlan2d(std::size_t rows, std::size_t cols);
  ~ComplexPlan2d();
  ComplexPlan2d(const ComplexPlan2d&) = delete;
  ComplexPlan2d& operator=(const ComplexPlan2d&) = delete;

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  void forward(AlignedBuffer<Complex>& data) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  fftw_plan_s* plan_ = nullptr;
};

// Process-wide plan caches keyed by shape.
std::shared_ptr<const RealPlan2d> cached_real_plan(std::size_t rows, std::size_t cols);
std::shared_ptr<const ComplexPlan2d> cached_complex_plan(std::size_t rows, std::size_t cols);

}  // namespace precorrect::fft
