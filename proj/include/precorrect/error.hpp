// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace precorrect {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A referenced input file does not exist or cannot be opened.
class FileNotFoundError : public Error {
 public:
  explicit FileNotFoundError(const std::string& path)
      : Error("file not found: " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// A parameter violates a documented constraint (odd kernel size, pupil range, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// File content is malformed. `row` is the 1-based line number when known, 0 otherwise.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t row = 0) : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_rmse)
      : Error(what), best_rmse_(best_rmse) {}
  double best_rmse() const noexcept { return best_rmse_; }

 private:
  double best_rmse_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : Error(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace precorrect
