// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "precorrect/config.hpp"

namespace precorrect::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitMissingInput = 2;
inline constexpr int kExitUsage = 64;

struct Globals {
  std::optional<std::filesystem::path> config_path;
  std::size_t jobs = 0;
  bool verbose = false;
};

// Thrown for argument combinations the parser cannot express; maps to kExitUsage.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitDisplayArgs {
  std::filesystem::path csv;
  std::size_t components = 3;
  std::filesystem::path out;
};

struct KernelArgs {
  std::filesystem::path out;
  std::filesystem::path rgb_out;  // empty: derived from `out`
  std::optional<double> sphere, cylinder, axis, pupil;
  std::optional<std::size_t> kernel_size, grid_size;
  std::optional<int> stride;
};

struct SimulateArgs {
  std::filesystem::path image, kernel, out, container;
};

struct CorrectArgs {
  std::filesystem::path image, kernel, out, loss_csv, container;
  std::optional<std::size_t> iterations;
  std::optional<double> learning_rate;
  std::optional<std::string> loss_space;
};

struct EvaluateArgs {
  std::filesystem::path target, corrected, kernel, out, magma;
  std::optional<double> ppd;
};

struct BatchArgs {
  std::filesystem::path images, out;
};

RunConfig load_config(const Globals& globals);

int cmd_fit_display(const Globals& g, const FitDisplayArgs& args);
int cmd_kernel(const Globals& g, const KernelArgs& args);
int cmd_simulate(const Globals& g, const SimulateArgs& args);
int cmd_correct(const Globals& g, const CorrectArgs& args);
int cmd_evaluate(const Globals& g, const EvaluateArgs& args);
int cmd_batch(const Globals& g, const BatchArgs& args);

}  // namespace precorrect::cli
