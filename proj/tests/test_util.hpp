#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sga/rng.hpp"
#include "sga/tensor.hpp"

namespace sga::test {

// Scratch directory unique to the test binary run.
inline std::string scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("sga_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline Tensor random_tensor(int rows, int cols, Rng& rng, double scale = 1.0) {
  Tensor t(rows, cols);
  for (double& x : t.v) x = scale * rng.uniform(-1.0, 1.0);
  return t;
}

// Scalarizes an arbitrary (m,n) output with fixed random weights so any op
// can be gradient-checked through a single scalar.
inline Tape::Var scalarize(Tape& tape, Tape::Var out, std::uint64_t seed = 7) {
  Rng rng(seed);
  const Tensor& o = tape.value(out);
  Tensor right = random_tensor(o.cols, 1, rng);
  Tensor left = random_tensor(o.rows, 1, rng);
  Tape::Var col = tape.matmul(out, tape.constant(right));   // (m,1)
  return tape.matmul_tn(tape.constant(left), col);          // (1,1)
}

inline double rel_err(double analytic, double numeric) {
  double denom = std::max({1e-8, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace sga::test
