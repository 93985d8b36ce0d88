#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace qrul {

// Minimal row-major dense matrices; all the linear algebra in this project is
// small (at most 16x16), so these stay deliberately plain.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

struct CMat {
  int rows = 0;
  int cols = 0;
  std::vector<std::complex<double>> a;

  CMat() = default;
  CMat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}

  std::complex<double>& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  const std::complex<double>& at(int r, int c) const {
    return a[static_cast<std::size_t>(r) * cols + c];
  }
};

}  // namespace qrul
