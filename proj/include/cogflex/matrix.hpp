#pragma once

#include <cstddef>
#include <vector>

namespace cogflex {

// Dense row-major matrix of doubles. Deliberately minimal: the network code
// writes its own loops so the hot paths stay fused and allocation-free.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const {
    return a.data() + static_cast<std::size_t>(r) * cols;
  }

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return a[static_cast<std::size_t>(r) * cols + c];
  }

  std::size_t size() const { return a.size(); }

  void resize(int r, int c) {
    rows = r;
    cols = c;
    a.assign(static_cast<std::size_t>(r) * c, 0.0);
  }

  void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

}  // namespace cogflex
