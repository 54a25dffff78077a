#pragma once

#include "cndr/kernels.hpp"

#include <random>

namespace testutil {

inline cndr::PointSet x6() {
  cndr::PointSet x(6, 3);
  x << 0.3, -1.2, 0.5,
       1.1, 0.4, -0.7,
       -0.6, 0.9, 0.2,
       0.8, -0.3, 1.0,
       -1.0, -0.5, -0.4,
       0.2, 1.3, 0.6;
  return x;
}

inline cndr::Vector sigma6() {
  cndr::Vector s(6);
  s << 1, -1, -1, 1, 1, -1;
  return s;
}

inline cndr::PointSet gaussian(int m, int d, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n;
  cndr::PointSet x(m, d);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < d; ++c) x(i, c) = n(g);
  return x;
}

inline std::vector<cndr::KernelSpec> blocks(int p, int width) {
  std::vector<cndr::KernelSpec> ks;
  for (int k = 0; k < p; ++k) {
    std::vector<std::size_t> c;
    for (int i = 0; i < width; ++i) c.push_back(static_cast<std::size_t>(k * width + i));
    ks.push_back(cndr::KernelSpec::coordinate_linear(c));
  }
  return ks;
}

}  // namespace testutil
