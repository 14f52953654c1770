#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "hmimo/constants.hpp"

namespace hmimo {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based child seed: independent of the order in which children are drawn.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t counter,
                                 std::uint64_t stream = 0) {
  return splitmix64(splitmix64(root ^ splitmix64(stream)) + counter);
}

// Circularly-symmetric complex Gaussian entries with unit variance.
inline Eigen::MatrixXcd complex_gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = n(eng);
      const double im = n(eng);
      m(r, c) = cplx{re, im};
    }
  return m;
}

}  // namespace hmimo
