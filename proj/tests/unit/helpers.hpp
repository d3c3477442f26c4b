#pragma once

#include "synten/tensor.hpp"

#include <array>
#include <random>
#include <vector>

namespace synten::test {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = u(rng);
  return m;
}

inline Tensor3 random_tensor(const Dims3& dims, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> data(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]));
  for (auto& v : data) v = u(rng);
  return Tensor3(dims, std::move(data));
}

struct Planted {
  Tensor3 tensor;
  std::array<Matrix, 3> factors;
};

/// Exact non-negative rank-r PARAFAC tensor with factors in [0.1, 1).
inline Planted planted_parafac(const Dims3& dims, Index r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Planted p;
  for (int n = 0; n < 3; ++n) p.factors[n] = random_matrix(dims[n], r, rng, 0.1, 1.0);
  p.tensor = reconstruct_parafac(Vector::Ones(r), p.factors[0], p.factors[1], p.factors[2]);
  return p;
}

inline double max_abs_diff(const Tensor3& a, const Tensor3& b) {
  double d = 0.0;
  for (Index n = 0; n < a.size(); ++n) d = std::max(d, std::abs(a.data()[n] - b.data()[n]));
  return d;
}

}  // namespace synten::test
