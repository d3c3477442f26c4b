#include "linalg.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace synten::detail {

Matrix pinv(const Matrix& a, bool* deficient) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  const double cutoff =
      static_cast<double>(std::max(a.rows(), a.cols())) * std::numeric_limits<double>::epsilon() * smax;
  Vector inv = Vector::Zero(s.size());
  bool short_rank = s.size() < std::min(a.rows(), a.cols());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0)
      inv(i) = 1.0 / s(i);
    else
      short_rank = true;
  }
  if (deficient) *deficient = short_rank;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix solve_gram(const Matrix& rhs, const Matrix& gram, bool* deficient) { return rhs * pinv(gram, deficient); }

Matrix random_uniform(Index rows, Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix m(rows, cols);
  // Column-major fill keeps the draw order independent of Eigen internals.
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = unif(rng);
  return m;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffu), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index & 0xffffffffu), static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void clamp_nonneg(Matrix& m) { m = m.cwiseMax(0.0); }

Vector normalize_columns(Matrix& m) {
  Vector norms = m.colwise().norm().transpose();
  for (Index c = 0; c < m.cols(); ++c)
    if (norms(c) > 0.0) m.col(c) /= norms(c);
  return norms;
}

void warn_once(std::vector<std::string>& warnings, const std::string& msg) {
  if (std::find(warnings.begin(), warnings.end(), msg) == warnings.end()) warnings.push_back(msg);
}

}  // namespace synten::detail
