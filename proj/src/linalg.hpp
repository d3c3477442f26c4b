#pragma once

// Internal numeric helpers shared by the solvers and diagnostics.

#include "synten/tensor.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace synten::detail {

/// Moore-Penrose pseudo-inverse via SVD. Sets `*deficient` when any singular
/// value falls below max(rows, cols) * eps * sigma_max.
Matrix pinv(const Matrix& a, bool* deficient = nullptr);

/// Minimum-norm least-squares solution of X * gram = rhs.
Matrix solve_gram(const Matrix& rhs, const Matrix& gram, bool* deficient = nullptr);

/// Uniform [0, 1) matrix.
Matrix random_uniform(Index rows, Index cols, std::mt19937_64& rng);

/// Independent stream for restart `index` under a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

void clamp_nonneg(Matrix& m);

/// Scales each nonzero column to unit 2-norm and returns the original norms.
Vector normalize_columns(Matrix& m);

/// Appends `msg` unless already present.
void warn_once(std::vector<std::string>& warnings, const std::string& msg);

}  // namespace synten::detail
