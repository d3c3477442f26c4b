#pragma once

// Alternating least squares solvers: NMF, non-negative PARAFAC, Tucker and
// the constrained Tucker model used for shared-synergy extraction.

#include "synten/tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace synten {

enum class InitMethod { random_nonneg, hosvd };
enum class NmfAlgorithm { multiplicative, als_clamped };

struct FitConfig {
  int max_iters = 500;
  /// Stop when the explained variance (percent) changes by less than this between iterations.
  double tol = 1e-6;
  std::uint64_t seed = 0;
  /// Unset: solver default (1 for consTD, 3 for NMF, 5 for PARAFAC/Tucker).
  std::optional<int> restarts;
  InitMethod init = InitMethod::random_nonneg;
  /// Controlled-averaging window, odd.
  int averaging_window = 3;
  NmfAlgorithm nmf_algorithm = NmfAlgorithm::multiplicative;

  /// Throws ArgumentError when a field is out of range.
  void validate() const;
  int restarts_or(int fallback) const { return restarts.value_or(fallback); }
};

struct ModeConstraint {
  bool nonneg = false;
  /// Starting value for the factor. It still updates.
  std::optional<Matrix> fixed_init;
  /// Smooth columns along the row index at the end of every iteration.
  bool controlled_averaging = false;
};

struct ConstraintSpec {
  std::array<ModeConstraint, 3> modes{};
  /// Starting core; entries flagged in its mask are never updated.
  std::optional<CoreTensor> core;
  bool core_nonneg = false;

  static ConstraintSpec none() { return {}; }
  /// Non-negativity on all three factors (and the core, for Tucker).
  static ConstraintSpec nonnegative();
};

struct TuckerModel {
  CoreTensor core;
  std::array<Matrix, 3> factors;  // temporal, spatial, repetition
  double fit = 0.0;               // explained variance, percent
  int iters = 0;
  bool converged = false;
  std::vector<double> fit_trace;  // explained variance after each iteration
  std::vector<std::string> warnings;

  Tensor3 reconstruct() const { return reconstruct_tucker(core, factors[0], factors[1], factors[2]); }
};

struct ParafacModel {
  Vector lambda;
  std::array<Matrix, 3> factors;  // unit-norm columns
  double fit = 0.0;
  int iters = 0;
  bool converged = false;
  std::optional<double> corcondia;
  std::vector<double> fit_trace;
  std::vector<std::string> warnings;

  Index rank() const noexcept { return lambda.size(); }
  Tensor3 reconstruct() const { return reconstruct_parafac(lambda, factors[0], factors[1], factors[2]); }
};

struct NmfModel {
  Matrix temporal;  // W: samples x r
  Matrix spatial;   // H: channels x r, unit-norm columns
  double vaf = 0.0;
  int iters = 0;
  bool converged = false;
  std::vector<double> fit_trace;

  Matrix reconstruct() const { return temporal * spatial.transpose(); }
};

/// X (samples x channels) ≈ W H^T with W, H >= 0.
NmfModel nmf(const Matrix& x, Index r, const FitConfig& cfg);

ParafacModel parafac_als(const Tensor3& x, Index r, const ConstraintSpec& cons, const FitConfig& cfg);

TuckerModel tucker_als(const Tensor3& x, const Dims3& ranks, const ConstraintSpec& cons, const FitConfig& cfg);

/// Centered moving average of width k down each column; the window is
/// truncated at the first and last rows.
Matrix controlled_averaging(const Matrix& m, int k);

struct ConstdLayout {
  Dims3 ranks;
  ConstraintSpec constraints;
};

/// Ranks, fixed sparse core and repetition-mode initialisation for the
/// constrained Tucker model with 1 or 2 degrees of freedom (2 or 4 tasks).
/// Repetitions are assumed ordered task-block-wise.
ConstdLayout build_constd_spec(int n_dofs, Index reps_per_task);

/// Constrained Tucker fit. Spatial columns come back unit-norm, ordered
/// [task-specific..., shared]; their scale is carried by the repetition factor.
TuckerModel constrained_tucker(const Tensor3& x, int n_dofs, Index reps_per_task, const FitConfig& cfg);

}  // namespace synten
