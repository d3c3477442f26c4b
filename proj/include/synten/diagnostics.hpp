#pragma once

// Model-quality metrics and synergy comparison.
//
// Synergy sets are matrices whose columns are the synergy vectors
// (channels x count).

#include "synten/factorization.hpp"
#include "synten/tensor.hpp"

#include <string>
#include <vector>

namespace synten {

/// Core consistency of a PARAFAC model, in percent (<= 100, may be negative).
/// Single-component models are consistent by definition and return 100.
double corcondia(const Tensor3& x, const ParafacModel& m, std::vector<std::string>* warnings = nullptr);

double pearson(const Vector& a, const Vector& b);
/// As pearson, but a zero-variance input (such as a component clamped to all
/// zeros) correlates 0 with everything instead of throwing.
double pearson_or_zero(const Vector& a, const Vector& b);

struct CorrelationMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix values;
};

/// Correlation between every column of `a` (rows) and of `b` (cols), using
/// pearson_or_zero.
CorrelationMatrix correlate_sets(const Matrix& a, const Matrix& b, std::vector<std::string> row_labels = {},
                                 std::vector<std::string> col_labels = {});

struct MatchedPair {
  Index a;
  Index b;
  double r;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;  // sorted by a-index
  double mean_r = 0.0;

  /// Index in set b matched to column `a`, or -1 when unmatched.
  Index b_for(Index a) const;
};

/// Greedy pairing: repeatedly take the remaining pair with the highest
/// correlation; ties go to the lowest (a, b).
MatchResult match_synergies(const Matrix& set_a, const Matrix& set_b);

/// Mean matched correlation of every other repetition against each candidate.
std::vector<double> reference_scores(const std::vector<Matrix>& per_rep);
/// Index of the repetition with the highest score; ties go to the lowest index.
Index reference_repetition(const std::vector<Matrix>& per_rep);

struct SharedSynergyResult {
  Matrix cross;          // 2x2, rows task A synergies, cols task B synergies
  Index shared_a = 0;    // column of task A labelled shared
  Index shared_b = 0;
  Index specific_a = 1;
  Index specific_b = 1;
  double r = 0.0;
  bool above_threshold = false;
  Vector shared;         // unit-norm mean of the shared pair
};

constexpr double kDefaultSharedThreshold = 0.8;

/// Labels the most correlated cross-task pair as shared. Each input holds
/// two synergies as columns.
SharedSynergyResult identify_shared_nmf(const Matrix& task_a, const Matrix& task_b,
                                        double threshold = kDefaultSharedThreshold);

}  // namespace synten
