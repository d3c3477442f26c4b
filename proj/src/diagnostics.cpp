#include "synten/diagnostics.hpp"

#include "linalg.hpp"
#include "synten/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace synten {

double corcondia(const Tensor3& x, const ParafacModel& m, std::vector<std::string>* warnings) {
  const Index r = m.rank();
  if (r < 1) throw ArgumentError("corcondia: empty model");
  for (int n = 1; n <= 3; ++n) {
    const Matrix& f = m.factors[static_cast<std::size_t>(n - 1)];
    if (f.rows() != x.dim(n) || f.cols() != r) throw ArgumentError("corcondia: model does not match data shape");
  }
  if (r == 1) return 100.0;

  // Scale lives in the first factor so the target core is the identity tensor.
  const Matrix a1 = m.factors[0] * m.lambda.asDiagonal();
  bool d1 = false, d2 = false, d3 = false;
  Tensor3 g = mode_n_product(x, detail::pinv(a1, &d1), 1);
  g = mode_n_product(g, detail::pinv(m.factors[1], &d2), 2);
  g = mode_n_product(g, detail::pinv(m.factors[2], &d3), 3);
  if ((d1 || d2 || d3) && warnings)
    detail::warn_once(*warnings, "corcondia: singular factor; pseudo-inverse used");

  double ss = 0.0;
  for (Index k = 0; k < r; ++k)
    for (Index j = 0; j < r; ++j)
      for (Index i = 0; i < r; ++i) {
        const double t = (i == j && j == k) ? 1.0 : 0.0;
        const double e = g(i, j, k) - t;
        ss += e * e;
      }
  return 100.0 * (1.0 - ss / static_cast<double>(r));
}

double pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ArgumentError("pearson: vectors differ in length");
  if (a.size() < 2) throw ArgumentError("pearson: need at least two observations");
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double va = da.squaredNorm();
  const double vb = db.squaredNorm();
  if (va == 0.0 || vb == 0.0) throw DegenerateInputError("pearson: zero-variance input");
  const double r = da.dot(db) / std::sqrt(va * vb);
  return std::clamp(r, -1.0, 1.0);
}

double pearson_or_zero(const Vector& a, const Vector& b) {
  try {
    return pearson(a, b);
  } catch (const DegenerateInputError&) {
    return 0.0;
  }
}

CorrelationMatrix correlate_sets(const Matrix& a, const Matrix& b, std::vector<std::string> row_labels,
                                 std::vector<std::string> col_labels) {
  if (a.rows() != b.rows()) throw ArgumentError("correlate_sets: synergy lengths differ");
  CorrelationMatrix out;
  out.values.resize(a.cols(), b.cols());
  for (Index i = 0; i < a.cols(); ++i)
    for (Index j = 0; j < b.cols(); ++j) out.values(i, j) = pearson_or_zero(a.col(i), b.col(j));
  if (row_labels.empty())
    for (Index i = 0; i < a.cols(); ++i) row_labels.push_back(std::to_string(i + 1));
  if (col_labels.empty())
    for (Index j = 0; j < b.cols(); ++j) col_labels.push_back(std::to_string(j + 1));
  if (static_cast<Index>(row_labels.size()) != a.cols() || static_cast<Index>(col_labels.size()) != b.cols())
    throw ArgumentError("correlate_sets: label count mismatch");
  out.row_labels = std::move(row_labels);
  out.col_labels = std::move(col_labels);
  return out;
}

Index MatchResult::b_for(Index a) const {
  for (const auto& p : pairs)
    if (p.a == a) return p.b;
  return -1;
}

MatchResult match_synergies(const Matrix& set_a, const Matrix& set_b) {
  if (set_a.cols() == 0 || set_b.cols() == 0) throw ArgumentError("match_synergies: empty synergy set");
  const Matrix r = correlate_sets(set_a, set_b).values;
  std::vector<bool> used_a(static_cast<std::size_t>(r.rows()), false);
  std::vector<bool> used_b(static_cast<std::size_t>(r.cols()), false);
  MatchResult out;
  const Index n = std::min(r.rows(), r.cols());
  for (Index step = 0; step < n; ++step) {
    Index best_a = -1, best_b = -1;
    double best = -std::numeric_limits<double>::infinity();
    // Row-major scan with strict '>' keeps the lowest (a, b) on ties.
    for (Index i = 0; i < r.rows(); ++i) {
      if (used_a[static_cast<std::size_t>(i)]) continue;
      for (Index j = 0; j < r.cols(); ++j) {
        if (used_b[static_cast<std::size_t>(j)]) continue;
        if (r(i, j) > best) {
          best = r(i, j);
          best_a = i;
          best_b = j;
        }
      }
    }
    used_a[static_cast<std::size_t>(best_a)] = true;
    used_b[static_cast<std::size_t>(best_b)] = true;
    out.pairs.push_back({best_a, best_b, best});
  }
  std::sort(out.pairs.begin(), out.pairs.end(), [](const MatchedPair& p, const MatchedPair& q) { return p.a < q.a; });
  double sum = 0.0;
  for (const auto& p : out.pairs) sum += p.r;
  out.mean_r = sum / static_cast<double>(out.pairs.size());
  return out;
}

std::vector<double> reference_scores(const std::vector<Matrix>& per_rep) {
  if (per_rep.size() < 2) throw ArgumentError("reference_repetition: need at least two repetitions");
  const Index k = per_rep.front().cols();
  for (const auto& s : per_rep)
    if (s.cols() != k || s.rows() != per_rep.front().rows())
      throw ArgumentError("reference_repetition: repetitions have inconsistent synergy counts");
  std::vector<double> scores(per_rep.size(), 0.0);
  for (std::size_t c = 0; c < per_rep.size(); ++c) {
    double sum = 0.0;
    for (std::size_t o = 0; o < per_rep.size(); ++o)
      if (o != c) sum += match_synergies(per_rep[c], per_rep[o]).mean_r;
    scores[c] = sum / static_cast<double>(per_rep.size() - 1);
  }
  return scores;
}

Index reference_repetition(const std::vector<Matrix>& per_rep) {
  const auto scores = reference_scores(per_rep);
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  return static_cast<Index>(best);
}

SharedSynergyResult identify_shared_nmf(const Matrix& task_a, const Matrix& task_b, double threshold) {
  if (task_a.cols() != 2 || task_b.cols() != 2)
    throw ArgumentError("identify_shared_nmf: expected two synergies per task");
  SharedSynergyResult out;
  out.cross = correlate_sets(task_a, task_b).values;
  Index ia = 0, ib = 0;
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j)
      if (out.cross(i, j) > out.cross(ia, ib)) {
        ia = i;
        ib = j;
      }
  out.shared_a = ia;
  out.shared_b = ib;
  out.specific_a = 1 - ia;
  out.specific_b = 1 - ib;
  out.r = out.cross(ia, ib);
  out.above_threshold = out.r >= threshold;
  out.shared = task_a.col(ia).normalized() + task_b.col(ib).normalized();
  out.shared *= 0.5;
  out.shared.normalize();
  return out;
}

}  // namespace synten
