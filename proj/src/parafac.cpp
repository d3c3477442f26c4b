#include "linalg.hpp"
#include "synten/errors.hpp"
#include "synten/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace synten {

namespace {

Matrix initial_factor(const Tensor3& x, int mode, Index r, const ModeConstraint& mc, const FitConfig& cfg,
                      std::mt19937_64& rng) {
  const Index rows = x.dim(mode);
  if (mc.fixed_init) {
    if (mc.fixed_init->rows() != rows || mc.fixed_init->cols() != r)
      throw ArgumentError("fixed_init for mode " + std::to_string(mode) + " has the wrong shape");
    return *mc.fixed_init;
  }
  Matrix f = detail::random_uniform(rows, r, rng);
  if (cfg.init == InitMethod::hosvd) {
    Eigen::JacobiSVD<Matrix> svd(unfold(x, mode), Eigen::ComputeThinU);
    const Index k = std::min(r, svd.matrixU().cols());
    f.leftCols(k) = svd.matrixU().leftCols(k);
    if (mc.nonneg) f.leftCols(k) = f.leftCols(k).cwiseAbs();
  }
  return f;
}

ParafacModel parafac_single(const Tensor3& x, const std::array<Matrix, 3>& unfolded, Index r,
                            const ConstraintSpec& cons, const FitConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParafacModel model;
  std::array<Matrix, 3>& a = model.factors;
  for (int n = 0; n < 3; ++n) {
    a[static_cast<std::size_t>(n)] = initial_factor(x, n + 1, r, cons.modes[static_cast<std::size_t>(n)], cfg, rng);
    detail::normalize_columns(a[static_cast<std::size_t>(n)]);
  }
  model.lambda = Vector::Ones(r);

  // Khatri-Rao partner order matching unfold(): mode 1 -> (A3, A2), mode 2 -> (A3, A1), mode 3 -> (A2, A1).
  constexpr std::array<std::array<int, 2>, 3> partners{{{2, 1}, {2, 0}, {1, 0}}};

  double prev = 0.0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (std::size_t n = 0; n < 3; ++n) {
      const Matrix& p = a[static_cast<std::size_t>(partners[n][0])];
      const Matrix& q = a[static_cast<std::size_t>(partners[n][1])];
      const Matrix mttkrp = unfolded[n] * khatri_rao(p, q);
      const Matrix gram = (p.transpose() * p).cwiseProduct(q.transpose() * q);
      bool deficient = false;
      a[n] = detail::solve_gram(mttkrp, gram, &deficient);
      if (deficient)
        detail::warn_once(model.warnings, "rank-deficient normal equations; pseudo-inverse used");
      if (cons.modes[n].nonneg) detail::clamp_nonneg(a[n]);
      model.lambda = detail::normalize_columns(a[n]);
    }
    const double ev = explained_variance(x, model.reconstruct());
    model.fit_trace.push_back(ev);
    model.iters = it;
    if (it > 1 && std::abs(ev - prev) < cfg.tol) {
      model.converged = true;
      break;
    }
    prev = ev;
  }
  model.fit = model.fit_trace.back();

  // Order components by decreasing weight; stable so equal weights keep their index order.
  std::vector<Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return model.lambda(i) > model.lambda(j); });
  Vector lambda(r);
  std::array<Matrix, 3> sorted;
  for (std::size_t n = 0; n < 3; ++n) sorted[n].resize(a[n].rows(), r);
  for (Index c = 0; c < r; ++c) {
    const Index src = order[static_cast<std::size_t>(c)];
    lambda(c) = model.lambda(src);
    for (std::size_t n = 0; n < 3; ++n) sorted[n].col(c) = a[n].col(src);
  }
  model.lambda = std::move(lambda);
  model.factors = std::move(sorted);
  return model;
}

}  // namespace

ParafacModel parafac_als(const Tensor3& x, Index r, const ConstraintSpec& cons, const FitConfig& cfg) {
  cfg.validate();
  if (r < 1) throw ArgumentError("parafac_als: rank must be >= 1");
  if (x.squared_norm() == 0.0) throw DegenerateInputError("parafac_als: data tensor is all zeros");
  if (cons.core) throw ArgumentError("parafac_als: a core constraint only applies to Tucker models");

  const std::array<Matrix, 3> unfolded{unfold(x, 1), unfold(x, 2), unfold(x, 3)};
  const int restarts = cfg.init == InitMethod::hosvd ? 1 : cfg.restarts_or(5);
  ParafacModel best;
  for (int s = 0; s < restarts; ++s) {
    ParafacModel m = parafac_single(x, unfolded, r, cons, cfg, detail::derive_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    if (s == 0 || m.fit > best.fit) best = std::move(m);
  }
  for (int n = 1; n <= 3; ++n)
    if (r > x.dim(n))
      detail::warn_once(best.warnings, "rank " + std::to_string(r) + " exceeds the size of mode " + std::to_string(n));
  return best;
}

}  // namespace synten
