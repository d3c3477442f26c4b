#include "linalg.hpp"
#include "synten/errors.hpp"
#include "synten/factorization.hpp"

#include <cmath>
#include <string>

namespace synten {

void FitConfig::validate() const {
  if (max_iters < 1) throw ArgumentError("max_iters must be >= 1");
  if (!(tol > 0.0)) throw ArgumentError("tol must be > 0");
  if (restarts && *restarts < 1) throw ArgumentError("restarts must be >= 1");
  if (averaging_window < 1 || averaging_window % 2 == 0)
    throw ArgumentError("averaging window must be odd and >= 1");
}

ConstraintSpec ConstraintSpec::nonnegative() {
  ConstraintSpec c;
  for (auto& m : c.modes) m.nonneg = true;
  c.core_nonneg = true;
  return c;
}

Matrix controlled_averaging(const Matrix& m, int k) {
  if (k < 1 || k % 2 == 0) throw ArgumentError("controlled_averaging: window must be odd and >= 1");
  if (k > m.rows()) throw ArgumentError("controlled_averaging: window exceeds the number of rows");
  const Index half = k / 2;
  Matrix out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    const Index lo = std::max<Index>(0, i - half);
    const Index hi = std::min<Index>(m.rows() - 1, i + half);
    out.row(i) = m.middleRows(lo, hi - lo + 1).colwise().mean();
  }
  return out;
}

namespace {

/// Least-squares core with every factor fixed. Masked entries keep their value.
Tensor3 solve_core(const Tensor3& x, const CoreTensor& core, const std::array<Matrix, 3>& b, bool& deficient) {
  if (!core.any_fixed()) {
    bool d1 = false, d2 = false, d3 = false;
    Tensor3 g = mode_n_product(x, detail::pinv(b[0], &d1), 1);
    g = mode_n_product(g, detail::pinv(b[1], &d2), 2);
    g = mode_n_product(g, detail::pinv(b[2], &d3), 3);
    deficient = d1 || d2 || d3;
    return g;
  }
  // Restricted normal equations on the free entries:
  // (B3'B3 ⊗ B2'B2 ⊗ B1'B1) vec(G) = vec(X ×1 B1' ×2 B2' ×3 B3').
  Tensor3 proj = mode_n_product(x, b[0].transpose(), 1);
  proj = mode_n_product(proj, b[1].transpose(), 2);
  proj = mode_n_product(proj, b[2].transpose(), 3);
  const Matrix gram = kronecker(b[2].transpose() * b[2], kronecker(b[1].transpose() * b[1], b[0].transpose() * b[0]));

  std::vector<Index> free_idx, fixed_idx;
  for (std::size_t n = 0; n < core.mask.size(); ++n) (core.mask[n] ? fixed_idx : free_idx).push_back(static_cast<Index>(n));
  Tensor3 g = core.values;
  if (free_idx.empty()) return g;

  const auto nf = static_cast<Index>(free_idx.size());
  Matrix kff(nf, nf);
  Vector rhs(nf);
  for (Index a = 0; a < nf; ++a) {
    const Index ia = free_idx[static_cast<std::size_t>(a)];
    rhs(a) = proj.data()[static_cast<std::size_t>(ia)];
    for (Index fx : fixed_idx) rhs(a) -= gram(ia, fx) * g.data()[static_cast<std::size_t>(fx)];
    for (Index c = 0; c < nf; ++c) kff(a, c) = gram(ia, free_idx[static_cast<std::size_t>(c)]);
  }
  const Vector sol = detail::pinv(kff, &deficient) * rhs;
  for (Index a = 0; a < nf; ++a) g.data()[static_cast<std::size_t>(free_idx[static_cast<std::size_t>(a)])] = sol(a);
  return g;
}

/// True when every nonzero core entry sits on a (j, j) diagonal of modes 2 and 3,
/// so spatial column j and repetition column j share one scale.
bool pairs_spatial_with_repetition(const Tensor3& g) {
  if (g.dim(2) != g.dim(3)) return false;
  for (Index i = 0; i < g.dim(1); ++i)
    for (Index j = 0; j < g.dim(2); ++j)
      for (Index k = 0; k < g.dim(3); ++k)
        if (j != k && g(i, j, k) != 0.0) return false;
  return true;
}

Matrix initial_factor(const Tensor3& x, int mode, Index r, const ModeConstraint& mc, InitMethod init,
                      std::mt19937_64& rng) {
  const Index rows = x.dim(mode);
  if (mc.fixed_init) {
    if (mc.fixed_init->rows() != rows || mc.fixed_init->cols() != r)
      throw ArgumentError("fixed_init for mode " + std::to_string(mode) + " has the wrong shape");
    return *mc.fixed_init;
  }
  if (init == InitMethod::hosvd) {
    Eigen::JacobiSVD<Matrix> svd(unfold(x, mode), Eigen::ComputeThinU);
    Matrix f = svd.matrixU().leftCols(r);
    return mc.nonneg ? Matrix(f.cwiseAbs()) : f;
  }
  return detail::random_uniform(rows, r, rng);
}

TuckerModel tucker_single(const Tensor3& x, const Dims3& ranks, const ConstraintSpec& cons, const FitConfig& cfg,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TuckerModel model;
  auto& b = model.factors;
  for (int n = 0; n < 3; ++n) {
    const auto sn = static_cast<std::size_t>(n);
    b[sn] = initial_factor(x, n + 1, ranks[sn], cons.modes[sn], cfg.init, rng);
  }

  const bool core_fixed = cons.core && cons.core->all_fixed();
  const bool core_partly_fixed = cons.core && cons.core->any_fixed();
  const bool paired = core_fixed && pairs_spatial_with_repetition(cons.core->values);
  bool deficient = false;
  if (cons.core) {
    model.core = *cons.core;
  } else {
    model.core = CoreTensor(Tensor3(ranks));
  }
  if (!core_fixed) {
    model.core.values = solve_core(x, model.core, b, deficient);
    if (cons.core_nonneg) {
      for (auto& v : model.core.values.data()) v = std::max(v, 0.0);
    }
  }

  double prev = 0.0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (int n = 1; n <= 3; ++n) {
      const auto sn = static_cast<std::size_t>(n - 1);
      // Project the data and the core onto every other mode, then solve
      // B_n (G(n) W G(n)') = X(n) (⊗ B_m) G(n)'.
      Tensor3 proj = x;
      Tensor3 weighted = model.core.values;
      for (int m = 1; m <= 3; ++m) {
        if (m == n) continue;
        const Matrix& bm = b[static_cast<std::size_t>(m - 1)];
        proj = mode_n_product(proj, bm.transpose(), m);
        weighted = mode_n_product(weighted, bm.transpose() * bm, m);
      }
      const Matrix gn = unfold(model.core.values, n);
      const Matrix rhs = unfold(proj, n) * gn.transpose();
      const Matrix gram = unfold(weighted, n) * gn.transpose();
      bool d = false;
      b[sn] = detail::solve_gram(rhs, gram, &d);
      if (d) detail::warn_once(model.warnings, "rank-deficient normal equations; pseudo-inverse used");
      if (cons.modes[sn].nonneg) detail::clamp_nonneg(b[sn]);
      if (!core_partly_fixed) {
        const Vector norms = detail::normalize_columns(b[sn]);
        model.core.values = mode_n_product(model.core.values, Matrix(norms.asDiagonal()), n);
      }
    }
    if (!core_fixed) {
      bool d = false;
      model.core.values = solve_core(x, model.core, b, d);
      if (d) detail::warn_once(model.warnings, "rank-deficient core system; pseudo-inverse used");
      if (cons.core_nonneg) {
        for (auto& v : model.core.values.data()) v = std::max(v, 0.0);
      }
    }
    for (std::size_t n = 0; n < 3; ++n)
      if (cons.modes[n].controlled_averaging) b[n] = controlled_averaging(b[n], cfg.averaging_window);
    if (core_fixed) {
      // A fixed core cannot absorb scale, so move it into the repetition
      // factor: all of the temporal factor's, and, when columns pair up, each
      // spatial column's.
      const double t = b[0].norm();
      if (t > 0.0) {
        b[0] /= t;
        b[2] *= t;
      }
      if (paired) {
        const Vector norms = detail::normalize_columns(b[1]);
        for (Index c = 0; c < norms.size(); ++c) b[2].col(c) *= norms(c);
      }
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
  return model;
}

}  // namespace

TuckerModel tucker_als(const Tensor3& x, const Dims3& ranks, const ConstraintSpec& cons, const FitConfig& cfg) {
  cfg.validate();
  for (int n = 1; n <= 3; ++n) {
    const Index j = ranks[static_cast<std::size_t>(n - 1)];
    if (j < 1 || j > x.dim(n))
      throw ArgumentError("tucker_als: rank " + std::to_string(j) + " for mode " + std::to_string(n) +
                          " must be in [1, " + std::to_string(x.dim(n)) + "]");
  }
  if (cons.core && cons.core->dims() != ranks) throw ArgumentError("tucker_als: core shape does not match ranks");
  if (x.squared_norm() == 0.0) throw DegenerateInputError("tucker_als: data tensor is all zeros");
  for (std::size_t n = 0; n < 3; ++n)
    if (cons.modes[n].controlled_averaging && cfg.averaging_window > x.dims()[n])
      throw ArgumentError("tucker_als: averaging window exceeds mode size");

  const int restarts = cfg.init == InitMethod::hosvd ? 1 : cfg.restarts_or(5);
  TuckerModel best;
  for (int s = 0; s < restarts; ++s) {
    TuckerModel m = tucker_single(x, ranks, cons, cfg, detail::derive_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    if (s == 0 || m.fit > best.fit) best = std::move(m);
  }
  return best;
}

ConstdLayout build_constd_spec(int n_dofs, Index reps_per_task) {
  if (n_dofs != 1 && n_dofs != 2)
    throw ArgumentError("constrained Tucker supports 1 or 2 degrees of freedom, got " + std::to_string(n_dofs));
  if (reps_per_task < 1) throw ArgumentError("reps_per_task must be >= 1");

  const Index n_tasks = 2 * n_dofs;
  const Index n_spatial = n_tasks + 1;
  ConstdLayout out;
  out.ranks = {n_dofs, n_spatial, n_spatial};

  // Temporal component d links the task-specific synergies of DoF d and the shared synergy.
  Tensor3 core(out.ranks);
  const Index shared = n_spatial - 1;
  for (Index d = 0; d < n_dofs; ++d) {
    core(d, 2 * d, 2 * d) = 1.0;
    core(d, 2 * d + 1, 2 * d + 1) = 1.0;
    core(d, shared, shared) = 1.0;
  }
  out.constraints.core = CoreTensor(std::move(core), true);

  Matrix rep = Matrix::Zero(n_tasks * reps_per_task, n_spatial);
  for (Index t = 0; t < n_tasks; ++t) rep.block(t * reps_per_task, t, reps_per_task, 1).setOnes();
  rep.col(shared).setConstant(0.5);

  out.constraints.modes[0].nonneg = true;
  out.constraints.modes[1].nonneg = true;
  out.constraints.modes[2].fixed_init = std::move(rep);
  out.constraints.modes[2].nonneg = true;
  out.constraints.modes[2].controlled_averaging = true;
  return out;
}

TuckerModel constrained_tucker(const Tensor3& x, int n_dofs, Index reps_per_task, const FitConfig& cfg) {
  ConstdLayout layout = build_constd_spec(n_dofs, reps_per_task);
  const Index expected = 2 * n_dofs * reps_per_task;
  if (x.dim(3) != expected)
    throw ArgumentError("constrained_tucker: expected " + std::to_string(expected) + " repetitions (" +
                        std::to_string(2 * n_dofs) + " tasks x " + std::to_string(reps_per_task) + "), got " +
                        std::to_string(x.dim(3)));
  FitConfig c = cfg;
  if (!c.restarts) c.restarts = 1;
  c.init = InitMethod::random_nonneg;
  TuckerModel model = tucker_als(x, layout.ranks, layout.constraints, c);

  return model;
}

}  // namespace synten
