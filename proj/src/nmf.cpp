#include "linalg.hpp"
#include "synten/errors.hpp"
#include "synten/factorization.hpp"

#include <cmath>
#include <string>

namespace synten {

namespace {

constexpr double kDenominatorFloor = 1e-12;

NmfModel nmf_single(const Matrix& x, Index r, const FitConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix w = detail::random_uniform(x.rows(), r, rng);
  Matrix h = detail::random_uniform(x.cols(), r, rng);
  // Match the initial reconstruction's mean level to the data.
  const double model_mean = (w * h.transpose()).mean();
  if (model_mean > 0.0) {
    const double s = std::sqrt(x.mean() / model_mean);
    w *= s;
    h *= s;
  }

  NmfModel model;
  double prev = 0.0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    if (cfg.nmf_algorithm == NmfAlgorithm::multiplicative) {
      const Matrix h_num = x.transpose() * w;
      const Matrix h_den = (h * (w.transpose() * w)).cwiseMax(kDenominatorFloor);
      h = h.cwiseProduct(h_num.cwiseQuotient(h_den));
      const Matrix w_num = x * h;
      const Matrix w_den = (w * (h.transpose() * h)).cwiseMax(kDenominatorFloor);
      w = w.cwiseProduct(w_num.cwiseQuotient(w_den));
    } else {
      h = x.transpose() * w * detail::pinv(w.transpose() * w);
      detail::clamp_nonneg(h);
      w = x * h * detail::pinv(h.transpose() * h);
      detail::clamp_nonneg(w);
    }
    const double vaf = explained_variance(x, w * h.transpose());
    model.fit_trace.push_back(vaf);
    model.iters = it;
    if (it > 1 && std::abs(vaf - prev) < cfg.tol) {
      model.converged = true;
      break;
    }
    prev = vaf;
  }

  const Vector norms = detail::normalize_columns(h);
  for (Index c = 0; c < r; ++c) w.col(c) *= norms(c);
  model.temporal = std::move(w);
  model.spatial = std::move(h);
  model.vaf = model.fit_trace.back();
  return model;
}

}  // namespace

NmfModel nmf(const Matrix& x, Index r, const FitConfig& cfg) {
  cfg.validate();
  if (x.size() == 0) throw ArgumentError("nmf: empty input matrix");
  if (!x.allFinite()) throw ArgumentError("nmf: input contains non-finite values");
  if ((x.array() < 0.0).any()) throw ArgumentError("nmf: input has negative entries");
  if (r < 1 || r > std::min(x.rows(), x.cols()))
    throw ArgumentError("nmf: rank " + std::to_string(r) + " outside [1, " +
                        std::to_string(std::min(x.rows(), x.cols())) + "]");
  if (x.squaredNorm() == 0.0) throw DegenerateInputError("nmf: input matrix is all zeros");

  const int restarts = cfg.restarts_or(3);
  NmfModel best;
  for (int s = 0; s < restarts; ++s) {
    NmfModel m = nmf_single(x, r, cfg, detail::derive_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    if (s == 0 || m.vaf > best.vaf) best = std::move(m);
  }
  return best;
}

}  // namespace synten
