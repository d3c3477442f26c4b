#include "synten/pipeline.hpp"

#include "linalg.hpp"
#include "synten/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>

namespace synten {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string task_label(int task) { return "task" + std::to_string(task); }

/// Epoch indices ordered by (task, repetition).
std::vector<std::size_t> sorted_order(const RecordingSet& rs) {
  std::vector<std::size_t> order(rs.epochs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = rs.epochs[a];
    const auto& eb = rs.epochs[b];
    return std::tie(ea.task_id, ea.repetition_id) < std::tie(eb.task_id, eb.repetition_id);
  });
  return order;
}

/// Repetitions per task; throws unless every task has the same count.
Index equal_reps_per_task(const RecordingSet& rs) {
  std::map<int, Index> counts;
  for (const auto& e : rs.epochs) ++counts[e.task_id];
  const Index reps = counts.begin()->second;
  for (const auto& [task, n] : counts)
    if (n != reps)
      throw ArgumentError("task " + std::to_string(task) + " has " + std::to_string(n) +
                          " repetitions, expected " + std::to_string(reps));
  return reps;
}

void check_dof_tasks(const RecordingSet& rs, int n_dofs) {
  if (n_dofs != 1 && n_dofs != 2) throw ArgumentError("n_dofs must be 1 or 2, got " + std::to_string(n_dofs));
  const auto tasks = rs.task_ids();
  if (static_cast<int>(tasks.size()) != 2 * n_dofs)
    throw ArgumentError(std::to_string(n_dofs) + " DoF(s) need " + std::to_string(2 * n_dofs) +
                        " tasks, recording set has " + std::to_string(tasks.size()));
}

SynergyReport constd_report(const TuckerModel& model, const std::vector<int>& tasks,
                            const std::vector<EpochLabel>& labels) {
  SynergyReport rep;
  rep.method = "constd";
  rep.fit_metric = "explained_variance";
  rep.fit = model.fit;
  rep.iterations = model.iters;
  rep.converged = model.converged;
  const Matrix& spatial = model.factors[1];
  for (Index c = 0; c < spatial.cols(); ++c) {
    LabeledSynergy s;
    if (c + 1 == spatial.cols()) {
      s.label = "shared";
    } else {
      s.label = "task-specific";
      s.task_id = tasks[static_cast<std::size_t>(c)];
    }
    s.weights = spatial.col(c);
    rep.synergies.push_back(std::move(s));
  }
  rep.temporal = model.factors[0];
  rep.repetition = model.factors[2];
  rep.repetition_labels = labels;
  rep.warnings = model.warnings;
  return rep;
}

Tensor3 permute_slices(const Tensor3& x, const std::vector<Index>& perm) {
  if (static_cast<Index>(perm.size()) != x.dim(3)) throw ArgumentError("permutation length does not match repetitions");
  std::vector<bool> seen(perm.size(), false);
  for (Index p : perm) {
    if (p < 0 || p >= x.dim(3) || seen[static_cast<std::size_t>(p)]) throw ArgumentError("invalid permutation");
    seen[static_cast<std::size_t>(p)] = true;
  }
  Tensor3 out(x.dims());
  for (Index k = 0; k < x.dim(3); ++k) out.set_slice(k, x.slice(perm[static_cast<std::size_t>(k)]));
  return out;
}

}  // namespace

void RecordingSet::validate() const {
  if (epochs.empty()) throw ArgumentError("recording set has no epochs");
  if (channel_count < 1) throw ArgumentError("recording set has no channels");
  std::set<std::pair<int, int>> ids;
  for (const auto& e : epochs) {
    const std::string where = "epoch task " + std::to_string(e.task_id) + " rep " + std::to_string(e.repetition_id);
    if (e.samples.cols() != channel_count)
      throw ArgumentError(where + " has " + std::to_string(e.samples.cols()) + " channels, expected " +
                          std::to_string(channel_count));
    if (e.samples.rows() < 1) throw ArgumentError(where + " has no samples");
    if (!e.samples.allFinite()) throw ArgumentError(where + " contains non-finite samples");
    if ((e.samples.array() < 0.0).any()) throw ArgumentError(where + " contains negative samples");
    if (!ids.emplace(e.task_id, e.repetition_id).second) throw ArgumentError(where + " is duplicated");
  }
}

std::vector<int> RecordingSet::task_ids() const {
  std::set<int> ids;
  for (const auto& e : epochs) ids.insert(e.task_id);
  return {ids.begin(), ids.end()};
}

RecordingSet RecordingSet::select_tasks(const std::vector<int>& tasks) const {
  RecordingSet out;
  out.sample_rate = sample_rate;
  out.channel_count = channel_count;
  for (const auto& e : epochs)
    if (std::find(tasks.begin(), tasks.end(), e.task_id) != tasks.end()) out.epochs.push_back(e);
  return out;
}

Index SynergyReport::shared_index() const {
  for (std::size_t i = 0; i < synergies.size(); ++i)
    if (synergies[i].label == "shared") return static_cast<Index>(i);
  return -1;
}

Matrix SynergyReport::synergy_matrix() const {
  if (synergies.empty()) return {};
  Matrix m(synergies.front().weights.size(), static_cast<Index>(synergies.size()));
  for (std::size_t i = 0; i < synergies.size(); ++i) m.col(static_cast<Index>(i)) = synergies[i].weights;
  return m;
}

Matrix resample_epoch(const Matrix& samples, Index length) {
  if (length < 1) throw ArgumentError("resample length must be >= 1");
  const Index n = samples.rows();
  if (n == length) return samples;
  if (n < 1) throw ArgumentError("cannot resample an empty epoch");
  Matrix out(length, samples.cols());
  if (n == 1) {
    out.rowwise() = samples.row(0);
    return out;
  }
  const double step = length > 1 ? static_cast<double>(n - 1) / static_cast<double>(length - 1) : 0.0;
  for (Index i = 0; i < length; ++i) {
    const double pos = static_cast<double>(i) * step;
    const Index lo = std::min<Index>(static_cast<Index>(std::floor(pos)), n - 1);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= n || frac == 0.0)
      out.row(i) = samples.row(lo);
    else
      out.row(i) = (1.0 - frac) * samples.row(lo) + frac * samples.row(lo + 1);
  }
  return out;
}

TensorizedSet tensorize(const RecordingSet& rs, Index epoch_len) {
  if (epoch_len < 2) throw ArgumentError("epoch length must be >= 2");
  rs.validate();
  const auto order = sorted_order(rs);
  TensorizedSet out{Tensor3({epoch_len, rs.channel_count, static_cast<Index>(order.size())}), {}};
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Epoch& e = rs.epochs[order[k]];
    out.tensor.set_slice(static_cast<Index>(k), resample_epoch(e.samples, epoch_len));
    out.labels.push_back({e.task_id, e.repetition_id});
  }
  return out;
}

Index default_epoch_len(const RecordingSet& rs) {
  Index len = 0;
  for (const auto& e : rs.epochs) len = std::max(len, e.samples.rows());
  return std::max<Index>(len, 2);
}

SynergyReport extract_constd(const RecordingSet& rs, int n_dofs, const FitConfig& cfg, std::optional<Index> epoch_len) {
  rs.validate();
  check_dof_tasks(rs, n_dofs);
  const Index reps = equal_reps_per_task(rs);
  const auto start = Clock::now();
  const TensorizedSet ts = tensorize(rs, epoch_len.value_or(default_epoch_len(rs)));
  const TuckerModel model = constrained_tucker(ts.tensor, n_dofs, reps, cfg);
  SynergyReport rep = constd_report(model, rs.task_ids(), ts.labels);
  rep.seed = cfg.seed;
  rep.runtime_seconds = seconds_since(start);
  return rep;
}

SynergyReport extract_nmf_benchmark(const RecordingSet& rs, const FitConfig& cfg, Index synergies_per_task,
                                    double shared_threshold) {
  rs.validate();
  const auto tasks = rs.task_ids();
  if (tasks.size() != 2) throw ArgumentError("NMF benchmark compares exactly two tasks, got " + std::to_string(tasks.size()));
  if (synergies_per_task < 1) throw ArgumentError("synergies_per_task must be >= 1");
  const auto start = Clock::now();
  const auto order = sorted_order(rs);

  SynergyReport rep;
  rep.method = "nmf";
  rep.fit_metric = "vaf";
  rep.seed = cfg.seed;
  std::vector<Matrix> means;
  for (int task : tasks) {
    std::vector<Matrix> per_rep;
    for (std::size_t idx : order) {
      const Epoch& e = rs.epochs[idx];
      if (e.task_id != task) continue;
      const NmfModel m = nmf(e.samples, synergies_per_task, cfg);
      per_rep.push_back(m.spatial);
      rep.per_repetition_vaf.push_back(m.vaf);
      rep.repetition_labels.push_back({e.task_id, e.repetition_id});
      rep.iterations = std::max(rep.iterations, m.iters);
      rep.converged = rep.converged && m.converged;
    }
    if (per_rep.size() < 2) throw ArgumentError("task " + std::to_string(task) + " needs at least two repetitions");
    const Index ref = reference_repetition(per_rep);
    const Matrix& reference = per_rep[static_cast<std::size_t>(ref)];
    Matrix sum = Matrix::Zero(reference.rows(), reference.cols());
    for (const auto& s : per_rep) {
      const MatchResult match = match_synergies(reference, s);
      for (Index c = 0; c < reference.cols(); ++c) sum.col(c) += s.col(match.b_for(c));
    }
    Matrix mean = sum / static_cast<double>(per_rep.size());
    detail::normalize_columns(mean);
    means.push_back(std::move(mean));
    rep.metrics[task_label(task) + ".reference_repetition"] = static_cast<double>(ref + 1);
  }
  double vaf_sum = 0.0;
  for (double v : rep.per_repetition_vaf) vaf_sum += v;
  rep.fit = vaf_sum / static_cast<double>(rep.per_repetition_vaf.size());
  rep.metrics["min_vaf"] = *std::min_element(rep.per_repetition_vaf.begin(), rep.per_repetition_vaf.end());

  std::vector<std::string> labels_a, labels_b;
  for (Index c = 0; c < synergies_per_task; ++c) {
    labels_a.push_back(task_label(tasks[0]) + ".syn" + std::to_string(c + 1));
    labels_b.push_back(task_label(tasks[1]) + ".syn" + std::to_string(c + 1));
  }

  if (synergies_per_task == 2) {
    const SharedSynergyResult shared = identify_shared_nmf(means[0], means[1], shared_threshold);
    rep.synergies.push_back({"task-specific", tasks[0], means[0].col(shared.specific_a)});
    rep.synergies.push_back({"task-specific", tasks[1], means[1].col(shared.specific_b)});
    rep.synergies.push_back({"shared", std::nullopt, shared.shared});
    for (Index c = 0; c < 2; ++c)
      rep.task_means.push_back({c == shared.shared_a ? "shared" : "task-specific", tasks[0], means[0].col(c)});
    for (Index c = 0; c < 2; ++c)
      rep.task_means.push_back({c == shared.shared_b ? "shared" : "task-specific", tasks[1], means[1].col(c)});
    rep.metrics["shared_r"] = shared.r;
    rep.metrics["shared_above_threshold"] = shared.above_threshold ? 1.0 : 0.0;
    rep.metrics["shared_threshold"] = shared_threshold;
    if (!shared.above_threshold)
      rep.warnings.push_back("best cross-task correlation is below the shared-synergy threshold");
  } else {
    for (std::size_t t = 0; t < 2; ++t)
      for (Index c = 0; c < synergies_per_task; ++c) {
        rep.task_means.push_back({"component", tasks[t], means[t].col(c)});
        rep.synergies.push_back({"component", tasks[t], means[t].col(c)});
      }
  }
  rep.correlations.push_back({"nmf_cross_task", correlate_sets(means[0], means[1], labels_a, labels_b)});
  rep.runtime_seconds = seconds_since(start);
  return rep;
}

SynergyReport extract_parafac(const RecordingSet& rs, Index rank, const FitConfig& cfg, std::optional<Index> epoch_len) {
  const auto start = Clock::now();
  const TensorizedSet ts = tensorize(rs, epoch_len.value_or(default_epoch_len(rs)));
  ConstraintSpec cons;
  for (auto& m : cons.modes) m.nonneg = true;
  ParafacModel model = parafac_als(ts.tensor, rank, cons, cfg);
  std::vector<std::string> warnings = model.warnings;
  model.corcondia = corcondia(ts.tensor, model, &warnings);

  SynergyReport rep;
  rep.method = "parafac";
  rep.seed = cfg.seed;
  rep.fit_metric = "explained_variance";
  rep.fit = model.fit;
  rep.iterations = model.iters;
  rep.converged = model.converged;
  for (Index c = 0; c < rank; ++c) rep.synergies.push_back({"component", std::nullopt, model.factors[1].col(c)});
  rep.temporal = model.factors[0] * model.lambda.asDiagonal();
  rep.repetition = model.factors[2];
  rep.repetition_labels = ts.labels;
  rep.metrics["corcondia"] = *model.corcondia;
  rep.warnings = std::move(warnings);
  rep.runtime_seconds = seconds_since(start);
  return rep;
}

SynergyReport extract_tucker(const RecordingSet& rs, const Dims3& ranks, const FitConfig& cfg,
                             std::optional<Index> epoch_len) {
  const auto start = Clock::now();
  const TensorizedSet ts = tensorize(rs, epoch_len.value_or(default_epoch_len(rs)));
  const TuckerModel model = tucker_als(ts.tensor, ranks, ConstraintSpec::nonnegative(), cfg);

  SynergyReport rep;
  rep.method = "tucker";
  rep.seed = cfg.seed;
  rep.fit_metric = "explained_variance";
  rep.fit = model.fit;
  rep.iterations = model.iters;
  rep.converged = model.converged;
  Matrix spatial = model.factors[1];
  detail::normalize_columns(spatial);
  for (Index c = 0; c < spatial.cols(); ++c) rep.synergies.push_back({"component", std::nullopt, spatial.col(c)});
  rep.temporal = model.factors[0];
  rep.repetition = model.factors[2];
  rep.repetition_labels = ts.labels;
  rep.warnings = model.warnings;
  rep.runtime_seconds = seconds_since(start);
  return rep;
}

MethodComparison compare_methods(const RecordingSet& rs, int n_dofs, const FitConfig& cfg,
                                 std::optional<Index> epoch_len) {
  MethodComparison out;
  out.constd = extract_constd(rs, n_dofs, cfg, epoch_len);
  const auto tasks = rs.task_ids();
  for (int d = 0; d < n_dofs; ++d) {
    const auto sub = rs.select_tasks({tasks[static_cast<std::size_t>(2 * d)], tasks[static_cast<std::size_t>(2 * d + 1)]});
    out.nmf.push_back(extract_nmf_benchmark(sub, cfg));
  }

  const Matrix constd = out.constd.synergy_matrix();
  std::vector<std::string> constd_labels;
  for (std::size_t i = 0; i < out.constd.synergies.size(); ++i) {
    const auto& s = out.constd.synergies[i];
    constd_labels.push_back(s.label == "shared" ? "constd.shared" : "constd." + task_label(*s.task_id));
  }

  std::vector<std::string> nmf_labels;
  std::vector<int> nmf_task;
  std::vector<Vector> nmf_vectors;
  for (const auto& r : out.nmf) {
    int last_task = -1, k = 0;
    for (const auto& s : r.task_means) {
      k = (*s.task_id == last_task) ? k + 1 : 1;
      last_task = *s.task_id;
      nmf_labels.push_back(task_label(*s.task_id) + ".syn" + std::to_string(k));
      nmf_task.push_back(*s.task_id);
      nmf_vectors.push_back(s.weights);
    }
  }
  Matrix nmf_mat(constd.rows(), static_cast<Index>(nmf_vectors.size()));
  for (std::size_t i = 0; i < nmf_vectors.size(); ++i) nmf_mat.col(static_cast<Index>(i)) = nmf_vectors[i];
  out.full = correlate_sets(constd, nmf_mat, constd_labels, nmf_labels);

  std::vector<std::string> task_labels;
  for (int t : tasks) task_labels.push_back(task_label(t));
  out.table.row_labels = task_labels;
  out.table.col_labels = constd_labels;
  out.table.values = Matrix::Constant(static_cast<Index>(tasks.size()), constd.cols(), -1.0);
  for (std::size_t ti = 0; ti < tasks.size(); ++ti)
    for (Index c = 0; c < constd.cols(); ++c)
      for (std::size_t j = 0; j < nmf_task.size(); ++j)
        if (nmf_task[j] == tasks[ti])
          out.table.values(static_cast<Index>(ti), c) =
              std::max(out.table.values(static_cast<Index>(ti), c), out.full.values(c, static_cast<Index>(j)));

  out.constd.correlations.push_back({"constd_vs_nmf_by_task", out.table});
  out.constd.correlations.push_back({"constd_vs_nmf_means", out.full});
  return out;
}

std::vector<Index> draw_permutation(Index n, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("permutation size must be >= 1");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  if (n == 1) return perm;
  std::mt19937_64 rng(seed);
  const auto is_identity = [&] {
    for (Index i = 0; i < n; ++i)
      if (perm[static_cast<std::size_t>(i)] != i) return false;
    return true;
  };
  do {
    std::iota(perm.begin(), perm.end(), Index{0});
    // Fisher-Yates with an explicit modulus so the draw is portable across standard libraries.
    for (Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
  } while (is_identity());
  return perm;
}

ShuffleResult shuffle_validation(const RecordingSet& rs, int n_dofs, int n_shuffles, const FitConfig& cfg,
                                 std::optional<Index> epoch_len) {
  if (n_shuffles < 1) throw ArgumentError("n_shuffles must be >= 1");
  std::vector<std::vector<Index>> perms;
  const auto n = static_cast<Index>(rs.epochs.size());
  for (int s = 0; s < n_shuffles; ++s)
    perms.push_back(draw_permutation(n, detail::derive_seed(cfg.seed, 0x5348554646ull + static_cast<std::uint64_t>(s))));
  return shuffle_validation_with(rs, n_dofs, perms, cfg, epoch_len);
}

ShuffleResult shuffle_validation_with(const RecordingSet& rs, int n_dofs,
                                      const std::vector<std::vector<Index>>& permutations, const FitConfig& cfg,
                                      std::optional<Index> epoch_len) {
  if (permutations.empty()) throw ArgumentError("need at least one permutation");
  rs.validate();
  check_dof_tasks(rs, n_dofs);
  const Index reps = equal_reps_per_task(rs);
  const TensorizedSet ts = tensorize(rs, epoch_len.value_or(default_epoch_len(rs)));

  ShuffleResult out;
  out.intact = extract_constd(rs, n_dofs, cfg, epoch_len);
  const Matrix intact = out.intact.synergy_matrix();
  const Index shared = intact.cols() - 1;
  for (const auto& perm : permutations) {
    const TuckerModel m = constrained_tucker(permute_slices(ts.tensor, perm), n_dofs, reps, cfg);
    const Matrix& spatial = m.factors[1];
    out.shared_r.push_back(pearson_or_zero(intact.col(shared), spatial.col(shared)));
    double ts_sum = 0.0;
    for (Index c = 0; c < shared; ++c) ts_sum += pearson_or_zero(intact.col(c), spatial.col(c));
    out.task_specific_r.push_back(ts_sum / static_cast<double>(shared));
    out.permutations.push_back(perm);
  }
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  out.mean_shared_r = mean(out.shared_r);
  out.mean_task_specific_r = mean(out.task_specific_r);
  return out;
}

}  // namespace synten
