#include "linalg.hpp"
#include "synten/diagnostics.hpp"
#include "synten/errors.hpp"
#include "synten/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace synten {

void SynthSpec::validate() const {
  if (n_channels < 2) throw ArgumentError("synth: need at least 2 channels");
  if (n_samples < 2) throw ArgumentError("synth: need at least 2 samples per epoch");
  if (n_tasks < 1) throw ArgumentError("synth: need at least one task");
  if (reps_per_task < 1) throw ArgumentError("synth: need at least one repetition per task");
  if (!(sample_rate > 0.0)) throw ArgumentError("synth: sample rate must be positive");
  if (shared_gain < 0.0) throw ArgumentError("synth: shared gain must be >= 0");
  if (gain_jitter < 0.0 || gain_drift < 0.0 || shared_drift < 0.0 ||
      gain_jitter + std::max(gain_drift, shared_drift) >= 1.0)
    throw ArgumentError("synth: gain drifts and jitter must be >= 0 with jitter + drift below 1");
  if (exclusive_channels < 0 || exclusive_channels * (n_tasks + 1) > n_channels)
    throw ArgumentError("synth: not enough channels for the requested exclusive channels");
  if (profile_jitter < 0.0 || profile_jitter > 0.4) throw ArgumentError("synth: profile jitter must be in [0, 0.4]");
  if (noise_sigma < 0.0) throw ArgumentError("synth: noise sigma must be >= 0");
  if (length_jitter < 0 || length_jitter >= n_samples - 1) throw ArgumentError("synth: length jitter out of range");
  if (synergies.size() != 0) {
    if (synergies.rows() != n_channels || synergies.cols() != n_tasks + 1)
      throw ArgumentError("synth: planted synergies must be channels x (tasks + 1)");
    if ((synergies.array() < 0.0).any() || !synergies.allFinite())
      throw ArgumentError("synth: planted synergies must be finite and non-negative");
    for (Index c = 0; c < synergies.cols(); ++c)
      if (synergies.col(c).norm() == 0.0) throw ArgumentError("synth: planted synergy has zero norm");
  }
}

namespace {

double max_abs_correlation(const Matrix& s) {
  double worst = 0.0;
  for (Index i = 0; i < s.cols(); ++i)
    for (Index j = i + 1; j < s.cols(); ++j) worst = std::max(worst, std::abs(pearson(s.col(i), s.col(j))));
  return worst;
}

/// Sparse-ish non-negative patterns with low mutual correlation; the best of a
/// bounded number of draws is kept. Synergy c owns channels
/// [c * exclusive, (c + 1) * exclusive).
Matrix draw_synergies(Index channels, Index count, Index exclusive, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix best;
  double best_score = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < 200; ++attempt) {
    Matrix s(channels, count);
    for (Index c = 0; c < count; ++c)
      for (Index r = 0; r < channels; ++r) {
        const double u = unif(rng);
        s(r, c) = u < 0.4 ? 0.0 : u * u;
      }
    for (Index c = 0; c < count; ++c) {
      s.middleRows(c * exclusive, exclusive).setZero();
      s.block(c * exclusive, c, exclusive, 1).setOnes();
    }
    const double score = max_abs_correlation(s);
    if (score < best_score) {
      best_score = score;
      best = s;
    }
    if (best_score < 0.3) break;
  }
  detail::normalize_columns(best);
  return best;
}

}  // namespace

SynthData generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Index n_syn = spec.n_tasks + 1;
  const Index shared = n_syn - 1;
  SynthData out;
  if (spec.synergies.size() != 0) {
    out.truth.synergies = spec.synergies;
    detail::normalize_columns(out.truth.synergies);
  } else {
    out.truth.synergies = draw_synergies(spec.n_channels, n_syn, spec.exclusive_channels, rng);
  }

  // Bell-shaped activation per synergy. The shared peak stays near mid-epoch;
  // task peaks sit 0.6-1.0 profile_jitter away on a random side, so every
  // task synergy is temporally distinguishable from the shared one.
  std::vector<double> centers(static_cast<std::size_t>(n_syn));
  for (Index s = 0; s < shared; ++s) {
    const double side = sym(rng) < 0.0 ? -1.0 : 1.0;
    centers[static_cast<std::size_t>(s)] = 0.5 + side * spec.profile_jitter * (0.8 + 0.2 * sym(rng));
  }
  centers[static_cast<std::size_t>(shared)] = 0.5 + 0.2 * spec.profile_jitter * sym(rng);
  constexpr double kHalfWidth = 0.35;  // raised-cosine bump support, as a fraction of the epoch

  out.recordings.sample_rate = spec.sample_rate;
  out.recordings.channel_count = spec.n_channels;
  constexpr double kPi = 3.141592653589793;
  constexpr double kTwoPi = 2.0 * kPi;
  for (int t = 0; t < spec.n_tasks; ++t) {
    // Slow drift: a partial sine cycle over the repetitions with random phase
    // and frequency. Task and shared drifts are redrawn until they are weakly
    // correlated, otherwise the two synergies scale together within the task.
    std::array<Vector, 2> drift;
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (std::size_t which = 0; which < drift.size(); ++which) {
        Vector& d = drift[which];
        const double amplitude = which == 0 ? spec.gain_drift : spec.shared_drift;
        d.resize(spec.reps_per_task);
        const double cycles = 0.3 + 0.7 * (0.5 + 0.5 * sym(rng));
        const double phase = kTwoPi * (0.5 + 0.5 * sym(rng));
        for (int rep = 0; rep < spec.reps_per_task; ++rep)
          d(rep) = amplitude * std::sin(kTwoPi * cycles * rep / static_cast<double>(spec.reps_per_task) + phase);
      }
      if (spec.reps_per_task < 3 || spec.gain_drift == 0.0 || spec.shared_drift == 0.0 ||
          std::abs(pearson(drift[0], drift[1])) < 0.3) break;
    }
    for (int rep = 0; rep < spec.reps_per_task; ++rep) {
      Index len = spec.n_samples;
      if (spec.length_jitter > 0) {
        len += static_cast<Index>(std::lround(sym(rng) * static_cast<double>(spec.length_jitter)));
      }
      Matrix act = Matrix::Zero(len, n_syn);
      for (Index s : {static_cast<Index>(t), shared}) {
        const double trend = drift[s == shared ? 1 : 0](rep);
        const double gain = (1.0 + trend + spec.gain_jitter * sym(rng)) * (s == shared ? spec.shared_gain : 1.0);
        const double c = centers[static_cast<std::size_t>(s)];
        for (Index i = 0; i < len; ++i) {
          const double u = (static_cast<double>(i) / static_cast<double>(len - 1) - c) / kHalfWidth;
          act(i, s) = std::abs(u) < 1.0 ? gain * 0.5 * (1.0 + std::cos(kPi * u)) : 0.0;
        }
      }
      const Matrix signal = act * out.truth.synergies.transpose();
      double sigma = spec.noise_sigma;
      if (spec.snr_db) sigma = std::sqrt(signal.squaredNorm() / static_cast<double>(signal.size()) /
                                         std::pow(10.0, *spec.snr_db / 10.0));
      Matrix noise = Matrix::Zero(len, spec.n_channels);
      if (sigma > 0.0)
        for (Index c = 0; c < noise.cols(); ++c)
          for (Index i = 0; i < len; ++i) noise(i, c) = std::abs(sigma * gauss(rng));

      Epoch e;
      e.task_id = t + 1;
      e.repetition_id = rep + 1;
      e.samples = (signal + noise).cwiseMax(0.0);
      out.recordings.epochs.push_back(std::move(e));
      out.truth.activations.push_back(std::move(act));
      const double noise_power = noise.squaredNorm();
      out.truth.epoch_snr_db.push_back(noise_power > 0.0
                                           ? 10.0 * std::log10(signal.squaredNorm() / noise_power)
                                           : std::numeric_limits<double>::infinity());
    }
  }
  return out;
}

}  // namespace synten
