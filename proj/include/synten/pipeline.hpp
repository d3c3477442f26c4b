#pragma once

// End-to-end synergy workflows: tensorisation of labelled epochs, constrained
// Tucker extraction, the per-repetition NMF benchmark, method comparison,
// shuffle validation and a ground-truth synthetic EMG generator.

#include "synten/diagnostics.hpp"
#include "synten/factorization.hpp"
#include "synten/tensor.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace synten {

struct Epoch {
  int task_id = 0;
  int repetition_id = 0;
  Matrix samples;  // samples x channels, non-negative envelopes
};

struct RecordingSet {
  std::vector<Epoch> epochs;
  double sample_rate = 100.0;
  Index channel_count = 0;

  /// Throws ArgumentError on empty sets, channel drift, duplicate (task, rep)
  /// pairs, negative or non-finite samples.
  void validate() const;
  /// Sorted distinct task ids.
  std::vector<int> task_ids() const;
  /// Subset holding only the given tasks.
  RecordingSet select_tasks(const std::vector<int>& tasks) const;
};

struct EpochLabel {
  int task_id;
  int repetition_id;
  bool operator==(const EpochLabel&) const = default;
};

struct TensorizedSet {
  Tensor3 tensor;
  std::vector<EpochLabel> labels;  // one per mode-3 slice
};

/// Linear-interpolation resampling of every column to `length` rows. Exact
/// copy when the length already matches.
Matrix resample_epoch(const Matrix& samples, Index length);

/// Stacks epochs (resampled to `epoch_len`) along mode 3 in (task, repetition) order.
TensorizedSet tensorize(const RecordingSet& rs, Index epoch_len);

struct LabeledSynergy {
  std::string label;          // "shared", "task-specific" or "component"
  std::optional<int> task_id; // set for task-specific synergies
  Vector weights;             // unit norm
};

struct NamedCorrelation {
  std::string name;
  CorrelationMatrix matrix;
};

struct SynergyReport {
  std::string method;
  std::uint64_t seed = 0;
  std::string fit_metric;  // "explained_variance" or "vaf"
  double fit = 0.0;
  int iterations = 0;
  bool converged = true;
  std::vector<LabeledSynergy> synergies;
  std::vector<LabeledSynergy> task_means;  // NMF benchmark: per-task mean synergies
  Matrix temporal;                         // columns are temporal components
  Matrix repetition;                       // tensor methods only
  std::vector<EpochLabel> repetition_labels;
  std::vector<double> per_repetition_vaf;
  std::vector<NamedCorrelation> correlations;
  std::map<std::string, double> metrics;   // extra scalars, e.g. corcondia
  std::vector<std::string> warnings;
  double runtime_seconds = 0.0;

  /// Index of the first synergy labelled shared, or -1.
  Index shared_index() const;
  Matrix synergy_matrix() const;
};

/// Ground-truth generator settings. Synergies are planted as columns
/// [task 1, ..., task T, shared]; task t activates its own synergy and the shared one.
struct SynthSpec {
  Index n_channels = 10;
  Index n_samples = 500;
  int n_tasks = 2;
  int reps_per_task = 10;
  double sample_rate = 100.0;
  /// channels x (n_tasks + 1); drawn from the seed when empty.
  Matrix synergies;
  /// Drawn synergies reserve this many channels used by no other synergy.
  Index exclusive_channels = 2;
  /// Relative amplitude of the shared synergy.
  double shared_gain = 1.0;
  /// Amplitude of a slow sinusoidal gain drift of the task-specific synergy
  /// across repetitions, drawn independently per task (fatigue-like modulation).
  double gain_drift = 0.5;
  /// Same for the shared synergy, drawn independently per task.
  double shared_drift = 0.5;
  /// Independent per-repetition gain noise, uniform in [-j, j].
  double gain_jitter = 0.1;
  /// Each synergy's activation peak is shifted by up to this fraction of the epoch.
  double profile_jitter = 0.2;
  /// Half-normal noise scale; overridden per epoch by snr_db when set.
  double noise_sigma = 0.0;
  std::optional<double> snr_db;
  /// Epoch lengths vary uniformly by up to this many samples.
  Index length_jitter = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthGroundTruth {
  Matrix synergies;                     // channels x (n_tasks + 1), unit-norm columns, shared last
  std::vector<Matrix> activations;      // per epoch, samples x (n_tasks + 1)
  std::vector<double> epoch_snr_db;     // measured; +inf when noiseless
};

struct SynthData {
  RecordingSet recordings;
  SynthGroundTruth truth;
};

SynthData generate_synthetic(const SynthSpec& spec);

/// Epoch length to use when the caller does not fix one: the longest epoch.
Index default_epoch_len(const RecordingSet& rs);

SynergyReport extract_constd(const RecordingSet& rs, int n_dofs, const FitConfig& cfg,
                             std::optional<Index> epoch_len = std::nullopt);

SynergyReport extract_nmf_benchmark(const RecordingSet& rs, const FitConfig& cfg, Index synergies_per_task = 2,
                                    double shared_threshold = kDefaultSharedThreshold);

/// Generic decompositions of the tensorised set, reported as spatial components.
SynergyReport extract_parafac(const RecordingSet& rs, Index rank, const FitConfig& cfg,
                              std::optional<Index> epoch_len = std::nullopt);
SynergyReport extract_tucker(const RecordingSet& rs, const Dims3& ranks, const FitConfig& cfg,
                             std::optional<Index> epoch_len = std::nullopt);

struct MethodComparison {
  SynergyReport constd;
  std::vector<SynergyReport> nmf;   // one per degree of freedom
  /// Rows: tasks; columns: consTD synergies. Entry = best correlation with
  /// that task's two NMF mean synergies.
  CorrelationMatrix table;
  /// Rows: consTD synergies; columns: every NMF task-mean synergy.
  CorrelationMatrix full;
};

MethodComparison compare_methods(const RecordingSet& rs, int n_dofs, const FitConfig& cfg,
                                 std::optional<Index> epoch_len = std::nullopt);

struct ShuffleResult {
  std::vector<double> shared_r;
  double mean_shared_r = 0.0;
  std::vector<double> task_specific_r;  // mean over task-specific columns, per shuffle
  double mean_task_specific_r = 0.0;
  std::vector<std::vector<Index>> permutations;
  SynergyReport intact;
};

/// Seeded repetition-mode permutation; the identity is redrawn unless n == 1.
std::vector<Index> draw_permutation(Index n, std::uint64_t seed);

ShuffleResult shuffle_validation(const RecordingSet& rs, int n_dofs, int n_shuffles, const FitConfig& cfg,
                                 std::optional<Index> epoch_len = std::nullopt);
/// Same as shuffle_validation with caller-supplied permutations of the mode-3 slices.
ShuffleResult shuffle_validation_with(const RecordingSet& rs, int n_dofs,
                                      const std::vector<std::vector<Index>>& permutations, const FitConfig& cfg,
                                      std::optional<Index> epoch_len = std::nullopt);

}  // namespace synten
