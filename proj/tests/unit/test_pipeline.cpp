#include "synten/diagnostics.hpp"
#include "synten/errors.hpp"
#include "synten/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace synten;

namespace {

FitConfig config(std::uint64_t seed) {
  FitConfig cfg;
  cfg.seed = seed;
  return cfg;
}

SynthData synth(std::optional<double> snr_db, std::uint64_t seed, int n_dofs = 1) {
  SynthSpec spec;
  spec.snr_db = snr_db;
  spec.seed = seed;
  spec.n_tasks = 2 * n_dofs;
  return generate_synthetic(spec);
}

Epoch constant_epoch(int task, int rep, Index rows, Index channels, double value) {
  return Epoch{task, rep, Matrix::Constant(rows, channels, value)};
}

}  // namespace

TEST(Tensorize, FiveSecondTwentyEpochSet) {
  const SynthData d = synth(std::nullopt, 0);
  const TensorizedSet ts = tensorize(d.recordings, 500);
  EXPECT_EQ(ts.tensor.dims(), (Dims3{500, 10, 20}));
  ASSERT_EQ(ts.labels.size(), 20u);
}

TEST(Tensorize, SlicesAreOrderedByTaskThenRepetition) {
  RecordingSet rs;
  rs.channel_count = 2;
  rs.epochs.push_back(constant_epoch(2, 1, 4, 2, 21));
  rs.epochs.push_back(constant_epoch(1, 2, 4, 2, 12));
  rs.epochs.push_back(constant_epoch(1, 1, 4, 2, 11));
  rs.epochs.push_back(constant_epoch(2, 3, 4, 2, 23));
  const TensorizedSet ts = tensorize(rs, 4);
  const std::vector<EpochLabel> expected{{1, 1}, {1, 2}, {2, 1}, {2, 3}};
  EXPECT_EQ(ts.labels, expected);
  for (std::size_t k = 0; k < expected.size(); ++k)
    EXPECT_EQ(ts.tensor(0, 0, static_cast<Index>(k)), 10.0 * expected[k].task_id + expected[k].repetition_id);
}

TEST(Tensorize, SingleEpochAndErrors) {
  RecordingSet rs;
  rs.channel_count = 3;
  rs.epochs.push_back(constant_epoch(1, 1, 5, 3, 1.0));
  EXPECT_EQ(tensorize(rs, 5).tensor.dim(3), 1);
  EXPECT_THROW(tensorize(rs, 1), ArgumentError);
  rs.epochs.push_back(constant_epoch(1, 2, 5, 2, 1.0));
  EXPECT_THROW(tensorize(rs, 5), ArgumentError);
  EXPECT_THROW(tensorize(RecordingSet{}, 5), ArgumentError);
}

TEST(Resample, ExactLengthIsBitExactAndOtherLengthsMap) {
  const SynthData d = synth(20.0, 1);
  const Matrix& m = d.recordings.epochs.front().samples;
  EXPECT_EQ(resample_epoch(m, m.rows()), m);

  Matrix ramp480(480, 1), ramp520(520, 1);
  for (Index i = 0; i < 480; ++i) ramp480(i, 0) = static_cast<double>(i) / 479.0;
  for (Index i = 0; i < 520; ++i) ramp520(i, 0) = static_cast<double>(i) / 519.0;
  for (const Matrix* r : {&ramp480, &ramp520}) {
    const Matrix out = resample_epoch(*r, 500);
    ASSERT_EQ(out.rows(), 500);
    EXPECT_EQ(out(0, 0), 0.0);
    EXPECT_EQ(out(499, 0), 1.0);
    for (Index i = 0; i < 500; ++i) EXPECT_NEAR(out(i, 0), static_cast<double>(i) / 499.0, 1e-12);
  }
}

TEST(RecordingSet, Validation) {
  RecordingSet rs;
  rs.channel_count = 2;
  rs.epochs.push_back(constant_epoch(1, 1, 4, 2, 1.0));
  EXPECT_NO_THROW(rs.validate());
  rs.epochs.push_back(constant_epoch(1, 1, 4, 2, 1.0));
  EXPECT_THROW(rs.validate(), ArgumentError);
  rs.epochs.back().repetition_id = 2;
  rs.epochs.back().samples(0, 0) = -0.1;
  EXPECT_THROW(rs.validate(), ArgumentError);
}

TEST(Synthetic, SingleSynergyEpochIsRankOne) {
  SynthSpec spec;
  spec.n_tasks = 1;
  spec.shared_gain = 0.0;
  spec.reps_per_task = 3;
  const SynthData d = generate_synthetic(spec);
  for (const Epoch& e : d.recordings.epochs) {
    Eigen::JacobiSVD<Matrix> svd(e.samples);
    const Vector s = svd.singularValues();
    EXPECT_LT(s(1), 1e-12 * s(0));
  }
}

TEST(Synthetic, MeasuredSnrMatchesRequest) {
  for (double snr : {0.0, 10.0, 20.0}) {
    const SynthData d = synth(snr, 2);
    for (double measured : d.truth.epoch_snr_db) EXPECT_NEAR(measured, snr, 1.0);
  }
}

TEST(Synthetic, PlantsAreUnitNormNonNegativeAndSeeded) {
  const SynthData a = synth(10.0, 3), b = synth(10.0, 3);
  for (Index c = 0; c < a.truth.synergies.cols(); ++c) EXPECT_NEAR(a.truth.synergies.col(c).norm(), 1.0, 1e-12);
  EXPECT_TRUE((a.truth.synergies.array() >= 0.0).all());
  for (std::size_t e = 0; e < a.recordings.epochs.size(); ++e) {
    EXPECT_EQ(a.recordings.epochs[e].samples, b.recordings.epochs[e].samples);
    EXPECT_TRUE((a.recordings.epochs[e].samples.array() >= 0.0).all());
  }
}

TEST(Synthetic, InvalidSpec) {
  SynthSpec spec;
  spec.noise_sigma = -1.0;
  EXPECT_THROW(generate_synthetic(spec), ArgumentError);
  spec = SynthSpec{};
  spec.synergies = Matrix::Ones(3, 3);
  EXPECT_THROW(generate_synthetic(spec), ArgumentError);
}

TEST(ExtractConstd, SharedLabelLandsOnPlantedShared) {
  const SynthData d = synth(10.0, 5);
  const SynergyReport r = extract_constd(d.recordings, 1, config(0));
  ASSERT_EQ(r.synergies.size(), 3u);
  ASSERT_EQ(r.shared_index(), 2);
  EXPECT_GT(pearson(r.synergies[2].weights, d.truth.synergies.col(2)), 0.95);
  EXPECT_EQ(r.synergies[0].label, "task-specific");
  EXPECT_EQ(r.synergies[0].task_id, 1);
  EXPECT_EQ(r.synergies[1].task_id, 2);
  for (const auto& s : r.synergies) {
    EXPECT_NEAR(s.weights.norm(), 1.0, 1e-12);
    EXPECT_TRUE((s.weights.array() >= 0.0).all());
  }
}

TEST(ExtractConstd, TwoDofsGiveOneSharedPerDof) {
  const SynthData d = synth(20.0, 6, 2);
  const SynergyReport r = extract_constd(d.recordings, 2, config(0));
  ASSERT_EQ(r.synergies.size(), 5u);
  int shared = 0;
  for (const auto& s : r.synergies) shared += s.label == "shared";
  EXPECT_EQ(shared, 1);
}

TEST(ExtractConstd, TaskCountMismatch) {
  const SynthData d = synth(10.0, 7);
  EXPECT_THROW(extract_constd(d.recordings, 2, config(0)), ArgumentError);
}

TEST(NmfBenchmark, NoiselessLabelsMatchPlants) {
  const SynthData d = synth(std::nullopt, 8);
  const SynergyReport r = extract_nmf_benchmark(d.recordings, config(0));
  ASSERT_GE(r.shared_index(), 0);
  EXPECT_GT(pearson(r.synergies[static_cast<std::size_t>(r.shared_index())].weights, d.truth.synergies.col(2)), 0.99);
  for (const auto& s : r.synergies) {
    if (s.label != "task-specific") continue;
    const Index t = *s.task_id - 1;
    EXPECT_GT(pearson(s.weights, d.truth.synergies.col(t)), 0.99);
  }
  EXPECT_EQ(r.per_repetition_vaf.size(), 20u);
  for (double v : r.per_repetition_vaf) EXPECT_GT(v, 99.0);
}

TEST(NmfBenchmark, IdenticalRepetitionsAverageToThemselves) {
  const SynthData base = synth(std::nullopt, 9);
  RecordingSet rs;
  rs.sample_rate = base.recordings.sample_rate;
  rs.channel_count = base.recordings.channel_count;
  for (const Epoch& e : base.recordings.epochs)
    if (e.repetition_id == 1)
      for (int rep = 1; rep <= 4; ++rep) rs.epochs.push_back(Epoch{e.task_id, rep, e.samples});
  const SynergyReport r = extract_nmf_benchmark(rs, config(0));
  ASSERT_EQ(r.task_means.size(), 4u);
  for (int task = 1; task <= 2; ++task) {
    Matrix x;
    for (const Epoch& e : rs.epochs)
      if (e.task_id == task) x = e.samples;
    FitConfig cfg = config(0);
    const NmfModel single = nmf(x, 2, cfg);
    Matrix means(10, 2);
    Index col = 0;
    for (const auto& s : r.task_means)
      if (s.task_id == task) means.col(col++) = s.weights;
    for (const auto& p : match_synergies(single.spatial, means).pairs) EXPECT_GT(p.r, 0.9999);
  }
}

TEST(CompareMethods, SharedAgreesAndTaskSpecificPrefersOwnTask) {
  const SynthData d = synth(20.0, 10);
  const MethodComparison c = compare_methods(d.recordings, 1, config(0));
  ASSERT_EQ(c.table.values.rows(), 2);
  ASSERT_EQ(c.table.values.cols(), 3);
  EXPECT_GT(c.table.values(0, 2), 0.9);
  EXPECT_GT(c.table.values(1, 2), 0.9);
  EXPECT_GT(c.table.values(0, 0), c.table.values(1, 0));
  EXPECT_GT(c.table.values(1, 1), c.table.values(0, 1));
  // Both pipelines label the planted shared synergy as shared.
  const SynergyReport& n = c.nmf.front();
  EXPECT_GT(pearson(n.synergies[static_cast<std::size_t>(n.shared_index())].weights, d.truth.synergies.col(2)), 0.95);
  EXPECT_GT(pearson(c.constd.synergies[2].weights, d.truth.synergies.col(2)), 0.95);
}

TEST(CompareMethods, NoiselessInputGivesDiagonalDominance) {
  const SynthData d = synth(std::nullopt, 11);
  const MethodComparison c = compare_methods(d.recordings, 1, config(0));
  const auto& means = c.nmf.front().task_means;
  ASSERT_EQ(c.full.values.cols(), static_cast<Index>(means.size()));
  const auto planted_of = [&](const Vector& v) {
    Index best = 0;
    for (Index t = 1; t < 3; ++t)
      if (pearson(v, d.truth.synergies.col(t)) > pearson(v, d.truth.synergies.col(best))) best = t;
    return best;
  };
  for (Index row = 0; row < 3; ++row) {
    Index col = 0;
    c.full.values.row(row).maxCoeff(&col);
    EXPECT_EQ(planted_of(means[static_cast<std::size_t>(col)].weights),
              planted_of(c.constd.synergies[static_cast<std::size_t>(row)].weights));
    EXPECT_GT(c.full.values(row, col), 0.95);
  }
}

TEST(Shuffle, IdentityPermutationReproducesIntactFit) {
  const SynthData d = synth(10.0, 12);
  std::vector<Index> identity(20);
  for (Index k = 0; k < 20; ++k) identity[static_cast<std::size_t>(k)] = k;
  const ShuffleResult r = shuffle_validation_with(d.recordings, 1, {identity}, config(3));
  ASSERT_EQ(r.shared_r.size(), 1u);
  EXPECT_NEAR(r.shared_r[0], 1.0, 1e-12);
}

TEST(Shuffle, PermutationsAreSeededAndNeverIdentity) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = draw_permutation(5, seed);
    EXPECT_EQ(p, draw_permutation(5, seed));
    bool identity = true;
    for (Index k = 0; k < 5; ++k) identity &= p[static_cast<std::size_t>(k)] == k;
    EXPECT_FALSE(identity);
  }
  EXPECT_EQ(draw_permutation(1, 0), std::vector<Index>{0});
}

TEST(Shuffle, ReproducibleWithFixedSeed) {
  const SynthData d = synth(10.0, 13);
  const ShuffleResult a = shuffle_validation(d.recordings, 1, 3, config(4));
  const ShuffleResult b = shuffle_validation(d.recordings, 1, 3, config(4));
  EXPECT_EQ(a.shared_r, b.shared_r);
  EXPECT_EQ(a.task_specific_r, b.task_specific_r);
  EXPECT_EQ(a.permutations, b.permutations);
  EXPECT_THROW(shuffle_validation(d.recordings, 1, 0, config(4)), ArgumentError);
}
