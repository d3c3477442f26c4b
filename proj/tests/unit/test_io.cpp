#include "tmpdir.hpp"
#include "synten/errors.hpp"
#include "synten/io.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <sstream>

using namespace synten;
using synten::test::TempDir;

namespace {

FitConfig config(std::uint64_t seed) {
  FitConfig cfg;
  cfg.seed = seed;
  return cfg;
}

std::vector<std::string> data_error_locations(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.locations();
  }
  ADD_FAILURE() << "expected DataError";
  return {};
}

SynthData small_set(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.snr_db = 20.0;
  return generate_synthetic(spec);
}

}  // namespace

TEST(EpochCsv, ParsesLfAndCrlf) {
  const std::string lf = "t,ch1,ch2\n0,1,2\n0.01,3,4\n";
  const std::string crlf = "t,ch1,ch2\r\n0,1,2\r\n0.01,3,4\r\n";
  double rate = 0.0;
  const Epoch a = parse_epoch_csv(lf, "a.csv", 1, 1, &rate);
  const Epoch b = parse_epoch_csv(crlf, "b.csv", 1, 1);
  Matrix expected(2, 2);
  expected << 1, 2, 3, 4;
  EXPECT_EQ(a.samples, expected);
  EXPECT_EQ(b.samples, expected);
  EXPECT_NEAR(rate, 100.0, 1e-9);
}

TEST(EpochCsv, NegativeSampleNamesFileAndLine) {
  const auto locs = data_error_locations(
      [] { parse_epoch_csv("t,ch1\n0,1\n0.01,-2\n0.02,1\n", "task1_rep1.csv", 1, 1); });
  ASSERT_EQ(locs.size(), 1u);
  EXPECT_EQ(locs[0].rfind("task1_rep1.csv:3:", 0), 0u) << locs[0];
}

TEST(EpochCsv, CollectsEveryMalformedRow) {
  const auto locs = data_error_locations(
      [] { parse_epoch_csv("t,ch1,ch2\n0,1,1\n0.01,1\n0.02,x,1\n0.03,1,nan\n0,1,1\n", "e.csv", 1, 1); });
  ASSERT_EQ(locs.size(), 4u);
  EXPECT_NE(locs[0].find("e.csv:3:"), std::string::npos);
  EXPECT_NE(locs[1].find("e.csv:4:"), std::string::npos);
  EXPECT_NE(locs[2].find("e.csv:5:"), std::string::npos);
  EXPECT_NE(locs[3].find("e.csv:6:"), std::string::npos);
}

TEST(EpochCsv, BadHeaderAndTooShort) {
  EXPECT_THROW(parse_epoch_csv("time,a\n0,1\n1,1\n", "h.csv", 1, 1), DataError);
  EXPECT_THROW(parse_epoch_csv("t,ch2\n0,1\n1,1\n", "h.csv", 1, 1), DataError);
  EXPECT_THROW(parse_epoch_csv("t,ch1\n0,1\n", "s.csv", 1, 1), DataError);
  EXPECT_THROW(parse_epoch_csv("", "e.csv", 1, 1), DataError);
}

TEST(ReadEpochs, RoundTripsAGeneratedSet) {
  TempDir dir;
  const SynthData d = small_set(1);
  write_epochs(d.recordings, dir.path());
  const RecordingSet rs = read_epochs(dir.path());
  ASSERT_EQ(rs.epochs.size(), 20u);
  EXPECT_EQ(rs.task_ids(), (std::vector<int>{1, 2}));
  EXPECT_EQ(rs.channel_count, 10);
  EXPECT_NEAR(rs.sample_rate, 100.0, 1e-6);
  const TensorizedSet a = tensorize(d.recordings, 500), b = tensorize(rs, 500);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.tensor, b.tensor);
}

TEST(ReadEpochs, SingleFile) {
  TempDir dir;
  write_text_file(dir / "task2_rep7.csv", "t,ch1\n0,1\n0.5,2\n");
  const RecordingSet rs = read_epochs(dir / "task2_rep7.csv");
  ASSERT_EQ(rs.epochs.size(), 1u);
  EXPECT_EQ(rs.epochs[0].task_id, 2);
  EXPECT_EQ(rs.epochs[0].repetition_id, 7);
  EXPECT_NEAR(rs.sample_rate, 2.0, 1e-12);
}

TEST(ReadEpochs, EmptyDirectory) {
  TempDir dir;
  const auto locs = data_error_locations([&] { read_epochs(dir.path()); });
  ASSERT_EQ(locs.size(), 1u);
  EXPECT_NE(locs[0].find("no epochs found"), std::string::npos);
}

TEST(ReadEpochs, ReportsAllOffendingFiles) {
  TempDir dir;
  write_text_file(dir / "task1_rep1.csv", "t,ch1,ch2\n0,1,1\n0.01,1,1\n");
  write_text_file(dir / "task1_rep2.csv", "t,ch1\n0,1\n0.01,1\n");         // channel drift
  write_text_file(dir / "task1_rep3.csv", "t,ch1,ch2\n0,1,1\n0.01,-1,1\n");  // negative
  write_text_file(dir / "notes.csv", "t,ch1,ch2\n0,1,1\n0.01,1,1\n");        // bad name
  write_text_file(dir / "README.txt", "ignored");
  const auto locs = data_error_locations([&] { read_epochs(dir.path()); });
  ASSERT_EQ(locs.size(), 3u);
  std::string all;
  for (const auto& l : locs) all += l + "\n";
  EXPECT_NE(all.find("notes.csv"), std::string::npos);
  EXPECT_NE(all.find("task1_rep2.csv:1:"), std::string::npos);
  EXPECT_NE(all.find("task1_rep3.csv:3:"), std::string::npos);
}

TEST(ReadEpochs, MissingPath) {
  EXPECT_THROW(read_epochs("/nonexistent/synten/epochs"), IoError);
}

TEST(Report, JsonRoundTripAndByteDeterminism) {
  const SynthData d = small_set(2);
  const SynergyReport r = extract_constd(d.recordings, 1, config(0));
  const std::string a = report_to_json(r), b = report_to_json(r);
  EXPECT_EQ(a, b);
  const SynergyReport back = report_from_json(a);
  EXPECT_EQ(report_to_json(back), a);
  EXPECT_EQ(back.method, r.method);
  EXPECT_EQ(back.synergy_matrix(), r.synergy_matrix());
  EXPECT_EQ(back.fit, r.fit);
  EXPECT_EQ(back.repetition_labels, r.repetition_labels);

  const auto j = nlohmann::json::parse(a);
  EXPECT_EQ(j.at("schema").get<int>(), kReportSchema);
  EXPECT_FALSE(j.contains("runtime_seconds"));
  EXPECT_TRUE(nlohmann::json::parse(report_to_json(r, true)).contains("runtime_seconds"));
}

TEST(Report, KeysAreSorted) {
  const SynthData d = small_set(3);
  const std::string text = report_to_json(extract_constd(d.recordings, 1, config(0)));
  const auto j = nlohmann::json::parse(text);
  std::string previous;
  std::size_t pos = 1;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = "\"" + it.key() + "\":";
    const std::size_t at = text.find(key, pos);
    ASSERT_NE(at, std::string::npos);
    EXPECT_LT(previous, it.key());
    previous = it.key();
  }
}

TEST(Report, RejectsWrongSchema) {
  EXPECT_THROW(report_from_json("{\"schema\":2}"), IoError);
  EXPECT_THROW(report_from_json("not json"), IoError);
}

TEST(Report, SynergySidecarMatchesReportExactly) {
  const SynthData d = small_set(4);
  const SynergyReport r = extract_constd(d.recordings, 1, config(0));
  std::istringstream in(synergies_tsv(r));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "channel\ttask-specific:1\ttask-specific:2\tshared");
  for (Index row = 0; row < 10; ++row) {
    ASSERT_TRUE(std::getline(in, line));
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, '\t');
    EXPECT_EQ(cell, "ch" + std::to_string(row + 1));
    for (const auto& s : r.synergies) {
      std::getline(cells, cell, '\t');
      EXPECT_EQ(std::stod(cell), s.weights(row));
    }
  }
  const std::string temporal = temporal_tsv(r);
  EXPECT_EQ(std::count(temporal.begin(), temporal.end(), '\n'), 501);
}

TEST(Files, WriteCreatesParentsAndReadFailsWithPath) {
  TempDir dir;
  write_text_file(dir / "a/b/c.txt", "hello");
  EXPECT_EQ(read_text_file(dir / "a/b/c.txt"), "hello");
  try {
    read_text_file(dir / "missing.txt");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.txt"), std::string::npos);
  }
}
