#include "tmpdir.hpp"
#include "cli.hpp"
#include "synten/diagnostics.hpp"
#include "synten/io.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

using namespace synten;
using synten::test::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "synten");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    unsetenv("SYNTEN_SEED");
    const Outcome o = run({"synth", "--seed", "7", "--snr-db", "20", "--out", data().string()});
    ASSERT_EQ(o.code, 0) << o.err;
  }
  std::filesystem::path data() const { return dir_ / "data"; }
  TempDir dir_;
};

}  // namespace

TEST_F(Cli, SynthThenConstdMatchesGroundTruth) {
  const Outcome o = run({"decompose", "--method", "constd", "--n-dofs", "1", data().string(),
                         "--out", (dir_ / "r").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  const SynergyReport r = report_from_json(read_text_file(dir_ / "r/report.json"));
  const auto truth = nlohmann::json::parse(read_text_file(data() / "ground_truth.json"));
  const auto shared = truth.at("synergies").at(static_cast<std::size_t>(truth.at("shared_index").get<int>()));
  Vector plant(static_cast<Index>(shared.size()));
  for (std::size_t i = 0; i < shared.size(); ++i) plant(static_cast<Index>(i)) = shared[i].get<double>();
  ASSERT_EQ(r.shared_index(), 2);
  EXPECT_GT(pearson(r.synergies[2].weights, plant), 0.95);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "r/synergies.tsv"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "r/temporal.tsv"));
}

TEST_F(Cli, ParafacReportCarriesCorcondia) {
  const Outcome o = run({"decompose", "--method", "parafac", "--ranks", "3", data().string()});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto j = nlohmann::json::parse(o.out);
  EXPECT_TRUE(j.at("metrics").contains("corcondia"));
}

TEST_F(Cli, IdenticalRunsAreByteIdentical) {
  const std::vector<std::string> args{"decompose", "--method", "tucker", "--ranks", "2,2,2", "--seed", "3",
                                      data().string()};
  const Outcome a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, EnvSeedIsDefaultAndFlagWins) {
  const std::vector<std::string> base{"decompose", "--method", "tucker", "--ranks", "2,2,2", data().string()};
  setenv("SYNTEN_SEED", "11", 1);
  const Outcome env = run(base);
  std::vector<std::string> flagged = base;
  flagged.insert(flagged.end(), {"--seed", "11"});
  const Outcome flag = run(flagged);
  flagged.back() = "12";
  const Outcome other = run(flagged);
  setenv("SYNTEN_SEED", "abc", 1);
  const Outcome bad = run(base);
  unsetenv("SYNTEN_SEED");
  EXPECT_EQ(env.out, flag.out);
  EXPECT_EQ(nlohmann::json::parse(other.out).at("seed").get<int>(), 12);
  EXPECT_EQ(bad.code, cli::kUsage);
  EXPECT_EQ(first_line(bad.err).rfind("error[usage]:", 0), 0u);
}

TEST_F(Cli, NonConvergenceStillEmitsModel) {
  const Outcome o = run({"decompose", "--method", "constd", "--max-iters", "1", data().string()});
  EXPECT_EQ(o.code, cli::kNotConverged);
  EXPECT_EQ(first_line(o.err).rfind("warning[convergence]:", 0), 0u);
  EXPECT_FALSE(nlohmann::json::parse(o.out).at("converged").get<bool>());
}

TEST_F(Cli, TensorizeCompareAndShuffleWriteTheirFiles) {
  EXPECT_EQ(run({"tensorize", data().string(), "--out", (dir_ / "t").string()}).code, 0);
  const auto t = nlohmann::json::parse(read_text_file(dir_ / "t/tensor.json"));
  EXPECT_EQ(t.at("dims"), nlohmann::json({500, 10, 20}));
  const Outcome c = run({"compare", data().string(), "--max-iters", "5000", "--out", (dir_ / "c").string()});
  EXPECT_EQ(c.code, 0) << c.err;
  EXPECT_TRUE(std::filesystem::exists(dir_ / "c/comparison.json"));
  const Outcome s = run({"shuffle-validate", data().string(), "--shuffles", "2", "--out", (dir_ / "s").string()});
  EXPECT_EQ(s.code, 0) << s.err;
  const auto sj = nlohmann::json::parse(read_text_file(dir_ / "s/shuffle.json"));
  EXPECT_EQ(sj.at("shared_r").size(), 2u);
}

TEST(CliErrors, UsageFailures) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"decompose", "--method", "constd"},
           {"decompose", "--method", "svd", "x"},
           {"decompose", "--bogus", "x"},
           {"frobnicate"},
           {"synth"},
       }) {
    const Outcome o = run(args);
    EXPECT_EQ(o.code, cli::kUsage) << o.err;
    EXPECT_EQ(first_line(o.err).rfind("error[usage]:", 0), 0u) << o.err;
  }
  const Outcome missing = run({"decompose", "--method", "constd"});
  EXPECT_NE(missing.err.find("Usage"), std::string::npos);
}

TEST(CliErrors, DataFailuresListEveryLocation) {
  TempDir dir;
  write_text_file(dir / "task1_rep1.csv", "t,ch1\n0,1\n0.01,-1\n");
  write_text_file(dir / "task1_rep2.csv", "t,ch1\n0,1\n0.01,x\n");
  const Outcome o = run({"decompose", "--method", "nmf", dir.path().string()});
  EXPECT_EQ(o.code, cli::kData);
  EXPECT_EQ(first_line(o.err).rfind("error[data]:", 0), 0u);
  EXPECT_NE(o.err.find("task1_rep1.csv:3:"), std::string::npos);
  EXPECT_NE(o.err.find("task1_rep2.csv:3:"), std::string::npos);

  TempDir empty;
  const Outcome e = run({"tensorize", empty.path().string()});
  EXPECT_EQ(e.code, cli::kData);
  EXPECT_NE(e.err.find("no epochs found"), std::string::npos);
}

TEST(CliErrors, HelpExitsZero) {
  const Outcome o = run({"--help"});
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("decompose"), std::string::npos);
}
