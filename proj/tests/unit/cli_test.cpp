#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "crsbm/manifest.hpp"
#include "helpers.hpp"

using crsbm::testing::slurp;
using crsbm::testing::TempDir;

namespace {

std::string cli() {
  const char* p = std::getenv("CRSBM_CLI");
  return p ? p : "crsbm";
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(const TempDir& t, const std::string& args) {
  const auto out = t.file("stdout.txt");
  const auto err = t.file("stderr.txt");
  const std::string cmd = "'" + cli() + "' " + args + " >'" + out + "' 2>'" + err + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::size_t lines(const std::string& text) {
  std::size_t n = 0;
  for (char ch : text) n += ch == '\n';
  return n;
}

std::string generate(const TempDir& t, const std::string& dir) {
  const auto r = run(t, "generate --q-star 4 --q-tilde 4 --n-per 50 --c 8 --eps 1/5 --seed 3 --out '" +
                            t.file(dir) + "'");
  EXPECT_EQ(r.code, 0) << r.err;
  return t.file(dir);
}

}  // namespace

TEST(Cli, VersionAndHelp) {
  TempDir t;
  const auto v = run(t, "--version");
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find(crsbm::kVersion), std::string::npos);
  EXPECT_EQ(run(t, "--help").code, 0);
}

TEST(Cli, MissingRequiredOptionIsUsageError) {
  TempDir t;
  const auto g = generate(t, "g");
  const auto r = run(t, "detect --edges '" + g + "/edges.txt' --attributes '" + g +
                            "/attributes.csv' --out '" + t.file("d") + "'");
  EXPECT_EQ(r.code, 2);
  std::istringstream err(r.err);
  std::string line, last;
  while (std::getline(err, line)) {
    if (!line.empty()) last = line;
  }
  const auto j = crsbm::Json::parse(last);
  EXPECT_EQ(j["error"]["exit_code"], 2);
  EXPECT_EQ(run(t, "no-such-command").code, 2);
}

TEST(Cli, MalformedInputIsDataError) {
  TempDir t;
  const auto g = generate(t, "g");
  t.write("bad.txt", "0 1\nnot a label\n");
  EXPECT_EQ(run(t, "eval --labels '" + t.file("bad.txt") + "' --truth '" + g + "/truth.txt'").code, 3);
}

TEST(Cli, InvalidSeedEnvironmentIsUsageError) {
  TempDir t;
  const auto r = run(t, "threshold");
  EXPECT_EQ(r.code, 0);
  const std::string cmd = "CRSBM_SEED=abc '" + cli() + "' generate --out '" + t.file("x") + "' 2>/dev/null";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);
}

TEST(Cli, GenerateIsByteDeterministic) {
  TempDir t;
  const auto a = generate(t, "a");
  const auto b = generate(t, "b");
  for (const char* f : {"edges.txt", "attributes.csv", "attributes.triplet", "truth.txt"}) {
    EXPECT_EQ(slurp(a + "/" + f), slurp(b + "/" + f)) << f;
  }
  EXPECT_EQ(lines(slurp(a + "/truth.txt")), 200u);
  const auto manifest = crsbm::read_json(a + "/manifest.json");
  EXPECT_EQ(manifest["command"], "generate");
  EXPECT_EQ(manifest["seeds"][0], 3);
}

TEST(Cli, DetectWritesLabelsAndPerIterationModularity) {
  TempDir t;
  const auto g = generate(t, "g");
  const std::string args = "detect --edges '" + g + "/edges.txt' --attributes '" + g +
                           "/attributes.csv' --q 4 --tau-max 3 --seed 2 --out ";
  const auto r1 = run(t, args + "'" + t.file("d1") + "'");
  ASSERT_TRUE(r1.code == 0 || r1.code == 4) << r1.err;
  const auto r2 = run(t, args + "'" + t.file("d2") + "'");
  EXPECT_EQ(r1.code, r2.code);
  EXPECT_EQ(slurp(t.file("d1/labels.txt")), slurp(t.file("d2/labels.txt")));
  EXPECT_EQ(slurp(t.file("d1/beliefs.csv")), slurp(t.file("d2/beliefs.csv")));
  EXPECT_EQ(lines(slurp(t.file("d1/labels.txt"))), 200u);
  const auto result = crsbm::read_json(t.file("d1/result.json"));
  ASSERT_TRUE(result.contains("iterations"));
  EXPECT_EQ(result["iterations"].size(), 3u);
  for (const auto& it : result["iterations"]) EXPECT_TRUE(it["modularity"].is_number());

  const auto ev = run(t, "eval --labels '" + t.file("d1/labels.txt") + "' --truth '" + g +
                             "/truth.txt' --edges '" + g + "/edges.txt'");
  ASSERT_EQ(ev.code, 0) << ev.err;
  const auto scores = crsbm::Json::parse(ev.out);
  EXPECT_EQ(scores["n"], 200);
  for (const char* k : {"nmi", "onmi", "avg_f1", "accuracy", "modularity"}) {
    EXPECT_GE(scores[k].get<double>(), -0.5) << k;
    EXPECT_LE(scores[k].get<double>(), 1.0) << k;
  }
}

TEST(Cli, ThresholdReportsTableValue) {
  TempDir t;
  const auto r = run(t, "threshold --q-star 4 --q-tilde 2 --gamma 2 --c-tilde 4 --eps 4/7");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = crsbm::Json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["epsilon_star_gamma"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["epsilon_star_1"].get<double>(), 0.2);
  EXPECT_FALSE(j["ks_detectable"].get<bool>());
  EXPECT_EQ(run(t, "threshold --eps 1/0").code, 2);
}

TEST(Cli, ConfusionCsv) {
  TempDir t;
  t.write("a.txt", "0 0\n1 0\n2 1\n3 1\n");
  t.write("b.txt", "0 1\n1 1\n2 1\n3 0\n");
  const auto r = run(t, "confusion --labels '" + t.file("a.txt") + "' --truth '" + t.file("b.txt") + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  // Rows are truth groups: truth 0 = {3}, truth 1 = {0, 1, 2}.
  EXPECT_NE(r.out.find("0,1\n2,1\n"), std::string::npos) << r.out;
}
