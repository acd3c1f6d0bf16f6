#include <cstdlib>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "eruq/synthetic.hpp"
#include "helpers.hpp"

using eruq::testing::slurp;
using eruq::testing::spit;
using eruq::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(ERUQ_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

void make_synthetic(const TempDir& dir, const std::string& extra = "") {
  const auto r = cli(dir, "make-synthetic --out-dir " + q(dir / "ds") + " --records 40 --dim 16 --seed 2 " + extra);
  ASSERT_EQ(r.code, 0) << r.err;
}

}  // namespace

TEST(Cli, HelpShowsDefaults) {
  TempDir dir;
  auto r = cli(dir, "--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"make-synthetic", "validate", "score", "annotate", "eval", "simulate"})
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  r = cli(dir, "simulate --help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("1.2"), std::string::npos);
  EXPECT_NE(r.out.find("0.0001"), std::string::npos);
  r = cli(dir, "score --help");
  EXPECT_NE(r.out.find("er,es,lne,dse,se"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  TempDir dir;
  EXPECT_EQ(cli(dir, "").code, 2);
  EXPECT_EQ(cli(dir, "frobnicate").code, 2);
  EXPECT_EQ(cli(dir, "validate").code, 2);
  EXPECT_EQ(cli(dir, "score --manifest x --bogus").code, 2);
  EXPECT_EQ(cli(dir, "make-synthetic --out-dir x --records 3").code, 2);
  EXPECT_EQ(cli(dir, "simulate --nonlinearity relu").code, 2);
  EXPECT_EQ(cli(dir, "eval --scored x --bootstrap 50").code, 2);
}

TEST(Cli, ValidateReportsFailures) {
  TempDir dir;
  make_synthetic(dir);
  auto r = cli(dir, "validate --manifest " + q(dir / "ds" / "manifest.json"));
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("valid: 40 records, 0 failures"), std::string::npos);

  const auto bytes = slurp(dir / "ds" / "embeddings.bin");
  spit(dir / "ds" / "embeddings.bin", bytes.substr(0, bytes.size() - 3));
  r = cli(dir, "validate --manifest " + q(dir / "ds" / "manifest.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("invalid:"), std::string::npos);

  EXPECT_EQ(cli(dir, "validate --manifest " + q(dir / "missing.json")).code, 1);
}

TEST(Cli, ScoreAnnotateEvalPipeline) {
  TempDir dir;
  make_synthetic(dir);
  const auto manifest = q(dir / "ds" / "manifest.json");
  auto r = cli(dir, "score --manifest " + manifest + " --parallelism 2 --out " + q(dir / "synth.jsonl"));
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli(dir, "annotate --manifest " + manifest + " --out " + q(dir / "labels.jsonl"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream labels(slurp(dir / "labels.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(labels, line)) {
    EXPECT_NE(line.find("\"record_id\""), std::string::npos);
    ++n;
  }
  EXPECT_EQ(n, 40);

  r = cli(dir, "eval --scored " + q(dir / "synth.jsonl") + " --labels " + q(dir / "labels.jsonl") +
                   " --bootstrap 200 --roc-out " + q(dir / "roc.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("dataset,method,auroc,n,n_pos,ci_low,ci_high,error\n", 0), 0u);
  for (const char* m : {"synth,er,", "synth,es,", "synth,lne,", "synth,dse,", "synth,se,"})
    EXPECT_NE(r.out.find(m), std::string::npos) << m;
  EXPECT_EQ(slurp(dir / "roc.csv").rfind("dataset,method,fpr,tpr\n", 0), 0u);
}

TEST(Cli, SingleClassEvalFails) {
  TempDir dir;
  make_synthetic(dir);
  ASSERT_EQ(cli(dir, "score --manifest " + q(dir / "ds" / "manifest.json") + " --out " + q(dir / "s.jsonl")).code, 0);
  std::string labels;
  for (std::size_t i = 0; i < 40; ++i)
    labels += "{\"record_id\":\"" + eruq::synthetic::detail::record_id(i) +
              "\",\"rouge_l\":1.0,\"is_hallucination\":false}\n";
  spit(dir / "labels.jsonl", labels);
  const auto r = cli(dir, "eval --scored " + q(dir / "s.jsonl") + " --labels " + q(dir / "labels.jsonl"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("AUROC undefined"), std::string::npos) << r.err;
}

TEST(Cli, ScoreRejectsUndeclaredExternal) {
  TempDir dir;
  make_synthetic(dir);
  const auto r = cli(dir, "score --manifest " + q(dir / "ds" / "manifest.json") + " --methods er,ext:conf");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("orientation"), std::string::npos);
}

TEST(Cli, SimulateWritesCsv) {
  TempDir dir;
  const auto r = cli(dir, "simulate --steps 3 --mtheta 5 --mtraj 5 --seed 1");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  int comments = 0, rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) {
      ++comments;
    } else if (line.starts_with("t,")) {
      header = true;
      EXPECT_EQ(line, "t,total,aleatoric,epistemic,lemma1_lhs,lemma1_rhs,lemma2_bound,dominance_ratio");
    } else {
      ++rows;
    }
  }
  EXPECT_EQ(comments, 2);
  EXPECT_TRUE(header);
  EXPECT_EQ(rows, 3);
  const auto again = cli(dir, "simulate --steps 3 --mtheta 5 --mtraj 5 --seed 1");
  EXPECT_EQ(again.out, r.out);
}
