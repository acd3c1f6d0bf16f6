#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "eruq/scoring.hpp"
#include "eruq/synthetic.hpp"
#include "fixtures.hpp"
#include "helpers.hpp"

using namespace eruq;
using namespace eruq::scoring;
using eruq::testing::slurp;
using eruq::testing::spit;
using eruq::testing::TempDir;

namespace {

data::RunRecord case_record(const fixtures::CaseStudy& c) {
  data::RunRecord r;
  r.record_id = c.name;
  r.question = c.question;
  r.references = c.references;
  r.primary_answer = c.answer;
  r.embedding_ref = c.name;
  for (const auto& text : c.responses) {
    data::GenerationSample s;
    s.text = text;
    s.token_logprobs = {-0.1, -0.2};
    r.samples.push_back(s);
  }
  return r;
}

// One embedding per distinct normalized response: identical answers share a vector.
data::EmbeddingSet embed(const data::RunRecord& r, std::uint32_t dim = 16) {
  const auto clusters = semantic::exact_match_clusters(r.samples);
  std::vector<float> values;
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    std::mt19937_64 rng(clusters.labels()[i] + 1);
    std::normal_distribution<float> n01;
    for (std::uint32_t c = 0; c < dim; ++c) values.push_back(n01(rng));
  }
  return data::EmbeddingSet(static_cast<std::uint32_t>(r.samples.size()), 1, dim, data::LayerStrategy::L1,
                            std::move(values));
}

const fixtures::CaseStudy& case_named(const std::string& name) {
  for (const auto& c : fixtures::case_studies())
    if (c.name == name) return c;
  throw std::runtime_error(name);
}

synthetic::SyntheticDataset synthetic_set(std::size_t n, std::uint64_t seed = 3) {
  synthetic::SyntheticConfig cfg;
  cfg.records = n;
  cfg.seed = seed;
  cfg.dim = 16;
  cfg.responses = 6;
  return synthetic::make_synthetic(cfg);
}

}  // namespace

TEST(ScoreRecord, ConsistentAnswersLookCertain) {
  const auto r = case_record(case_named("gagarin"));
  const auto set = embed(r);
  const auto ms = score_record(r, &set, ScoringConfig{});
  EXPECT_NEAR(*ms.scores.at("er"), 1.0, 1e-6);
  EXPECT_EQ(*ms.scores.at("dse"), 0.0);
  EXPECT_NEAR(*ms.scores.at("se"), 0.0, 1e-12);
  EXPECT_NEAR(*ms.scores.at("lne"), 0.15, 1e-12);
  EXPECT_NEAR(*ms.scores.at("es"), std::log(spectral::kDefaultAlpha), 1e-6);
  EXPECT_TRUE(ms.unavailable.empty());
}

TEST(ScoreRecord, SpreadAnswersLookUncertain) {
  const auto g = case_record(case_named("gagarin"));
  const auto s = case_record(case_named("sphenoid"));
  const auto gs = embed(g), ss = embed(s);
  const auto a = score_record(g, &gs, ScoringConfig{});
  const auto b = score_record(s, &ss, ScoringConfig{});
  for (const char* m : {"er", "es", "dse"}) EXPECT_GT(*b.scores.at(m), *a.scores.at(m)) << m;
  EXPECT_NEAR(*b.scores.at("er"), 3.0, 1.0);
}

TEST(ScoreRecord, MissingInputsAreReportedPerMethod) {
  auto r = case_record(case_named("sphenoid"));
  r.samples[3].token_logprobs.clear();
  const auto ms = score_record(r, nullptr, ScoringConfig{});
  EXPECT_FALSE(ms.scores.at("er"));
  EXPECT_EQ(ms.unavailable.at("er"), "no embeddings");
  EXPECT_FALSE(ms.scores.at("lne"));
  EXPECT_EQ(ms.unavailable.at("se"), "SE requires token probabilities");
  EXPECT_TRUE(ms.scores.at("dse"));

  ScoringConfig only_ingested;
  only_ingested.methods = {"dse"};
  only_ingested.cluster_source = ClusterSource::Ingested;
  EXPECT_THROW(score_record(r, nullptr, only_ingested), DomainError);
}

TEST(ScoreRecord, ExternalOrientation) {
  auto r = case_record(case_named("gagarin"));
  for (std::size_t i = 0; i < r.samples.size(); ++i) r.samples[i].external_scores["conf"] = 0.1 * (i + 1);
  ScoringConfig cfg;
  cfg.methods = {"ext:conf"};
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.external_orientation["conf"] = 2;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.external_orientation["conf"] = -1;
  EXPECT_NEAR(*score_record(r, nullptr, cfg).scores.at("ext:conf"), -0.5, 1e-12);
  cfg.external_orientation["conf"] = 1;
  EXPECT_NEAR(*score_record(r, nullptr, cfg).scores.at("ext:conf"), 0.5, 1e-12);
}

TEST(ScoringConfig, RejectsBadSettings) {
  ScoringConfig cfg;
  cfg.methods = {"bogus"};
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.alpha = 0.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.rouge_threshold = 1.5;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.parallelism = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(ScoreDataset, ParallelismDoesNotChangeOutput) {
  TempDir dir;
  synthetic::write_dataset(synthetic_set(40), "s", dir.path());
  const auto ds = data::Dataset::open(dir / "manifest.json");
  ScoringConfig cfg;
  const auto a = score_dataset(ds, cfg);
  cfg.parallelism = 8;
  const auto b = score_dataset(ds, cfg);
  ASSERT_EQ(a.scored.records.size(), 40u);
  EXPECT_EQ(a.scored.records, b.scored.records);
  EXPECT_TRUE(a.failures.empty());
  for (std::size_t i = 0; i < a.scored.records.size(); ++i)
    EXPECT_EQ(a.scored.records[i].record_id, synthetic::detail::record_id(i));
}

TEST(ScoreDataset, CorruptBlockFailsOnlyThatRecord) {
  TempDir dir;
  synthetic::write_dataset(synthetic_set(100), "s", dir.path());
  auto bytes = slurp(dir / "embeddings.bin");
  std::vector<data::BlockInfo> blocks;
  {
    std::ifstream in(dir / "embeddings.bin", std::ios::binary);
    blocks = data::scan_embeddings(in);
  }
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + blocks[17].data_offset, &nan, sizeof nan);
  spit(dir / "embeddings.bin", bytes);

  const auto res = score_dataset(data::Dataset::open(dir / "manifest.json"), ScoringConfig{});
  EXPECT_EQ(res.scored.records.size(), 99u);
  ASSERT_EQ(res.failures.size(), 1u);
  EXPECT_EQ(res.failures[0].record_id, blocks[17].record_id);
  EXPECT_FALSE(res.run_failed());
}

TEST(ScoreDataset, ManyBadLinesFailTheRun) {
  TempDir dir;
  synthetic::write_dataset(synthetic_set(20), "s", dir.path());
  auto lines = slurp(dir / "records.jsonl");
  lines += "{not json}\n{\"also\": \"bad\"}\n{}\n";
  spit(dir / "records.jsonl", lines);
  const auto res = score_dataset(data::Dataset::open(dir / "manifest.json"), ScoringConfig{});
  EXPECT_EQ(res.attempted, 23u);
  EXPECT_EQ(res.failures.size(), 3u);
  EXPECT_EQ(res.failures[0].record_id, "line 21");
  EXPECT_TRUE(res.run_failed());
}

TEST(ScoreDataset, LabelsFollowRouge) {
  TempDir dir;
  const auto syn = synthetic_set(30);
  synthetic::write_dataset(syn, "s", dir.path());
  const auto res = score_dataset(data::Dataset::open(dir / "manifest.json"), ScoringConfig{});
  ASSERT_EQ(res.scored.records.size(), syn.records.size());
  for (std::size_t i = 0; i < syn.records.size(); ++i)
    EXPECT_EQ(res.scored.records[i].label.is_hallucination, static_cast<bool>(syn.hallucinated[i])) << i;
}
