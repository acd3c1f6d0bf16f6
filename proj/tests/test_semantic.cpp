#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "eruq/semantic.hpp"
#include "eruq/text.hpp"

using namespace eruq;
using namespace eruq::semantic;
using data::GenerationSample;

namespace {

GenerationSample sample(std::string text, std::vector<double> lps, std::optional<std::uint32_t> cid = {}) {
  GenerationSample s;
  s.text = std::move(text);
  s.token_logprobs = std::move(lps);
  s.cluster_id = cid;
  return s;
}

}  // namespace

TEST(Text, NormalizationRules) {
  EXPECT_EQ(text::normalize("  Yuri   GAGARIN. "), "yuri gagarin");
  EXPECT_EQ(text::normalize("gagarin."), "gagarin");
  EXPECT_EQ(text::normalize("3%"), "3");
  EXPECT_EQ(text::normalize("\xef\xbc\xa1\xef\xbc\xa2"), "ab");      // fullwidth AB under NFKC
  EXPECT_EQ(text::normalize("caf\xc3\xa9"), "caf\xc3\xa9");          // precomposed
  EXPECT_EQ(text::normalize("cafe\xcc\x81"), "caf\xc3\xa9");         // combining accent composes
  EXPECT_EQ(text::normalize("a\xe2\x80\x83" "b"), "a b");            // em space splits
  EXPECT_TRUE(text::tokenize("...,!").empty());
}

TEST(ExactMatch, CaseStudyClusters) {
  const std::vector<std::string> a{"yuri gagarin", "Yuri Gagarin", "gagarin"};
  const auto ca = exact_match_clusters(a);
  EXPECT_EQ(std::vector<std::uint32_t>(ca.labels().begin(), ca.labels().end()),
            (std::vector<std::uint32_t>{0, 0, 1}));
  EXPECT_EQ(ca.cluster_count(), 2u);

  const std::vector<std::string> same(9, "yuri gagarin");
  EXPECT_EQ(exact_match_clusters(same).cluster_count(), 1u);

  const std::vector<std::string> sphenoid{"head", "brain", "skull", "skull", "skull",
                                          "head", "brain", "skull", "skull"};
  auto sizes = exact_match_clusters(sphenoid).sizes();
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{2, 2, 5}));
}

TEST(ExactMatch, Idempotent) {
  const std::vector<std::string> texts{"The Corrupt!", "the corrupt", "Steve  Stone", "steve stone."};
  std::vector<std::string> normalized;
  for (const auto& t : texts) normalized.push_back(text::normalize(t));
  EXPECT_EQ(exact_match_clusters(texts), exact_match_clusters(normalized));
}

TEST(Clusters, Invariants) {
  EXPECT_THROW(ClusterAssignment({0, 2}, 3), ValidationError);
  EXPECT_THROW(ClusterAssignment({0, 3}, 3), ValidationError);
  EXPECT_THROW(ClusterAssignment({}, 0), DomainError);
  const std::vector<std::uint32_t> raw{7, 7, 2, 9, 2};
  const auto a = ClusterAssignment::from_raw(raw);
  EXPECT_EQ(std::vector<std::uint32_t>(a.labels().begin(), a.labels().end()),
            (std::vector<std::uint32_t>{0, 0, 1, 2, 1}));
}

TEST(Clusters, IngestedNeedsEveryId) {
  std::vector<GenerationSample> s{sample("a", {-1}, 4), sample("b", {-1}, 4)};
  ASSERT_TRUE(ingested_clusters(s));
  EXPECT_EQ(ingested_clusters(s)->cluster_count(), 1u);
  s.push_back(sample("c", {-1}));
  EXPECT_FALSE(ingested_clusters(s));
}

TEST(DiscreteSemanticEntropy, Values) {
  const std::vector<std::uint32_t> labels{0, 0, 0, 0, 0, 1, 1, 1, 2};
  EXPECT_NEAR(discrete_semantic_entropy(ClusterAssignment(labels, 3)), 0.936888307539016, 1e-12);
  EXPECT_EQ(discrete_semantic_entropy(ClusterAssignment({0, 0, 0, 0}, 1)), 0.0);
  EXPECT_NEAR(discrete_semantic_entropy(ClusterAssignment({0, 1, 2, 3}, 4)), std::log(4.0), 1e-12);
}

TEST(DiscreteSemanticEntropy, PermutationAndDuplicationInvariant) {
  std::mt19937_64 rng(1);
  std::vector<std::uint32_t> labels{0, 0, 1, 2, 2, 2, 3, 1};
  const double base = discrete_semantic_entropy(ClusterAssignment(labels, 4));
  for (int i = 0; i < 20; ++i) {
    std::shuffle(labels.begin(), labels.end(), rng);
    EXPECT_NEAR(discrete_semantic_entropy(ClusterAssignment::from_raw(labels)), base, 1e-12);
  }
  auto doubled = labels;
  doubled.insert(doubled.end(), labels.begin(), labels.end());
  EXPECT_NEAR(discrete_semantic_entropy(ClusterAssignment::from_raw(doubled)), base, 1e-12);
}

TEST(SemanticEntropy, WeightedClusters) {
  // Cluster 0 weight 3 * e^-1, cluster 1 weight e^-1: p = [0.75, 0.25].
  std::vector<GenerationSample> s{sample("a", {-1.0}), sample("a", {-0.5, -1.5}), sample("a", {-1, -1, -1}),
                                  sample("b", {-2.0, 0.0})};
  const ClusterAssignment a({0, 0, 0, 1}, 2);
  EXPECT_NEAR(semantic_entropy(a, s), 0.5623351446188083, 1e-12);
}

TEST(SemanticEntropy, EqualLikelihoodsReduceToDiscrete) {
  std::vector<GenerationSample> s;
  for (int i = 0; i < 9; ++i) s.push_back(sample("x", {-0.7, -0.7}));
  const ClusterAssignment a({0, 0, 0, 0, 0, 1, 1, 1, 2}, 3);
  EXPECT_NEAR(semantic_entropy(a, s), discrete_semantic_entropy(a), 1e-12);
}

TEST(SemanticEntropy, StableForVeryNegativeLogprobs) {
  std::vector<GenerationSample> s{sample("a", {-2000.0}), sample("b", {-2000.0})};
  EXPECT_NEAR(semantic_entropy(ClusterAssignment({0, 1}, 2), s), std::log(2.0), 1e-12);
}

TEST(SemanticEntropy, RequiresTokenProbabilities) {
  std::vector<GenerationSample> s{sample("a", {-1.0}), sample("b", {})};
  try {
    semantic_entropy(ClusterAssignment({0, 1}, 2), s);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "SE requires token probabilities");
  }
}

TEST(LengthNormalizedEntropy, Values) {
  std::vector<GenerationSample> s{sample("a", {-1.0, -3.0}), sample("b", {-0.5})};
  EXPECT_NEAR(length_normalized_entropy(s), (2.0 + 0.5) / 2, 1e-15);
  std::vector<GenerationSample> certain{sample("a", {0.0, 0.0})};
  EXPECT_EQ(length_normalized_entropy(certain), 0.0);
  std::vector<GenerationSample> missing{sample("a", {})};
  EXPECT_THROW(length_normalized_entropy(missing), DomainError);
}
