#pragma once

// Sampling-based uncertainty baselines over N sampled generations:
// length-normalized entropy (LNE), discrete semantic entropy (DSE) and
// semantic entropy (SE). All logarithms are natural.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "eruq/data_model.hpp"
#include "eruq/error.hpp"
#include "eruq/text.hpp"

namespace eruq::semantic {

// One label per sample; every id in [0, cluster_count) is used at least once.
class ClusterAssignment {
 public:
  ClusterAssignment(std::vector<std::uint32_t> labels, std::uint32_t cluster_count)
      : labels_(std::move(labels)), cluster_count_(cluster_count) {
    if (labels_.empty()) throw DomainError("cluster assignment needs at least one sample");
    std::vector<bool> used(cluster_count_, false);
    for (auto l : labels_) {
      if (l >= cluster_count_) throw ValidationError("cluster label out of range");
      used[l] = true;
    }
    if (std::find(used.begin(), used.end(), false) != used.end()) {
      throw ValidationError("cluster assignment has an empty cluster");
    }
  }

  // Relabels arbitrary ids to 0.. in first-occurrence order.
  static ClusterAssignment from_raw(std::span<const std::uint32_t> raw) {
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    std::vector<std::uint32_t> labels;
    labels.reserve(raw.size());
    for (auto r : raw) {
      auto [it, _] = remap.try_emplace(r, static_cast<std::uint32_t>(remap.size()));
      labels.push_back(it->second);
    }
    return ClusterAssignment(std::move(labels), static_cast<std::uint32_t>(remap.size()));
  }

  std::span<const std::uint32_t> labels() const noexcept { return labels_; }
  std::uint32_t cluster_count() const noexcept { return cluster_count_; }
  std::size_t size() const noexcept { return labels_.size(); }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(cluster_count_, 0);
    for (auto l : labels_) ++s[l];
    return s;
  }

  bool operator==(const ClusterAssignment&) const = default;

 private:
  std::vector<std::uint32_t> labels_;
  std::uint32_t cluster_count_;
};

inline ClusterAssignment exact_match_clusters(std::span<const std::string> texts) {
  std::unordered_map<std::string, std::uint32_t> ids;
  std::vector<std::uint32_t> labels;
  labels.reserve(texts.size());
  for (const auto& t : texts) {
    auto [it, _] = ids.try_emplace(text::normalize(t), static_cast<std::uint32_t>(ids.size()));
    labels.push_back(it->second);
  }
  return ClusterAssignment(std::move(labels), static_cast<std::uint32_t>(ids.size()));
}

inline ClusterAssignment exact_match_clusters(std::span<const data::GenerationSample> samples) {
  std::vector<std::string> texts;
  texts.reserve(samples.size());
  for (const auto& s : samples) texts.push_back(s.text);
  return exact_match_clusters(std::span<const std::string>(texts));
}

// The samples' own cluster_id fields; nullopt unless every sample carries one.
inline std::optional<ClusterAssignment> ingested_clusters(
    std::span<const data::GenerationSample> samples) {
  std::vector<std::uint32_t> raw;
  for (const auto& s : samples) {
    if (!s.cluster_id) return std::nullopt;
    raw.push_back(*s.cluster_id);
  }
  if (raw.empty()) return std::nullopt;
  return ClusterAssignment::from_raw(raw);
}

namespace detail {

inline double entropy_of_weights(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double h = 0.0;
  for (double w : weights) {
    const double p = w / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

inline double mean_logprob(const data::GenerationSample& s) {
  double sum = 0.0;
  for (double lp : s.token_logprobs) sum += lp;
  return sum / static_cast<double>(s.token_logprobs.size());
}

}  // namespace detail

// Entropy of cluster frequencies.
inline double discrete_semantic_entropy(const ClusterAssignment& a) {
  const auto sizes = a.sizes();
  std::vector<double> w(sizes.begin(), sizes.end());
  return detail::entropy_of_weights(w);
}

// Cluster weight is the sum over members of exp(mean token log-prob); the
// weights are shifted by the maximum mean log-prob before exponentiating,
// which leaves the normalized cluster probabilities unchanged.
inline double semantic_entropy(const ClusterAssignment& a,
                               std::span<const data::GenerationSample> samples) {
  if (a.size() != samples.size()) {
    throw DomainError("cluster assignment and samples differ in length");
  }
  std::vector<double> mean_lp;
  mean_lp.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.token_logprobs.empty()) throw DomainError("SE requires token probabilities");
    mean_lp.push_back(detail::mean_logprob(s));
  }
  const double shift = *std::max_element(mean_lp.begin(), mean_lp.end());
  std::vector<double> w(a.cluster_count(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) w[a.labels()[i]] += std::exp(mean_lp[i] - shift);
  return detail::entropy_of_weights(w);
}

// Mean over samples of the per-token negative log-likelihood.
inline double length_normalized_entropy(std::span<const data::GenerationSample> samples) {
  if (samples.empty()) throw DomainError("LNE needs at least one sample");
  double sum = 0.0;
  for (const auto& s : samples) {
    if (s.token_logprobs.empty()) throw DomainError("LNE requires token probabilities");
    sum += -detail::mean_logprob(s);
  }
  return sum / static_cast<double>(samples.size());
}

}  // namespace eruq::semantic
