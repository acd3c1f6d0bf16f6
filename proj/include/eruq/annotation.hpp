#pragma once

// Hallucination labels from token-level ROUGE-L against gold references.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eruq/data_model.hpp"
#include "eruq/text.hpp"

namespace eruq::annotation {

inline constexpr double kDefaultThreshold = 0.5;

struct HallucinationLabel {
  double rouge_l = 0.0;
  bool is_hallucination = true;
  int matched_reference_index = -1;

  bool operator==(const HallucinationLabel&) const = default;
};

// Length of the longest common subsequence, O(|a|*|b|) time, O(|b|) memory.
inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// F-measure of LCS precision and recall; beta = 1 gives the usual F1.
inline double rouge_l_tokens(std::span<const std::string> candidate,
                             std::span<const std::string> reference, double beta = 1.0) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const auto l = static_cast<double>(lcs_length(candidate, reference));
  if (l == 0.0) return 0.0;
  // (1 + b^2) P R / (R + b^2 P) with P = l/|c|, R = l/|r|.
  const double b2 = beta * beta;
  return (1.0 + b2) * l / (static_cast<double>(candidate.size()) + b2 * static_cast<double>(reference.size()));
}

inline double rouge_l(std::string_view candidate, std::string_view reference, double beta = 1.0) {
  const auto c = text::tokenize(candidate);
  const auto r = text::tokenize(reference);
  return rouge_l_tokens(c, r, beta);
}

// Best score over the references; ties keep the first reference.
inline HallucinationLabel label_answer(std::string_view answer,
                                       std::span<const std::string> references,
                                       double threshold = kDefaultThreshold, double beta = 1.0) {
  HallucinationLabel label;
  const auto cand = text::tokenize(answer);
  for (std::size_t i = 0; i < references.size(); ++i) {
    const double s = rouge_l_tokens(cand, text::tokenize(references[i]), beta);
    if (label.matched_reference_index < 0 || s > label.rouge_l) {
      label.rouge_l = s;
      label.matched_reference_index = static_cast<int>(i);
    }
  }
  label.is_hallucination = label.rouge_l < threshold;
  return label;
}

inline HallucinationLabel label_record(const data::RunRecord& record,
                                       double threshold = kDefaultThreshold, double beta = 1.0) {
  return label_answer(record.primary_answer, record.references, threshold, beta);
}

}  // namespace eruq::annotation
