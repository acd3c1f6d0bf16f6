#pragma once

// Per-record computation of every uncertainty score plus the ROUGE-L label.
// Every method is oriented so that a higher score means more uncertainty.

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "eruq/annotation.hpp"
#include "eruq/data_model.hpp"
#include "eruq/metrics.hpp"
#include "eruq/semantic.hpp"
#include "eruq/spectral.hpp"

namespace eruq::scoring {

inline constexpr std::string_view kEffectiveRank = "er";
inline constexpr std::string_view kEigenscore = "es";
inline constexpr std::string_view kLengthNormalizedEntropy = "lne";
inline constexpr std::string_view kDiscreteSemanticEntropy = "dse";
inline constexpr std::string_view kSemanticEntropy = "se";
// Externally computed scores are requested as "ext:<name>" and read from the
// samples' external_scores.
inline constexpr std::string_view kExternalPrefix = "ext:";

enum class ClusterSource { Ingested, ExactMatch };

struct ScoringConfig {
  std::set<std::string> methods{"er", "es", "lne", "dse", "se"};
  double alpha = spectral::kDefaultAlpha;
  double rouge_threshold = annotation::kDefaultThreshold;
  double rouge_beta = 1.0;
  ClusterSource cluster_source = ClusterSource::ExactMatch;
  unsigned parallelism = 1;
  // +1: a larger external value already means more uncertain; -1: flip it.
  // Every requested external method must be declared here.
  std::map<std::string, int> external_orientation;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be positive");
    if (!(rouge_threshold > 0.0 && rouge_threshold <= 1.0)) {
      throw ValidationError("rouge threshold must be in (0, 1]");
    }
    if (!(rouge_beta > 0.0)) throw ValidationError("rouge beta must be positive");
    if (parallelism < 1) throw ValidationError("parallelism must be at least 1");
    if (methods.empty()) throw ValidationError("no methods requested");
    for (const auto& m : methods) {
      if (m.starts_with(kExternalPrefix)) {
        const auto name = m.substr(kExternalPrefix.size());
        auto it = external_orientation.find(name);
        if (it == external_orientation.end()) {
          throw ValidationError("external method '" + name + "' needs a declared orientation (+1 or -1)");
        }
        if (it->second != 1 && it->second != -1) {
          throw ValidationError("orientation of '" + name + "' must be +1 or -1");
        }
      } else if (m != kEffectiveRank && m != kEigenscore && m != kLengthNormalizedEntropy &&
                 m != kDiscreteSemanticEntropy && m != kSemanticEntropy) {
        throw ValidationError("unknown method '" + m + "'");
      }
    }
  }
};

struct MethodScores {
  std::map<std::string, std::optional<double>> scores;
  std::map<std::string, std::string> unavailable;

  std::size_t available() const {
    std::size_t n = 0;
    for (const auto& [_, v] : scores) n += v ? 1 : 0;
    return n;
  }
};

namespace detail {

inline std::optional<semantic::ClusterAssignment> clusters_for(const data::RunRecord& r,
                                                              ClusterSource src) {
  if (src == ClusterSource::ExactMatch) return semantic::exact_match_clusters(r.samples);
  return semantic::ingested_clusters(r.samples);
}

inline bool all_have_logprobs(const data::RunRecord& r) {
  for (const auto& s : r.samples)
    if (s.token_logprobs.empty()) return false;
  return true;
}

}  // namespace detail

// `embeddings` may be null when the record has none; embedding methods are
// then reported unavailable. Throws DomainError when nothing is computable.
inline MethodScores score_record(const data::RunRecord& record, const data::EmbeddingSet* embeddings,
                                 const ScoringConfig& config) {
  MethodScores out;
  const auto unavailable = [&](const std::string& m, std::string why) {
    out.scores[m] = std::nullopt;
    out.unavailable[m] = std::move(why);
  };

  std::optional<spectral::EmbeddingMatrix> matrix;
  if (embeddings && embeddings->rows() >= 2) matrix = spectral::build_matrix(*embeddings);
  const std::string no_matrix = embeddings ? "needs at least two embeddings" : "no embeddings";

  std::optional<semantic::ClusterAssignment> clusters;
  bool clusters_tried = false;
  const auto get_clusters = [&]() -> const std::optional<semantic::ClusterAssignment>& {
    if (!clusters_tried) {
      clusters = detail::clusters_for(record, config.cluster_source);
      clusters_tried = true;
    }
    return clusters;
  };
  const bool logprobs = detail::all_have_logprobs(record);

  for (const auto& m : config.methods) {
    try {
      if (m == kEffectiveRank) {
        if (!matrix) { unavailable(m, no_matrix); continue; }
        out.scores[m] = spectral::effective_rank(spectral::singular_spectrum(*matrix)).effective_rank;
      } else if (m == kEigenscore) {
        if (!matrix) { unavailable(m, no_matrix); continue; }
        out.scores[m] = spectral::eigenscore(*matrix, config.alpha).score;
      } else if (m == kLengthNormalizedEntropy) {
        if (!logprobs) { unavailable(m, "needs token log-probabilities"); continue; }
        out.scores[m] = semantic::length_normalized_entropy(record.samples);
      } else if (m == kDiscreteSemanticEntropy) {
        const auto& c = get_clusters();
        if (!c) { unavailable(m, "needs cluster ids on every sample"); continue; }
        out.scores[m] = semantic::discrete_semantic_entropy(*c);
      } else if (m == kSemanticEntropy) {
        const auto& c = get_clusters();
        if (!c) { unavailable(m, "needs cluster ids on every sample"); continue; }
        if (!logprobs) { unavailable(m, "SE requires token probabilities"); continue; }
        out.scores[m] = semantic::semantic_entropy(*c, record.samples);
      } else if (m.starts_with(kExternalPrefix)) {
        const auto name = m.substr(kExternalPrefix.size());
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& s : record.samples) {
          if (auto it = s.external_scores.find(name); it != s.external_scores.end()) {
            sum += it->second;
            ++count;
          }
        }
        if (count == 0) { unavailable(m, "no sample carries external score '" + name + "'"); continue; }
        const int sign = config.external_orientation.at(name);
        out.scores[m] = sign * (sum / static_cast<double>(count));
      }
    } catch (const DomainError& e) {
      unavailable(m, e.what());
    }
  }
  if (out.available() == 0) {
    throw DomainError("record '" + record.record_id + "': no requested method is computable");
  }
  return out;
}

struct RecordFailure {
  std::string record_id;
  std::string message;
};

struct ScoringResult {
  metrics::ScoredDataset scored;
  std::vector<RecordFailure> failures;
  std::size_t attempted = 0;

  // More than 10% of the records could not be scored.
  bool run_failed() const { return failures.size() * 10 > attempted; }
};

// Scores every record; output order follows the records file regardless of
// the parallelism degree.
inline ScoringResult score_dataset(const data::Dataset& ds, const ScoringConfig& config) {
  config.validate();
  std::vector<std::optional<data::RunRecord>> records;
  std::vector<RecordFailure> parse_failures;
  {
    std::ifstream in(ds.records_path());
    if (!in) throw IoError("cannot open records file " + ds.records_path().string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        auto r = data::parse_record_line(line, line_no);
        data::validate_record(r);
        records.emplace_back(std::move(r));
      } catch (const Error& e) {
        records.emplace_back(std::nullopt);
        parse_failures.push_back({"line " + std::to_string(line_no), e.what()});
      }
    }
  }

  std::vector<data::BlockInfo> blocks;
  {
    std::ifstream in(ds.embedding_path(), std::ios::binary);
    if (!in) throw IoError("cannot open embedding file " + ds.embedding_path().string());
    blocks = data::scan_embeddings(in);
  }
  std::unordered_map<std::string, const data::BlockInfo*> index;
  for (const auto& b : blocks) index.emplace(b.record_id, &b);

  std::vector<std::optional<metrics::ScoredRecord>> rows(records.size());
  std::vector<std::optional<RecordFailure>> errors(records.size());

  const auto work = [&](std::ifstream& emb, std::size_t i) {
    const auto& r = *records[i];
    try {
      auto it = index.find(r.embedding_ref);
      std::optional<data::EmbeddingSet> set;
      if (it != index.end()) set = data::read_block(emb, *it->second);
      auto ms = score_record(r, set ? &*set : nullptr, config);
      metrics::ScoredRecord row;
      row.record_id = r.record_id;
      row.scores = std::move(ms.scores);
      row.unavailable = std::move(ms.unavailable);
      row.label = annotation::label_record(r, config.rouge_threshold, config.rouge_beta);
      rows[i] = std::move(row);
    } catch (const Error& e) {
      errors[i] = RecordFailure{r.record_id, e.what()};
    }
  };

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i]) todo.push_back(i);

  const unsigned threads = std::max(1u, std::min<unsigned>(config.parallelism, static_cast<unsigned>(todo.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  const auto worker = [&] {
    try {
      std::ifstream emb(ds.embedding_path(), std::ios::binary);
      if (!emb) throw IoError("cannot open embedding file " + ds.embedding_path().string());
      for (std::size_t k; (k = next.fetch_add(1)) < todo.size();) work(emb, todo[k]);
    } catch (...) {
      std::lock_guard lock(fatal_mu);
      if (!fatal) fatal = std::current_exception();
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  ScoringResult result;
  result.scored.name = ds.manifest.dataset_name;
  result.attempted = records.size();
  result.failures = std::move(parse_failures);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (rows[i]) result.scored.records.push_back(std::move(*rows[i]));
    if (errors[i]) result.failures.push_back(std::move(*errors[i]));
  }
  return result;
}

}  // namespace eruq::scoring
