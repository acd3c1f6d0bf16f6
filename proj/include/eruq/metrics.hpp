#pragma once

// Detector evaluation. Hallucinated records are the positive class: a good
// uncertainty score ranks them above correct ones.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eruq/annotation.hpp"
#include "eruq/error.hpp"

namespace eruq::metrics {

// Mann-Whitney statistic kept as exact integers: twice_u counts 2 per
// (positive > negative) pair and 1 per tie.
struct RankStatistic {
  std::uint64_t twice_u = 0;
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;
};

inline RankStatistic rank_statistic(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw DomainError("scores and labels differ in length");
  for (double s : scores) {
    if (std::isnan(s)) throw DomainError("AUROC undefined for NaN scores");
  }
  RankStatistic st;
  for (bool l : labels) (l ? st.n_pos : st.n_neg)++;
  if (st.n_pos == 0 || st.n_neg == 0) throw DomainError("AUROC undefined: labels contain a single class");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mid-ranks doubled so they stay integral: a tie group occupying 1-based
  // ranks i+1..j gets rank (i+1+j)/2, i.e. doubled rank i+1+j.
  std::uint64_t pos_rank2 = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t rank2 = i + 1 + j;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) pos_rank2 += rank2;
    }
    i = j;
  }
  st.twice_u = pos_rank2 - st.n_pos * (st.n_pos + 1);
  return st;
}

// Ratio of the rank statistic. The smaller side is divided out and the larger
// obtained as its complement, so AUROC(l) + AUROC(!l) == 1 holds exactly.
inline double auroc_from(const RankStatistic& st) {
  const std::uint64_t denom = 2 * st.n_pos * st.n_neg;
  const std::uint64_t num = st.twice_u;
  if (2 * num <= denom) return static_cast<double>(num) / static_cast<double>(denom);
  return 1.0 - static_cast<double>(denom - num) / static_cast<double>(denom);
}

inline double auroc(std::span<const double> scores, const std::vector<bool>& labels) {
  return auroc_from(rank_statistic(scores, labels));
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// Thresholds swept from the highest score down; tied scores move together.
inline std::vector<RocPoint> roc_curve(std::span<const double> scores, const std::vector<bool>& labels) {
  const auto st = rank_statistic(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> pts{{0.0, 0.0}};
  std::uint64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp : fp)++;
      ++j;
    }
    pts.push_back({static_cast<double>(fp) / static_cast<double>(st.n_neg),
                   static_cast<double>(tp) / static_cast<double>(st.n_pos)});
    i = j;
  }
  return pts;
}

struct BootstrapInterval {
  double low = 0.0;
  double high = 0.0;
  std::size_t iterations = 0;
  std::size_t redraws = 0;  // single-class resamples that were discarded
  bool excessive_redraws() const { return redraws * 10 > iterations; }
};

namespace detail {

// Linear interpolation between order statistics at q * (n - 1).
inline double percentile(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

// Percentile bootstrap 95% interval over records resampled with replacement.
inline BootstrapInterval bootstrap_ci(std::span<const double> scores, const std::vector<bool>& labels,
                                      std::size_t iterations, std::uint64_t seed) {
  rank_statistic(scores, labels);  // preconditions
  if (iterations < 100) throw DomainError("bootstrap needs at least 100 iterations");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
  BootstrapInterval out;
  out.iterations = iterations;
  std::vector<double> values;
  values.reserve(iterations);
  std::vector<double> s(scores.size());
  std::vector<bool> l(scores.size());
  const std::size_t max_redraws = 1000 * iterations;
  while (values.size() < iterations) {
    std::size_t pos = 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      const auto idx = pick(rng);
      s[k] = scores[idx];
      l[k] = labels[idx];
      pos += labels[idx] ? 1 : 0;
    }
    if (pos == 0 || pos == scores.size()) {
      if (++out.redraws > max_redraws) throw DomainError("bootstrap cannot draw two-class resamples");
      continue;
    }
    values.push_back(auroc(s, l));
  }
  out.low = detail::percentile(values, 0.025);
  out.high = detail::percentile(values, 0.975);
  return out;
}

// ---------------------------------------------------------------------------
// Scored datasets

struct ScoredRecord {
  std::string record_id;
  std::map<std::string, std::optional<double>> scores;  // nullopt = unavailable
  std::map<std::string, std::string> unavailable;        // method -> reason
  annotation::HallucinationLabel label;

  bool operator==(const ScoredRecord&) const = default;
};

struct ScoredDataset {
  std::string name;
  std::vector<ScoredRecord> records;

  bool operator==(const ScoredDataset&) const = default;
};

inline nlohmann::json to_json(const annotation::HallucinationLabel& l) {
  return {{"rouge_l", l.rouge_l},
          {"is_hallucination", l.is_hallucination},
          {"matched_reference_index", l.matched_reference_index}};
}

inline annotation::HallucinationLabel label_from_json(const nlohmann::json& j) {
  annotation::HallucinationLabel l;
  l.rouge_l = j.at("rouge_l").get<double>();
  l.is_hallucination = j.at("is_hallucination").get<bool>();
  l.matched_reference_index = j.value("matched_reference_index", -1);
  return l;
}

inline nlohmann::json to_json(const ScoredRecord& r) {
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [m, v] : r.scores) scores[m] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  nlohmann::json j{{"record_id", r.record_id}, {"scores", scores}, {"label", to_json(r.label)}};
  if (!r.unavailable.empty()) j["unavailable"] = r.unavailable;
  return j;
}

inline ScoredRecord scored_record_from_json(const nlohmann::json& j) {
  ScoredRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  for (const auto& [m, v] : j.at("scores").items()) {
    r.scores[m] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
  }
  if (j.contains("unavailable")) r.unavailable = j.at("unavailable").get<std::map<std::string, std::string>>();
  r.label = label_from_json(j.at("label"));
  return r;
}

inline void write_scored(const ScoredDataset& ds, std::ostream& out) {
  for (const auto& r : ds.records) out << to_json(r).dump() << '\n';
  if (!out) throw IoError("failed writing scored dataset");
}

inline ScoredDataset read_scored(std::istream& in, std::string name = {}) {
  ScoredDataset ds{std::move(name), {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      ds.records.push_back(scored_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Evaluation tables

struct EvalRow {
  std::string dataset;
  std::string method;
  std::optional<double> auroc;
  std::size_t n = 0;
  std::size_t n_pos = 0;
  std::optional<BootstrapInterval> ci;
  std::string error;  // non-empty when auroc is absent
};

struct EvalOptions {
  std::size_t bootstrap_iterations = 0;  // 0 disables the interval
  std::uint64_t seed = 0;
};

inline EvalRow evaluate_method(const ScoredDataset& ds, const std::string& method,
                               const EvalOptions& opts = {}) {
  EvalRow row;
  row.dataset = ds.name;
  row.method = method;
  row.n = ds.records.size();
  std::vector<double> scores;
  std::vector<bool> labels;
  std::size_t missing = 0;
  for (const auto& r : ds.records) {
    row.n_pos += r.label.is_hallucination ? 1 : 0;
    auto it = r.scores.find(method);
    if (it == r.scores.end() || !it->second) {
      ++missing;
      continue;
    }
    scores.push_back(*it->second);
    labels.push_back(r.label.is_hallucination);
  }
  if (missing > 0) {
    row.error = "method '" + method + "' has no score for " + std::to_string(missing) + " of " +
                std::to_string(row.n) + " records";
    return row;
  }
  try {
    row.auroc = auroc(scores, labels);
    if (opts.bootstrap_iterations > 0) {
      row.ci = bootstrap_ci(scores, labels, opts.bootstrap_iterations, opts.seed);
    }
  } catch (const DomainError& e) {
    row.auroc.reset();
    row.error = e.what();
  }
  return row;
}

// One row per method, ordered by method name.
inline std::vector<EvalRow> evaluate(const ScoredDataset& ds, std::vector<std::string> methods,
                                     const EvalOptions& opts = {}) {
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  std::vector<EvalRow> rows;
  for (const auto& m : methods) rows.push_back(evaluate_method(ds, m, opts));
  return rows;
}

// Per-dataset rows followed by an "Average" row per method (mean AUROC over
// the datasets where it is defined).
inline std::vector<EvalRow> evaluate_many(std::span<const ScoredDataset> datasets,
                                          const std::vector<std::string>& methods,
                                          const EvalOptions& opts = {}) {
  std::vector<EvalRow> rows;
  for (const auto& ds : datasets) {
    auto r = evaluate(ds, methods, opts);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (datasets.size() < 2) return rows;
  std::set<std::string> names(methods.begin(), methods.end());
  for (const auto& m : names) {
    EvalRow avg;
    avg.dataset = "Average";
    avg.method = m;
    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& r : rows) {
      if (r.method != m || r.dataset == "Average") continue;
      avg.n += r.n;
      avg.n_pos += r.n_pos;
      if (r.auroc) {
        sum += *r.auroc;
        ++defined;
      }
    }
    if (defined == datasets.size()) {
      avg.auroc = sum / static_cast<double>(defined);
    } else {
      avg.error = "AUROC undefined on " + std::to_string(datasets.size() - defined) + " dataset(s)";
    }
    rows.push_back(avg);
  }
  return rows;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline void write_table_csv(std::span<const EvalRow> rows, std::ostream& out) {
  out << "dataset,method,auroc,n,n_pos,ci_low,ci_high,error\n";
  for (const auto& r : rows) {
    out << detail::csv_field(r.dataset) << ',' << detail::csv_field(r.method) << ','
        << (r.auroc ? detail::format_double(*r.auroc) : "") << ',' << r.n << ',' << r.n_pos << ','
        << (r.ci ? detail::format_double(r.ci->low) : "") << ','
        << (r.ci ? detail::format_double(r.ci->high) : "") << ',' << detail::csv_field(r.error)
        << '\n';
  }
}

}  // namespace eruq::metrics
