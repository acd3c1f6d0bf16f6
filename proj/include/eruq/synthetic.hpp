#pragma once

// Synthetic datasets with a known detector ordering, for exercising the full
// pipeline without a language model.
//
// Each record is hallucinated with probability 1/2. A correct record's
// embeddings all point along one random direction u; a hallucinated record
// spreads its responses over k in [3, 5] mutually orthogonal directions v_c
// (also orthogonal to u). With separation s in [0, 1], response i gets
//
//   correct:       scale * (u + (1 - s) * eta * e_i)
//   hallucinated:  scale * (normalize(s * v_c(i) + (1 - s) * u) + (1 - s) * eta * e_i)
//
// with e_i ~ N(0, I/n). At s = 1 correct records are exactly rank one and
// hallucinated ones are not; at s = 0 both classes share one distribution.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eruq/data_model.hpp"
#include "eruq/error.hpp"

namespace eruq::synthetic {

struct SyntheticConfig {
  std::size_t records = 100;
  std::uint64_t seed = 0;
  double separation = 0.9;
  std::uint32_t dim = 64;         // n
  std::uint32_t responses = 10;   // m1 = N
  double scale = 30.0;
  double noise = 0.5;             // eta
  std::string dataset_name = "synthetic";
};

struct SyntheticDataset {
  std::vector<data::RunRecord> records;
  std::vector<data::EmbeddingBlock> blocks;
  std::vector<bool> hallucinated;  // construction truth, parallel to records
};

namespace detail {

inline std::string record_id(std::size_t i) {
  std::string digits = std::to_string(i);
  return "syn-" + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits;
}

inline Eigen::VectorXd gaussian(std::mt19937_64& rng, Eigen::Index n, double sd) {
  std::normal_distribution<double> dist(0.0, sd);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

// Orthonormal columns via Householder QR of a Gaussian matrix.
inline Eigen::MatrixXd orthonormal(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k) {
  Eigen::MatrixXd g(n, k);
  for (Eigen::Index c = 0; c < k; ++c) g.col(c) = gaussian(rng, n, 1.0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

inline std::vector<double> logprobs(std::mt19937_64& rng, std::size_t tokens, double mean_nll) {
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  std::vector<double> out(tokens);
  for (auto& lp : out) lp = -mean_nll * jitter(rng);
  return out;
}

}  // namespace detail

inline SyntheticDataset make_synthetic(const SyntheticConfig& cfg) {
  if (cfg.records < 10) throw ValidationError("synthetic datasets need at least 10 records");
  if (!(cfg.separation >= 0.0 && cfg.separation <= 1.0)) {
    throw ValidationError("separation must lie in [0, 1]");
  }
  if (cfg.dim < 7 || cfg.responses < 2) throw ValidationError("need dim >= 7 and at least 2 responses");

  std::mt19937_64 master(cfg.seed);
  const double s = cfg.separation;
  const auto n = static_cast<Eigen::Index>(cfg.dim);
  SyntheticDataset out;
  for (std::size_t r = 0; r < cfg.records; ++r) {
    std::mt19937_64 rng(master());
    const bool halluc = std::bernoulli_distribution(0.5)(rng);
    const auto k = static_cast<Eigen::Index>(std::uniform_int_distribution<int>(3, 5)(rng));
    const Eigen::MatrixXd basis = detail::orthonormal(rng, n, k + 1);  // col 0 = u
    const Eigen::VectorXd u = basis.col(0);

    std::vector<std::uint32_t> cluster(cfg.responses, 0);
    if (halluc) {
      for (std::uint32_t i = 0; i < cfg.responses; ++i) cluster[i] = static_cast<std::uint32_t>(i % k);
      std::shuffle(cluster.begin(), cluster.end(), rng);
    }

    data::RunRecord rec;
    rec.record_id = detail::record_id(r);
    rec.question = "synthetic question " + std::to_string(r);
    rec.references = {"answer" + std::to_string(r)};
    rec.primary_answer = halluc ? "wrong" + std::to_string(r) + " a" : rec.references.front();
    rec.embedding_ref = rec.record_id;
    rec.temperature = 1.0;
    rec.model_tag = "synthetic";

    std::vector<float> values;
    values.reserve(std::size_t{cfg.responses} * cfg.dim);
    for (std::uint32_t i = 0; i < cfg.responses; ++i) {
      Eigen::VectorXd dir = u;
      if (halluc) dir = (s * basis.col(cluster[i] + 1) + (1.0 - s) * u).normalized();
      const Eigen::VectorXd e = detail::gaussian(rng, n, 1.0 / std::sqrt(static_cast<double>(n)));
      const Eigen::VectorXd v = cfg.scale * (dir + (1.0 - s) * cfg.noise * e);
      for (Eigen::Index c = 0; c < n; ++c) values.push_back(static_cast<float>(v(c)));

      data::GenerationSample smp;
      if (halluc) {
        smp.text = "wrong" + std::to_string(r) + " " + std::string(1, static_cast<char>('a' + cluster[i]));
        smp.token_logprobs = detail::logprobs(rng, 3, 0.3 + s);
      } else {
        smp.text = (i % 2 == 0 ? "Answer" : "answer") + std::to_string(r) + (i % 3 == 0 ? "." : "");
        smp.token_logprobs = detail::logprobs(rng, 2, 0.3);
      }
      smp.cluster_id = cluster[i];
      rec.samples.push_back(std::move(smp));
    }
    out.blocks.push_back({rec.record_id, data::EmbeddingSet(cfg.responses, 1, cfg.dim,
                                                            data::LayerStrategy::M1, std::move(values))});
    out.records.push_back(std::move(rec));
    out.hallucinated.push_back(halluc);
  }
  return out;
}

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kRecordsName = "records.jsonl";
inline constexpr const char* kEmbeddingsName = "embeddings.bin";

// Writes manifest.json, records.jsonl and embeddings.bin into `dir`.
inline data::DatasetManifest write_dataset(const SyntheticDataset& ds, const std::string& name,
                                           const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / kRecordsName, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / kRecordsName).string());
    data::write_records(ds.records, out);
  }
  {
    std::ofstream out(dir / kEmbeddingsName, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / kEmbeddingsName).string());
    data::write_embeddings(ds.blocks, out);
  }
  data::DatasetManifest m;
  m.dataset_name = name;
  m.record_count = ds.records.size();
  m.embedding_file = kEmbeddingsName;
  m.records_file = kRecordsName;
  data::save_manifest(m, dir / kManifestName);
  return m;
}

}  // namespace eruq::synthetic
