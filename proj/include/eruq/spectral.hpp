#pragma once

// Effective rank of an ensemble of hidden-state embeddings and the Eigenscore
// baseline.
//
// Embeddings are stacked as the columns of an n x m matrix A. The singular
// values sigma_i of A, normalized to p_i = sigma_i / sum_j sigma_j, define a
// distribution whose Shannon entropy H (nats) measures how many independent
// directions the ensemble spreads over; exp(H) is the effective rank,
// 1 <= exp(H) <= rank(A).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "eruq/data_model.hpp"
#include "eruq/error.hpp"

namespace eruq::spectral {

// Column i is one embedding a_i. Entries are finite.
using EmbeddingMatrix = Eigen::MatrixXd;

// Singular values, non-increasing, non-negative, finite.
class SingularSpectrum {
 public:
  SingularSpectrum() = default;

  explicit SingularSpectrum(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
        throw DomainError("singular value " + std::to_string(i) + " is negative or non-finite");
      }
      if (i > 0 && values_[i] > values_[i - 1]) {
        throw DomainError("singular values must be non-increasing");
      }
    }
  }

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

struct EffectiveRankResult {
  std::vector<double> probabilities;
  double entropy_nats = 0.0;
  double effective_rank = 1.0;
};

struct EigenscoreResult {
  double score = 0.0;
  double alpha = 0.0;
  std::vector<double> eigenvalues;  // centered Gram, descending, clamped >= 0
};

inline constexpr double kDefaultAlpha = 1e-3;

// Columns follow the stored row order: response-major, then layer.
inline EmbeddingMatrix build_matrix(const data::EmbeddingSet& set) {
  EmbeddingMatrix a(set.n(), static_cast<Eigen::Index>(set.rows()));
  for (std::size_t c = 0; c < set.rows(); ++c) {
    const auto row = set.row(c);
    for (std::size_t r = 0; r < row.size(); ++r) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[r];
  }
  return a;
}

inline void require_finite(const EmbeddingMatrix& a) {
  if (a.size() == 0) throw DomainError("empty embedding matrix");
  if (!a.allFinite()) throw DomainError("embedding matrix has a non-finite entry");
}

// All min(n, m) singular values, descending. One-sided Jacobi SVD without
// singular vectors; accurate to a few ulps relative to sigma_1.
inline SingularSpectrum singular_spectrum(const EmbeddingMatrix& a) {
  require_finite(a);
  Eigen::JacobiSVD<EmbeddingMatrix> svd(a);  // values only
  const auto& sv = svd.singularValues();
  std::vector<double> values(sv.data(), sv.data() + sv.size());
  // Jacobi returns sorted values; re-sort in case of ties broken by round-off.
  std::sort(values.begin(), values.end(), std::greater<>());
  for (auto& v : values) v = std::max(v, 0.0);
  return SingularSpectrum(std::move(values));
}

struct EffectiveRankOptions {
  // Diagnostic only: drop sigma_i < truncate_relative * sigma_1 before
  // normalizing. Off by default; the score uses the full spectrum.
  std::optional<double> truncate_relative;
};

// Entropy of a probability vector in nats, 0 ln 0 = 0.
inline double shannon_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double pi : p) {
    if (pi > 0.0) h -= pi * std::log(pi);
  }
  return h;
}

inline EffectiveRankResult effective_rank(const SingularSpectrum& spectrum,
                                          const EffectiveRankOptions& opts = {}) {
  const auto values = spectrum.values();
  const double floor = opts.truncate_relative && !values.empty()
                           ? *opts.truncate_relative * values.front()
                           : 0.0;
  double total = 0.0;
  for (double s : values) {
    if (s >= floor) total += s;
  }
  if (!(total > 0.0)) throw DomainError("zero matrix has no defined effective rank");

  EffectiveRankResult out;
  out.probabilities.reserve(values.size());
  for (double s : values) out.probabilities.push_back(s >= floor ? s / total : 0.0);
  out.entropy_nats = shannon_entropy(out.probabilities);
  out.effective_rank = std::exp(out.entropy_nats);
  return out;
}

inline EffectiveRankResult effective_rank(const EmbeddingMatrix& a) {
  return effective_rank(singular_spectrum(a));
}

// Mean log of the regularized eigenvalues of the centered m x m Gram matrix.
// Larger means the embeddings are more dispersed.
inline EigenscoreResult eigenscore(const EmbeddingMatrix& a, double alpha = kDefaultAlpha) {
  require_finite(a);
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive");
  const auto m = a.cols();
  if (m < 2) throw DomainError("eigenscore needs at least two embeddings");

  const Eigen::VectorXd mean = a.rowwise().mean();
  const EmbeddingMatrix centered = a.colwise() - mean;
  const Eigen::MatrixXd gram = centered.transpose() * centered;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigen-decomposition did not converge");

  EigenscoreResult out;
  out.alpha = alpha;
  out.eigenvalues.resize(static_cast<std::size_t>(m));
  double sum_log = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double lambda = std::max(eig.eigenvalues()(i), 0.0);  // ascending from Eigen
    out.eigenvalues[static_cast<std::size_t>(m - 1 - i)] = lambda;
    sum_log += std::log(lambda + alpha);
  }
  out.score = sum_log / static_cast<double>(m);
  return out;
}

// Mean effective rank over every run of `window` consecutive layer vectors.
// Column j of `layers` is the hidden state at layer j.
inline double layer_window_erank(const EmbeddingMatrix& layers, std::size_t window) {
  if (window < 2) throw DomainError("window must be at least 2");
  const auto count = static_cast<std::size_t>(layers.cols());
  if (count < window) {
    throw DomainError("need at least " + std::to_string(window) + " layer vectors, got " +
                      std::to_string(count));
  }
  double sum = 0.0;
  const std::size_t windows = count - window + 1;
  for (std::size_t start = 0; start < windows; ++start) {
    sum += effective_rank(EmbeddingMatrix(layers.middleCols(static_cast<Eigen::Index>(start),
                                                            static_cast<Eigen::Index>(window))))
               .effective_rank;
  }
  return sum / static_cast<double>(windows);
}

}  // namespace eruq::spectral
