#pragma once

// Monte-Carlo laboratory for the aleatoric/epistemic decomposition of
// hidden-state variance in a toy autoregressive model:
//
//   y_t ~ N(W_emit h_{t-1}, s^2 I_k)
//   h_t = phi(gamma * (W_h h_{t-1} + W_y y_t) + b),   phi in {identity, tanh}
//
// Parameters theta = (W_h, W_y, b, W_emit) are drawn from an isotropic
// Gaussian posterior N(mu, tau^2 I). For each step the estimator reports
//
//   total     = tr Cov(h_t)                   (pooled over theta and noise)
//   aleatoric = E_theta[ tr Cov(h_t | theta) ]
//   epistemic = tr Cov_theta( E[h_t | theta] )
//
// with unbiased (n-1) covariance estimators. The vector-valued variance is
// always reduced to the trace of the covariance.
//
// Random streams: the parameter draw for theta sample i comes from stream
// (seed, i); the emission noise of trajectory j comes from stream (seed, j)
// and is shared by every theta sample (common random numbers). With tau^2 = 0
// every theta sample then reproduces the same trajectories and the epistemic
// term is exactly zero.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "eruq/error.hpp"

namespace eruq::sim {

enum class Nonlinearity { Linear, Tanh };

inline std::string_view to_string(Nonlinearity n) {
  return n == Nonlinearity::Linear ? "linear" : "tanh";
}

struct Parameters {
  Eigen::MatrixXd w_h;     // d x d
  Eigen::MatrixXd w_y;     // d x k
  Eigen::VectorXd b;       // d
  Eigen::MatrixXd w_emit;  // k x d

  Eigen::Index d() const { return w_h.rows(); }
  Eigen::Index k() const { return w_y.cols(); }
  static Eigen::Index count(Eigen::Index d, Eigen::Index k) { return d * d + d * k + d + k * d; }
  Eigen::Index count() const { return count(d(), k()); }

  // Flattened order: W_h, W_y, b, W_emit, each column-major.
  Eigen::VectorXd flatten() const {
    Eigen::VectorXd v(count());
    Eigen::Index o = 0;
    for (const auto* m : {&w_h, &w_y}) {
      v.segment(o, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
      o += m->size();
    }
    v.segment(o, b.size()) = b;
    o += b.size();
    v.segment(o, w_emit.size()) = Eigen::Map<const Eigen::VectorXd>(w_emit.data(), w_emit.size());
    return v;
  }

  static Parameters unflatten(Eigen::Index d, Eigen::Index k, const Eigen::VectorXd& v) {
    if (v.size() != count(d, k)) throw DomainError("parameter vector has the wrong length");
    Parameters p;
    Eigen::Index o = 0;
    p.w_h = Eigen::Map<const Eigen::MatrixXd>(v.data() + o, d, d);
    o += d * d;
    p.w_y = Eigen::Map<const Eigen::MatrixXd>(v.data() + o, d, k);
    o += d * k;
    p.b = v.segment(o, d);
    o += d;
    p.w_emit = Eigen::Map<const Eigen::MatrixXd>(v.data() + o, k, d);
    return p;
  }
};

struct ToyModelSpec {
  Eigen::Index d = 8;
  Eigen::Index k = 4;
  Nonlinearity nonlinearity = Nonlinearity::Tanh;
  double gamma = 1.0;           // expansion gain on the pre-activation
  double emission_noise = 0.1;  // s

  void validate() const {
    if (d < 1 || k < 1) throw DomainError("model dimensions must be positive");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be positive");
    if (!(emission_noise >= 0.0) || !std::isfinite(emission_noise)) {
      throw DomainError("emission noise must be non-negative");
    }
  }
};

struct PosteriorSpec {
  Parameters mean;
  double tau2 = 0.0;

  double trace() const { return tau2 * static_cast<double>(mean.count()); }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { Noise = 1, Theta = 2, Init = 3 };

inline std::uint64_t stream_seed(std::uint64_t seed, Stream kind, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(kind)) ^ index);
}

inline void check_params(const ToyModelSpec& spec, const Parameters& p) {
  if (p.w_h.rows() != spec.d || p.w_h.cols() != spec.d || p.w_y.rows() != spec.d ||
      p.w_y.cols() != spec.k || p.b.size() != spec.d || p.w_emit.rows() != spec.k ||
      p.w_emit.cols() != spec.d) {
    throw DomainError("parameter shapes do not match the model dimensions");
  }
  if (!p.w_h.allFinite() || !p.w_y.allFinite() || !p.b.allFinite() || !p.w_emit.allFinite()) {
    throw DomainError("parameters must be finite");
  }
}

}  // namespace detail

// Mean parameters with W_h ~ N(0, 1/d), W_y ~ N(0, 1/k), W_emit ~ N(0, 1/d), b = 0.
inline Parameters random_parameters(Eigen::Index d, Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 rng(detail::stream_seed(seed, detail::Stream::Init, 0));
  std::normal_distribution<double> n01;
  const auto fill = [&](auto& m, double scale) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = scale * n01(rng);
  };
  Parameters p;
  p.w_h.resize(d, d);
  p.w_y.resize(d, k);
  p.w_emit.resize(k, d);
  fill(p.w_h, 1.0 / std::sqrt(static_cast<double>(d)));
  fill(p.w_y, 1.0 / std::sqrt(static_cast<double>(k)));
  fill(p.w_emit, 1.0 / std::sqrt(static_cast<double>(d)));
  p.b.resize(d);
  fill(p.b, 1.0 / std::sqrt(static_cast<double>(d)));
  return p;
}

inline Parameters draw_parameters(const PosteriorSpec& post, std::uint64_t seed, std::uint64_t index) {
  if (post.tau2 == 0.0) return post.mean;
  std::mt19937_64 rng(detail::stream_seed(seed, detail::Stream::Theta, index));
  std::normal_distribution<double> n01;
  Eigen::VectorXd v = post.mean.flatten();
  const double tau = std::sqrt(post.tau2);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += tau * n01(rng);
  return Parameters::unflatten(post.mean.d(), post.mean.k(), v);
}

inline Eigen::VectorXd transition(const ToyModelSpec& spec, const Parameters& p,
                                  const Eigen::VectorXd& h, const Eigen::VectorXd& y) {
  Eigen::VectorXd z = spec.gamma * (p.w_h * h + p.w_y * y) + p.b;
  if (spec.nonlinearity == Nonlinearity::Tanh) z = z.array().tanh().matrix();
  return z;
}

// states[t - 1] is d x M: column j is trajectory j at step t.
struct TrajectoryBundle {
  std::vector<Eigen::MatrixXd> states;
  std::size_t steps() const { return states.size(); }
  Eigen::Index trajectories() const { return states.empty() ? 0 : states.front().cols(); }
};

inline TrajectoryBundle simulate_trajectories(const ToyModelSpec& spec, const Parameters& p,
                                              const Eigen::VectorXd& h0, int steps, int trajectories,
                                              std::uint64_t seed) {
  spec.validate();
  detail::check_params(spec, p);
  if (steps < 1) throw DomainError("need at least one step");
  if (trajectories < 1) throw DomainError("need at least one trajectory");
  if (h0.size() != spec.d || !h0.allFinite()) throw DomainError("initial state has the wrong shape");

  const auto m = static_cast<std::size_t>(trajectories);
  std::vector<std::mt19937_64> rngs;
  std::vector<std::normal_distribution<double>> normals(m);
  rngs.reserve(m);
  for (std::size_t j = 0; j < m; ++j) rngs.emplace_back(detail::stream_seed(seed, detail::Stream::Noise, j));

  TrajectoryBundle out;
  out.states.reserve(static_cast<std::size_t>(steps));
  Eigen::MatrixXd h = h0.replicate(1, trajectories);
  Eigen::MatrixXd eps(spec.k, trajectories);
  for (int t = 1; t <= steps; ++t) {
    for (std::size_t j = 0; j < m; ++j)
      for (Eigen::Index r = 0; r < spec.k; ++r) eps(r, static_cast<Eigen::Index>(j)) = normals[j](rngs[j]);
    const Eigen::MatrixXd y = p.w_emit * h + spec.emission_noise * eps;
    Eigen::MatrixXd z = (spec.gamma * (p.w_h * h + p.w_y * y)).colwise() + p.b;
    if (spec.nonlinearity == Nonlinearity::Tanh) z = z.array().tanh().matrix();
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double norm = z.col(j).norm();
      if (!std::isfinite(norm) || norm > 1e6) {
        throw OverflowError(t, "hidden state diverged (norm > 1e6) in trajectory " + std::to_string(j));
      }
    }
    h = z;
    out.states.push_back(h);
  }
  return out;
}

// ||J_y||_F^2 of the transition at (h, y) by central differences in y.
inline double jacobian_y_frobenius(const ToyModelSpec& spec, const Parameters& p,
                                   const Eigen::VectorXd& h, const Eigen::VectorXd& y,
                                   double step_size = 1e-5) {
  if (!(step_size > 0.0)) throw DomainError("step size must be positive");
  double sum = 0.0;
  Eigen::VectorXd yp = y, ym = y;
  for (Eigen::Index c = 0; c < y.size(); ++c) {
    yp(c) = y(c) + step_size;
    ym(c) = y(c) - step_size;
    const Eigen::VectorXd col = (transition(spec, p, h, yp) - transition(spec, p, h, ym)) / (2.0 * step_size);
    yp(c) = ym(c) = y(c);
    const double sq = col.squaredNorm();
    if (!std::isfinite(sq)) {
      throw NumericalError("non-finite Jacobian difference at y coordinate " + std::to_string(c));
    }
    sum += sq;
  }
  return sum;
}

namespace detail {

// Unbiased covariance of the columns of x, shifted by column 0 so identical
// columns give an exact zero.
inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& x) {
  const auto n = x.cols();
  if (n < 2) return Eigen::MatrixXd::Zero(x.rows(), x.rows());
  const Eigen::MatrixXd shifted = x.colwise() - x.col(0);
  const Eigen::VectorXd mean = shifted.rowwise().mean();
  const Eigen::MatrixXd c = shifted.colwise() - mean;
  return (c * c.transpose()) / static_cast<double>(n - 1);
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

struct StepEstimate {
  int t = 0;
  double total = 0.0;
  double aleatoric = 0.0;
  double epistemic = 0.0;
  double residual = 0.0;  // total - aleatoric - epistemic
  // Monte-Carlo standard errors (Gaussian approximation; the aleatoric one
  // treats the shared noise across theta samples as fully correlated).
  double se_total = 0.0;
  double se_aleatoric = 0.0;
  double se_epistemic = 0.0;
};

struct DecompositionEstimate {
  std::vector<StepEstimate> steps;
};

struct SimulationConfig {
  int steps = 10;
  int theta_samples = 100;
  int trajectories = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

namespace detail {

struct ThetaRun {
  Parameters theta;
  TrajectoryBundle bundle;
};

inline std::vector<ThetaRun> run_posterior(const ToyModelSpec& spec, const PosteriorSpec& post,
                                           const Eigen::VectorXd& h0, const SimulationConfig& cfg) {
  spec.validate();
  check_params(spec, post.mean);
  if (!(post.tau2 >= 0.0) || !std::isfinite(post.tau2)) throw DomainError("tau2 must be non-negative");
  if (cfg.trajectories < 2) throw DomainError("need at least two trajectories per theta sample");
  if (cfg.theta_samples < 1 || (post.tau2 > 0.0 && cfg.theta_samples < 2)) {
    throw DomainError("need at least two theta samples when tau2 > 0");
  }
  std::vector<ThetaRun> runs(static_cast<std::size_t>(cfg.theta_samples));
  parallel_for(runs.size(), cfg.threads, [&](std::size_t i) {
    runs[i].theta = draw_parameters(post, cfg.seed, i);
    runs[i].bundle = simulate_trajectories(spec, runs[i].theta, h0, cfg.steps, cfg.trajectories, cfg.seed);
  });
  return runs;
}

inline DecompositionEstimate decompose(const std::vector<ThetaRun>& runs, int steps) {
  DecompositionEstimate est;
  const auto n_theta = runs.size();
  const auto n_traj = runs.front().bundle.trajectories();
  const auto d = runs.front().bundle.states.front().rows();
  for (int t = 1; t <= steps; ++t) {
    const auto ti = static_cast<std::size_t>(t - 1);
    StepEstimate s;
    s.t = t;
    Eigen::MatrixXd means(d, static_cast<Eigen::Index>(n_theta));
    Eigen::MatrixXd pooled(d, static_cast<Eigen::Index>(n_theta) * n_traj);
    std::vector<double> within(n_theta);
    double within_frob2 = 0.0;
    for (std::size_t i = 0; i < n_theta; ++i) {
      const auto& x = runs[i].bundle.states[ti];
      means.col(static_cast<Eigen::Index>(i)) = x.rowwise().mean();
      pooled.middleCols(static_cast<Eigen::Index>(i) * n_traj, n_traj) = x;
      const Eigen::MatrixXd c = covariance(x);
      within[i] = c.trace();
      within_frob2 += c.squaredNorm();
    }
    double sum = 0.0;
    for (double w : within) sum += w;
    s.aleatoric = sum / static_cast<double>(n_theta);
    const Eigen::MatrixXd between = covariance(means);
    s.epistemic = between.trace();
    const Eigen::MatrixXd total = covariance(pooled);
    s.total = total.trace();
    s.residual = s.total - s.aleatoric - s.epistemic;

    double spread = 0.0;
    for (double w : within) spread += (w - s.aleatoric) * (w - s.aleatoric);
    const double var_theta = n_theta > 1 ? spread / static_cast<double>(n_theta - 1) : 0.0;
    s.se_aleatoric = std::sqrt(var_theta / static_cast<double>(n_theta) +
                               2.0 * (within_frob2 / static_cast<double>(n_theta)) /
                                   static_cast<double>(n_traj - 1));
    s.se_epistemic = n_theta > 1 ? std::sqrt(2.0 * between.squaredNorm() / static_cast<double>(n_theta - 1)) : 0.0;
    s.se_total = std::sqrt(2.0 * total.squaredNorm() / static_cast<double>(pooled.cols() - 1));
    est.steps.push_back(s);
  }
  return est;
}

}  // namespace detail

inline DecompositionEstimate estimate_decomposition(const ToyModelSpec& spec, const PosteriorSpec& post,
                                                    const Eigen::VectorXd& h0,
                                                    const SimulationConfig& cfg) {
  return detail::decompose(detail::run_posterior(spec, post, h0, cfg), cfg.steps);
}

struct StepDiagnostics {
  StepEstimate estimate;
  double jy_frob2 = 0.0;     // E ||J_y(h_{t-1})||_F^2 at y = E[y_t | h_{t-1}]
  double var_y = 0.0;        // per-coordinate Var(y_t | h_{t-1}) = s^2
  double lemma1_lhs = 0.0;   // aleatoric
  double lemma1_rhs = 0.0;   // E[ ||J_y||_F^2 * Var(y_t | h_{t-1}) ]
  double delta_nonlin = 0.0; // lhs - rhs
  std::optional<bool> lemma1_holds;  // LINEAR only: lhs >= rhs - 3 se
  double gt_frob2 = 0.0;     // ||d E[h_t | theta] / d theta||_F^2 at the posterior mean
  double lemma2_linearization = 0.0;  // tr(G Sigma G^T) = tau^2 ||G||_F^2
  double lemma2_bound = 0.0;          // ||G||_F^2 * tr(Sigma)
  double epsilon = 0.0;               // epistemic - linearization
  bool lemma2_holds = false;          // epistemic <= bound + 3 se
  double noise_floor = 0.0;
  std::optional<double> dominance_ratio;  // aleatoric / epistemic above the floor
};

struct LemmaDiagnostics {
  std::vector<StepDiagnostics> steps;
  Eigen::Index sensitivity_params = 0;  // parameter coordinates entering G_t
};

// Above this many parameters, G_t is estimated over W_h and W_y only.
inline constexpr Eigen::Index kMaxSensitivityParams = 512;

// Below the floor the between-theta spread is not resolved by the sample:
// the variance of the grand mean, plus a relative guard.
inline double epistemic_noise_floor(const StepEstimate& s, std::size_t theta_samples,
                                    std::size_t trajectories) {
  return 1e-12 * s.total + s.aleatoric / static_cast<double>(theta_samples * trajectories);
}

inline LemmaDiagnostics lemma_diagnostics(const ToyModelSpec& spec, const PosteriorSpec& post,
                                          const Eigen::VectorXd& h0, const SimulationConfig& cfg,
                                          double fd_step = 1e-5) {
  const auto runs = detail::run_posterior(spec, post, h0, cfg);
  const auto est = detail::decompose(runs, cfg.steps);
  const double s2 = spec.emission_noise * spec.emission_noise;

  LemmaDiagnostics out;
  out.steps.resize(est.steps.size());

  // Propagation bound ingredients: average over every (theta, trajectory) pair.
  std::vector<double> jy(static_cast<std::size_t>(cfg.steps), 0.0);
  for (const auto& run : runs) {
    for (int t = 1; t <= cfg.steps; ++t) {
      const auto& prev = t == 1 ? h0.replicate(1, run.bundle.trajectories()).eval()
                                : run.bundle.states[static_cast<std::size_t>(t - 2)];
      double acc = 0.0;
      for (Eigen::Index j = 0; j < prev.cols(); ++j) {
        const Eigen::VectorXd h = prev.col(j);
        acc += jacobian_y_frobenius(spec, run.theta, h, run.theta.w_emit * h, fd_step);
      }
      jy[static_cast<std::size_t>(t - 1)] += acc / static_cast<double>(prev.cols());
    }
  }

  // Sensitivity of the mean trajectory at the posterior mean,
  // central differences with shared noise.
  const Eigen::VectorXd mu = post.mean.flatten();
  const Eigen::Index total_params = mu.size();
  Eigen::Index used = total_params;
  if (used > kMaxSensitivityParams) {
    used = std::min(spec.d * spec.d + spec.d * spec.k, kMaxSensitivityParams);
  }
  out.sensitivity_params = used;
  std::vector<double> g2(static_cast<std::size_t>(cfg.steps), 0.0);
  std::vector<std::vector<double>> per_param(static_cast<std::size_t>(used));
  detail::parallel_for(static_cast<std::size_t>(used), cfg.threads, [&](std::size_t pi) {
    const auto idx = static_cast<Eigen::Index>(pi);
    const double h = fd_step * std::max(1.0, std::abs(mu(idx)));
    Eigen::VectorXd plus = mu, minus = mu;
    plus(idx) += h;
    minus(idx) -= h;
    const auto bp = simulate_trajectories(spec, Parameters::unflatten(spec.d, spec.k, plus), h0,
                                          cfg.steps, cfg.trajectories, cfg.seed);
    const auto bm = simulate_trajectories(spec, Parameters::unflatten(spec.d, spec.k, minus), h0,
                                          cfg.steps, cfg.trajectories, cfg.seed);
    auto& col = per_param[pi];
    col.resize(static_cast<std::size_t>(cfg.steps));
    for (std::size_t t = 0; t < col.size(); ++t) {
      const Eigen::VectorXd g = (bp.states[t].rowwise().mean() - bm.states[t].rowwise().mean()) / (2.0 * h);
      col[t] = g.squaredNorm();
    }
  });
  for (const auto& col : per_param)
    for (std::size_t t = 0; t < col.size(); ++t) g2[t] += col[t];

  for (std::size_t t = 0; t < est.steps.size(); ++t) {
    auto& o = out.steps[t];
    o.estimate = est.steps[t];
    o.jy_frob2 = jy[t] / static_cast<double>(runs.size());
    o.var_y = s2;
    o.lemma1_lhs = o.estimate.aleatoric;
    o.lemma1_rhs = o.jy_frob2 * s2;
    o.delta_nonlin = o.lemma1_lhs - o.lemma1_rhs;
    if (spec.nonlinearity == Nonlinearity::Linear) {
      o.lemma1_holds = o.lemma1_lhs >= o.lemma1_rhs - 3.0 * o.estimate.se_aleatoric;
    }
    o.gt_frob2 = g2[t];
    o.lemma2_linearization = post.tau2 * o.gt_frob2;
    o.lemma2_bound = o.gt_frob2 * post.trace();
    o.epsilon = o.estimate.epistemic - o.lemma2_linearization;
    o.lemma2_holds = o.estimate.epistemic <= o.lemma2_bound + 3.0 * o.estimate.se_epistemic;
    o.noise_floor = epistemic_noise_floor(o.estimate, runs.size(),
                                          static_cast<std::size_t>(cfg.trajectories));
    if (o.estimate.epistemic > o.noise_floor) {
      o.dominance_ratio = o.estimate.aleatoric / o.estimate.epistemic;
    }
  }
  return out;
}

// aleatoric / epistemic per step; nullopt where epistemic is below the floor.
inline std::vector<std::optional<double>> dominance_curve(const ToyModelSpec& spec,
                                                          const PosteriorSpec& post,
                                                          const Eigen::VectorXd& h0,
                                                          const SimulationConfig& cfg) {
  if (!(post.tau2 > 0.0)) throw DomainError("dominance needs tau2 > 0");
  const auto est = estimate_decomposition(spec, post, h0, cfg);
  std::vector<std::optional<double>> out;
  for (const auto& s : est.steps) {
    const double floor = epistemic_noise_floor(s, static_cast<std::size_t>(cfg.theta_samples),
                                               static_cast<std::size_t>(cfg.trajectories));
    out.push_back(s.epistemic > floor ? std::optional<double>(s.aleatoric / s.epistemic) : std::nullopt);
  }
  return out;
}

inline void write_decomposition_csv(const LemmaDiagnostics& diag, std::ostream& out) {
  out.precision(17);
  out << "t,total,aleatoric,epistemic,lemma1_lhs,lemma1_rhs,lemma2_bound,dominance_ratio\n";
  for (const auto& s : diag.steps) {
    out << s.estimate.t << ',' << s.estimate.total << ',' << s.estimate.aleatoric << ','
        << s.estimate.epistemic << ',' << s.lemma1_lhs << ',' << s.lemma1_rhs << ',' << s.lemma2_bound
        << ',';
    if (s.dominance_ratio) {
      out << *s.dominance_ratio;
    } else {
      out << "undefined";
    }
    out << '\n';
  }
}

}  // namespace eruq::sim
