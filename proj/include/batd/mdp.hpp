#pragma once

// Finite MDPs, policy-induced chains, exact linear-prediction operators and
// behavior-policy transition sampling.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "batd/numkit.hpp"

namespace batd {

struct NotIrreducible : Error {
  using Error::Error;
};

/// Generator used for every sampled trajectory. mt19937_64 is fully
/// specified by the standard, so streams are portable.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline constexpr double kStochasticTol = 1e-12;

/// Tensor indexed [s][a][s'] stored flat.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t n_states, std::size_t n_actions, double fill = 0.0)
      : ns_(n_states), na_(n_actions), data_(n_states * n_actions * n_states, fill) {}

  double& operator()(std::size_t s, std::size_t a, std::size_t t) {
    return data_[(s * na_ + a) * ns_ + t];
  }
  double operator()(std::size_t s, std::size_t a, std::size_t t) const {
    return data_[(s * na_ + a) * ns_ + t];
  }
  std::span<const double> outcomes(std::size_t s, std::size_t a) const {
    return {data_.data() + (s * na_ + a) * ns_, ns_};
  }
  std::size_t n_states() const noexcept { return ns_; }
  std::size_t n_actions() const noexcept { return na_; }

 private:
  std::size_t ns_ = 0;
  std::size_t na_ = 0;
  std::vector<double> data_;
};

/// Finite MDP with a per-outcome continuation flag. An outcome with
/// continuation 0 ends an episode: its next state is the restart state and
/// it bootstraps from a zero feature vector. All-ones gives an ordinary
/// continuing MDP.
struct FiniteMdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  Tensor3 P;
  Tensor3 R;
  Tensor3 continuation;
  double gamma = 0.9;

  static FiniteMdp make(std::size_t n_states, std::size_t n_actions, double gamma) {
    FiniteMdp m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.P = Tensor3(n_states, n_actions, 0.0);
    m.R = Tensor3(n_states, n_actions, 0.0);
    m.continuation = Tensor3(n_states, n_actions, 1.0);
    m.gamma = gamma;
    return m;
  }

  void validate() const {
    if (n_states == 0 || n_actions == 0) throw InvalidModel("mdp: empty state or action space");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidModel("mdp: gamma must lie in (0,1)");
    if (P.n_states() != n_states || P.n_actions() != n_actions || R.n_states() != n_states ||
        R.n_actions() != n_actions || continuation.n_states() != n_states ||
        continuation.n_actions() != n_actions)
      throw DimensionMismatch("mdp: tensor shapes disagree with sizes");
    for (std::size_t s = 0; s < n_states; ++s)
      for (std::size_t a = 0; a < n_actions; ++a) {
        double total = 0.0;
        for (std::size_t t = 0; t < n_states; ++t) {
          const double p = P(s, a, t);
          if (!(p >= 0.0 && p <= 1.0)) throw InvalidModel("mdp: probability outside [0,1]");
          if (!std::isfinite(R(s, a, t))) throw InvalidModel("mdp: non-finite reward");
          const double c = continuation(s, a, t);
          if (c != 0.0 && c != 1.0) throw InvalidModel("mdp: continuation must be 0 or 1");
          total += p;
        }
        if (std::abs(total - 1.0) > kStochasticTol)
          throw InvalidModel("mdp: P[" + std::to_string(s) + "][" + std::to_string(a) +
                             "] does not sum to 1");
      }
  }
};

/// Target (pi) and behavior (mu) policies, rows indexed by state.
struct PolicyPair {
  Matrix pi;
  Matrix mu;

  void validate(const FiniteMdp& mdp) const {
    for (const Matrix* m : {&pi, &mu}) {
      if (m->rows() != mdp.n_states || m->cols() != mdp.n_actions)
        throw DimensionMismatch("policy: shape must be states x actions");
      for (std::size_t s = 0; s < m->rows(); ++s) {
        double total = 0.0;
        for (double p : m->row(s)) {
          if (!(p >= 0.0 && p <= 1.0)) throw InvalidModel("policy: probability outside [0,1]");
          total += p;
        }
        if (std::abs(total - 1.0) > kStochasticTol)
          throw InvalidModel("policy: row " + std::to_string(s) + " does not sum to 1");
      }
    }
    for (std::size_t s = 0; s < mdp.n_states; ++s)
      for (std::size_t a = 0; a < mdp.n_actions; ++a)
        if (pi(s, a) > 0.0 && !(mu(s, a) > 0.0))
          throw InvalidModel("policy: behavior does not cover target at state " +
                             std::to_string(s));
  }

  double ratio(std::size_t s, std::size_t a) const { return pi(s, a) / mu(s, a); }
};

/// |S| x d feature matrix. An extra all-zero row backs the next-feature
/// view of episode-ending transitions.
class FeatureMap {
 public:
  FeatureMap() = default;
  explicit FeatureMap(Matrix phi) : phi_(std::move(phi)), zero_(phi_.cols(), 0.0) {
    if (phi_.rows() == 0 || phi_.cols() == 0) throw DimensionMismatch("features: empty matrix");
    if (!all_finite(phi_)) throw InvalidModel("features: non-finite entry");
  }

  const Matrix& matrix() const noexcept { return phi_; }
  std::size_t n_states() const noexcept { return phi_.rows(); }
  std::size_t dim() const noexcept { return phi_.cols(); }
  std::span<const double> row(std::size_t s) const { return phi_.row(s); }
  std::span<const double> zero_row() const { return zero_; }

  bool full_column_rank(double threshold = 1e-10) const {
    return phi_.rows() >= phi_.cols() && smallest_singular_value(phi_) > threshold;
  }

 private:
  Matrix phi_;
  Vector zero_;
};

struct OperatorBundle {
  Vector d_mu;
  Matrix C;
  Matrix A_pi;
  Matrix A_mu;
  Matrix D_pi;
  Vector b;
  Vector theta_star;
  /// A_pi was numerically singular and theta_star is the minimum-norm
  /// solution of the (consistent) system A_pi theta = b.
  bool a_pi_singular = false;

  std::size_t dim() const noexcept { return b.size(); }
};

/// P_nu[s][s'] = sum_a nu[s][a] P[s][a][s'].
inline Matrix induced_chain(const FiniteMdp& mdp, const Matrix& policy) {
  if (policy.rows() != mdp.n_states || policy.cols() != mdp.n_actions)
    throw DimensionMismatch("induced_chain: policy shape mismatch");
  Matrix out(mdp.n_states, mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const double w = policy(s, a);
      if (w == 0.0) continue;
      for (std::size_t t = 0; t < mdp.n_states; ++t) out(s, t) += w * mdp.P(s, a, t);
    }
  return out;
}

namespace detail {
// Same as induced_chain, restricted to bootstrapping outcomes.
inline Matrix continuing_chain(const FiniteMdp& mdp, const Matrix& policy) {
  Matrix out(mdp.n_states, mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const double w = policy(s, a);
      if (w == 0.0) continue;
      for (std::size_t t = 0; t < mdp.n_states; ++t)
        out(s, t) += w * mdp.P(s, a, t) * mdp.continuation(s, a, t);
    }
  return out;
}
}  // namespace detail

/// Solves d^T P = d^T, sum d = 1 by replacing one balance equation with the
/// normalization row.
inline Vector stationary_distribution(const Matrix& P) {
  if (!P.square()) throw DimensionMismatch("stationary_distribution: matrix must be square");
  const std::size_t n = P.rows();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = P(j, i) - (i == j ? 1.0 : 0.0);
  for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = 1.0;
  Vector rhs(n, 0.0);
  rhs[n - 1] = 1.0;
  Vector d;
  try {
    d = solve_linear(a, rhs);
  } catch (const SingularMatrix&) {
    throw NotIrreducible("stationary_distribution: more than one closed class");
  }
  for (double x : d)
    if (!(x > 1e-13)) throw NotIrreducible("stationary_distribution: chain has transient states");
  return d;
}

/// Exact operators under the stationary behavior distribution:
///   C    = Phi' D Phi
///   A_nu = Phi' D (Phi - gamma P~_nu Phi)
///   D_pi = gamma Phi' P~_pi' D Phi
///   b    = Phi' D rbar_pi
/// where P~ keeps only bootstrapping outcomes.
inline OperatorBundle operator_bundle(const FiniteMdp& mdp, const FeatureMap& phi,
                                      const PolicyPair& policies) {
  mdp.validate();
  policies.validate(mdp);
  if (phi.n_states() != mdp.n_states) throw DimensionMismatch("operator_bundle: feature rows");
  const Matrix& F = phi.matrix();
  const std::size_t n = mdp.n_states;

  OperatorBundle out;
  out.d_mu = stationary_distribution(induced_chain(mdp, policies.mu));

  Matrix DF = F;  // D_mu Phi
  for (std::size_t s = 0; s < n; ++s)
    for (double& x : DF.row(s)) x *= out.d_mu[s];
  const Matrix Ft = F.transpose();

  const Matrix cont_pi = detail::continuing_chain(mdp, policies.pi);
  const Matrix cont_mu = detail::continuing_chain(mdp, policies.mu);

  out.C = Ft * DF;
  out.A_pi = out.C - mdp.gamma * (DF.transpose() * (cont_pi * F));
  out.A_mu = out.C - mdp.gamma * (DF.transpose() * (cont_mu * F));
  out.D_pi = mdp.gamma * (Ft * (cont_pi.transpose() * DF));

  Vector rbar(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      for (std::size_t t = 0; t < n; ++t)
        rbar[s] += policies.pi(s, a) * mdp.P(s, a, t) * mdp.R(s, a, t);
  out.b = DF.transpose() * rbar;

  try {
    out.theta_star = solve_linear(out.A_pi, out.b);
  } catch (const SingularMatrix&) {
    Vector x = solve_min_norm(out.A_pi, out.b);
    Vector res = out.A_pi * x;
    for (std::size_t i = 0; i < res.size(); ++i) res[i] -= out.b[i];
    if (norm_inf(res) > 1e-9 * (1.0 + norm_inf(out.b)))
      throw SingularMatrix("operator_bundle: A_pi singular and A_pi theta = b inconsistent");
    out.theta_star = std::move(x);
    out.a_pi_singular = true;
  }
  return out;
}

/// sqrt(v' C^+ v) with v = b - A_pi theta. C^+ coincides with C^-1 whenever
/// C is nonsingular; rank-deficient features use the pseudo-inverse since
/// v always lies in range(C).
class RmspbeEvaluator {
 public:
  explicit RmspbeEvaluator(const OperatorBundle& bundle)
      : a_pi_(bundle.A_pi), b_(bundle.b), c_pinv_(pseudo_inverse(bundle.C)), v_(bundle.dim()) {}

  double operator()(std::span<const double> theta) const {
    const std::size_t d = b_.size();
    if (theta.size() != d) throw DimensionMismatch("rmspbe: theta length");
    for (std::size_t i = 0; i < d; ++i) {
      double s = b_[i];
      for (std::size_t j = 0; j < d; ++j) s -= a_pi_(i, j) * theta[j];
      v_[i] = s;
    }
    double q = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += c_pinv_(i, j) * v_[j];
      q += v_[i] * s;
    }
    return std::sqrt(std::max(q, 0.0));
  }

 private:
  Matrix a_pi_;
  Vector b_;
  Matrix c_pinv_;
  mutable Vector v_;
};

inline double rmspbe(const OperatorBundle& bundle, std::span<const double> theta) {
  return RmspbeEvaluator(bundle)(theta);
}

/// One behavior-policy transition. Feature views point into the FeatureMap
/// that produced them and must not outlive it.
struct Transition {
  std::size_t s = 0;
  std::size_t a = 0;
  std::size_t s_next = 0;
  double r = 0.0;
  double rho = 1.0;
  double gamma = 0.9;
  bool terminal = false;
  std::span<const double> phi_s;
  std::span<const double> phi_next;
};

/// Cached inverse-CDF tables for fast repeated sampling.
class TransitionSampler {
 public:
  TransitionSampler(const FiniteMdp& mdp, const PolicyPair& policies, const FeatureMap& phi)
      : mdp_(&mdp), policies_(&policies), phi_(&phi) {
    const std::size_t ns = mdp.n_states, na = mdp.n_actions;
    mu_cdf_.resize(ns * na);
    for (std::size_t s = 0; s < ns; ++s) {
      double acc = 0.0;
      for (std::size_t a = 0; a < na; ++a) mu_cdf_[s * na + a] = acc += policies.mu(s, a);
    }
    p_cdf_.resize(ns * na * ns);
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t a = 0; a < na; ++a) {
        double acc = 0.0;
        for (std::size_t t = 0; t < ns; ++t) p_cdf_[(s * na + a) * ns + t] = acc += mdp.P(s, a, t);
      }
  }

  Transition sample(std::size_t s, Rng& rng) const {
    const std::size_t ns = mdp_->n_states, na = mdp_->n_actions;
    Transition tr;
    tr.s = s;
    tr.a = draw(std::span<const double>(mu_cdf_).subspan(s * na, na), policies_->mu.row(s), rng);
    tr.s_next = draw(std::span<const double>(p_cdf_).subspan((s * na + tr.a) * ns, ns),
                     mdp_->P.outcomes(s, tr.a), rng);
    tr.r = mdp_->R(s, tr.a, tr.s_next);
    tr.rho = policies_->ratio(s, tr.a);
    tr.gamma = mdp_->gamma;
    tr.terminal = mdp_->continuation(s, tr.a, tr.s_next) == 0.0;
    tr.phi_s = phi_->row(s);
    tr.phi_next = tr.terminal ? phi_->zero_row() : phi_->row(tr.s_next);
    return tr;
  }

 private:
  // Inverse CDF; the last outcome with positive mass absorbs rounding in the
  // cumulative sum.
  static std::size_t draw(std::span<const double> cdf, std::span<const double> pmf, Rng& rng) {
    const double u = uniform01(rng);
    std::size_t last = 0;
    for (std::size_t i = 0; i < cdf.size(); ++i) {
      if (pmf[i] <= 0.0) continue;
      last = i;
      if (u < cdf[i]) return i;
    }
    return last;
  }

  const FiniteMdp* mdp_;
  const PolicyPair* policies_;
  const FeatureMap* phi_;
  std::vector<double> mu_cdf_;
  std::vector<double> p_cdf_;
};

inline Transition sample_transition(const FiniteMdp& mdp, const PolicyPair& policies,
                                    const FeatureMap& phi, std::size_t s, Rng& rng) {
  if (s >= mdp.n_states) throw DimensionMismatch("sample_transition: state out of range");
  return TransitionSampler(mdp, policies, phi).sample(s, rng);
}

/// Sample averages of the operator integrands along one behavior trajectory,
/// with batch-means standard errors (the trajectory is Markov, so per-sample
/// deviations understate the error).
struct MonteCarloBundle {
  Matrix C, A_pi, A_mu, D_pi;
  Vector b;
  Matrix se_C, se_A_pi, se_A_mu, se_D_pi;
  Vector se_b;
  std::size_t n_samples = 0;
};

inline constexpr std::size_t kMonteCarloBurnIn = 1000;
inline constexpr std::size_t kMonteCarloBatches = 100;

inline MonteCarloBundle monte_carlo_bundle(const FiniteMdp& mdp, const PolicyPair& policies,
                                           const FeatureMap& phi, std::size_t n_samples, Rng& rng,
                                           std::size_t start_state = 0) {
  if (n_samples == 0) throw DimensionMismatch("monte_carlo_bundle: need at least one sample");
  const std::size_t d = phi.dim();
  const TransitionSampler sampler(mdp, policies, phi);
  std::size_t s = start_state;
  for (std::size_t i = 0; i < kMonteCarloBurnIn; ++i) s = sampler.sample(s, rng).s_next;

  const std::size_t batches = std::min(kMonteCarloBatches, n_samples);
  // Layout per batch: C, A_pi, A_mu, D_pi (d*d each) then b (d).
  const std::size_t width = 4 * d * d + d;
  std::vector<double> batch_sum(batches * width, 0.0);
  std::vector<std::size_t> batch_n(batches, 0);

  for (std::size_t i = 0; i < n_samples; ++i) {
    const Transition t = sampler.sample(s, rng);
    const std::size_t k = i * batches / n_samples;
    double* acc = batch_sum.data() + k * width;
    ++batch_n[k];
    for (std::size_t r = 0; r < d; ++r) {
      const double f = t.phi_s[r];
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = t.phi_s[c] - t.gamma * t.phi_next[c];
        acc[r * d + c] += f * t.phi_s[c];
        acc[d * d + r * d + c] += t.rho * f * diff;
        acc[2 * d * d + r * d + c] += f * diff;
        acc[3 * d * d + r * d + c] += t.rho * t.gamma * t.phi_next[r] * t.phi_s[c];
      }
      acc[4 * d * d + r] += t.rho * t.r * f;
    }
    s = t.s_next;
  }

  std::vector<double> mean(width, 0.0), se(width, 0.0);
  for (std::size_t j = 0; j < width; ++j) {
    double total = 0.0;
    for (std::size_t k = 0; k < batches; ++k) total += batch_sum[k * width + j];
    mean[j] = total / static_cast<double>(n_samples);
    if (batches > 1) {
      double ss = 0.0;
      for (std::size_t k = 0; k < batches; ++k) {
        const double m = batch_sum[k * width + j] / static_cast<double>(batch_n[k]);
        ss += (m - mean[j]) * (m - mean[j]);
      }
      se[j] = std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
    }
  }

  MonteCarloBundle out;
  out.n_samples = n_samples;
  auto unpack = [&](const std::vector<double>& src, std::size_t off) {
    Matrix m(d, d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) m(r, c) = src[off + r * d + c];
    return m;
  };
  out.C = unpack(mean, 0);
  out.A_pi = unpack(mean, d * d);
  out.A_mu = unpack(mean, 2 * d * d);
  out.D_pi = unpack(mean, 3 * d * d);
  out.b.assign(mean.begin() + 4 * d * d, mean.end());
  out.se_C = unpack(se, 0);
  out.se_A_pi = unpack(se, d * d);
  out.se_A_mu = unpack(se, 2 * d * d);
  out.se_D_pi = unpack(se, 3 * d * d);
  out.se_b.assign(se.begin() + 4 * d * d, se.end());
  return out;
}

}  // namespace batd
