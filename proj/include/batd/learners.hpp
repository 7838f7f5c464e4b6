#pragma once

// Per-transition update rules for the TD / gradient-TD correction family.
// Every rule shares the TD error delta = r - theta'(phi - gamma phi').

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "batd/mdp.hpp"

namespace batd {

struct Diverged : Error {
  using Error::Error;
};

enum class Algorithm { td, gtd2, tdc, tdrc, gtd2_mp, ba_tdc, ba_tdrc };

inline constexpr std::array<Algorithm, 7> kAllAlgorithms{
    Algorithm::td,      Algorithm::gtd2,   Algorithm::tdc,    Algorithm::tdrc,
    Algorithm::gtd2_mp, Algorithm::ba_tdc, Algorithm::ba_tdrc};

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::td: return "td";
    case Algorithm::gtd2: return "gtd2";
    case Algorithm::tdc: return "tdc";
    case Algorithm::tdrc: return "tdrc";
    case Algorithm::gtd2_mp: return "gtd2_mp";
    case Algorithm::ba_tdc: return "ba_tdc";
    case Algorithm::ba_tdrc: return "ba_tdrc";
  }
  return "?";
}

inline std::string_view display_name(Algorithm a) {
  switch (a) {
    case Algorithm::td: return "TD";
    case Algorithm::gtd2: return "GTD2";
    case Algorithm::tdc: return "TDC";
    case Algorithm::tdrc: return "TDRC";
    case Algorithm::gtd2_mp: return "GTD2-MP";
    case Algorithm::ba_tdc: return "BA-TDC";
    case Algorithm::ba_tdrc: return "BA-TDRC";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (Algorithm a : kAllAlgorithms)
    if (s == to_string(a) || s == display_name(a)) return a;
  return std::nullopt;
}

/// alpha: primary step. alpha_w: auxiliary step (beta_w for GTD2/TDC).
/// eta: TDRC regularizer. beta: behavior-aware regularizer.
struct Hyper {
  double alpha = 0.0;
  double alpha_w = 0.0;
  double eta = 0.0;
  double beta = 0.0;

  friend bool operator==(const Hyper&, const Hyper&) = default;
};

struct LearnerState {
  Vector theta;
  Vector w;
  Algorithm algo = Algorithm::td;
  Hyper hyper;
};

inline constexpr double kDivergenceBound = 1e100;

namespace detail {

inline void guard(const LearnerState& st) {
  for (const Vector* v : {&st.theta, &st.w})
    for (double x : *v)
      if (!std::isfinite(x) || std::abs(x) > kDivergenceBound)
        throw Diverged("parameters left the finite range");
}

inline void check_dims(const LearnerState& st, const Transition& t) {
  const std::size_t d = st.theta.size();
  if (st.w.size() != d || t.phi_s.size() != d || t.phi_next.size() != d)
    throw DimensionMismatch("learner: dimension mismatch");
}

inline double td_error(const Vector& theta, const Transition& t) {
  double v = t.r;
  for (std::size_t i = 0; i < theta.size(); ++i)
    v -= theta[i] * (t.phi_s[i] - t.gamma * t.phi_next[i]);
  return v;
}

// theta += alpha rho (delta phi - gamma phi' (phi'w)); shared by TDC-family rules.
inline void tdc_primary(Vector& theta, double alpha, double delta, double phi_w,
                        const Transition& t) {
  const double a = alpha * t.rho;
  for (std::size_t i = 0; i < theta.size(); ++i)
    theta[i] += a * (delta * t.phi_s[i] - t.gamma * t.phi_next[i] * phi_w);
}

}  // namespace detail

inline LearnerState step_td(LearnerState st, const Transition& t) {
  detail::check_dims(st, t);
  const double delta = detail::td_error(st.theta, t);
  const double a = st.hyper.alpha * t.rho * delta;
  for (std::size_t i = 0; i < st.theta.size(); ++i) st.theta[i] += a * t.phi_s[i];
  detail::guard(st);
  return st;
}

inline LearnerState step_gtd2(LearnerState st, const Transition& t) {
  detail::check_dims(st, t);
  const double delta = detail::td_error(st.theta, t);
  const double phi_w = dot(t.phi_s, st.w);
  const double a = st.hyper.alpha * t.rho * phi_w;
  const double g = st.hyper.alpha_w * (t.rho * delta - phi_w);
  for (std::size_t i = 0; i < st.theta.size(); ++i) {
    st.theta[i] += a * (t.phi_s[i] - t.gamma * t.phi_next[i]);
    st.w[i] += g * t.phi_s[i];
  }
  detail::guard(st);
  return st;
}

inline LearnerState step_tdc(LearnerState st, const Transition& t) {
  detail::check_dims(st, t);
  const double delta = detail::td_error(st.theta, t);
  const double phi_w = dot(t.phi_s, st.w);
  detail::tdc_primary(st.theta, st.hyper.alpha, delta, phi_w, t);
  // Same operation order as step_tdrc so that TDRC with eta = 0 is bit-equal.
  const double aw = st.hyper.alpha_w;
  const double g = t.rho * delta - phi_w;
  for (std::size_t i = 0; i < st.w.size(); ++i) st.w[i] += aw * (g * t.phi_s[i]);
  detail::guard(st);
  return st;
}

inline LearnerState step_tdrc(LearnerState st, const Transition& t) {
  detail::check_dims(st, t);
  const double delta = detail::td_error(st.theta, t);
  const double phi_w = dot(t.phi_s, st.w);
  detail::tdc_primary(st.theta, st.hyper.alpha, delta, phi_w, t);
  const double aw = st.hyper.alpha_w;
  const double g = t.rho * delta - phi_w;
  for (std::size_t i = 0; i < st.w.size(); ++i)
    st.w[i] += aw * (g * t.phi_s[i] - st.hyper.eta * st.w[i]);
  detail::guard(st);
  return st;
}

/// Behavior-aware auxiliary update; `regularized` false forces beta = 0.
inline LearnerState step_ba(LearnerState st, const Transition& t, bool regularized) {
  detail::check_dims(st, t);
  const double delta = detail::td_error(st.theta, t);
  const double phi_w = dot(t.phi_s, st.w);
  double diff_w = 0.0;  // (phi - gamma phi')' w
  for (std::size_t i = 0; i < st.w.size(); ++i)
    diff_w += (t.phi_s[i] - t.gamma * t.phi_next[i]) * st.w[i];
  detail::tdc_primary(st.theta, st.hyper.alpha, delta, phi_w, t);
  const double beta = regularized ? st.hyper.beta : 0.0;
  const double aw = st.hyper.alpha_w;
  const double g = t.rho * delta - diff_w;
  for (std::size_t i = 0; i < st.w.size(); ++i)
    st.w[i] += aw * (g * t.phi_s[i] - beta * st.w[i]);
  detail::guard(st);
  return st;
}

/// Extragradient GTD2 with one shared step size: a half step from (theta, w)
/// produces (theta_bar, w_bar); the full step restarts from (theta, w) using
/// gradients evaluated at the half-step point.
inline LearnerState step_gtd2_mp(LearnerState st, const Transition& t) {
  detail::check_dims(st, t);
  const std::size_t d = st.theta.size();
  const double alpha = st.hyper.alpha;
  const double delta = detail::td_error(st.theta, t);
  const double phi_w = dot(t.phi_s, st.w);

  Vector theta_bar = st.theta;
  Vector w_bar = st.w;
  for (std::size_t i = 0; i < d; ++i) {
    theta_bar[i] += alpha * t.rho * (t.phi_s[i] - t.gamma * t.phi_next[i]) * phi_w;
    w_bar[i] += alpha * (t.rho * delta - phi_w) * t.phi_s[i];
  }
  const double delta_bar = detail::td_error(theta_bar, t);
  const double phi_w_bar = dot(t.phi_s, w_bar);
  for (std::size_t i = 0; i < d; ++i) {
    st.theta[i] += alpha * t.rho * (t.phi_s[i] - t.gamma * t.phi_next[i]) * phi_w_bar;
    st.w[i] += alpha * (t.rho * delta_bar - phi_w_bar) * t.phi_s[i];
  }
  detail::guard(st);
  return st;
}

inline LearnerState step(LearnerState st, const Transition& t) {
  switch (st.algo) {
    case Algorithm::td: return step_td(std::move(st), t);
    case Algorithm::gtd2: return step_gtd2(std::move(st), t);
    case Algorithm::tdc: return step_tdc(std::move(st), t);
    case Algorithm::tdrc: return step_tdrc(std::move(st), t);
    case Algorithm::gtd2_mp: return step_gtd2_mp(std::move(st), t);
    case Algorithm::ba_tdc: return step_ba(std::move(st), t, false);
    case Algorithm::ba_tdrc: return step_ba(std::move(st), t, true);
  }
  return st;
}

inline LearnerState make_learner(Algorithm algo, const Hyper& hyper, Vector theta0, Vector w0) {
  if (theta0.size() != w0.size()) throw DimensionMismatch("learner: theta0 and w0 lengths differ");
  if (!(hyper.alpha >= 0.0) || !(hyper.alpha_w >= 0.0) || !(hyper.eta >= 0.0) || !(hyper.beta >= 0.0))
    throw InvalidModel("learner: hyperparameters must be nonnegative");
  return {std::move(theta0), std::move(w0), algo, hyper};
}

}  // namespace batd
