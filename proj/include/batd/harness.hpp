#pragma once

// Experiment orchestration: hyperparameter grids, seeded runs, tuning on
// the trailing-RMSPBE objective, multi-seed evaluation, robustness sweeps.
//
// Every run owns its generator and writes into a slot fixed by its task
// index, so results do not depend on worker count or scheduling.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <cmath>
#include <vector>

#include "batd/benchmarks.hpp"
#include "batd/learners.hpp"
#include "batd/metrics.hpp"

namespace batd {

// ---------------------------------------------------------------- seeding

enum class SeedRole : std::uint64_t { tune = 1, eval = 2 };

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Chains splitmix64 over (base, env, algo, config, role, run).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view env, std::string_view algo,
                                 std::uint64_t config_index, SeedRole role,
                                 std::uint64_t run_index) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t part : {fnv1a64(env), fnv1a64(algo), config_index,
                             static_cast<std::uint64_t>(role), run_index})
    h = splitmix64(h ^ part);
  return h;
}

// ---------------------------------------------------------------- grids

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string config_id(const Hyper& h) {
  return "alpha=" + format_double(h.alpha) + ";alpha_w=" + format_double(h.alpha_w) +
         ";eta=" + format_double(h.eta) + ";beta=" + format_double(h.beta);
}

/// Per-parameter value lists. `aux` holds alpha_w values, except for GTD2
/// and TDC where it holds the multipliers z with beta_w = alpha * z.
struct SweepGrid {
  std::vector<double> alpha;
  std::vector<double> aux;
  std::vector<double> eta;
  std::vector<double> beta;
  double aux_cap = std::numeric_limits<double>::infinity();
};

inline SweepGrid default_grid(Algorithm algo) {
  const std::vector<double> steps{0.0003, 0.001, 0.003, 0.005, 0.01, 0.03, 0.05, 0.1};
  switch (algo) {
    case Algorithm::td:
    case Algorithm::gtd2_mp:
      return {{0.001, 0.003, 0.005, 0.01, 0.03, 0.05, 0.1}, {}, {}, {}};
    case Algorithm::gtd2:
    case Algorithm::tdc:
      return {steps, {0.05, 0.1, 0.25, 0.5, 1, 2, 4, 8}, {}, {}, 0.1};
    case Algorithm::tdrc:
      return {steps, steps, {0.01, 0.03, 0.1, 0.3, 1.0}, {}};
    case Algorithm::ba_tdc:
      return {steps, steps, {}, {}};
    case Algorithm::ba_tdrc:
      return {steps, steps, {}, {0.1, 0.3, 0.7, 1, 2, 3, 5, 10}};
  }
  return {};
}

/// Expands a grid in (alpha, aux, regularizer) order, ascending within each
/// list as given.
inline std::vector<Hyper> expand_grid(Algorithm algo, const SweepGrid& g) {
  std::vector<Hyper> out;
  const std::vector<double> none{0.0};
  const auto& aux = g.aux.empty() ? none : g.aux;
  const auto& eta = algo == Algorithm::tdrc && !g.eta.empty() ? g.eta : none;
  const auto& beta = algo == Algorithm::ba_tdrc && !g.beta.empty() ? g.beta : none;
  const bool multiplier = algo == Algorithm::gtd2 || algo == Algorithm::tdc;
  const bool uses_aux = algo == Algorithm::gtd2 || algo == Algorithm::tdc ||
                        algo == Algorithm::tdrc || algo == Algorithm::ba_tdc ||
                        algo == Algorithm::ba_tdrc;
  for (double a : g.alpha)
    for (double x : uses_aux ? aux : none) {
      const double aw = !uses_aux ? 0.0 : multiplier ? a * x : x;
      if (aw > g.aux_cap * (1.0 + 1e-12)) continue;
      for (double e : eta)
        for (double b : beta) out.push_back({a, aw, e, b});
    }
  return out;
}

struct SweepSpec {
  std::string env;
  Algorithm algo = Algorithm::td;
  SweepGrid grid;
  std::size_t horizon = 0;
  std::size_t tune_seeds = 8;
  std::size_t eval_seeds = 100;

  std::vector<Hyper> configs() const { return expand_grid(algo, grid); }
};

// ---------------------------------------------------------------- problem

/// A benchmark with its exact operators, shared read-only by all runs.
struct Problem {
  BenchmarkSpec spec;
  OperatorBundle bundle;

  explicit Problem(BenchmarkSpec s)
      : spec(std::move(s)), bundle(operator_bundle(spec.mdp, spec.phi, spec.policies)) {}
};

// ---------------------------------------------------------------- workers

/// Runs fn(i) for i in [0, n) on `workers` threads. The first exception is
/// rethrown after all threads join.
inline void parallel_for(std::size_t n, std::size_t workers,
                         const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------- runs

inline MetricSeries run_single(const Problem& problem, Algorithm algo, const Hyper& hyper,
                               std::size_t horizon, std::uint64_t seed) {
  const BenchmarkSpec& spec = problem.spec;
  const TransitionSampler sampler(spec.mdp, spec.policies, spec.phi);
  const RmspbeEvaluator rmspbe_of(problem.bundle);
  Rng rng(seed);

  MetricSeries out;
  out.env = spec.name;
  out.algo = std::string(to_string(algo));
  out.seed = seed;
  out.config_id = config_id(hyper);
  out.values.reserve(horizon + 1);

  LearnerState st = make_learner(algo, hyper, spec.theta0, spec.w0);
  out.values.push_back(rmspbe_of(st.theta));
  std::size_t s = spec.start_state;
  for (std::size_t t = 0; t < horizon; ++t) {
    const Transition tr = sampler.sample(s, rng);
    try {
      st = step(std::move(st), tr);
    } catch (const Diverged&) {
      out.diverged = true;
      out.diverged_at = t;
      const double last = out.values.back();
      out.values.resize(horizon + 1, last);
      return out;
    }
    const double e = rmspbe_of(st.theta);
    if (!std::isfinite(e)) {
      out.diverged = true;
      out.diverged_at = t;
      const double last = out.values.back();
      out.values.resize(horizon + 1, last);
      return out;
    }
    out.values.push_back(e);
    s = tr.s_next;
  }
  return out;
}

inline constexpr double kTuningTailFraction = 0.2;

struct TuneResult {
  std::vector<Hyper> configs;
  std::vector<double> objective;       // mean trailing RMSPBE; +inf if any seed diverged
  std::vector<std::size_t> diverged;   // diverged tuning runs per config
  std::size_t best = 0;

  const Hyper& winner() const { return configs.at(best); }
};

/// Ties go to smaller alpha, then smaller auxiliary step, then smaller
/// regularizer.
inline std::size_t select_winner(const std::vector<Hyper>& configs,
                                 const std::vector<double>& objective) {
  std::size_t best = 0;
  auto key = [&](std::size_t i) {
    const Hyper& h = configs[i];
    return std::tuple(objective[i], h.alpha, h.alpha_w, h.eta + h.beta);
  };
  for (std::size_t i = 1; i < configs.size(); ++i)
    if (key(i) < key(best)) best = i;
  return best;
}

/// All tuning seeds are shared across grid points (common random numbers).
inline TuneResult tune(const Problem& problem, const SweepSpec& sweep, std::uint64_t base_seed,
                       std::size_t workers = 1) {
  TuneResult out;
  out.configs = sweep.configs();
  if (out.configs.empty()) throw InvalidModel("tune: empty grid");
  const std::size_t nc = out.configs.size(), ns = sweep.tune_seeds;
  const std::string algo(to_string(sweep.algo));
  std::vector<double> tail(nc * ns);
  std::vector<char> div(nc * ns);
  parallel_for(nc * ns, workers, [&](std::size_t task) {
    const std::size_t c = task / ns, k = task % ns;
    const auto seed = derive_seed(base_seed, sweep.env, algo, 0, SeedRole::tune, k);
    const MetricSeries m = run_single(problem, sweep.algo, out.configs[c], sweep.horizon, seed);
    tail[task] = trailing_mean(m.values, kTuningTailFraction);
    div[task] = m.diverged;
  });
  out.objective.assign(nc, 0.0);
  out.diverged.assign(nc, 0);
  for (std::size_t c = 0; c < nc; ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < ns; ++k) {
      s += tail[c * ns + k];
      out.diverged[c] += div[c * ns + k];
    }
    out.objective[c] = out.diverged[c] > 0 ? std::numeric_limits<double>::infinity()
                                           : s / static_cast<double>(ns);
  }
  out.best = select_winner(out.configs, out.objective);
  return out;
}

struct RunRecord {
  std::string config_id;
  std::uint64_t seed = 0;
  double auc_ss = 0.0;
  double final = 0.0;
  bool diverged = false;
};

struct EvalResult {
  Hyper hyper;
  std::size_t horizon = 0;
  Aggregate auc;
  Aggregate final;
  std::size_t diverged_runs = 0;
  std::vector<RunRecord> records;
  std::vector<MetricSeries> curves;  // filled only when requested
};

inline EvalResult evaluate(const Problem& problem, Algorithm algo, const Hyper& hyper,
                           std::size_t horizon, std::uint64_t base_seed, std::size_t n_seeds = 100,
                           std::size_t workers = 1, bool keep_curves = false) {
  EvalResult out;
  out.hyper = hyper;
  out.horizon = horizon;
  out.records.resize(n_seeds);
  if (keep_curves) out.curves.resize(n_seeds);
  const std::string algo_name(to_string(algo));
  parallel_for(n_seeds, workers, [&](std::size_t k) {
    const auto seed = derive_seed(base_seed, problem.spec.name, algo_name, 0, SeedRole::eval, k);
    MetricSeries m = run_single(problem, algo, hyper, horizon, seed);
    out.records[k] = {m.config_id, seed, auc_ss(m), final_value(m), m.diverged};
    if (keep_curves) out.curves[k] = std::move(m);
  });
  std::vector<double> aucs, finals;
  for (const auto& r : out.records) {
    aucs.push_back(r.auc_ss);
    finals.push_back(r.final);
    out.diverged_runs += r.diverged;
  }
  out.auc = aggregate(aucs);
  out.final = aggregate(finals);
  return out;
}

struct RobustnessPoint {
  double alpha = 0.0;
  Aggregate auc;
  std::size_t diverged_runs = 0;
};

inline constexpr double kRobustnessBeta = 1.0;
inline constexpr double kRobustnessLambda = 1.0;

/// 10^(k/4), k = -16..0.
inline std::vector<double> default_robustness_alphas() {
  std::vector<double> g;
  for (int k = -16; k <= 0; ++k) g.push_back(k == 0 ? 1.0 : std::pow(10.0, k / 4.0));
  return g;
}

/// BA-TDRC with beta = 1 and alpha_w = alpha, AUC against alpha.
inline std::vector<RobustnessPoint> robustness_grid(const Problem& problem,
                                                    const std::vector<double>& alphas,
                                                    std::size_t horizon, std::uint64_t base_seed,
                                                    std::size_t n_seeds = 100,
                                                    std::size_t workers = 1) {
  std::vector<RobustnessPoint> out;
  for (double a : alphas) {
    const Hyper h{a, kRobustnessLambda * a, 0.0, kRobustnessBeta};
    const EvalResult r =
        evaluate(problem, Algorithm::ba_tdrc, h, horizon, base_seed, n_seeds, workers);
    out.push_back({a, r.auc, r.diverged_runs});
  }
  return out;
}

}  // namespace batd
