#pragma once

// Reproduction targets built from sweeps and evaluations, tuned-parameter
// sources for the mean-operator analysis, and learning-curve plots.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "batd/config.hpp"
#include "batd/io.hpp"
#include "batd/svg.hpp"

namespace batd {

struct MissingTunedParams : Error {
  using Error::Error;
};

enum class Target { auc_table, final_table, ablation_table, robustness };

inline std::optional<Target> parse_target(std::string_view s) {
  if (s == "auc-table") return Target::auc_table;
  if (s == "final-table") return Target::final_table;
  if (s == "ablation-table") return Target::ablation_table;
  if (s == "robustness") return Target::robustness;
  return std::nullopt;
}

inline std::string_view to_string(Target t) {
  switch (t) {
    case Target::auc_table: return "auc-table";
    case Target::final_table: return "final-table";
    case Target::ablation_table: return "ablation-table";
    case Target::robustness: return "robustness";
  }
  return "?";
}

inline std::vector<Algorithm> table_algorithms(Target t) {
  if (t == Target::ablation_table)
    return {Algorithm::tdc, Algorithm::ba_tdc, Algorithm::tdrc, Algorithm::ba_tdrc};
  if (t == Target::robustness) return {Algorithm::ba_tdrc};
  return {Algorithm::td, Algorithm::gtd2, Algorithm::tdc, Algorithm::tdrc, Algorithm::gtd2_mp,
          Algorithm::ba_tdrc};
}

struct Cell {
  std::string env;
  Algorithm algo = Algorithm::td;
  std::size_t horizon = 0;
  TuneResult tuning;
  EvalResult eval;
};

using Progress = std::function<void(const std::string&)>;

class Experiments {
 public:
  explicit Experiments(ExperimentConfig cfg, BenchmarkRegistry registry = {},
                       Progress progress = {})
      : cfg_(std::move(cfg)), registry_(std::move(registry)), progress_(std::move(progress)) {}

  const ExperimentConfig& config() const { return cfg_; }
  const BenchmarkRegistry& registry() const { return registry_; }
  fs::path out() const { return cfg_.out; }

  const Problem& problem(const std::string& env) {
    auto it = problems_.find(env);
    if (it == problems_.end()) it = problems_.emplace(env, Problem(registry_.build(env))).first;
    return it->second;
  }

  /// Tunes and writes <out>/<env>/<algo>/sweep.csv.
  TuneResult sweep(const std::string& env, Algorithm algo) {
    const Problem& p = problem(env);
    const SweepSpec spec = cfg_.sweep_for(p.spec, algo);
    note("sweep " + env + " " + std::string(to_string(algo)) + " (" +
         std::to_string(spec.configs().size()) + " configs, horizon " +
         std::to_string(spec.horizon) + ")");
    TuneResult r = tune(p, spec, cfg_.base_seed, cfg_.workers);
    write_file(sweep_path(out(), env, algo), sweep_csv(spec, r));
    return r;
  }

  /// Evaluates `hyper` and writes eval.csv, plus one curve file per run
  /// when `curves` is set.
  EvalResult evaluate_config(const std::string& env, Algorithm algo, const Hyper& hyper,
                             bool curves) {
    const Problem& p = problem(env);
    const std::size_t horizon = cfg_.horizon_for(p.spec);
    note("eval " + env + " " + std::string(to_string(algo)) + " " + config_id(hyper));
    EvalResult r = evaluate(p, algo, hyper, horizon, cfg_.base_seed, cfg_.eval_seeds,
                            cfg_.workers, curves);
    write_file(eval_path(out(), env, algo), eval_csv(env, algo, r));
    if (curves) {
      const fs::path dir = curves_dir(out(), env, algo);
      fs::remove_all(dir);
      for (std::size_t k = 0; k < r.curves.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%03zu.csv", k);
        write_file(dir / name, curve_csv(r.curves[k]));
      }
      r.curves.clear();
    }
    return r;
  }

  /// Evaluates the winner recorded in sweep.csv.
  EvalResult evaluate_winner(const std::string& env, Algorithm algo, bool curves) {
    const fs::path path = sweep_path(out(), env, algo);
    if (!fs::exists(path))
      throw MissingTunedParams("no sweep results at '" + path.string() + "'; run `batd sweep --env " +
                               env + " --algo " + std::string(to_string(algo)) + "` first");
    return evaluate_config(env, algo, read_sweep_winner(path).hyper, curves);
  }

  Cell cell(const std::string& env, Algorithm algo, bool curves = false) {
    Cell c;
    c.env = env;
    c.algo = algo;
    c.horizon = cfg_.horizon_for(problem(env).spec);
    c.tuning = sweep(env, algo);
    c.eval = evaluate_config(env, algo, c.tuning.winner(), curves);
    return c;
  }

  /// Runs every (env, algo) cell of a table target and writes
  /// <out>/<target>.csv and .txt. Robustness is handled by robustness().
  std::vector<Cell> table(Target target, bool curves = false) {
    if (target == Target::robustness) throw InvalidModel("table: use robustness()");
    std::vector<Cell> cells;
    for (const auto& env : cfg_.envs)
      for (Algorithm a : table_algorithms(target)) cells.push_back(cell(env, a, curves));
    const bool use_final = target == Target::final_table;
    write_file(out() / (std::string(to_string(target)) + ".csv"), table_csv(cells, use_final));
    write_file(out() / (std::string(to_string(target)) + ".txt"), table_text(cells, use_final));
    return cells;
  }

  struct RobustnessCurve {
    std::string env;
    std::size_t horizon = 0;
    std::vector<RobustnessPoint> points;
  };

  /// BA-TDRC AUC against alpha per env; writes robustness.csv and one
  /// log-scale SVG per env.
  std::vector<RobustnessCurve> robustness() {
    std::vector<RobustnessCurve> out_curves;
    std::string csv = "env,horizon,alpha,auc_mean,auc_std,n,diverged_runs\n";
    for (const auto& env : cfg_.envs) {
      const Problem& p = problem(env);
      RobustnessCurve rc{env, cfg_.horizon_for(p.spec), {}};
      note("robustness " + env + " (" + std::to_string(cfg_.robustness_alphas.size()) + " step sizes)");
      rc.points = robustness_grid(p, cfg_.robustness_alphas, rc.horizon, cfg_.base_seed,
                                  cfg_.robustness_seeds, cfg_.workers);
      svg::Series s{"BA-TDRC", {}, {}, {}, {}};
      for (const auto& pt : rc.points) {
        csv += env + "," + std::to_string(rc.horizon) + "," + format_double(pt.alpha) + "," +
               format_double(pt.auc.mean) + "," + format_double(pt.auc.std) + "," +
               std::to_string(pt.auc.n) + "," + std::to_string(pt.diverged_runs) + "\n";
        s.x.push_back(pt.alpha);
        s.y.push_back(pt.auc.mean);
      }
      svg::Chart chart{env + ": BA-TDRC step-size robustness (beta = 1, lambda = 1)",
                       "alpha", "steady-state AUC", true, true};
      write_file(out() / ("robustness_" + env + ".svg"), svg::render(chart, {s}));
      out_curves.push_back(std::move(rc));
    }
    write_file(out() / "robustness.csv", csv);
    return out_curves;
  }

  static std::string table_csv(const std::vector<Cell>& cells, bool use_final) {
    std::string s = "env,algo,horizon,config_id,metric,mean,std,n,diverged_runs\n";
    for (const auto& c : cells) {
      const Aggregate& a = use_final ? c.eval.final : c.eval.auc;
      s += c.env + "," + std::string(to_string(c.algo)) + "," + std::to_string(c.horizon) + "," +
           config_id(c.eval.hyper) + "," + (use_final ? "final" : "auc_ss") + "," +
           format_double(a.mean) + "," + format_double(a.std) + "," + std::to_string(a.n) + "," +
           std::to_string(c.eval.diverged_runs) + "\n";
    }
    return s;
  }

  /// Algorithms as rows, environments as columns, "mean +- std" cells.
  static std::string table_text(const std::vector<Cell>& cells, bool use_final) {
    std::vector<std::string> envs;
    std::vector<Algorithm> algos;
    for (const auto& c : cells) {
      if (std::find(envs.begin(), envs.end(), c.env) == envs.end()) envs.push_back(c.env);
      if (std::find(algos.begin(), algos.end(), c.algo) == algos.end()) algos.push_back(c.algo);
    }
    std::vector<std::vector<std::string>> t;
    std::vector<std::string> head{"algorithm"};
    std::vector<std::string> horizons{"horizon"};
    for (const auto& e : envs) {
      head.push_back(e);
      for (const auto& c : cells)
        if (c.env == e) {
          horizons.push_back(std::to_string(c.horizon));
          break;
        }
    }
    t.push_back(head);
    t.push_back(horizons);
    for (Algorithm a : algos) {
      std::vector<std::string> row{std::string(display_name(a))};
      for (const auto& e : envs) {
        std::string cell = "-";
        for (const auto& c : cells)
          if (c.env == e && c.algo == a) {
            const Aggregate& g = use_final ? c.eval.final : c.eval.auc;
            cell = format_sig4(g.mean) + " +- " + format_sig4(g.std);
            if (c.eval.diverged_runs) cell += " (" + std::to_string(c.eval.diverged_runs) + " div)";
          }
        row.push_back(cell);
      }
      t.push_back(row);
    }
    return render_text_table(t);
  }

 private:
  void note(const std::string& msg) const {
    if (progress_) progress_(msg);
  }

  ExperimentConfig cfg_;
  BenchmarkRegistry registry_;
  Progress progress_;
  std::map<std::string, Problem> problems_;
};

// ---------------------------------------------------------------- analysis sources

/// lambda = alpha_w / alpha of the TDRC and BA-TDRC sweep winners.
inline TunedParams tuned_from_sweeps(const fs::path& out, const std::string& env) {
  TunedParams p;
  for (Algorithm a : {Algorithm::tdrc, Algorithm::ba_tdrc}) {
    const fs::path path = sweep_path(out, env, a);
    if (!fs::exists(path))
      throw MissingTunedParams("no tuned parameters for " + env + " (missing '" + path.string() +
                               "'); run `batd sweep --env " + env + " --algo tdrc` and `batd sweep --env " +
                               env + " --algo ba_tdrc` first, or pass --fixture");
    const SweepWinner w = read_sweep_winner(path);
    if (w.env != env || w.algo != a) throw IoError("'" + path.string() + "' belongs to another run");
    if (a == Algorithm::tdrc) {
      p.eta = w.hyper.eta;
      p.lambda_C = w.hyper.alpha_w / w.hyper.alpha;
    } else {
      p.beta = w.hyper.beta;
      p.lambda_A = w.hyper.alpha_w / w.hyper.alpha;
    }
  }
  return p;
}

/// Fixture format, one key per line:
///   two_state.eta = 0.03
///   two_state.lambda_C = 0.1
///   two_state.beta = 0.7
///   two_state.lambda_A = 1
inline std::map<std::string, TunedParams> parse_fixture_text(std::string_view text) {
  std::map<std::string, std::map<std::string, double>> raw;
  std::istringstream lines{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('='), dot = line.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw ConfigError("fixture line " + std::to_string(n) + ": expected '<env>.<field> = value'");
    const std::string env = detail::trim(line.substr(0, dot));
    const std::string field = detail::trim(line.substr(dot + 1, eq - dot - 1));
    if (field != "eta" && field != "lambda_C" && field != "beta" && field != "lambda_A")
      throw ConfigError("fixture line " + std::to_string(n) + ": unknown field '" + field + "'");
    raw[env][field] = detail::parse_real(detail::trim(line.substr(eq + 1)), n);
  }
  std::map<std::string, TunedParams> out;
  for (const auto& [env, f] : raw) {
    if (f.size() != 4) throw ConfigError("fixture: " + env + " needs eta, lambda_C, beta and lambda_A");
    out[env] = {f.at("eta"), f.at("lambda_C"), f.at("beta"), f.at("lambda_A")};
  }
  return out;
}

inline std::map<std::string, TunedParams> pinned_fixture() {
  return {{"two_state", pinned_two_state_params()}};
}

/// Rows in the order of `envs`.
inline std::vector<AnalysisRow> analyze_envs(Experiments& ex, const std::vector<std::string>& envs,
                                             const std::map<std::string, TunedParams>& tuned,
                                             const std::vector<double>& grid = default_alpha_grid()) {
  std::vector<AnalysisRow> rows;
  for (const auto& env : envs) {
    const auto it = tuned.find(env);
    if (it == tuned.end())
      throw MissingTunedParams("no tuned parameters for " + env + "; run `batd sweep --env " + env +
                               " --algo tdrc` and `batd sweep --env " + env + " --algo ba_tdrc` first");
    rows.push_back(analyze_env(env, ex.problem(env).bundle, it->second, grid));
  }
  return rows;
}

// ---------------------------------------------------------------- curve plots

struct CurveBand {
  std::vector<double> t, mean, lo, hi;
  std::size_t runs = 0;
};

/// Mean and mean +- one sample std across runs at every step.
inline CurveBand curve_band(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) throw InvalidModel("curve_band: no runs");
  const std::size_t len = runs.front().size();
  for (const auto& r : runs)
    if (r.size() != len) throw DimensionMismatch("curve_band: runs differ in length");
  CurveBand b;
  b.runs = runs.size();
  std::vector<double> col(runs.size());
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t k = 0; k < runs.size(); ++k) col[k] = runs[k][t];
    const Aggregate a = runs.size() >= 2 ? aggregate(col) : Aggregate{col[0], 0.0, 1};
    b.t.push_back(static_cast<double>(t));
    b.mean.push_back(a.mean);
    b.lo.push_back(a.mean - a.std);
    b.hi.push_back(a.mean + a.std);
  }
  return b;
}

/// One SVG per env under `dir`, one series per algorithm directory that
/// holds curves. An empty filter means every algorithm found. Returns the
/// files written.
inline std::vector<fs::path> plot_curves(const fs::path& dir, const std::vector<std::string>& envs,
                                         const std::vector<Algorithm>& filter = {}) {
  std::vector<fs::path> written;
  for (const auto& env : envs) {
    std::vector<svg::Series> series;
    for (Algorithm a : kAllAlgorithms) {
      if (!filter.empty() && std::find(filter.begin(), filter.end(), a) == filter.end()) continue;
      const fs::path cdir = curves_dir(dir, env, a);
      if (!fs::is_directory(cdir)) continue;
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(cdir))
        if (e.path().extension() == ".csv") files.push_back(e.path());
      if (files.empty()) continue;
      std::sort(files.begin(), files.end());
      std::vector<std::vector<double>> runs;
      for (const auto& f : files) runs.push_back(read_curve_csv(f));
      const CurveBand b = curve_band(runs);
      series.push_back({std::string(display_name(a)), b.t, b.mean, b.lo, b.hi});
    }
    if (series.empty()) continue;
    svg::Chart chart{env + ": RMSPBE, mean +- one sample std", "step", "RMSPBE", false, true};
    const fs::path target = dir / env / "curves.svg";
    write_file(target, svg::render(chart, series));
    written.push_back(target);
  }
  if (written.empty()) throw IoError("no curve files under '" + dir.string() + "'; run eval with --curves first");
  return written;
}

}  // namespace batd
