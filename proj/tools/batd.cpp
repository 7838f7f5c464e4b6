// batd: command-line front end.
//
//   batd analyze   --env two_state --fixture pinned
//   batd run       --env baird --algo ba_tdrc --alpha 0.003 --alpha-w 0.03 --beta 1
//   batd sweep     --env all --algo tdrc
//   batd eval      --env boyan --algo tdrc --curves
//   batd reproduce auc-table --config configs/default.cfg --workers 4
//   batd plot      --out results
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "batd/experiments.hpp"

namespace {

using namespace batd;

struct Common {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> base_seed;
  std::optional<std::size_t> workers;
  std::vector<std::string> env_files;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory (default: results)");
  cmd->add_option("--base-seed", c.base_seed, "base seed for all derived run seeds");
  cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--env-file", c.env_files, "extra environment in key-value format")
      ->check(CLI::ExistingFile);
}

Experiments make_experiments(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.out) cfg.out = *c.out;
  if (c.base_seed) cfg.base_seed = *c.base_seed;
  if (c.workers) cfg.workers = *c.workers;
  BenchmarkRegistry reg;
  for (const auto& f : c.env_files) {
    BenchmarkSpec spec = load_env_file(f);
    const std::string name = spec.name;
    reg.add(std::move(spec));
    if (std::find(cfg.envs.begin(), cfg.envs.end(), name) == cfg.envs.end()) cfg.envs.push_back(name);
  }
  const auto names = reg.list();
  for (const auto& e : cfg.envs)
    if (std::find(names.begin(), names.end(), e) == names.end())
      throw UsageError("unknown environment '" + e + "'");
  return Experiments(std::move(cfg), std::move(reg),
                     [](const std::string& msg) { std::cerr << "[batd] " << msg << std::endl; });
}

std::vector<std::string> resolve_envs(const Experiments& ex, const std::string& env) {
  if (env == "all") return ex.config().envs;
  const auto names = ex.registry().list();
  if (std::find(names.begin(), names.end(), env) == names.end())
    throw UsageError("unknown environment '" + env + "' (known: " + [&] {
      std::string s;
      for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
      return s;
    }() + ")");
  return {env};
}

std::vector<Algorithm> resolve_algos(const std::vector<std::string>& names, bool empty_means_all) {
  std::vector<Algorithm> out;
  for (const auto& n : names) {
    if (n == "all") return {kAllAlgorithms.begin(), kAllAlgorithms.end()};
    const auto a = parse_algorithm(n);
    if (!a) throw UsageError("unknown algorithm '" + n + "'");
    out.push_back(*a);
  }
  if (out.empty() && empty_means_all) return {kAllAlgorithms.begin(), kAllAlgorithms.end()};
  return out;
}

void print_eval(const std::string& env, Algorithm a, const EvalResult& r) {
  std::printf("%s %s  %s  horizon %zu  auc_ss %s +- %s  final %s +- %s  diverged %zu/%zu\n",
              env.c_str(), std::string(display_name(a)).c_str(), config_id(r.hyper).c_str(),
              r.horizon, format_sig4(r.auc.mean).c_str(), format_sig4(r.auc.std).c_str(),
              format_sig4(r.final.mean).c_str(), format_sig4(r.final.std).c_str(),
              r.diverged_runs, r.records.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavior-aware gradient-TD corrections: experiments and mean-operator analysis"};
  app.require_subcommand(1);

  Common common;
  std::string env = "all";
  std::vector<std::string> algos;
  std::string fixture;
  bool curves = false;
  std::string target;
  Hyper hyper;
  std::optional<double> alpha;
  std::optional<std::size_t> horizon;
  std::optional<std::uint64_t> seed;

  auto* analyze = app.add_subcommand("analyze", "exact mean-operator analysis table");
  analyze->add_option("--env", env, "environment name or 'all'");
  analyze->add_option("--fixture", fixture, "'pinned' or a fixture file of tuned parameters");
  add_common(analyze, common);

  auto* run = app.add_subcommand("run", "one seeded run with explicit hyperparameters");
  run->add_option("--env", env, "environment")->required();
  run->add_option("--algo", algos, "algorithm")->required()->expected(1);
  run->add_option("--alpha", alpha, "primary step size")->required();
  run->add_option("--alpha-w", hyper.alpha_w, "auxiliary step size");
  run->add_option("--eta", hyper.eta, "TDRC regularizer");
  run->add_option("--beta", hyper.beta, "behavior-aware regularizer");
  run->add_option("--horizon", horizon, "number of updates");
  run->add_option("--seed", seed, "generator seed (default: derived from the base seed)");
  run->add_flag("--curves", curves, "write the RMSPBE curve as CSV");
  add_common(run, common);

  auto* sweep = app.add_subcommand("sweep", "tune on the configured grid and write sweep.csv");
  sweep->add_option("--env", env, "environment name or 'all'");
  sweep->add_option("--algo", algos, "algorithm(s) or 'all'")->required();
  add_common(sweep, common);

  auto* eval = app.add_subcommand("eval", "evaluate a sweep winner (or --alpha ...) on the eval seeds");
  eval->add_option("--env", env, "environment name or 'all'");
  eval->add_option("--algo", algos, "algorithm(s) or 'all'")->required();
  eval->add_option("--alpha", alpha, "evaluate this primary step size instead of the sweep winner");
  eval->add_option("--alpha-w", hyper.alpha_w, "auxiliary step size (with --alpha)");
  eval->add_option("--eta", hyper.eta, "TDRC regularizer (with --alpha)");
  eval->add_option("--beta", hyper.beta, "behavior-aware regularizer (with --alpha)");
  eval->add_flag("--curves", curves, "write one RMSPBE curve file per run");
  add_common(eval, common);

  auto* reproduce = app.add_subcommand("reproduce", "run a full table or the robustness sweep");
  reproduce->add_option("target", target, "auc-table | final-table | ablation-table | robustness")
      ->required()
      ->check(CLI::IsMember({"auc-table", "final-table", "ablation-table", "robustness"}));
  reproduce->add_flag("--curves", curves, "also write per-run curves for plotting");
  add_common(reproduce, common);

  auto* plot = app.add_subcommand("plot", "SVG learning curves from curve CSVs");
  plot->add_option("--env", env, "environment name or 'all'");
  plot->add_option("--algo", algos, "algorithm filter (default: all found)");
  add_common(plot, common);

  auto* list = app.add_subcommand("list", "list available environments and algorithms");
  add_common(list, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    Experiments ex = make_experiments(common);
    const fs::path out = ex.out();

    if (analyze->parsed()) {
      const auto envs = resolve_envs(ex, env);
      std::map<std::string, TunedParams> tuned;
      if (fixture == "pinned") tuned = pinned_fixture();
      else if (!fixture.empty()) tuned = parse_fixture_text(read_file(fixture));
      for (const auto& e : envs)
        if (!tuned.count(e)) tuned[e] = tuned_from_sweeps(out, e);
      const auto rows = analyze_envs(ex, envs, tuned);
      std::cout << analysis_text(rows);
      write_file(out / "analysis.csv", analysis_csv(rows));
      std::cerr << "[batd] wrote " << (out / "analysis.csv").string() << std::endl;
    } else if (run->parsed()) {
      const auto a = resolve_algos(algos, false).at(0);
      const Problem& p = ex.problem(resolve_envs(ex, env).at(0));
      hyper.alpha = *alpha;
      const std::size_t h = horizon.value_or(ex.config().horizon_for(p.spec));
      const std::uint64_t s = seed.value_or(derive_seed(ex.config().base_seed, p.spec.name,
                                                        to_string(a), 0, SeedRole::eval, 0));
      make_learner(a, hyper, p.spec.theta0, p.spec.w0);
      const MetricSeries m = run_single(p, a, hyper, h, s);
      std::printf("%s %s  %s  seed %llu  horizon %zu  auc_ss %s  final %s%s\n", p.spec.name.c_str(),
                  std::string(display_name(a)).c_str(), config_id(hyper).c_str(),
                  static_cast<unsigned long long>(s), h, format_sig4(auc_ss(m)).c_str(),
                  format_sig4(final_value(m)).c_str(),
                  m.diverged ? ("  diverged at step " + std::to_string(m.diverged_at)).c_str() : "");
      if (curves) {
        const fs::path f = algo_dir(out, p.spec.name, a) / ("run_seed_" + std::to_string(s) + ".csv");
        write_file(f, curve_csv(m));
        std::cerr << "[batd] wrote " << f.string() << std::endl;
      }
    } else if (sweep->parsed()) {
      for (const auto& e : resolve_envs(ex, env))
        for (Algorithm a : resolve_algos(algos, false)) {
          const TuneResult r = ex.sweep(e, a);
          std::printf("%s %s  winner %s  objective %s\n", e.c_str(),
                      std::string(display_name(a)).c_str(), config_id(r.winner()).c_str(),
                      format_sig4(r.objective[r.best]).c_str());
        }
    } else if (eval->parsed()) {
      for (const auto& e : resolve_envs(ex, env))
        for (Algorithm a : resolve_algos(algos, false)) {
          EvalResult r;
          if (alpha) {
            hyper.alpha = *alpha;
            r = ex.evaluate_config(e, a, hyper, curves);
          } else {
            r = ex.evaluate_winner(e, a, curves);
          }
          print_eval(e, a, r);
        }
    } else if (reproduce->parsed()) {
      const Target t = *parse_target(target);
      if (t == Target::robustness) {
        for (const auto& rc : ex.robustness()) {
          std::printf("%s (horizon %zu)\n", rc.env.c_str(), rc.horizon);
          for (const auto& pt : rc.points)
            std::printf("  alpha %-10s auc_ss %s +- %s%s\n", format_sig4(pt.alpha).c_str(),
                        format_sig4(pt.auc.mean).c_str(), format_sig4(pt.auc.std).c_str(),
                        pt.diverged_runs ? ("  (" + std::to_string(pt.diverged_runs) + " diverged)").c_str() : "");
        }
      } else {
        ex.table(t, curves);
        std::cout << read_file(out / (target + ".txt"));
      }
      std::cerr << "[batd] outputs under " << out.string() << std::endl;
    } else if (plot->parsed()) {
      for (const auto& f : plot_curves(out, resolve_envs(ex, env), resolve_algos(algos, false)))
        std::printf("%s\n", f.string().c_str());
    } else if (list->parsed()) {
      std::printf("environments:");
      for (const auto& n : ex.registry().list()) std::printf(" %s", n.c_str());
      std::printf("\nalgorithms:");
      for (Algorithm a : kAllAlgorithms) std::printf(" %s", std::string(to_string(a)).c_str());
      std::printf("\n");
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
