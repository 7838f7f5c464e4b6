#pragma once

// CSV persistence for sweeps, evaluations, curves and analysis tables, plus
// the 4-significant-digit text rendering used on the terminal. CSV numbers
// use the shortest representation that round-trips exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "batd/harness.hpp"
#include "batd/spectra.hpp"

namespace batd {

struct IoError : Error {
  using Error::Error;
};

namespace fs = std::filesystem;

inline std::string format_sig4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

/// Identity hash of a sweep row; `analyze` refuses a winner whose stored
/// hash does not match its fields.
inline std::string config_hash(std::string_view env, Algorithm algo, const Hyper& h) {
  return hex64(fnv1a64(std::string(env) + "," + std::string(to_string(algo)) + "," + config_id(h)));
}

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(std::move(cell));
  return out;
}

inline std::vector<std::vector<std::string>> read_csv(const fs::path& path,
                                                      const std::vector<std::string>& header) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != header)
    throw IoError("'" + path.string() + "': unexpected header");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw IoError("'" + path.string() + "': row has " + std::to_string(cells.size()) + " cells");
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline double cell_real(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw IoError("'" + path.string() + "': bad number '" + s + "'");
}

}  // namespace detail

// ---------------------------------------------------------------- layout

inline fs::path algo_dir(const fs::path& out, std::string_view env, Algorithm algo) {
  return out / std::string(env) / std::string(to_string(algo));
}
inline fs::path sweep_path(const fs::path& out, std::string_view env, Algorithm algo) {
  return algo_dir(out, env, algo) / "sweep.csv";
}
inline fs::path eval_path(const fs::path& out, std::string_view env, Algorithm algo) {
  return algo_dir(out, env, algo) / "eval.csv";
}
inline fs::path curves_dir(const fs::path& out, std::string_view env, Algorithm algo) {
  return algo_dir(out, env, algo) / "curves";
}

// ---------------------------------------------------------------- sweep

inline const std::vector<std::string> kSweepHeader{
    "env",  "algo", "horizon",   "tune_seeds", "config_index",  "config_id", "alpha",
    "alpha_w", "eta", "beta", "objective", "diverged_runs", "winner", "config_hash"};

inline std::string sweep_csv(const SweepSpec& sweep, const TuneResult& r) {
  std::string s;
  for (std::size_t i = 0; i < kSweepHeader.size(); ++i) s += (i ? "," : "") + kSweepHeader[i];
  s += '\n';
  const std::string algo(to_string(sweep.algo));
  for (std::size_t i = 0; i < r.configs.size(); ++i) {
    const Hyper& h = r.configs[i];
    s += sweep.env + "," + algo + "," + std::to_string(sweep.horizon) + "," +
         std::to_string(sweep.tune_seeds) + "," + std::to_string(i) + "," + config_id(h) + "," +
         format_double(h.alpha) + "," + format_double(h.alpha_w) + "," + format_double(h.eta) +
         "," + format_double(h.beta) + "," + format_double(r.objective[i]) + "," +
         std::to_string(r.diverged[i]) + "," + (i == r.best ? "1" : "0") + "," +
         config_hash(sweep.env, sweep.algo, h) + "\n";
  }
  return s;
}

struct SweepWinner {
  std::string env;
  Algorithm algo = Algorithm::td;
  std::size_t horizon = 0;
  Hyper hyper;
  double objective = 0.0;
  std::string hash;
};

/// Reads the winning row and cross-checks it: config_id must match the
/// numeric columns and config_hash must match both.
inline SweepWinner read_sweep_winner(const fs::path& path) {
  const auto rows = detail::read_csv(path, kSweepHeader);
  const std::vector<std::string>* win = nullptr;
  for (const auto& r : rows)
    if (r[12] == "1") {
      if (win) throw IoError("'" + path.string() + "': more than one winner");
      win = &r;
    }
  if (!win) throw IoError("'" + path.string() + "': no winner row");
  const auto& r = *win;
  const auto algo = parse_algorithm(r[1]);
  if (!algo) throw IoError("'" + path.string() + "': unknown algorithm '" + r[1] + "'");
  SweepWinner w;
  w.env = r[0];
  w.algo = *algo;
  w.horizon = static_cast<std::size_t>(detail::cell_real(r[2], path));
  w.hyper = {detail::cell_real(r[6], path), detail::cell_real(r[7], path),
             detail::cell_real(r[8], path), detail::cell_real(r[9], path)};
  w.objective = detail::cell_real(r[10], path);
  w.hash = r[13];
  if (config_id(w.hyper) != r[5])
    throw IoError("'" + path.string() + "': winner config_id does not match its columns");
  if (config_hash(w.env, w.algo, w.hyper) != w.hash)
    throw IoError("'" + path.string() + "': winner config_hash mismatch");
  return w;
}

// ---------------------------------------------------------------- eval

inline std::string eval_csv(std::string_view env, Algorithm algo, const EvalResult& r) {
  std::string s = "env,algo,config_id,seed,auc_ss,final,diverged\n";
  for (const auto& rec : r.records)
    s += std::string(env) + "," + std::string(to_string(algo)) + "," + rec.config_id + "," +
         std::to_string(rec.seed) + "," + format_double(rec.auc_ss) + "," +
         format_double(rec.final) + "," + (rec.diverged ? "1" : "0") + "\n";
  return s;
}

inline std::string curve_csv(const MetricSeries& m) {
  std::string s = "t,rmspbe\n";
  for (std::size_t t = 0; t < m.values.size(); ++t)
    s += std::to_string(t) + "," + format_double(m.values[t]) + "\n";
  return s;
}

inline std::vector<double> read_curve_csv(const fs::path& path) {
  const auto rows = detail::read_csv(path, {"t", "rmspbe"});
  std::vector<double> v;
  v.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i][0] != std::to_string(i)) throw IoError("'" + path.string() + "': t out of order");
    v.push_back(detail::cell_real(rows[i][1], path));
  }
  return v;
}

// ---------------------------------------------------------------- analysis

inline std::string yes_no(bool b) { return b ? "yes" : "no"; }

inline std::string analysis_csv(const std::vector<AnalysisRow>& rows) {
  std::string s =
      "env,sigma_min_fp,margin_tdrc,margin_ba,best_q_C,alpha_C,best_q_A,alpha_A,speed_holds,"
      "interpretation\n";
  for (const auto& r : rows)
    s += r.env + "," + format_double(r.sigma_min_fp) + "," + format_double(r.margin_tdrc) + "," +
         format_double(r.margin_ba) + "," + format_double(r.best_q_C.q) + "," +
         format_double(r.best_q_C.alpha) + "," + format_double(r.best_q_A.q) + "," +
         format_double(r.best_q_A.alpha) + "," + yes_no(r.speed_holds) + "," + r.interpretation +
         "\n";
  return s;
}

// ---------------------------------------------------------------- text tables

/// Left-aligned first column, right-aligned rest, two spaces between.
inline std::string render_text_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return {};
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c)
      width[c] = std::max(width[c], r[c].size());
  std::string s;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      const std::string pad(width[c] - r[c].size(), ' ');
      if (c) line += "  ";
      line += c == 0 ? r[c] + pad : pad + r[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    s += line + "\n";
  }
  return s;
}

inline std::string analysis_text(const std::vector<AnalysisRow>& rows) {
  std::vector<std::vector<std::string>> t{{"env", "sigma_min(M_A-D_pi)", "TDRC margin",
                                           "BA margin", "best q_C", "best q_A", "q_A<q_C",
                                           "interpretation"}};
  for (const auto& r : rows)
    t.push_back({r.env, format_sig4(r.sigma_min_fp), format_sig4(r.margin_tdrc),
                 format_sig4(r.margin_ba), format_sig4(r.best_q_C.q), format_sig4(r.best_q_A.q),
                 yes_no(r.speed_holds), r.interpretation});
  return render_text_table(t);
}

}  // namespace batd
