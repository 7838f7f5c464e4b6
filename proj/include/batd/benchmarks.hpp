#pragma once

// The four off-policy prediction benchmarks plus a plain-text loader for
// user-supplied environments.

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "batd/mdp.hpp"

namespace batd {

struct UnknownBenchmark : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};

struct BenchmarkSpec {
  std::string name;
  FiniteMdp mdp;
  FeatureMap phi;
  PolicyPair policies;
  Vector theta0;
  Vector w0;
  std::size_t default_horizon = 0;
  std::size_t start_state = 0;

  std::size_t dim() const noexcept { return phi.dim(); }

  void validate() const {
    mdp.validate();
    policies.validate(mdp);
    if (phi.n_states() != mdp.n_states) throw DimensionMismatch(name + ": feature rows != states");
    if (theta0.size() != phi.dim() || w0.size() != phi.dim())
      throw DimensionMismatch(name + ": initial vectors must have length d");
    if (start_state >= mdp.n_states) throw DimensionMismatch(name + ": start state out of range");
    if (default_horizon == 0) throw InvalidModel(name + ": horizon must be positive");
  }
};

namespace benchmarks {

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"two_state", "baird", "random_walk", "boyan"};
  return names;
}

inline BenchmarkSpec two_state() {
  BenchmarkSpec b;
  b.name = "two_state";
  b.mdp = FiniteMdp::make(2, 2, 0.9);
  for (std::size_t s = 0; s < 2; ++s) {
    b.mdp.P(s, 0, 0) = 1.0;
    b.mdp.P(s, 1, 1) = 1.0;
  }
  b.policies.mu = Matrix{{0.5, 0.5}, {0.5, 0.5}};
  b.policies.pi = Matrix{{0.0, 1.0}, {0.0, 1.0}};
  b.phi = FeatureMap(Matrix{{1.0}, {2.0}});
  b.theta0 = {1.0};
  b.w0 = {0.0};
  b.default_horizon = 3000;
  b.start_state = 0;
  return b;
}

// States 0..5 are the upper states, 6 the lower one. The six dashed actions
// share one outcome distribution, so they collapse to action 0.
inline BenchmarkSpec baird() {
  BenchmarkSpec b;
  b.name = "baird";
  b.mdp = FiniteMdp::make(7, 2, 0.99);
  Matrix mu(7, 2), pi(7, 2);
  for (std::size_t s = 0; s < 7; ++s) {
    for (std::size_t t = 0; t < 6; ++t) b.mdp.P(s, 0, t) = 1.0 / 6.0;
    b.mdp.P(s, 1, 6) = 1.0;
    mu(s, 0) = 6.0 / 7.0;
    mu(s, 1) = 1.0 / 7.0;
    pi(s, 1) = 1.0;
  }
  b.policies = {pi, mu};
  Matrix f(7, 8);
  for (std::size_t i = 0; i < 6; ++i) {
    f(i, i) = 2.0;
    f(i, 7) = 1.0;
  }
  f(6, 6) = 1.0;
  f(6, 7) = 2.0;
  b.phi = FeatureMap(std::move(f));
  b.theta0 = {1, 1, 1, 1, 1, 1, 10, 1};
  b.w0.assign(8, 0.0);
  b.default_horizon = 5000;
  b.start_state = 0;
  return b;
}

// Interior states 0..4; stepping off either end terminates the episode and
// the walk restarts in the center state.
inline BenchmarkSpec random_walk() {
  BenchmarkSpec b;
  b.name = "random_walk";
  constexpr std::size_t n = 5, center = 2;
  b.mdp = FiniteMdp::make(n, 2, 0.99);
  for (std::size_t s = 0; s < n; ++s) {
    if (s == 0) {
      b.mdp.P(s, 0, center) = 1.0;
      b.mdp.continuation(s, 0, center) = 0.0;
    } else {
      b.mdp.P(s, 0, s - 1) = 1.0;
    }
    if (s == n - 1) {
      b.mdp.P(s, 1, center) = 1.0;
      b.mdp.continuation(s, 1, center) = 0.0;
      b.mdp.R(s, 1, center) = 1.0;
    } else {
      b.mdp.P(s, 1, s + 1) = 1.0;
    }
  }
  Matrix mu(n, 2, 0.5), pi(n, 2);
  for (std::size_t s = 0; s < n; ++s) {
    pi(s, 0) = 0.4;
    pi(s, 1) = 0.6;
  }
  b.policies = {pi, mu};
  b.phi = FeatureMap(Matrix::identity(n));
  b.theta0.assign(n, 0.0);
  b.w0.assign(n, 0.0);
  b.default_horizon = 3000;
  b.start_state = center;
  return b;
}

// 13-state chain; 11 -> 12 -> 0 are forced moves (both actions identical,
// identical policies, so rho = 1). Features interpolate between anchors
// at 0, 4, 8, 12.
inline BenchmarkSpec boyan() {
  BenchmarkSpec b;
  b.name = "boyan";
  constexpr std::size_t n = 13;
  b.mdp = FiniteMdp::make(n, 2, 0.9);
  Matrix mu(n, 2, 0.5), pi(n, 2, 0.5);
  for (std::size_t s = 0; s <= 10; ++s) {
    b.mdp.P(s, 0, s + 1) = 1.0;
    b.mdp.P(s, 1, s + 2) = 1.0;
    b.mdp.R(s, 0, s + 1) = -3.0;
    b.mdp.R(s, 1, s + 2) = -3.0;
    pi(s, 0) = 0.4;
    pi(s, 1) = 0.6;
  }
  for (std::size_t a = 0; a < 2; ++a) {
    b.mdp.P(11, a, 12) = 1.0;
    b.mdp.R(11, a, 12) = -3.0;
    b.mdp.P(12, a, 0) = 1.0;
  }
  b.policies = {pi, mu};
  Matrix f(n, 4);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t anchor = (s / 4) * 4;
    const std::size_t k = s / 4;
    if (s == anchor) {
      f(s, k) = 1.0;
    } else {
      f(s, k) = static_cast<double>(anchor + 4 - s) / 4.0;
      f(s, k + 1) = static_cast<double>(s - anchor) / 4.0;
    }
  }
  b.phi = FeatureMap(std::move(f));
  b.theta0.assign(4, 0.0);
  b.w0.assign(4, 0.0);
  b.default_horizon = 20000;
  b.start_state = 0;
  return b;
}

inline BenchmarkSpec build(std::string_view name) {
  if (name == "two_state") return two_state();
  if (name == "baird") return baird();
  if (name == "random_walk") return random_walk();
  if (name == "boyan") return boyan();
  throw UnknownBenchmark("unknown benchmark '" + std::string(name) + "'");
}

inline std::vector<std::string> list() { return builtin_names(); }

}  // namespace benchmarks

/// Built-in benchmarks plus environments loaded from files. Names keep
/// insertion order: built-ins first, then extras as added.
class BenchmarkRegistry {
 public:
  std::vector<std::string> list() const {
    std::vector<std::string> out = benchmarks::builtin_names();
    for (const auto& e : extras_) out.push_back(e.name);
    return out;
  }

  BenchmarkSpec build(std::string_view name) const {
    for (const auto& e : extras_)
      if (e.name == name) return e;
    return benchmarks::build(name);
  }

  void add(BenchmarkSpec spec) {
    spec.validate();
    for (const auto& n : benchmarks::builtin_names())
      if (n == spec.name) throw InvalidModel("environment name '" + n + "' is reserved");
    for (auto& e : extras_)
      if (e.name == spec.name) {
        e = std::move(spec);
        return;
      }
    extras_.push_back(std::move(spec));
  }

 private:
  std::vector<BenchmarkSpec> extras_;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<double> parse_numbers(const std::string& text, std::size_t line) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line) + ": bad number '" + tok + "'");
    }
  }
  return out;
}

}  // namespace detail

/// Parses the key-value environment format:
///
///   name = my_env
///   states = 3          actions = 2        features = 2
///   gamma = 0.9         horizon = 2000     start = 0
///   P 0 1 = 0.2 0.8 0   (one row per state/action; sums to 1)
///   R 0 1 = 0 1 0       (optional, default 0)
///   terminal 0 1 = 0 0 1 (optional; 1 ends the episode on that outcome)
///   mu 0 = 0.5 0.5      pi 0 = 0 1
///   phi 0 = 1 0
///   theta0 = 0 0        (optional, default 0)
///
/// '#' starts a comment. Size keys must precede row keys.
inline BenchmarkSpec parse_env_text(std::string_view text) {
  BenchmarkSpec spec;
  std::size_t ns = 0, na = 0, d = 0;
  double gamma = -1.0;
  bool sized = false;
  Matrix pi, mu, phi;
  std::vector<bool> p_seen, pi_seen, mu_seen, phi_seen;
  std::size_t line_no = 0;

  auto ensure_sized = [&](std::size_t line) {
    if (sized) return;
    if (ns == 0 || na == 0 || d == 0 || gamma < 0.0)
      throw ParseError("line " + std::to_string(line) +
                       ": states, actions, features and gamma must come first");
    spec.mdp = FiniteMdp::make(ns, na, gamma);
    pi = Matrix(ns, na);
    mu = Matrix(ns, na);
    phi = Matrix(ns, d);
    p_seen.assign(ns * na, false);
    pi_seen.assign(ns, false);
    mu_seen.assign(ns, false);
    phi_seen.assign(ns, false);
    spec.theta0.assign(d, 0.0);
    spec.w0.assign(d, 0.0);
    sized = true;
  };
  auto index = [&](std::istringstream& in, std::size_t bound, std::size_t line) {
    long long v = -1;
    if (!(in >> v) || v < 0 || static_cast<std::size_t>(v) >= bound)
      throw ParseError("line " + std::to_string(line) + ": index out of range");
    return static_cast<std::size_t>(v);
  };
  auto expect_len = [](const std::vector<double>& v, std::size_t n, std::size_t line) {
    if (v.size() != n)
      throw ParseError("line " + std::to_string(line) + ": expected " + std::to_string(n) +
                       " values, got " + std::to_string(v.size()));
  };

  std::istringstream lines{std::string(text)};
  std::string raw;
  while (std::getline(lines, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("line " + std::to_string(line_no) + ": missing '='");
    const std::string lhs = detail::trim(std::string_view(line).substr(0, eq));
    const std::string rhs = detail::trim(std::string_view(line).substr(eq + 1));
    std::istringstream key(lhs);
    std::string head;
    key >> head;

    auto scalar = [&]() {
      const auto v = detail::parse_numbers(rhs, line_no);
      expect_len(v, 1, line_no);
      return v[0];
    };
    auto count = [&]() {
      const double v = scalar();
      if (!(v >= 1.0) || v != std::floor(v))
        throw ParseError("line " + std::to_string(line_no) + ": expected a positive integer");
      return static_cast<std::size_t>(v);
    };

    if (head == "name") {
      spec.name = rhs;
    } else if (head == "states") {
      ns = count();
    } else if (head == "actions") {
      na = count();
    } else if (head == "features") {
      d = count();
    } else if (head == "gamma") {
      gamma = scalar();
    } else if (head == "horizon") {
      spec.default_horizon = count();
    } else if (head == "start") {
      const double v = scalar();
      if (v < 0 || v != std::floor(v)) throw ParseError("line " + std::to_string(line_no) + ": bad start");
      spec.start_state = static_cast<std::size_t>(v);
    } else if (head == "P" || head == "R" || head == "terminal") {
      ensure_sized(line_no);
      const std::size_t s = index(key, ns, line_no);
      const std::size_t a = index(key, na, line_no);
      const auto v = detail::parse_numbers(rhs, line_no);
      expect_len(v, ns, line_no);
      for (std::size_t t = 0; t < ns; ++t) {
        if (head == "P") spec.mdp.P(s, a, t) = v[t];
        else if (head == "R") spec.mdp.R(s, a, t) = v[t];
        else spec.mdp.continuation(s, a, t) = v[t] != 0.0 ? 0.0 : 1.0;
      }
      if (head == "P") p_seen[s * na + a] = true;
    } else if (head == "pi" || head == "mu" || head == "phi") {
      ensure_sized(line_no);
      const std::size_t s = index(key, ns, line_no);
      const auto v = detail::parse_numbers(rhs, line_no);
      Matrix& target = head == "pi" ? pi : head == "mu" ? mu : phi;
      expect_len(v, target.cols(), line_no);
      std::copy(v.begin(), v.end(), target.row(s).begin());
      (head == "pi" ? pi_seen : head == "mu" ? mu_seen : phi_seen)[s] = true;
    } else if (head == "theta0") {
      ensure_sized(line_no);
      const auto v = detail::parse_numbers(rhs, line_no);
      expect_len(v, d, line_no);
      spec.theta0 = v;
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + head + "'");
    }
  }
  if (spec.name.empty()) throw ParseError("missing 'name'");
  ensure_sized(line_no);
  auto all = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
  if (!all(p_seen)) throw ParseError("every (state, action) needs a P row");
  if (!all(pi_seen) || !all(mu_seen)) throw ParseError("every state needs pi and mu rows");
  if (!all(phi_seen)) throw ParseError("every state needs a phi row");
  if (spec.default_horizon == 0) spec.default_horizon = 3000;
  spec.policies = {pi, mu};
  spec.phi = FeatureMap(phi);
  spec.validate();
  return spec;
}

inline BenchmarkSpec load_env_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open environment file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_env_text(buf.str());
}

}  // namespace batd
