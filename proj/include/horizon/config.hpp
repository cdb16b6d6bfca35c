#pragma once

// Run configuration in a plain sectioned key = value format:
//
//   [grid]      T, n_steps
//   [ensemble]  d, n_paths, seed
//   [basis]     degree, ridge
//   [solver]    picard_iters, z_clip
//   [run]       measure, claim, t, u, v, checks, shifts, suite, threads
//   [sweep]     q, beta, r, tuv, quantity
//   [output]    dir
//
// '#' and ';' start comments. Lists are comma separated; tuv triples are
// separated by ';' ("0,0.5,1; 0,0.25,1"). Measure strings may carry the
// placeholders {q}, {beta} and {r}, substituted by the sweep.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "horizon/claim.hpp"
#include "horizon/context.hpp"
#include "horizon/diagnostics.hpp"
#include "horizon/errors.hpp"
#include "horizon/riskmeasure.hpp"

namespace horizon {

struct RunConfig {
  struct Grid {
    double T = 1.0;
    std::size_t n_steps = 50;
    bool operator==(const Grid&) const = default;
  } grid;
  struct Ensemble {
    std::size_t d = 1;
    std::size_t n_paths = 50000;
    std::uint64_t seed = 1;
    bool operator==(const Ensemble&) const = default;
  } ensemble;
  RegressionBasis basis;
  SolveOptions solver;
  struct Run {
    std::string measure = "entropic";
    std::string claim = "brownian";
    double t = 0.0;
    double u = 1.0;
    double v = 1.0;
    std::vector<std::string> checks;
    // Numbers or "tanh" (0.5 (1 + tanh(B_t))).
    std::vector<std::string> shifts{"0", "0.1", "0.5", "1", "tanh"};
    std::string suite;  // "" or "paper_suite"
    unsigned threads = 1;
    bool operator==(const Run&) const = default;
  } run;
  struct Sweep {
    std::vector<double> q;
    std::vector<double> beta;
    std::vector<double> r;
    std::vector<std::array<double, 3>> tuv;
    std::string quantity = "value";  // value | gamma | weak_ratio
    bool operator==(const Sweep&) const = default;
  } sweep;
  struct Output {
    std::string dir = "out";
    bool operator==(const Output&) const = default;
  } output;

  bool operator==(const RunConfig&) const = default;
};

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> k{
      "cash_additivity", "cash_subadditivity", "normalization", "restriction",
      "h_longevity",     "strong",             "order",         "weak",
      "sub",             "monotonicity",       "convexity",     "premium"};
  return k;
}

namespace detail {

// Shortest decimal that reads back to the same double.
inline std::string shortest(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string join(const std::vector<std::string>& v, const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

inline std::string join_numbers(const std::vector<double>& v) {
  std::vector<std::string> s;
  for (double x : v) s.push_back(shortest(x));
  return join(s);
}

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

}  // namespace detail

// Substitutes {q}, {beta} and {r}.
inline std::string substitute(const std::string& tmpl, double q, double beta, double r) {
  auto s = detail::replace_all(tmpl, "{q}", detail::shortest(q));
  s = detail::replace_all(s, "{beta}", detail::shortest(beta));
  return detail::replace_all(s, "{r}", detail::shortest(r));
}

// Measure spec with every placeholder bound to the first value of its sweep
// axis (or 0 when the axis is empty).
inline std::string bound_measure(const RunConfig& c) {
  auto first = [](const std::vector<double>& v, double d) { return v.empty() ? d : v.front(); };
  return substitute(c.run.measure, first(c.sweep.q, 0.5), first(c.sweep.beta, 0.0),
                    first(c.sweep.r, 0.0));
}

inline std::string canonical(const RunConfig& c) {
  using detail::shortest;
  std::ostringstream os;
  os << "[grid]\nT = " << shortest(c.grid.T) << "\nn_steps = " << c.grid.n_steps << "\n\n";
  os << "[ensemble]\nd = " << c.ensemble.d << "\nn_paths = " << c.ensemble.n_paths
     << "\nseed = " << c.ensemble.seed << "\n\n";
  os << "[basis]\ndegree = " << c.basis.degree << "\nridge = " << shortest(c.basis.ridge)
     << "\n\n";
  os << "[solver]\npicard_iters = " << c.solver.picard_iters
     << "\nz_clip = " << shortest(c.solver.z_clip) << "\n\n";
  os << "[run]\nmeasure = " << c.run.measure << "\nclaim = " << c.run.claim
     << "\nt = " << shortest(c.run.t) << "\nu = " << shortest(c.run.u)
     << "\nv = " << shortest(c.run.v) << "\nchecks = " << detail::join(c.run.checks)
     << "\nshifts = " << detail::join(c.run.shifts) << "\nsuite = " << c.run.suite
     << "\nthreads = " << c.run.threads << "\n\n";
  std::vector<std::string> triples;
  for (const auto& a : c.sweep.tuv) {
    triples.push_back(shortest(a[0]) + ", " + shortest(a[1]) + ", " + shortest(a[2]));
  }
  os << "[sweep]\nq = " << detail::join_numbers(c.sweep.q)
     << "\nbeta = " << detail::join_numbers(c.sweep.beta)
     << "\nr = " << detail::join_numbers(c.sweep.r) << "\ntuv = " << detail::join(triples, "; ")
     << "\nquantity = " << c.sweep.quantity << "\n\n";
  os << "[output]\ndir = " << c.output.dir << "\n";
  return os.str();
}

namespace detail {

struct ConfigParser {
  RunConfig cfg;
  std::size_t line = 0;
  std::size_t key_col = 0;
  std::size_t val_col = 0;
  std::map<std::string, std::size_t> key_lines;  // "section.key" -> line

  [[noreturn]] void fail(const std::string& what, std::size_t col) const {
    throw ConfigError(what, line, col);
  }

  double number(const std::string& s) const {
    double v = 0.0;
    const auto* b = s.data();
    const auto* e = s.data() + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || s.empty() || !std::isfinite(v)) {
      fail("expected a number, got '" + s + "'", val_col);
    }
    return v;
  }

  std::uint64_t integer(const std::string& s) const {
    std::uint64_t v = 0;
    const auto* b = s.data();
    const auto* e = s.data() + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || s.empty()) {
      fail("expected a non-negative integer, got '" + s + "'", val_col);
    }
    return v;
  }

  std::vector<std::string> items(const std::string& s, char sep = ',') const {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
      const auto t = trim(cur);
      if (t.empty()) fail("empty list item", val_col);
      out.push_back(t);
    }
    if (!s.empty() && s.back() == sep) fail("empty list item", val_col);
    return out;
  }

  std::vector<double> numbers(const std::string& s) const {
    std::vector<double> out;
    for (const auto& t : items(s)) out.push_back(number(t));
    return out;
  }

  void set(const std::string& section, const std::string& key, const std::string& val) {
    auto& c = cfg;
    auto unknown = [&] { fail("unknown key '" + key + "' in [" + section + "]", key_col); };
    if (section == "grid") {
      if (key == "T") c.grid.T = number(val);
      else if (key == "n_steps") c.grid.n_steps = integer(val);
      else unknown();
    } else if (section == "ensemble") {
      if (key == "d") c.ensemble.d = integer(val);
      else if (key == "n_paths") c.ensemble.n_paths = integer(val);
      else if (key == "seed") c.ensemble.seed = integer(val);
      else unknown();
    } else if (section == "basis") {
      if (key == "degree") c.basis.degree = static_cast<int>(integer(val));
      else if (key == "ridge") c.basis.ridge = number(val);
      else unknown();
    } else if (section == "solver") {
      if (key == "picard_iters") c.solver.picard_iters = static_cast<int>(integer(val));
      else if (key == "z_clip") c.solver.z_clip = number(val);
      else unknown();
    } else if (section == "run") {
      if (key == "measure") c.run.measure = val;
      else if (key == "claim") c.run.claim = val;
      else if (key == "t") c.run.t = number(val);
      else if (key == "u") c.run.u = number(val);
      else if (key == "v") c.run.v = number(val);
      else if (key == "checks") c.run.checks = items(val);
      else if (key == "shifts") c.run.shifts = items(val);
      else if (key == "suite") c.run.suite = val;
      else if (key == "threads") c.run.threads = static_cast<unsigned>(integer(val));
      else unknown();
    } else if (section == "sweep") {
      if (key == "q") c.sweep.q = numbers(val);
      else if (key == "beta") c.sweep.beta = numbers(val);
      else if (key == "r") c.sweep.r = numbers(val);
      else if (key == "tuv") {
        c.sweep.tuv.clear();
        for (const auto& t : items(val, ';')) {
          const auto v = numbers(t);
          if (v.size() != 3) fail("tuv entries need three times", val_col);
          c.sweep.tuv.push_back({v[0], v[1], v[2]});
        }
      } else if (key == "quantity") c.sweep.quantity = val;
      else unknown();
    } else if (section == "output") {
      if (key == "dir") c.output.dir = val;
      else unknown();
    }
  }

  void validate() {
    auto at = [&](const char* key) {
      const auto it = key_lines.find(key);
      line = it == key_lines.end() ? 0 : it->second;
    };
    const auto& c = cfg;
    auto check = [&](bool ok, const char* key, const std::string& what) {
      if (!ok) {
        at(key);
        fail(what, 1);
      }
    };
    check(c.grid.T > 0.0, "grid.T", "T must be > 0");
    check(c.grid.n_steps >= 1, "grid.n_steps", "n_steps must be >= 1");
    check(c.ensemble.d >= 1, "ensemble.d", "d must be >= 1");
    check(c.ensemble.n_paths >= 2, "ensemble.n_paths", "n_paths must be >= 2");
    check(c.basis.ridge >= 0.0, "basis.ridge", "ridge must be >= 0");
    check(c.solver.z_clip > 0.0, "solver.z_clip", "z_clip must be > 0");
    check(c.run.threads >= 1, "run.threads", "threads must be >= 1");
    check(c.run.suite.empty() || c.run.suite == "paper_suite", "run.suite",
          "unknown suite '" + c.run.suite + "'");
    const auto& q = c.sweep.quantity;
    check(q == "value" || q == "gamma" || q == "weak_ratio", "sweep.quantity",
          "unknown sweep quantity '" + q + "'");
    for (const auto& k : c.run.checks) {
      check(std::find(known_checks().begin(), known_checks().end(), k) != known_checks().end(),
            "run.checks", "unknown check '" + k + "'");
    }
    for (const auto& s : c.run.shifts) {
      if (s == "tanh") continue;
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      check(end && *end == '\0' && std::isfinite(v), "run.shifts",
            "shift must be a number or 'tanh', got '" + s + "'");
    }
    for (double t : {c.run.t, c.run.u, c.run.v}) {
      check(t >= 0.0 && t <= c.grid.T, "run.t", "times must lie in [0, T]");
    }
    check(c.run.t <= c.run.u && c.run.u <= c.run.v, "run.u", "need t <= u <= v");
    try {
      const TimeGrid grid(c.grid.T, c.grid.n_steps);
      parse_measure(bound_measure(c), grid);
    } catch (const std::exception& e) {
      at("run.measure");
      fail(e.what(), 1);
    }
    try {
      parse_claim(c.run.claim, 0);
    } catch (const std::exception& e) {
      at("run.claim");
      fail(e.what(), 1);
    }
  }
};

}  // namespace detail

inline RunConfig parse_config(std::istream& is) {
  static const std::set<std::string> sections{"grid",  "ensemble", "basis", "solver",
                                              "run",   "sweep",    "output"};
  detail::ConfigParser p;
  std::string raw;
  std::string section;
  while (std::getline(is, raw)) {
    ++p.line;
    std::string s = raw;
    if (const auto h = s.find_first_of("#;"); h != std::string::npos) {
      // ';' separates tuv triples, so it only starts a comment at line start.
      const auto first = s.find_first_not_of(" \t");
      if (s[h] == '#' || h == first) s = s.substr(0, h);
    }
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    if (s[b] == '[') {
      const auto e = s.find(']', b);
      if (e == std::string::npos) p.fail("unterminated section header", b + 1);
      if (!detail::trim(s.substr(e + 1)).empty()) p.fail("text after section header", e + 2);
      section = detail::trim(s.substr(b + 1, e - b - 1));
      if (!sections.count(section)) p.fail("unknown section [" + section + "]", b + 2);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) p.fail("expected key = value", b + 1);
    if (section.empty()) p.fail("key outside any section", b + 1);
    const auto key = detail::trim(s.substr(b, eq - b));
    if (key.empty()) p.fail("missing key", b + 1);
    const auto val = detail::trim(s.substr(eq + 1));
    p.key_col = b + 1;
    const auto vb = s.find_first_not_of(" \t", eq + 1);
    p.val_col = vb == std::string::npos ? eq + 2 : vb + 1;
    const auto full = section + "." + key;
    if (p.key_lines.count(full)) p.fail("duplicate key '" + key + "'", p.key_col);
    p.key_lines[full] = p.line;
    p.set(section, key, val);
  }
  p.validate();
  return p.cfg;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

// Built-in configurations.
inline RunConfig paper_suite_config() {
  RunConfig c;
  c.grid.n_steps = 20;
  c.ensemble.n_paths = 10000;
  c.ensemble.seed = 7;
  c.run.measure = "entropic";
  c.run.claim = "brownian";
  c.run.t = 0.0;
  c.run.u = 0.5;
  c.run.v = 1.0;
  c.run.suite = "paper_suite";
  return c;
}

}  // namespace horizon
