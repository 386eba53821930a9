#pragma once
// Sectioned key-value configuration: parsing, schema validation, echo and hash.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace cmhd::cli {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
  int line;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"run-linear",       "run-picard", "elliptic-suite",
                                             "singularity-scan", "norm-study", "check-symmetrizer"};
  return c;
}

// ---------------------------------------------------------------------------
// Arithmetic values: numbers, pi, + - * / ^, parentheses, sqrt.

class ExprParser {
 public:
  ExprParser(std::string s, int line) : s_(std::move(s)), line_(line) {}
  double parse() {
    const double v = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + s_.substr(pos_) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& m) const { throw ConfigError(line_, "bad number '" + s_ + "': " + m); }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  double sum() {
    double v = product();
    for (;;) {
      if (eat('+')) v += product();
      else if (eat('-')) v -= product();
      else return v;
    }
  }
  double product() {
    double v = unary();
    for (;;) {
      if (eat('*')) v *= unary();
      else if (eat('/')) v /= unary();
      else return v;
    }
  }
  double unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }
  double power() {
    const double b = atom();
    if (eat('^')) return std::pow(b, unary());
    return b;
  }
  double atom() {
    skip();
    if (eat('(')) {
      const double v = sum();
      if (!eat(')')) fail("missing ')'");
      return v;
    }
    if (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
      std::size_t e = pos_;
      while (e < s_.size() && std::isalnum(static_cast<unsigned char>(s_[e]))) ++e;
      const std::string id = s_.substr(pos_, e - pos_);
      pos_ = e;
      if (id == "pi") return pi;
      if (id == "sqrt") {
        if (!eat('(')) fail("sqrt needs '('");
        const double v = sum();
        if (!eat(')')) fail("missing ')'");
        return std::sqrt(v);
      }
      fail("unknown identifier '" + id + "'");
    }
    const char* b = s_.c_str() + pos_;
    char* e = nullptr;
    const double v = std::strtod(b, &e);
    if (e == b) fail("expected a number");
    pos_ += static_cast<std::size_t>(e - b);
    return v;
  }
  std::string s_;
  int line_;
  std::size_t pos_ = 0;
};

inline double eval_number(const std::string& s, int line) { return ExprParser(s, line).parse(); }

// ---------------------------------------------------------------------------
// Raw INI text

struct RawEntry {
  std::string value;
  int line;
};
using RawConfig = std::map<std::string, RawEntry>;  //!< "section.key"

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline RawConfig parse_ini(const std::string& text) {
  RawConfig out;
  std::istringstream in(text);
  std::string line, section;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto c = line.find_first_of("#;");
    if (c != std::string::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(ln, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(ln, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(ln, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(ln, "missing key before '='");
    if (section.empty()) throw ConfigError(ln, "key '" + key + "' appears before any [section] header");
    const std::string full = section + "." + key;
    if (auto it = out.find(full); it != out.end())
      throw ConfigError(ln, "duplicate key '" + full + "' (first defined on line " + std::to_string(it->second.line) +
                                ", again on line " + std::to_string(ln) + ")");
    out[full] = {value, ln};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Schema

enum class KeyType { Number, Integer, Seed, String, Choice, IntList };

struct KeySpec {
  std::string name;
  KeyType type;
  std::string fallback;  //!< empty: no default
  std::set<std::string> used_by;  //!< empty: every command
  std::vector<std::string> choices = {};
  std::string help = {};
};

inline const std::vector<KeySpec>& schema() {
  using K = KeyType;
  static const std::set<std::string> lin = {"run-linear"}, pic = {"run-picard"}, ell = {"elliptic-suite"},
                                      sing = {"singularity-scan"}, nrm = {"norm-study"}, sym = {"check-symmetrizer"};
  auto u = [](std::initializer_list<std::set<std::string>> s) {
    std::set<std::string> r;
    for (const auto& x : s) r.insert(x.begin(), x.end());
    return r;
  };
  static const std::vector<KeySpec> s = {
      {"run.command", K::Choice, "", {}, commands(), "must match the command given on the command line"},
      {"run.seed", K::Seed, "", {}},
      {"run.jobs", K::Integer, "1", {}},
      {"run.out", K::String, "out", {}},
      {"domain.kind", K::Choice, "square", u({ell, nrm}), {"square", "sector"}},
      {"domain.omega", K::Number, "pi/2", u({ell, sing})},
      {"domain.r0", K::Number, "1", u({ell, sing})},
      {"domain.n", K::Integer, "64", u({lin, pic, ell, sing, nrm})},
      {"domain.theta_ratio", K::Number, "0", sing, {}, "n_theta / n_r; 0 uses 1/8 (exponent) or 1/2 (acoustic)"},
      {"domain.refinements", K::IntList, "", u({lin, pic, ell, sing, nrm}), {}, "empty runs domain.n only"},
      {"eos.model", K::Choice, "ideal_gas", u({lin, pic, sym}), {"ideal_gas", "affine", "both"}},
      {"eos.gamma", K::Number, "1.4", u({lin, pic, sym})},
      {"eos.epsilon", K::Number, "0.1", u({lin, pic, sym})},
      {"time.T", K::Number, "0.25", u({lin, pic, sing})},
      {"time.cfl", K::Number, "0.45", u({lin, pic, sing})},
      {"time.dissipation", K::Number, "0.02", u({lin, pic, sing})},
      {"time.output_every", K::Integer, "1", lin},
      {"data.generator", K::Choice, "", u({lin, pic}),
       {"manufactured", "standing-wave", "random-smooth", "small-smooth", "constant", "incompatible"}},
      {"data.amplitude", K::Number, "0.2", u({lin, pic})},
      {"data.modes", K::Integer, "3", lin},
      {"data.count", K::Integer, "1000", sym, {}, "random states"},
      {"picard.tol", K::Number, "1e-10", pic},
      {"picard.kmax", K::Integer, "8", pic},
      {"picard.delta_margin", K::Number, "0.5", pic},
      {"singularity.mode", K::Choice, "scan", sing, {"scan", "exponent", "acoustic"}},
      {"singularity.case", K::Choice, "C", sing, {"A", "B", "C"}},
      {"singularity.n", K::Integer, "3", sing, {}, "power for case A"},
      {"singularity.s", K::Integer, "3", sing},
      {"singularity.r_lo", K::Number, "0.05", sing},
      {"singularity.r_hi", K::Number, "0.4", sing},
      {"singularity.threshold", K::Number, "0.1", sing},
      {"singularity.expect", K::Choice, "none", sing, {"none", "finite", "divergent"}},
      {"norm.m", K::Integer, "2", nrm},
      {"norm.field", K::Choice, "x1", nrm, {"x1", "sin", "random"}},
      {"norm.fields", K::Integer, "20", nrm},
      {"hodge.s", K::Integer, "1", ell},
      {"hodge.fields", K::Integer, "100", ell},
      {"assert.min_order", K::Number, "1.8", u({lin, pic, ell, sing, nrm})},
      {"assert.symmetry_tol", K::Number, "1e-13", sym},
      {"assert.boundary_tol", K::Number, "1e-12", sym},
      {"assert.max_ratio", K::Number, "0.5", pic},
      {"assert.exponent_tol", K::Number, "0.02", sing},
  };
  return s;
}

inline const KeySpec* find_key(const std::string& name) {
  for (const KeySpec& k : schema())
    if (k.name == name) return &k;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Validated configuration

struct ResolvedValue {
  std::string text;  //!< canonical text
  double number = 0;
  std::int64_t integer = 0;
  std::uint64_t seed = 0;
  std::vector<int> list;
  bool is_default = false;
  bool present = false;  //!< false when the key has no default and was not given
};

class RunConfig {
 public:
  std::string command;
  std::map<std::string, ResolvedValue> values;

  bool has(const std::string& k) const {
    auto it = values.find(k);
    return it != values.end() && it->second.present;
  }
  const ResolvedValue& get(const std::string& k) const {
    auto it = values.find(k);
    if (it == values.end() || !it->second.present) throw ConfigError(0, "missing required key '" + k + "'");
    return it->second;
  }
  double num(const std::string& k) const { return get(k).number; }
  int integer(const std::string& k) const { return static_cast<int>(get(k).integer); }
  std::uint64_t seed() const { return get("run.seed").seed; }
  const std::string& str(const std::string& k) const { return get(k).text; }
  const std::vector<int>& ints(const std::string& k) const { return get(k).list; }

  //! Grid sizes for refinement studies: domain.refinements or {domain.n}.
  std::vector<int> grids() const {
    if (has("domain.refinements") && !ints("domain.refinements").empty()) return ints("domain.refinements");
    return {integer("domain.n")};
  }

  //! Resolved configuration as parseable text, defaults marked. The hash form
  //! leaves out keys that must not change results (output directory, workers).
  std::string echo(bool for_hash = false) const {
    std::ostringstream o;
    o << "# resolved configuration for " << command << "\n";
    std::string section;
    for (const KeySpec& k : schema()) {
      auto it = values.find(k.name);
      if (it == values.end() || !it->second.present) continue;
      if (for_hash && (k.name == "run.out" || k.name == "run.jobs")) continue;
      const auto dot = k.name.find('.');
      const std::string sec = k.name.substr(0, dot), key = k.name.substr(dot + 1);
      if (sec != section) {
        o << (section.empty() ? "" : "\n") << "[" << sec << "]\n";
        section = sec;
      }
      o << key << " = " << it->second.text << (it->second.is_default && !for_hash ? "  # default" : "") << "\n";
    }
    return o.str();
  }
};

//! Shortest %g text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[40];
  for (int p = 15; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline bool randomized(const RunConfig& c) {
  if (c.command == "check-symmetrizer" || c.command == "elliptic-suite") return true;
  if (c.command == "norm-study") return c.str("norm.field") == "random";
  if (c.command == "run-linear") return c.str("data.generator") == "random-smooth";
  return false;
}

namespace detail {

inline ResolvedValue convert(const KeySpec& k, const std::string& raw, int line) {
  ResolvedValue v;
  v.present = true;
  switch (k.type) {
    case KeyType::Number:
      v.number = eval_number(raw, line);
      if (!std::isfinite(v.number)) throw ConfigError(line, k.name + " must be finite");
      v.text = format_number(v.number);
      break;
    case KeyType::Integer:
    case KeyType::Seed: {
      std::size_t used = 0;
      try {
        if (k.type == KeyType::Seed) {
          if (!raw.empty() && raw[0] == '-') throw std::invalid_argument("negative");
          v.seed = std::stoull(raw, &used);
        } else {
          v.integer = std::stoll(raw, &used);
        }
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != raw.size())
        throw ConfigError(line, k.name + " expects " + (k.type == KeyType::Seed ? "an unsigned 64-bit integer" : "an integer") +
                                    ", got '" + raw + "'");
      v.text = k.type == KeyType::Seed ? std::to_string(v.seed) : std::to_string(v.integer);
      break;
    }
    case KeyType::String:
      if (raw.empty()) throw ConfigError(line, k.name + " must not be empty");
      v.text = raw;
      break;
    case KeyType::Choice: {
      bool ok = false;
      for (const auto& c : k.choices) ok = ok || c == raw;
      if (!ok) {
        std::string opts;
        for (const auto& c : k.choices) opts += (opts.empty() ? "" : ", ") + c;
        throw ConfigError(line, k.name + " must be one of {" + opts + "}, got '" + raw + "'");
      }
      v.text = raw;
      break;
    }
    case KeyType::IntList: {
      std::stringstream ss(raw);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        std::size_t used = 0;
        int n = 0;
        try {
          n = std::stoi(item, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (item.empty() || used != item.size())
          throw ConfigError(line, k.name + " expects a comma-separated integer list, got '" + raw + "'");
        v.list.push_back(n);
      }
      for (std::size_t i = 0; i < v.list.size(); ++i) v.text += (i ? ", " : "") + std::to_string(v.list[i]);
      break;
    }
  }
  return v;
}

inline void check_invariants(const RunConfig& c, const RawConfig& raw) {
  auto line = [&](const std::string& k) {
    auto it = raw.find(k);
    return it == raw.end() ? 0 : it->second.line;
  };
  auto require = [&](bool ok, const std::string& key, const std::string& msg) {
    if (!ok) throw ConfigError(line(key), key + ": " + msg);
  };
  if (c.has("domain.omega")) {
    const double w = c.num("domain.omega");
    require(w > 0 && w < pi, "domain.omega",
            "sector opening angle must lie in (0, pi) (convex corner), got " + format_number(w));
  }
  if (c.has("domain.r0")) require(c.num("domain.r0") > 0, "domain.r0", "radius must be positive");
  if (c.has("domain.n")) require(c.integer("domain.n") >= 8, "domain.n", "grid needs at least 8 cells per direction");
  if (c.has("domain.theta_ratio")) require(c.num("domain.theta_ratio") >= 0 && c.num("domain.theta_ratio") <= 4, "domain.theta_ratio", "must lie in [0, 4]");
  if (c.has("domain.refinements")) {
    const auto& r = c.ints("domain.refinements");
    for (std::size_t i = 0; i < r.size(); ++i) {
      require(r[i] >= 8, "domain.refinements", "grid sizes must be at least 8");
      if (i) require(r[i] == 2 * r[i - 1], "domain.refinements", "each grid must double the previous one");
    }
  }
  if (c.has("eos.gamma")) require(c.num("eos.gamma") > 1, "eos.gamma", "ideal gas requires gamma > 1");
  if (c.has("eos.epsilon")) require(c.num("eos.epsilon") > 0, "eos.epsilon", "affine law requires epsilon > 0");
  if (c.has("time.T")) require(c.num("time.T") > 0, "time.T", "final time must be positive");
  if (c.has("time.cfl")) require(c.num("time.cfl") > 0 && c.num("time.cfl") <= 0.5, "time.cfl", "CFL number must lie in (0, 0.5]");
  if (c.has("time.dissipation")) require(c.num("time.dissipation") >= 0, "time.dissipation", "must be non-negative");
  if (c.has("time.output_every")) require(c.integer("time.output_every") >= 1, "time.output_every", "must be at least 1");
  if (c.has("run.jobs")) require(c.integer("run.jobs") >= 1, "run.jobs", "must be at least 1");
  if (c.has("data.count")) require(c.integer("data.count") >= 1, "data.count", "must be at least 1");
  if (c.has("data.modes")) require(c.integer("data.modes") >= 1, "data.modes", "must be at least 1");
  if (c.has("picard.kmax")) require(c.integer("picard.kmax") >= 2, "picard.kmax", "must be at least 2");
  if (c.has("picard.tol")) require(c.num("picard.tol") > 0, "picard.tol", "must be positive");
  if (c.has("picard.delta_margin")) require(c.num("picard.delta_margin") > 0, "picard.delta_margin", "must be positive");
  if (c.has("norm.m")) require(c.integer("norm.m") >= 0 && c.integer("norm.m") <= 6, "norm.m", "order must lie in [0, 6]");
  if (c.has("hodge.fields")) require(c.integer("hodge.fields") >= 1, "hodge.fields", "must be at least 1");
  if (c.has("norm.fields")) require(c.integer("norm.fields") >= 1, "norm.fields", "must be at least 1");
  if (c.has("hodge.s")) require(c.integer("hodge.s") >= 1 && c.integer("hodge.s") <= 2, "hodge.s", "must be 1 or 2");
  if (c.command == "singularity-scan") {
    const double w = c.num("domain.omega");
    const std::string cs = c.str("singularity.case");
    require(c.num("singularity.r_lo") > 0 && c.num("singularity.r_lo") < c.num("singularity.r_hi") && c.num("singularity.r_hi") <= 1,
            "singularity.r_lo", "fit window must satisfy 0 < r_lo < r_hi <= 1 (fractions of r0)");
    require(c.integer("singularity.s") >= 0 && c.integer("singularity.s") <= 6, "singularity.s", "order must lie in [0, 6]");
    if (cs == "A") {
      require(c.integer("singularity.n") >= 3, "singularity.n", "case A needs n >= 3");
      require(std::abs(w - pi / c.integer("singularity.n")) < 1e-12, "domain.omega", "case A requires omega = pi/n");
    } else if (cs == "B") {
      require(std::abs(w - pi / 2) < 1e-12, "domain.omega", "case B requires omega = pi/2");
    } else {
      const double q = pi / w;
      require(std::abs(q - std::round(q)) > 1e-9, "domain.omega", "case C requires pi/omega not an integer");
    }
  }
  if (c.command == "run-linear") {
    const std::string g = c.str("data.generator");
    require(g == "manufactured" || g == "standing-wave" || g == "random-smooth", "data.generator",
            "run-linear supports manufactured, standing-wave or random-smooth");
    require(c.str("eos.model") != "both", "eos.model", "run-linear needs a single EOS model");
  }
  if (c.command == "run-picard") {
    const std::string g = c.str("data.generator");
    require(g == "small-smooth" || g == "constant" || g == "incompatible", "data.generator",
            "run-picard supports small-smooth, constant or incompatible");
    require(c.str("eos.model") != "both", "eos.model", "run-picard needs a single EOS model");
  }
  if (c.command == "norm-study") require(c.str("domain.kind") == "square", "domain.kind", "norm-study runs on the square");
}

}  // namespace detail

//! Overrides come from the command line and replace file values.
struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

inline RunConfig parse_config(const std::string& text, const std::string& command, const Overrides& ov = {}) {
  bool known = false;
  for (const auto& c : commands()) known = known || c == command;
  if (!known) throw ConfigError(0, "unknown command '" + command + "'");
  RawConfig raw = parse_ini(text);
  if (ov.out) raw["run.out"] = {*ov.out, 0};
  if (ov.seed) raw["run.seed"] = {std::to_string(*ov.seed), 0};
  if (ov.jobs) raw["run.jobs"] = {std::to_string(*ov.jobs), 0};

  RunConfig c;
  c.command = command;
  for (const auto& [name, e] : raw) {
    const KeySpec* k = find_key(name);
    if (!k) throw ConfigError(e.line, "unknown key '" + name + "'");
    if (!k->used_by.empty() && !k->used_by.count(command))
      throw ConfigError(e.line, "key '" + name + "' is not used by command " + command);
  }
  for (const KeySpec& k : schema()) {
    if (!k.used_by.empty() && !k.used_by.count(command)) continue;
    auto it = raw.find(k.name);
    if (it != raw.end()) {
      c.values[k.name] = detail::convert(k, it->second.value, it->second.line);
    } else if (!k.fallback.empty()) {
      ResolvedValue v = detail::convert(k, k.fallback, 0);
      v.is_default = true;
      c.values[k.name] = v;
    } else {
      c.values[k.name] = ResolvedValue{};
    }
  }
  if (c.has("run.command") && c.str("run.command") != command)
    throw ConfigError(raw["run.command"].line, "config is for command " + c.str("run.command") + " but " + command + " was requested");
  if ((command == "run-linear" || command == "run-picard") && !c.has("data.generator"))
    throw ConfigError(0, "missing required key 'data.generator'");
  detail::check_invariants(c, raw);
  if (randomized(c) && !c.has("run.seed"))
    throw ConfigError(0, "run.seed is mandatory for the randomized suite " + command + " (set it or pass --seed)");
  return c;
}

}  // namespace cmhd::cli
