#include "ddlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include "ddlab/csv.hpp"
#include "ddlab/error.hpp"
#include "ddlab/hash.hpp"

namespace ddlab {

namespace {

std::string describe(const std::vector<ConfigIssue>& issues) {
  std::string s = "invalid configuration:";
  for (const auto& i : issues) {
    s += "\n  ";
    if (i.line > 0) s += "line " + std::to_string(i.line) + ": ";
    s += i.message;
  }
  return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(ErrorKind::Config, describe(issues)), issues_(std::move(issues)) {}

}  // namespace ddlab

namespace ddlab::config {

namespace {

struct KeySpec {
  std::string section;
  std::string key;
  Type type;
  std::optional<Value> def;  // empty means required
  std::vector<std::string> choices{};
  std::optional<double> min{};
};

const char* type_name(Type t) {
  switch (t) {
    case Type::Bool: return "bool";
    case Type::Int: return "integer";
    case Type::Real: return "real";
    case Type::String: return "string";
    case Type::RealList: return "list of reals";
  }
  return "?";
}

using Schema = std::vector<KeySpec>;

Schema common(bool ensemble) {
  Schema s{
      {"", "kind", Type::String, std::nullopt},
      {"", "threads", Type::Int, Value{std::int64_t{1}}, {}, 1.0},
      {"output", "dir", Type::String, Value{std::string()}},
  };
  if (ensemble) s.push_back({"ensemble", "seed", Type::Int, Value{std::int64_t{1}}, {}, 0.0});
  return s;
}

Value R(double v) { return Value{v}; }
Value I(std::int64_t v) { return Value{v}; }
Value S(const char* v) { return Value{std::string(v)}; }
Value B(bool v) { return Value{v}; }
Value L(std::vector<double> v) { return Value{std::move(v)}; }

const std::vector<std::string> kKernels{"cosine", "cosine-degenerate", "brownian", "tabulated"};

Schema schema_for(std::string_view kind) {
  if (kind == "map-iterate") {
    auto s = common(false);
    s.insert(s.end(), {
        {"params", "map", Type::String, S("hat"), {"hat", "keener", "noisy-keener", "density-hat"}},
        {"params", "a", Type::Real, R(2.0)},
        {"params", "b", Type::Real, R(0.5)},
        {"params", "A", Type::Real, R(0.0)},
        {"params", "delta", Type::Real, R(0.0)},
        {"params", "noise_width", Type::Real, R(0.1)},
        {"params", "cells", Type::Int, I(4096), {}, 2.0},
        {"params", "n_iter", Type::Int, std::nullopt, {}, 0.0},
        {"params", "initial", Type::String, S("uniform"), {"uniform", "indicator"}},
        {"params", "init_lo", Type::Real, R(0.0)},
        {"params", "init_hi", Type::Real, R(1.0)},
        {"params", "detect_period", Type::Bool, B(false)},
        {"params", "burn_in", Type::Int, I(200), {}, 0.0},
        {"params", "max_period", Type::Int, I(64), {}, 1.0},
        {"params", "tol", Type::Real, R(1e-4)},
        {"output", "every", Type::Int, I(0), {}, 0.0},
    });
    return s;
  }
  if (kind == "dde-ensemble") {
    auto s = common(true);
    s.insert(s.end(), {
        {"params", "system", Type::String, std::nullopt, {"hat", "keener", "linear"}},
        {"params", "alpha", Type::Real, R(0.0)},
        {"params", "a", Type::Real, std::nullopt},
        {"params", "b", Type::Real, R(0.0)},
        {"params", "tau", Type::Real, R(1.0)},
        {"params", "m", Type::Int, I(128), {}, 3.0},
        {"params", "noise_lo", Type::Real, R(0.0)},
        {"params", "noise_hi", Type::Real, R(0.0)},
        {"params", "noise_interval", Type::Real, R(0.0)},
        {"params", "gain", Type::Real, R(1.0)},
        {"ensemble", "spec", Type::String, S("uniform"), {"uniform", "constant", "mixture"}},
        {"ensemble", "lo", Type::Real, R(0.0)},
        {"ensemble", "hi", Type::Real, R(1.0)},
        {"ensemble", "value", Type::Real, R(0.0)},
        {"ensemble", "blocks", Type::RealList, L({})},
        {"ensemble", "n", Type::Int, std::nullopt, {}, 1.0},
        {"output", "t_start", Type::Real, std::nullopt},
        {"output", "t_end", Type::Real, std::nullopt},
        {"output", "snapshot_step", Type::Real, std::nullopt},
        {"output", "bins", Type::Int, I(100), {}, 1.0},
        {"output", "joint", Type::Bool, B(true)},
        {"output", "period_tol", Type::Real, R(0.1)},
    });
    return s;
  }
  if (kind == "gaussian") {
    auto s = common(false);
    s.insert(s.end(), {
        {"params", "kernel", Type::String, std::nullopt, kKernels},
        {"params", "kernel_file", Type::String, S("")},
        {"params", "a", Type::Real, std::nullopt},
        {"params", "b", Type::Real, std::nullopt},
        {"params", "tau", Type::Real, std::nullopt},
        {"params", "T", Type::Real, std::nullopt},
        {"params", "dt", Type::Real, R(0.01)},
        {"params", "slice_points", Type::Int, I(9), {}, 2.0},
    });
    return s;
  }
  if (kind == "brownian") {
    auto s = common(true);
    s.insert(s.end(), {
        {"params", "gamma", Type::Real, R(1.0)},
        {"params", "beta", Type::Real, std::nullopt},
        {"params", "forcing", Type::Real, R(1.0)},
        {"params", "tau", Type::Real, R(1.0)},
        {"params", "m", Type::Int, I(128), {}, 3.0},
        {"params", "T", Type::Real, std::nullopt},
        {"params", "burn_in", Type::Real, R(50.0)},
        {"ensemble", "lo", Type::Real, R(-0.2)},
        {"ensemble", "hi", Type::Real, R(0.2)},
        {"ensemble", "n", Type::Int, std::nullopt, {}, 1.0},
        {"output", "stride", Type::Int, I(16), {}, 1.0},
        {"output", "bins", Type::Int, I(100), {}, 1.0},
        {"output", "min_samples", Type::Int, I(1000000), {}, 2.0},
        {"output", "write_trajectories", Type::Int, I(0), {}, 0.0},
    });
    return s;
  }
  if (kind == "kicked") {
    auto s = common(false);
    s.insert(s.end(), {
        {"params", "gamma", Type::Real, R(1.0)},
        {"params", "tau_list", Type::RealList, L({0.2, 0.1, 0.05})},
        {"params", "horizon", Type::Real, R(200.0)},
        {"params", "burn_in", Type::Real, R(10.0)},
        {"params", "members", Type::Int, I(1000), {}, 1.0},
        {"params", "observable", Type::String, S("centered"), {"centered", "identity"}},
        {"params", "decay_iterations", Type::Int, I(20), {}, 0.0},
        {"params", "cells", Type::Int, I(4096), {}, 2.0},
    });
    return s;
  }
  if (kind == "compare") {
    auto s = common(true);
    s.insert(s.end(), {
        {"params", "kernel", Type::String, std::nullopt, kKernels},
        {"params", "kernel_file", Type::String, S("")},
        {"params", "a", Type::Real, std::nullopt},
        {"params", "b", Type::Real, std::nullopt},
        {"params", "tau", Type::Real, std::nullopt},
        {"params", "m", Type::Int, I(512), {}, 3.0},
        {"params", "times", Type::RealList, L({0.25, 0.5, 1.0})},
        {"ensemble", "n", Type::Int, std::nullopt, {}, 2.0},
    });
    return s;
  }
  return {};
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Raw literal as written, before the schema assigns a type.
struct Literal {
  enum Kind { Bool, Int, Real, Quoted, Bare, List } kind;
  Value value;
};

std::optional<Literal> lex_value(const std::string& raw, std::string& err) {
  if (raw.empty()) {
    err = "missing value";
    return std::nullopt;
  }
  if (raw == "true" || raw == "false") return Literal{Literal::Bool, raw == "true"};
  if (raw.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < raw.size() && raw[i] != '"'; ++i) {
      if (raw[i] == '\\' && i + 1 < raw.size()) ++i;
      out.push_back(raw[i]);
    }
    if (i + 1 != raw.size()) {
      err = "unterminated or trailing characters after string";
      return std::nullopt;
    }
    return Literal{Literal::Quoted, out};
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') {
      err = "unterminated list";
      return std::nullopt;
    }
    std::vector<double> xs;
    const std::string body = trim(std::string_view(raw).substr(1, raw.size() - 2));
    if (!body.empty()) {
      std::stringstream ss(body);
      std::string item;
      while (std::getline(ss, item, ',')) {
        double v;
        if (!parse_number(trim(item), v)) {
          err = "list item '" + trim(item) + "' is not a number";
          return std::nullopt;
        }
        xs.push_back(v);
      }
    }
    return Literal{Literal::List, xs};
  }
  std::int64_t iv;
  if (parse_number(raw, iv)) return Literal{Literal::Int, iv};
  double dv;
  if (parse_number(raw, dv)) return Literal{Literal::Real, dv};
  if (raw.find_first_of(" \t\"=[]") != std::string::npos) {
    err = "cannot parse value '" + raw + "'";
    return std::nullopt;
  }
  return Literal{Literal::Bare, raw};
}

std::optional<Value> coerce(const Literal& lit, Type type) {
  switch (type) {
    case Type::Bool:
      if (lit.kind == Literal::Bool) return lit.value;
      break;
    case Type::Int:
      if (lit.kind == Literal::Int) return lit.value;
      break;
    case Type::Real:
      if (lit.kind == Literal::Real) return lit.value;
      if (lit.kind == Literal::Int) return Value{static_cast<double>(std::get<std::int64_t>(lit.value))};
      break;
    case Type::String:
      if (lit.kind == Literal::Quoted || lit.kind == Literal::Bare) return lit.value;
      break;
    case Type::RealList:
      if (lit.kind == Literal::List) return lit.value;
      break;
  }
  return std::nullopt;
}

struct RawEntry {
  std::string section;
  std::string key;
  std::string raw;
  int line;
};

std::string section_label(const std::string& s) { return s.empty() ? "top level" : "[" + s + "]"; }

}  // namespace

RunConfig parse_config(std::string_view text) {
  std::vector<ConfigIssue> issues;
  std::vector<RawEntry> raw;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.erase(i);
        break;
      }
    }
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        issues.push_back({lineno, "malformed section header"});
        continue;
      }
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (section != "params" && section != "ensemble" && section != "output") {
        issues.push_back({lineno, "unknown section [" + section + "]"});
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      issues.push_back({lineno, "expected 'key = value'"});
      continue;
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (!is_identifier(key)) {
      issues.push_back({lineno, "invalid key '" + key + "'"});
      continue;
    }
    raw.push_back({section, key, trim(std::string_view(t).substr(eq + 1)), lineno});
  }

  RunConfig cfg;
  const auto kind_it = std::find_if(raw.begin(), raw.end(), [](const RawEntry& e) { return e.section.empty() && e.key == "kind"; });
  if (kind_it == raw.end()) {
    issues.push_back({0, "missing required key 'kind'"});
    throw ConfigError(std::move(issues));
  }
  {
    std::string err;
    const auto lit = lex_value(kind_it->raw, err);
    if (lit && (lit->kind == Literal::Quoted || lit->kind == Literal::Bare)) cfg.kind = std::get<std::string>(lit->value);
  }
  const Schema schema = schema_for(cfg.kind);
  if (schema.empty()) {
    std::string known;
    for (auto k : kKinds) known += (known.empty() ? "" : ", ") + std::string(k);
    issues.push_back({kind_it->line, "unknown kind '" + kind_it->raw + "' (expected one of " + known + ")"});
    throw ConfigError(std::move(issues));
  }

  for (const auto& e : raw) {
    const auto spec = std::find_if(schema.begin(), schema.end(),
                                   [&](const KeySpec& k) { return k.section == e.section && k.key == e.key; });
    if (e.section != "" && e.section != "params" && e.section != "ensemble" && e.section != "output") continue;
    if (spec == schema.end()) {
      issues.push_back({e.line, "unknown key '" + e.key + "' in " + section_label(e.section) + " for kind " + cfg.kind});
      continue;
    }
    auto& slot = cfg.sections[e.section];
    if (slot.count(e.key)) {
      issues.push_back({e.line, "duplicate key '" + e.key + "'"});
      continue;
    }
    std::string err;
    const auto lit = lex_value(e.raw, err);
    if (!lit) {
      issues.push_back({e.line, "key '" + e.key + "': " + err});
      continue;
    }
    const auto v = coerce(*lit, spec->type);
    if (!v) {
      issues.push_back({e.line, "type mismatch for '" + e.key + "': expected " + type_name(spec->type) + ", got " + e.raw});
      continue;
    }
    if (!spec->choices.empty()) {
      const auto& s = std::get<std::string>(*v);
      if (std::find(spec->choices.begin(), spec->choices.end(), s) == spec->choices.end()) {
        std::string opts;
        for (const auto& c : spec->choices) opts += (opts.empty() ? "" : ", ") + c;
        issues.push_back({e.line, "invalid value '" + s + "' for '" + e.key + "' (expected one of " + opts + ")"});
        continue;
      }
    }
    if (spec->min) {
      const double x = spec->type == Type::Int ? static_cast<double>(std::get<std::int64_t>(*v)) : std::get<double>(*v);
      if (x < *spec->min) {
        issues.push_back({e.line, "'" + e.key + "' must be >= " + csv::format(*spec->min)});
        continue;
      }
    }
    slot[e.key] = Entry{*v, e.line};
  }
  for (const auto& k : schema) {
    auto& slot = cfg.sections[k.section];
    if (slot.count(k.key)) continue;
    const bool had_error = std::any_of(raw.begin(), raw.end(), [&](const RawEntry& e) { return e.section == k.section && e.key == k.key; });
    if (had_error) continue;
    if (!k.def) {
      issues.push_back({0, "missing required key '" + k.key + "' in " + section_label(k.section)});
      continue;
    }
    slot[k.key] = Entry{*k.def, 0};
  }
  if (!issues.empty()) {
    std::stable_sort(issues.begin(), issues.end(), [](const ConfigIssue& a, const ConfigIssue& b) {
      return (a.line == 0 ? INT32_MAX : a.line) < (b.line == 0 ? INT32_MAX : b.line);
    });
    throw ConfigError(std::move(issues));
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string render(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return csv::format(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          std::string out = "\"";
          for (char c : x) {
            if (c == '"' || c == '\\') out.push_back('\\');
            out.push_back(c);
          }
          return out + "\"";
        } else {
          std::string out = "[";
          for (std::size_t i = 0; i < x.size(); ++i) out += (i ? ", " : "") + csv::format(x[i]);
          return out + "]";
        }
      },
      v);
}

const Entry& lookup(const RunConfig& cfg, const std::string& section, const std::string& key) {
  const auto s = cfg.sections.find(section);
  if (s != cfg.sections.end()) {
    const auto k = s->second.find(key);
    if (k != s->second.end()) return k->second;
  }
  throw DomainError("config has no key '" + key + "' in " + section_label(section));
}

template <class T>
const T& typed(const RunConfig& cfg, const std::string& section, const std::string& key) {
  const auto* v = std::get_if<T>(&lookup(cfg, section, key).value);
  if (!v) throw DomainError("config key '" + key + "' has a different type");
  return *v;
}

}  // namespace

bool RunConfig::has(const std::string& section, const std::string& key) const {
  const auto s = sections.find(section);
  return s != sections.end() && s->second.count(key) > 0;
}
bool RunConfig::get_bool(const std::string& s, const std::string& k) const { return typed<bool>(*this, s, k); }
std::int64_t RunConfig::get_int(const std::string& s, const std::string& k) const { return typed<std::int64_t>(*this, s, k); }
double RunConfig::get_real(const std::string& s, const std::string& k) const { return typed<double>(*this, s, k); }
const std::string& RunConfig::get_string(const std::string& s, const std::string& k) const {
  return typed<std::string>(*this, s, k);
}
const std::vector<double>& RunConfig::get_list(const std::string& s, const std::string& k) const {
  return typed<std::vector<double>>(*this, s, k);
}
unsigned RunConfig::threads() const { return static_cast<unsigned>(get_int("", "threads")); }
std::uint64_t RunConfig::seed() const {
  return has("ensemble", "seed") ? static_cast<std::uint64_t>(get_int("ensemble", "seed")) : 0;
}

std::string normalize(const RunConfig& cfg) {
  std::string out;
  const auto top = cfg.sections.find("");
  if (top != cfg.sections.end()) {
    for (const auto& [k, e] : top->second) out += k + " = " + render(e.value) + "\n";
  }
  for (const auto& [name, entries] : cfg.sections) {
    if (name.empty() || entries.empty()) continue;
    out += "\n[" + name + "]\n";
    for (const auto& [k, e] : entries) out += k + " = " + render(e.value) + "\n";
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) { return sha1_hex(normalize(cfg)); }

}  // namespace ddlab::config
