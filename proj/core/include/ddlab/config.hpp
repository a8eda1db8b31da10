#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ddlab::config {

inline constexpr std::string_view kKinds[] = {"map-iterate", "dde-ensemble", "gaussian",
                                              "brownian",    "kicked",       "compare"};

enum class Type { Bool, Int, Real, String, RealList };

using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;

struct Entry {
  Value value;
  int line = 0;  // 0 for defaults filled in by the schema

  bool operator==(const Entry& o) const { return value == o.value; }
};

// Sections are "" (top level), "params", "ensemble" and "output".
struct RunConfig {
  std::string kind;
  std::map<std::string, std::map<std::string, Entry>> sections;

  bool has(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;
  std::int64_t get_int(const std::string& section, const std::string& key) const;
  double get_real(const std::string& section, const std::string& key) const;
  const std::string& get_string(const std::string& section, const std::string& key) const;
  const std::vector<double>& get_list(const std::string& section, const std::string& key) const;
  unsigned threads() const;
  std::uint64_t seed() const;

  bool operator==(const RunConfig& o) const { return kind == o.kind && sections == o.sections; }
};

// Line format: `[section]` headers, `key = value`, `#` comments. Values are
// true/false, integers, reals, "quoted" or bare strings, and [r1, r2, ...].
// Every problem is collected into one ConfigError.
RunConfig parse_config(std::string_view text);
RunConfig parse_config_file(const std::string& path);

// Canonical text: sorted keys, every default spelled out, reals at 17 digits.
std::string normalize(const RunConfig& cfg);
// SHA-1 of the normalized text, hex.
std::string config_hash(const RunConfig& cfg);

}  // namespace ddlab::config
