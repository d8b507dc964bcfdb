#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "doppler/common.hpp"

namespace doppler::cli {

// Sectioned key/value configuration:
//
//   # comment
//   [section]
//   key = value        ; trailing comments are not stripped
//
// Every key is checked against the known schema when it is set, so a typo
// fails up front with its file and line rather than silently falling back
// to a default. Values stay strings until a typed getter parses them; parse
// failures also report the source location.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_text(const std::string& text, const std::string& source);

  // "section.key=value", as given to --set on the command line.
  void set_override(const std::string& assignment);

  bool has(const std::string& section, const std::string& key) const;

  // Required getters throw ConfigError naming the missing key; _or getters
  // fall back to the default when the key is absent.
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const;
  long long get_int(const std::string& section, const std::string& key) const;
  long long get_int_or(const std::string& section, const std::string& key,
                       long long fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;
  std::uint64_t get_seed_or(const std::string& section, std::uint64_t fallback) const;

  // Comma-separated lists; empty when the key is absent.
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
  std::vector<int> get_int_list(const std::string& section, const std::string& key) const;

  // Every (section, key, value) in deterministic order, for echoing the
  // effective configuration.
  std::vector<std::string> describe() const;

 private:
  struct Value {
    std::string text;
    std::string where;  // "path:line" or "--set"
  };

  void set_checked(const std::string& section, const std::string& key, const std::string& value,
                   const std::string& where);
  const Value* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& message) const;

  std::map<std::string, std::map<std::string, Value>> sections_;
};

// Seed precedence: the DOPPLER_SEED environment variable beats the config
// file, which beats the built-in default. Commands derive per-purpose
// streams from this one root.
std::uint64_t effective_seed(const Config& cfg, const std::string& section,
                             std::uint64_t fallback);

}  // namespace doppler::cli
