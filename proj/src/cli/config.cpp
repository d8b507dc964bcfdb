#include "doppler/cli/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace doppler::cli {
namespace {

// Known sections and their keys. Unknown names are rejected at parse time.
const std::map<std::string, std::vector<std::string>>& schema() {
  static const std::map<std::string, std::vector<std::string>> s = {
      {"acquire",
       {"center_frequency_hz", "prf_hz", "sound_speed_mps", "packet_size", "doppler_cycles",
        "element_count", "pitch_m", "snr_db"}},
      {"geometry", {"depth_min_m", "depth_max_m", "sector_width_rad", "height", "width"}},
      {"phantom",
       {"kind", "center_x_m", "center_depth_m", "radius_m", "core_radius_m", "support_radius_m",
        "v_max_mps", "vx_mps", "vz_mps", "density_per_mm2", "fluctuation_frac"}},
      {"simulate",
       {"speeds_mps", "count", "speed_min_mps", "speed_max_mps", "randomize_centers",
        "id_prefix", "seed"}},
      {"augment",
       {"flips", "zooms", "zoom_ratio", "aliased", "folds", "power_screen", "power_db_below",
        "max_low_fraction", "seed"}},
      {"filter", {"discard", "subsample"}},
      {"estimate", {"packet", "smoothed", "axial_taps", "lateral_taps", "discard"}},
      {"train",
       {"arch", "packet", "batch", "epochs", "lr", "weight_decay", "plateau_factor",
        "plateau_patience", "plateau_rel_threshold", "min_lr", "folds", "stop_train_loss",
        "seed"}},
      {"infer", {"folds"}},
      {"eval", {"folds", "packet"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

}  // namespace

void Config::set_checked(const std::string& section, const std::string& key,
                         const std::string& value, const std::string& where) {
  const auto it = schema().find(section);
  if (it == schema().end())
    throw ConfigError(where + ": unknown section [" + section + "]");
  if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
    throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
  sections_[section][key] = Value{value, where};
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return from_text(text.str(), path);
}

Config Config::from_text(const std::string& text, const std::string& source) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(where + ": malformed section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      if (!valid_name(section))
        throw ConfigError(where + ": malformed section name '" + section + "'");
      if (schema().find(section) == schema().end())
        throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!valid_name(key)) throw ConfigError(where + ": malformed key '" + key + "'");
    if (section.empty())
      throw ConfigError(where + ": key '" + key + "' appears before any [section]");
    cfg.set_checked(section, key, value, where);
  }
  return cfg;
}

void Config::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  const std::string value = trim(assignment.substr(eq + 1));
  set_checked(section, key, value, "--set " + section + "." + key);
}

const Config::Value* Config::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

void Config::fail(const std::string& section, const std::string& key,
                  const std::string& message) const {
  const Value* v = find(section, key);
  const std::string at = v ? v->where + ": " : "";
  throw ConfigError(at + "[" + section + "] " + key + ": " + message);
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  const Value* v = find(section, key);
  if (!v) throw ConfigError("missing required config key [" + section + "] " + key);
  return v->text;
}

std::string Config::get_string_or(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  const Value* v = find(section, key);
  return v ? v->text : fallback;
}

namespace {

double parse_double(const std::string& text, bool& ok) {
  try {
    std::size_t used = 0;
    const double x = std::stod(text, &used);
    ok = used == text.size();
    return x;
  } catch (const std::exception&) {
    ok = false;
    return 0.0;
  }
}

long long parse_int(const std::string& text, bool& ok) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(text, &used);
    ok = used == text.size();
    return x;
  } catch (const std::exception&) {
    ok = false;
    return 0;
  }
}

}  // namespace

double Config::get_double(const std::string& section, const std::string& key) const {
  bool ok = false;
  const double x = parse_double(get_string(section, key), ok);
  if (!ok) fail(section, key, "expected a number, got '" + get_string(section, key) + "'");
  return x;
}

double Config::get_double_or(const std::string& section, const std::string& key,
                             double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long long Config::get_int(const std::string& section, const std::string& key) const {
  bool ok = false;
  const long long x = parse_int(get_string(section, key), ok);
  if (!ok) fail(section, key, "expected an integer, got '" + get_string(section, key) + "'");
  return x;
}

long long Config::get_int_or(const std::string& section, const std::string& key,
                             long long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool_or(const std::string& section, const std::string& key,
                         bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string t = get_string(section, key);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  fail(section, key, "expected a boolean, got '" + t + "'");
}

std::uint64_t Config::get_seed_or(const std::string& section, std::uint64_t fallback) const {
  if (!has(section, "seed")) return fallback;
  const std::string t = get_string(section, "seed");
  try {
    std::size_t used = 0;
    const std::uint64_t x = std::stoull(t, &used);
    if (used == t.size()) return x;
  } catch (const std::exception&) {
  }
  fail(section, "seed", "expected an unsigned integer, got '" + t + "'");
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
  std::vector<double> out;
  if (!has(section, key)) return out;
  std::istringstream in(get_string(section, key));
  std::string part;
  while (std::getline(in, part, ',')) {
    bool ok = false;
    const double x = parse_double(trim(part), ok);
    if (!ok) fail(section, key, "expected comma-separated numbers, got '" + part + "'");
    out.push_back(x);
  }
  if (out.empty()) fail(section, key, "expected a non-empty list");
  return out;
}

std::vector<int> Config::get_int_list(const std::string& section, const std::string& key) const {
  std::vector<int> out;
  if (!has(section, key)) return out;
  std::istringstream in(get_string(section, key));
  std::string part;
  while (std::getline(in, part, ',')) {
    bool ok = false;
    const long long x = parse_int(trim(part), ok);
    if (!ok) fail(section, key, "expected comma-separated integers, got '" + part + "'");
    out.push_back(static_cast<int>(x));
  }
  if (out.empty()) fail(section, key, "expected a non-empty list");
  return out;
}

std::vector<std::string> Config::describe() const {
  std::vector<std::string> lines;
  for (const auto& [section, keys] : sections_)
    for (const auto& [key, value] : keys)
      lines.push_back(section + "." + key + " = " + value.text);
  return lines;
}

std::uint64_t effective_seed(const Config& cfg, const std::string& section,
                             std::uint64_t fallback) {
  if (const char* env = std::getenv("DOPPLER_SEED")) {
    const std::string t = env;
    try {
      std::size_t used = 0;
      const std::uint64_t x = std::stoull(t, &used);
      if (used == t.size()) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError("DOPPLER_SEED: expected an unsigned integer, got '" + t + "'");
  }
  return cfg.get_seed_or(section, fallback);
}

}  // namespace doppler::cli
