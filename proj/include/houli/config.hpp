#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Plain-text key = value configuration with a fixed per-command schema:
// every key has a default, unknown keys are errors naming the key.

namespace houli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

class Config {
 public:
  explicit Config(std::map<std::string, std::string> schema) : values_(std::move(schema)) {
    defaults_ = values_;
  }

  void set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    it->second = value;
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
      set(key, value);
    }
  }

  const std::string& get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
  }

  double get_double(const std::string& key) const {
    const std::string& v = get_string(key);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
      throw ConfigError("config key " + key + ": not a number: '" + v + "'");
    return x;
  }

  int get_int(const std::string& key) const {
    const std::string& v = get_string(key);
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
      throw ConfigError("config key " + key + ": not an integer: '" + v + "'");
    return static_cast<int>(x);
  }

  bool get_bool(const std::string& key) const {
    const std::string& v = get_string(key);
    if (v == "0" || v == "false" || v == "no") return false;
    if (v == "1" || v == "true" || v == "yes") return true;
    throw ConfigError("config key " + key + ": not a boolean: '" + v + "'");
  }

  std::vector<double> get_double_list(const std::string& key) const {
    const std::string& v = get_string(key);
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (item.empty()) continue;
      char* end = nullptr;
      const double x = std::strtod(item.c_str(), &end);
      if (end == item.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": not a number in list: '" + item + "'");
      out.push_back(x);
    }
    if (out.empty()) throw ConfigError("config key " + key + ": empty list");
    return out;
  }

  // Canonical "key=value;" concatenation in schema order, for run hashing.
  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : values_) {
      s += k;
      s += '=';
      s += v;
      s += ';';
    }
    return s;
  }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> defaults_;
};

// Exact rational from a plain decimal string ("0.84" -> 84/100); keeps
// interval constants free of double-rounding at the parse boundary.
inline void parse_decimal_ratio(const std::string& text, long long* num, long long* den) {
  std::string s = detail::trim(text);
  bool neg = false;
  size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    neg = s[i] == '-';
    ++i;
  }
  long long n = 0, d = 1;
  bool seen_digit = false, seen_dot = false;
  int digits = 0;
  for (; i < s.size(); ++i) {
    if (s[i] == '.') {
      if (seen_dot) throw ConfigError("malformed decimal: " + text);
      seen_dot = true;
      continue;
    }
    if (s[i] < '0' || s[i] > '9') throw ConfigError("malformed decimal: " + text);
    if (++digits > 17) throw ConfigError("decimal too long for exact parsing: " + text);
    n = n * 10 + (s[i] - '0');
    if (seen_dot) d *= 10;
    seen_digit = true;
  }
  if (!seen_digit) throw ConfigError("malformed decimal: " + text);
  *num = neg ? -n : n;
  *den = d;
}

}  // namespace houli
