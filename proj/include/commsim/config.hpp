#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commsim/error.hpp"

namespace commsim {

/// Flat `section.key = value` configuration. Blank lines and `#` comments
/// are ignored. Every key must be consumed by the command reading it;
/// leftovers are reported as unknown.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in) {
    ConfigFile cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected `key = value`");
      auto key = trim(line.substr(0, eq));
      auto value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key))
        throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      cfg.values_[key] = {value, lineno};
    }
    return cfg;
  }

  static ConfigFile parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) { values_[key] = {value, 0}; }

  std::optional<std::string> raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.insert(key);
    return it->second.value;
  }

  std::string str(const std::string& key, const std::string& fallback) const {
    return raw(key).value_or(fallback);
  }

  std::string require(const std::string& key) const {
    auto v = raw(key);
    if (!v) throw ConfigError("missing required key '" + key + "'");
    return *v;
  }

  double real(const std::string& key, double fallback) const {
    auto v = raw(key);
    return v ? to_real(key, *v) : fallback;
  }

  long long integer(const std::string& key, long long fallback) const {
    auto v = raw(key);
    return v ? to_integer(key, *v) : fallback;
  }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback = {}) const {
    auto v = raw(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& item : split(*v)) out.push_back(to_real(key, item));
    return out;
  }

  std::vector<long long> integers(const std::string& key,
                                  std::vector<long long> fallback = {}) const {
    auto v = raw(key);
    if (!v) return fallback;
    std::vector<long long> out;
    for (const auto& item : split(*v)) out.push_back(to_integer(key, item));
    return out;
  }

  std::vector<std::string> strings(const std::string& key,
                                   std::vector<std::string> fallback = {}) const {
    auto v = raw(key);
    return v ? split(*v) : fallback;
  }

  /// Throws on the first key nobody asked for.
  void check_all_used() const {
    for (const auto& [key, entry] : values_)
      if (!used_.count(key))
        throw ConfigError((entry.line ? "line " + std::to_string(entry.line) + ": " : "") +
                          "unknown key '" + key + "'");
  }

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  std::map<std::string, Entry> values_;
  mutable std::set<std::string> used_;

  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  static double to_real(const std::string& key, const std::string& s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ConfigError("key '" + key + "': '" + s + "' is not a number");
    return v;
  }

  static long long to_integer(const std::string& key, const std::string& s) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ConfigError("key '" + key + "': '" + s + "' is not an integer");
    return v;
  }
};

}  // namespace commsim
