#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "deflation/types.hpp"

namespace deflation {

// Flat key = value text; '#' starts a comment, blank lines are ignored, keys are unique.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& is, const std::string& origin = "<stream>");
  static ConfigFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list.
  Vec get_vec(const std::string& key, const Vec& fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

Vec parse_vec(const std::string& text);

// Directory holding the pinned experiment configurations shipped with the sources.
std::string default_config_dir();

}  // namespace deflation
