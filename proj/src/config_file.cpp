#include "deflation/config_file.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace deflation {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return kInf;
  if (t == "-inf") return -kInf;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) throw Error("bad number '" + t + "' for " + what);
  return v;
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& is, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(origin + ":" + std::to_string(lineno) + ": empty key");
    if (!cfg.values_.emplace(key, value).second) {
      throw Error(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  return parse(in, path);
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_double(it->second, origin_ + " key " + key);
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  int v = 0;
  const std::string& t = it->second;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error("bad integer '" + t + "' for " + origin_ + " key " + key);
  }
  return v;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw Error("bad boolean '" + it->second + "' for " + origin_ + " key " + key);
}

Vec ConfigFile::get_vec(const std::string& key, const Vec& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_vec(it->second);
}

Vec parse_vec(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) vals.push_back(to_double(item, "vector entry"));
  require(!vals.empty(), "empty vector '" + text + "'");
  return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::string default_config_dir() { return DEFLATION_CONFIG_DIR; }

}  // namespace deflation
