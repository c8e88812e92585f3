#include "mixlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mixlab/report.hpp"

namespace mixlab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_' ||
           c == '.';
  });
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf") return INFINITY;
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError("config: key '" + key + "' expects a number, got '" + text + "'");
  return v;
}

}  // namespace

Config Config::parse(std::istream& is, const std::string& source) {
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    if (c.values_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

Config Config::parse_string(const std::string& text) {
  std::istringstream is(text);
  return parse(is);
}

Config Config::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  return parse(is, path);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError("config: invalid key '" + key + "'");
  values_[key] = value;
}

const std::string* Config::lookup(const std::string& key) const {
  used_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = lookup(key);
  return v ? *v : fallback;
}

std::string Config::require_string(const std::string& key) const {
  const auto* v = lookup(key);
  if (!v) throw ConfigError("config: missing required key '" + key + "'");
  return *v;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  const double x = to_double(key, *v);
  if (std::isnan(x)) throw ConfigError("config: key '" + key + "' is nan");
  return x;
}

long Config::get_int(const std::string& key, long fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  long x = 0;
  auto res = std::from_chars(v->data(), v->data() + v->size(), x);
  if (res.ec != std::errc() || res.ptr != v->data() + v->size())
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + *v + "'");
  return x;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw ConfigError("config: key '" + key + "' expects true/false, got '" + *v + "'");
}

std::vector<double> Config::get_list(const std::string& key, const std::vector<double>& fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError("config: key '" + key + "' is an empty list");
  return out;
}

void Config::reject_unused() const {
  std::string unknown;
  for (const auto& kv : values_)
    if (!used_.count(kv.first)) unknown += (unknown.empty() ? "" : ", ") + kv.first;
  if (!unknown.empty()) throw ConfigError("config: unknown keys: " + unknown);
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& kv : values_) out += kv.first + "=" + kv.second + "\n";
  return out;
}

std::string Config::digest() const { return digest_hex(canonical()); }

}  // namespace mixlab
